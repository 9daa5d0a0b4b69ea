"""Linear-chain CRF over the three IOB tags.

All inference runs in log space. Parameters are an emission weight per
(feature, label) plus a dense 3x3 transition matrix; the training objective
is the negative log-likelihood with a Gaussian prior, minimised with
L-BFGS-B. Decoding is Viterbi, by default constrained to sequences that are
valid under strict IOB reading (no initial I, no I directly after O).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, sparse

from .corpus import Dataset, IOB_TAGS, atomic_write_text
from .features import (
    CorpusStatistics,
    FeatureConfig,
    FeatureSeq,
    extract_dataset,
    extract_features,
)
from .ingest import EmotionLexicon

LABELS = IOB_TAGS  # ("B", "I", "O")
_N_LABELS = 3
_LABEL_INDEX = {tag: i for i, tag in enumerate(LABELS)}

# Index order used when breaking exact score ties at argmax steps: continue a
# span, then open one, then stay outside. numpy's argmax keeps the first
# maximum, so scanning in this order makes tie handling explicit.
_TIE_ORDER = np.array([_LABEL_INDEX["I"], _LABEL_INDEX["B"], _LABEL_INDEX["O"]])

MODEL_MAGIC = "stimulex-crf"
MODEL_VERSION = "1"


class TrainingError(RuntimeError):
    """Raised when optimisation cannot proceed (e.g. non-finite loss)."""


@dataclass(frozen=True)
class TrainConfig:
    l2_sigma: float = 10.0
    max_iterations: int = 500
    tolerance: float = 1e-4
    max_features: int = 500_000

    def __post_init__(self) -> None:
        if self.l2_sigma <= 0:
            raise ValueError("l2_sigma must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class CrfModel:
    config: FeatureConfig
    stats: CorpusStatistics
    feature_ids: dict[str, int]
    emissions: np.ndarray  # (n_features, 3)
    transitions: np.ndarray  # (3, 3), [from, to]
    loss_trace: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        self.emissions = np.asarray(self.emissions, dtype=np.float64)
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        if self.emissions.shape != (len(self.feature_ids), _N_LABELS):
            raise ValueError("emission matrix shape does not match feature table")
        if self.transitions.shape != (_N_LABELS, _N_LABELS):
            raise ValueError("transition matrix must be 3x3")

    @property
    def n_features(self) -> int:
        return len(self.feature_ids)


def _emission_matrix(model: CrfModel, fseq: FeatureSeq) -> np.ndarray:
    if not fseq:
        raise ValueError("cannot run inference on an empty sentence")
    e = np.zeros((len(fseq), _N_LABELS))
    ids = model.feature_ids
    for t, feats in enumerate(fseq):
        for name in feats:
            idx = ids.get(name)
            if idx is not None:
                e[t] += model.emissions[idx]
    return e


def _logsumexp(v: np.ndarray) -> float:
    m = v.max()
    return float(m + np.log(np.exp(v - m).sum()))


def _forward(e: np.ndarray, t: np.ndarray) -> np.ndarray:
    n = e.shape[0]
    alpha = np.empty((n, _N_LABELS))
    alpha[0] = e[0]
    for i in range(1, n):
        m = alpha[i - 1][:, None] + t
        mx = m.max(axis=0)
        alpha[i] = mx + np.log(np.exp(m - mx).sum(axis=0)) + e[i]
    return alpha


def _backward(e: np.ndarray, t: np.ndarray) -> np.ndarray:
    n = e.shape[0]
    beta = np.zeros((n, _N_LABELS))
    for i in range(n - 2, -1, -1):
        m = t + (e[i + 1] + beta[i + 1])[None, :]
        mx = m.max(axis=1)
        beta[i] = mx + np.log(np.exp(m - mx[:, None]).sum(axis=1))
    return beta


def log_partition(model: CrfModel, fseq: FeatureSeq) -> float:
    e = _emission_matrix(model, fseq)
    alpha = _forward(e, model.transitions)
    return _logsumexp(alpha[-1])


def sequence_score(model: CrfModel, fseq: FeatureSeq, tags: list[str]) -> float:
    """Unnormalised log score of one labelling."""
    if len(tags) != len(fseq):
        raise ValueError("label sequence length does not match sentence length")
    y = [_LABEL_INDEX[tag] for tag in tags]
    e = _emission_matrix(model, fseq)
    total = float(e[np.arange(len(y)), y].sum())
    for a, b in zip(y, y[1:]):
        total += float(model.transitions[a, b])
    return total


def marginals(model: CrfModel, fseq: FeatureSeq) -> tuple[np.ndarray, np.ndarray, float]:
    """Posterior label marginals.

    Returns (unary, pairwise, log_partition) where unary has shape (n, 3) and
    pairwise has shape (n-1, 3, 3) indexed [position, from, to].
    """
    e = _emission_matrix(model, fseq)
    t = model.transitions
    alpha = _forward(e, t)
    beta = _backward(e, t)
    logz = _logsumexp(alpha[-1])
    unary = np.exp(alpha + beta - logz)
    n = e.shape[0]
    if n > 1:
        m = alpha[:-1, :, None] + t[None, :, :] + (e[1:] + beta[1:])[:, None, :]
        pairwise = np.exp(m - logz)
    else:
        pairwise = np.zeros((0, _N_LABELS, _N_LABELS))
    return unary, pairwise, logz


def _batch_design(
    model_features: dict[str, int], batch: list[tuple[FeatureSeq, list[str]]]
) -> list[tuple[sparse.csr_array, np.ndarray]]:
    """Sparse token-by-feature indicator matrix and gold index array per item.

    Feature names absent from the table are dropped: they carry zero weight
    and contribute no gradient.
    """
    prepared = []
    for fseq, tags in batch:
        if len(tags) != len(fseq):
            raise ValueError("label sequence length does not match sentence length")
        rows, cols = [], []
        for t, feats in enumerate(fseq):
            for name in feats:
                idx = model_features.get(name)
                if idx is not None:
                    rows.append(t)
                    cols.append(idx)
        design = sparse.csr_array(
            (np.ones(len(rows)), (rows, cols)),
            shape=(len(fseq), len(model_features)),
        )
        y = np.array([_LABEL_INDEX[tag] for tag in tags], dtype=np.intp)
        prepared.append((design, y))
    return prepared


def _nll_core(
    emissions: np.ndarray,
    transitions: np.ndarray,
    prepared: list[tuple[sparse.csr_array, np.ndarray]],
    l2_sigma: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    loss = 0.0
    grad_e = np.zeros_like(emissions)
    grad_t = np.zeros_like(transitions)
    for design, y in prepared:
        e = design @ emissions
        n = e.shape[0]
        alpha = _forward(e, transitions)
        beta = _backward(e, transitions)
        logz = _logsumexp(alpha[-1])
        gold = float(e[np.arange(n), y].sum())
        tok_grad = np.exp(alpha + beta - logz)
        tok_grad[np.arange(n), y] -= 1.0
        grad_e += design.T @ tok_grad
        if n > 1:
            gold += float(transitions[y[:-1], y[1:]].sum())
            m = alpha[:-1, :, None] + transitions[None, :, :] + (e[1:] + beta[1:])[:, None, :]
            grad_t += np.exp(m - logz).sum(axis=0)
            np.subtract.at(grad_t, (y[:-1], y[1:]), 1.0)
        loss += logz - gold
    scale = 1.0 / (2.0 * l2_sigma**2)
    loss += scale * (float((emissions**2).sum()) + float((transitions**2).sum()))
    grad_e += emissions / l2_sigma**2
    grad_t += transitions / l2_sigma**2
    return loss, grad_e, grad_t


def nll_and_gradient(
    model: CrfModel,
    batch: list[tuple[FeatureSeq, list[str]]],
    l2_sigma: float = 10.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Regularised negative log-likelihood of a batch plus its gradient.

    The gradient is (expected - observed) feature counts with the prior term
    added, returned as (loss, d_emissions, d_transitions).
    """
    prepared = _batch_design(model.feature_ids, batch)
    return _nll_core(model.emissions, model.transitions, prepared, l2_sigma)


def train(
    dataset: Dataset,
    feature_config: FeatureConfig | None = None,
    train_config: TrainConfig | None = None,
    lexicon: EmotionLexicon | None = None,
    stopwords: frozenset[str] | None = None,
) -> CrfModel:
    """Fit a model on the gold layer of ``dataset``.

    Corpus statistics are taken from this dataset alone, so the caller is
    responsible for passing only the training split. Every sentence must
    carry a gold layer; all-O sentences are legitimate negative examples.
    """
    feature_config = feature_config or FeatureConfig()
    train_config = train_config or TrainConfig()
    if len(dataset) == 0:
        raise TrainingError("training set is empty")
    for sentence in dataset:
        if sentence.gold is None:
            raise TrainingError(f"sentence {sentence.id} has no gold layer")
    stats = CorpusStatistics.from_dataset(dataset, feature_config.top_k_frequent)
    fseqs = extract_dataset(dataset, stats, feature_config, lexicon, stopwords)
    names = sorted(set().union(*(feats for fseq in fseqs for feats in fseq)))
    if len(names) > train_config.max_features:
        raise TrainingError(
            f"feature count {len(names)} exceeds cap {train_config.max_features}"
        )
    feature_ids = {name: i for i, name in enumerate(names)}
    batch = [(fseq, list(s.gold)) for fseq, s in zip(fseqs, dataset)]
    prepared = _batch_design(feature_ids, batch)

    n_feat = len(names)
    n_emission = n_feat * _N_LABELS
    trace: list[float] = []
    recent: dict[bytes, float] = {}

    def objective(w: np.ndarray) -> tuple[float, np.ndarray]:
        emissions = w[:n_emission].reshape(n_feat, _N_LABELS)
        transitions = w[n_emission:].reshape(_N_LABELS, _N_LABELS)
        loss, grad_e, grad_t = _nll_core(
            emissions, transitions, prepared, train_config.l2_sigma
        )
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss {loss!r} during optimisation")
        if len(recent) > 16:
            recent.clear()
        recent[w.tobytes()] = loss
        return loss, np.concatenate([grad_e.ravel(), grad_t.ravel()])

    def record(w: np.ndarray) -> None:
        key = w.tobytes()
        if key in recent:
            trace.append(recent[key])

    x0 = np.zeros(n_emission + _N_LABELS * _N_LABELS)
    initial_loss, _, _ = _nll_core(
        x0[:n_emission].reshape(n_feat, _N_LABELS),
        x0[n_emission:].reshape(_N_LABELS, _N_LABELS),
        prepared,
        train_config.l2_sigma,
    )
    trace.append(initial_loss)
    result = optimize.minimize(
        objective,
        x0,
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={
            "maxiter": train_config.max_iterations,
            "gtol": train_config.tolerance,
            "ftol": 0.0,
        },
    )
    w = result.x
    if not np.all(np.isfinite(w)):
        raise TrainingError("optimiser returned non-finite weights")
    model = CrfModel(
        config=feature_config,
        stats=stats,
        feature_ids=feature_ids,
        emissions=w[:n_emission].reshape(n_feat, _N_LABELS).copy(),
        transitions=w[n_emission:].reshape(_N_LABELS, _N_LABELS).copy(),
        loss_trace=trace,
    )
    return model


def viterbi_decode(model: CrfModel, fseq: FeatureSeq, constrained: bool = True) -> list[str]:
    """Best-scoring label sequence.

    With ``constrained`` (the default) sequences that are invalid under
    strict IOB reading are excluded: no I at the start, no I after O.
    """
    e = _emission_matrix(model, fseq)
    t = model.transitions.copy()
    n = e.shape[0]
    if constrained:
        e = e.copy()
        e[0, _LABEL_INDEX["I"]] = -np.inf
        t[_LABEL_INDEX["O"], _LABEL_INDEX["I"]] = -np.inf
    order = _TIE_ORDER
    delta = e[0]
    back = np.zeros((n, _N_LABELS), dtype=np.intp)
    for i in range(1, n):
        cand = delta[:, None] + t  # [from, to]
        best = order[cand[order, :].argmax(axis=0)]
        back[i] = best
        delta = cand[best, np.arange(_N_LABELS)] + e[i]
    last = int(order[delta[order].argmax()])
    path = [last]
    for i in range(n - 1, 0, -1):
        last = int(back[i, last])
        path.append(last)
    path.reverse()
    return [LABELS[i] for i in path]


def tag_dataset(
    dataset: Dataset,
    model: CrfModel,
    lexicon: EmotionLexicon | None = None,
    stopwords: frozenset[str] | None = None,
    constrained: bool = True,
) -> Dataset:
    """Copy of ``dataset`` with the prediction layer filled in."""
    if model.config.lexicon and lexicon is None:
        raise ValueError("model uses lexicon features; a lexicon is required for tagging")
    tagged = []
    for sentence in dataset:
        fseq = extract_features(sentence, model.stats, model.config, lexicon, stopwords)
        pred = viterbi_decode(model, fseq, constrained=constrained)
        tagged.append(replace(sentence, pred=tuple(pred)))
    return Dataset(tagged, provenance=dataset.provenance)


def save_model(model: CrfModel, path) -> None:
    """Write the model as a plain text file.

    Floats are serialised with ``repr`` so loading reproduces them exactly.
    """
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION}"]
    lines.append("[config]")
    for key, value in model.config.to_kv():
        lines.append(f"{key}={value}")
    lines.append("[transitions]")
    for row in model.transitions:
        lines.append("\t".join(repr(float(v)) for v in row))
    lines.append("[stats]")
    for term in sorted(model.stats.word_counts):
        if "\t" in term or "\n" in term:
            raise ValueError(f"statistics term {term!r} cannot be serialised")
        lines.append(f"{term}\t{model.stats.word_counts[term]}")
    lines.append("[features]")
    for name in sorted(model.feature_ids):
        if "\t" in name or "\n" in name:
            raise ValueError(f"feature name {name!r} cannot be serialised")
        row = model.emissions[model.feature_ids[name]]
        lines.append(name + "\t" + "\t".join(repr(float(v)) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_model(path) -> CrfModel:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0] != f"{MODEL_MAGIC} {MODEL_VERSION}":
        raise ValueError(f"{path}: not a recognised model file")
    sections: dict[str, list[str]] = {}
    current: list[str] | None = None
    for line in lines[1:]:
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1]
            if name in sections:
                raise ValueError(f"{path}: duplicate section {name!r}")
            current = sections[name] = []
        elif line:
            if current is None:
                raise ValueError(f"{path}: content before first section")
            current.append(line)
    for required in ("config", "transitions", "stats", "features"):
        if required not in sections:
            raise ValueError(f"{path}: missing section {required!r}")

    config_items: dict[str, str] = {}
    for line in sections["config"]:
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}: bad config line {line!r}")
        config_items[key] = value
    config = FeatureConfig.from_kv(config_items)

    if len(sections["transitions"]) != _N_LABELS:
        raise ValueError(f"{path}: transition block must have {_N_LABELS} rows")
    transitions = np.array(
        [[float(v) for v in line.split("\t")] for line in sections["transitions"]]
    )
    if transitions.shape != (_N_LABELS, _N_LABELS):
        raise ValueError(f"{path}: transition block must be {_N_LABELS}x{_N_LABELS}")

    counts: dict[str, int] = {}
    for line in sections["stats"]:
        term, sep, value = line.partition("\t")
        if not sep or not term:
            raise ValueError(f"{path}: bad statistics line {line!r}")
        counts[term] = int(value)
    stats = CorpusStatistics(counts, config.top_k_frequent)

    feature_ids: dict[str, int] = {}
    rows = []
    for line in sections["features"]:
        parts = line.split("\t")
        if len(parts) != 1 + _N_LABELS or not parts[0]:
            raise ValueError(f"{path}: bad feature line {line!r}")
        if parts[0] in feature_ids:
            raise ValueError(f"{path}: duplicate feature {parts[0]!r}")
        feature_ids[parts[0]] = len(rows)
        rows.append([float(v) for v in parts[1:]])
    emissions = np.array(rows).reshape(len(rows), _N_LABELS)
    return CrfModel(
        config=config,
        stats=stats,
        feature_ids=feature_ids,
        emissions=emissions,
        transitions=transitions,
    )
