"""A word-substitution HTTP server that mimics a translation API.

Meant for demos and tests: it answers POST requests carrying
{"text", "source_lang", "target_lang"} with {"text": <translation>}, where
the translation replaces each whitespace token via a lookup table (lowercased
keys; unknown words pass through unchanged).

Run standalone with:  python3 -m stimulex.mtserver --port 8765 --table t.tsv
"""

from __future__ import annotations

import argparse
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path


def load_table(path) -> dict[str, str]:
    """Read SOURCE<TAB>TARGET lines into a substitution table."""
    table: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ValueError(f"{path}: line {lineno}: expected SOURCE<TAB>TARGET")
        table[parts[0].lower()] = parts[1]
    return table


def substitute(text: str, table: dict[str, str]) -> str:
    return " ".join(table.get(word.lower(), word) for word in text.split())


def _make_handler(table: dict[str, str]):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):  # noqa: N802 (http.server API)
            length = int(self.headers.get("Content-Length", 0))
            try:
                payload = json.loads(self.rfile.read(length).decode("utf-8"))
                text = payload["text"]
            except (json.JSONDecodeError, KeyError, UnicodeDecodeError):
                self.send_response(400)
                self.end_headers()
                return
            body = json.dumps({"text": substitute(text, table)}, ensure_ascii=False)
            encoded = body.encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(encoded)))
            self.end_headers()
            self.wfile.write(encoded)

        def log_message(self, format, *args):  # noqa: A002 (http.server API)
            pass

    return Handler


def make_server(table: dict[str, str] | None = None, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Create (but do not start) the server; port 0 picks a free one."""
    return ThreadingHTTPServer((host, port), _make_handler(table or {}))


class running_server:
    """Context manager that serves on a background thread.

    Yields the base URL, e.g. "http://127.0.0.1:49152".
    """

    def __init__(self, table: dict[str, str] | None = None, host: str = "127.0.0.1", port: int = 0):
        self._server = make_server(table, host, port)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    def __enter__(self) -> str:
        self._thread.start()
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def __exit__(self, *exc_info) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8765)
    parser.add_argument("--table", help="SOURCE<TAB>TARGET substitution file")
    args = parser.parse_args(argv)
    table = load_table(args.table) if args.table else {}
    server = make_server(table, args.host, args.port)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port} with {len(table)} table entries")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
