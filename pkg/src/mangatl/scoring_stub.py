"""Deterministic stand-in for the learned-metric scoring service.

Implements the scoring-service protocol (``POST /score``) so the
pipeline can be exercised end to end without the neural models:

* ``digest`` (default): pseudo-score in [0, 1] derived from a hash of
  the item, stable across runs;
* ``constant:<x>``: every item scores ``x`` (useful for protocol tests,
  including deliberately out-of-range values);
* ``index``: item i scores ``(i % 100) / 100``, which makes order
  preservation observable.

Run standalone with ``python -m mangatl.scoring_stub --port 8901``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


def stub_score(metric: str, item: dict, index: int, mode: str) -> float:
    if mode.startswith("constant:"):
        return float(mode.split(":", 1)[1])
    if mode == "index":
        return (index % 100) / 100
    canon = json.dumps({"metric": metric, "item": item}, sort_keys=True,
                       ensure_ascii=True)
    digest = hashlib.sha256(canon.encode("ascii")).digest()
    return round(int.from_bytes(digest[:4], "big") / 0xFFFFFFFF, 6)


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):  # keep test output quiet
        pass

    def do_POST(self):
        if self.path.rstrip("/") != "/score":
            self.send_error(404)
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            body = json.loads(self.rfile.read(length))
            metric = body["metric"]
            items = body["items"]
        except (json.JSONDecodeError, KeyError, TypeError):
            self.send_error(400, "bad scoring request")
            return
        mode = self.server.mode  # type: ignore[attr-defined]
        scores = [stub_score(metric, item, i, mode)
                  for i, item in enumerate(items)]
        payload = json.dumps({"scores": scores}).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


class ScoringStub:
    """In-process stub server; use as a context manager in tests."""

    def __init__(self, mode: str = "digest", host: str = "127.0.0.1",
                 port: int = 0):
        self.server = ThreadingHTTPServer((host, port), _Handler)
        self.server.mode = mode  # type: ignore[attr-defined]
        self._thread = threading.Thread(target=self.server.serve_forever,
                                        daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    def __enter__(self) -> "ScoringStub":
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        self._thread.join(timeout=5)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8901)
    parser.add_argument("--mode", default="digest")
    args = parser.parse_args(argv)
    server = ThreadingHTTPServer((args.host, args.port), _Handler)
    server.mode = args.mode  # type: ignore[attr-defined]
    print(f"scoring stub listening on http://{args.host}:{args.port} "
          f"(mode={args.mode})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
