"""In-process HTTP stand-in for the remote sampling service.

Speaks the sampling protocol (`remote` module docstring) and answers with
the exhaustive minimum of each posted subproblem, so a solve through the
remote client should match the local exhaustive backend bit for bit.

Failure modes can be simulated for client testing:

    exact        correct minimum, correct energy (default)
    shuffled     minimum plus noise samples, deliberately unsorted
    wrong_energy correct bits, energy off by one
    malformed    syntactically broken JSON body
    http_error   HTTP 500 with no useful body
    hang         sleeps past any sane client timeout before answering
"""
from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .oracles import enumerate_qubo
from .qubo import QuboBuilder, evaluate

MODES = ("exact", "shuffled", "wrong_energy", "malformed", "http_error", "hang")
HANG_SECONDS = 5.0


def _rebuild(document: dict):
    builder = QuboBuilder(int(document["dim"]))
    for i, j, value in document["terms"]:
        builder.add(int(i), int(j), value)
    builder.add_offset(document.get("offset", 0))
    return builder.build()


def answer(document: dict, mode: str = "exact", rng=None) -> dict:
    """Build the response body for one request (handler-independent logic)."""
    started = time.perf_counter()
    q = _rebuild(document)
    best = enumerate_qubo(q)
    entries = [
        {
            "bits": "".join(map(str, best.bits)),
            "energy": best.energy + (1 if mode == "wrong_energy" else 0),
            "occurrences": int(document.get("num_reads", 1)),
        }
    ]
    if mode == "shuffled":
        rng = rng or np.random.default_rng(0)
        for _ in range(3):
            bits = rng.integers(0, 2, q.dim)
            entries.append(
                {
                    "bits": "".join(map(str, bits)),
                    "energy": evaluate(q, bits),
                    "occurrences": 1,
                }
            )
        entries.reverse()  # give the client something to sort
    access_us = max(1, int((time.perf_counter() - started) * 1e6))
    return {"samples": entries, "timing": {"access_time_us": access_us}}


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):  # noqa: N802 (http.server API)
        mode = self.server.mode
        if mode == "hang":
            time.sleep(HANG_SECONDS)
        if mode == "http_error":
            self.send_error(500, "simulated failure")
            return
        length = int(self.headers.get("Content-Length", 0))
        if mode == "malformed":
            self.rfile.read(length)
            body = b'{"samples": [{"bits": '
        else:
            try:
                document = json.loads(self.rfile.read(length))
                self.server.last_document = document
                body = json.dumps(answer(document, mode, self.server.rng)).encode()
            except Exception as error:  # unparseable or oversized request
                self.send_error(400, str(error))
                return
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)
        self.server.served += 1

    def log_message(self, *args):  # keep test output quiet
        pass


class MockAnnealer:
    """Threaded sampler service; use as a context manager in tests."""

    def __init__(self, mode: str = "exact", port: int = 0):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
        self._server = ThreadingHTTPServer(("127.0.0.1", port), _Handler)
        self._server.mode = mode
        self._server.rng = np.random.default_rng(0)
        self._server.served = 0
        self._server.last_document = None
        self._thread = threading.Thread(
            target=self._server.serve_forever, daemon=True
        )

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/sample"

    @property
    def requests_served(self) -> int:
        return self._server.served

    @property
    def last_request(self) -> dict | None:
        return self._server.last_document

    def start(self) -> str:
        self._thread.start()
        return self.endpoint

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> "MockAnnealer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()
