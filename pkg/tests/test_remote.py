"""Remote sampler client tests against the in-process mock service."""
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from qroute.mock_annealer import MODES, MockAnnealer
from qroute.oracles import enumerate_qubo
from qroute.qubo import QuboBuilder
from qroute.remote import (
    RemoteEnergyWarning,
    RemoteHttpError,
    RemoteProtocolError,
    RemoteTimeout,
    RemoteUsage,
    sample_remote,
)
from qroute.solver import (
    Backend,
    RemoteSettings,
    SolverAbort,
    SolverConfig,
    solve,
)

UNREACHABLE = "http://127.0.0.1:9/sample"  # discard port: connection refused


def small_qubo(dim=8, seed=0):
    rng = np.random.default_rng(seed)
    builder = QuboBuilder(dim)
    for i in range(dim):
        for j in range(i, dim):
            value = int(rng.integers(-20, 21))
            if value:
                builder.add(i, j, value)
    return builder.build()


class FixedResponse:
    """Tiny HTTP server that answers every POST with one canned body."""

    def __init__(self, body: dict | str, status: int = 200):
        payload = body if isinstance(body, str) else json.dumps(body)
        handler = type(
            "Handler",
            (BaseHTTPRequestHandler,),
            {
                "do_POST": lambda this: this._reply(),
                "log_message": lambda this, *a: None,
                "_reply": lambda this: self._write(this, payload, status),
            },
        )
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self._thread = threading.Thread(
            target=self._server.serve_forever, daemon=True
        )

    @staticmethod
    def _write(handler, payload, status):
        handler.rfile.read(int(handler.headers.get("Content-Length", 0)))
        body = payload.encode()
        handler.send_response(status)
        handler.send_header("Content-Length", str(len(body)))
        handler.end_headers()
        handler.wfile.write(body)

    def __enter__(self):
        self._thread.start()
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/sample"

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()


class TestSampleRemote:
    def test_round_trip_matches_enumeration(self):
        q = small_qubo()
        with MockAnnealer() as service:
            samples = sample_remote(q, service.endpoint)
        assert samples[0] == enumerate_qubo(q)

    def test_request_carries_the_documented_fields(self):
        q = small_qubo(dim=4, seed=5)
        with MockAnnealer() as service:
            sample_remote(q, service.endpoint, num_reads=17)
            document = service.last_request
        assert document["dim"] == 4
        assert document["num_reads"] == 17
        assert document["offset"] == q.offset
        rebuilt = {(i, j): value for i, j, value in document["terms"]}
        assert rebuilt == {key: float(v) for key, v in q.coefficients.items()}

    def test_samples_come_back_sorted_by_energy(self):
        q = small_qubo(seed=3)
        with MockAnnealer(mode="shuffled") as service:
            samples = sample_remote(q, service.endpoint)
        energies = [s.energy for s in samples]
        assert energies == sorted(energies)
        assert samples[0].energy == enumerate_qubo(q).energy

    def test_wrong_energy_is_corrected_and_counted(self):
        q = small_qubo(seed=4)
        usage = RemoteUsage()
        with MockAnnealer(mode="wrong_energy") as service:
            with pytest.warns(RemoteEnergyWarning):
                samples = sample_remote(q, service.endpoint, usage=usage)
        assert usage.energy_corrections == 1
        assert samples[0].energy == enumerate_qubo(q).energy  # local value kept

    def test_usage_accumulates_access_time(self):
        q = small_qubo(seed=6)
        usage = RemoteUsage()
        with MockAnnealer() as service:
            sample_remote(q, service.endpoint, usage=usage)
            sample_remote(q, service.endpoint, usage=usage)
        assert usage.requests == 2
        assert usage.access_time_us >= 2

    def test_timeout_error(self):
        q = small_qubo()
        with MockAnnealer(mode="hang") as service:
            with pytest.raises(RemoteTimeout):
                sample_remote(q, service.endpoint, timeout=0.3)

    def test_http_error(self):
        q = small_qubo()
        with MockAnnealer(mode="http_error") as service:
            with pytest.raises(RemoteHttpError, match="500"):
                sample_remote(q, service.endpoint)

    def test_unreachable_host(self):
        with pytest.raises(RemoteHttpError):
            sample_remote(small_qubo(), UNREACHABLE, timeout=0.5)

    def test_malformed_body(self):
        q = small_qubo()
        with MockAnnealer(mode="malformed") as service:
            with pytest.raises(RemoteProtocolError):
                sample_remote(q, service.endpoint)

    @pytest.mark.parametrize(
        "body",
        [
            {"samples": [], "timing": {"access_time_us": 1}},
            {"samples": [{"bits": "01", "energy": 0}], "timing": {}},
            {"timing": {"access_time_us": 1}},
            {"samples": [{"bits": "0102", "energy": 0, "occurrences": 1}],
             "timing": {"access_time_us": 1}},
            {"samples": [{"bits": "01", "energy": 0, "occurrences": 1}],
             "timing": {"access_time_us": 1}},  # wrong length for dim 4
        ],
    )
    def test_schema_violations(self, body):
        q = small_qubo(dim=4)
        with FixedResponse(body) as endpoint:
            with pytest.raises(RemoteProtocolError):
                sample_remote(q, endpoint)

    def test_num_reads_must_be_positive(self):
        with pytest.raises(ValueError, match="num_reads"):
            sample_remote(small_qubo(), UNREACHABLE, num_reads=0)

    def test_mock_rejects_unknown_mode(self):
        with pytest.raises(ValueError, match="unknown mode"):
            MockAnnealer(mode="nope")
        assert "exact" in MODES


class TestRemoteBackendInSolve:
    def test_solve_matches_exhaustive_backend(self):
        q = small_qubo(dim=12, seed=9)
        local = solve(q, SolverConfig(backend=Backend.EXHAUSTIVE, num_repeats=3, seed=2))
        with MockAnnealer() as service:
            remote = solve(
                q,
                SolverConfig(
                    backend=Backend.REMOTE,
                    num_repeats=3,
                    seed=2,
                    remote=RemoteSettings(endpoint=service.endpoint),
                ),
            )
        assert remote.best == local.best

    def test_fallback_completes_with_diagnostics(self):
        q = small_qubo(dim=10, seed=11)
        usage = RemoteUsage()
        report = solve(
            q,
            SolverConfig(
                backend=Backend.REMOTE,
                num_repeats=1,
                seed=3,
                remote=RemoteSettings(
                    endpoint=UNREACHABLE,
                    timeout=0.3,
                    fallback=Backend.TABU,
                    usage=usage,
                ),
            ),
        )
        assert report.diagnostics
        assert "fell back to tabu" in report.diagnostics[0]
        assert usage.requests == 0  # nothing ever reached a service
        assert report.best.energy == enumerate_qubo(q).energy

    def test_no_fallback_aborts_with_partial_report(self):
        q = small_qubo(dim=10, seed=12)
        with pytest.raises(SolverAbort) as info:
            solve(
                q,
                SolverConfig(
                    backend=Backend.REMOTE,
                    num_repeats=1,
                    seed=3,
                    remote=RemoteSettings(endpoint=UNREACHABLE, timeout=0.3),
                ),
            )
        partial = info.value.report
        assert partial.best.bits  # best-so-far from the seeded tabu start
        assert partial.subqubo_calls == 1
