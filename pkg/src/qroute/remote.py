"""HTTP client for an annealer-style sampling service.

One subproblem per request: the QUBO is POSTed as a single JSON document

    {"dim": int, "terms": [[i, j, coeff], ...], "offset": real, "num_reads": int}

and the service answers

    {"samples": [{"bits": "0/1 string", "energy": real, "occurrences": int}, ...],
     "timing": {"access_time_us": int}}

Service-reported energies are advisory only: every sample is re-evaluated
locally and the local value wins (a disagreement is counted and warned
about, not trusted).  Failures are split into timeout, protocol and HTTP
errors so callers can decide which ones a fallback should absorb.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import requests

from .qubo import QuboProblem, Sample, evaluate, terms

DEFAULT_NUM_READS = 50
DEFAULT_TIMEOUT = 10.0
ENERGY_AGREEMENT = 1e-9


class RemoteError(RuntimeError):
    """Base class for sampling-service failures."""


class RemoteTimeout(RemoteError):
    """The service did not answer within the allotted time."""


class RemoteHttpError(RemoteError):
    """Transport failure or non-success HTTP status."""


class RemoteProtocolError(RemoteError):
    """The reply was not a valid sampling response."""


class RemoteEnergyWarning(UserWarning):
    """The service reported an energy that disagrees with local evaluation."""


@dataclass
class RemoteUsage:
    """Mutable accumulator for service-side timing and data-quality counters."""

    requests: int = 0
    access_time_us: int = 0
    energy_corrections: int = 0


def _parse_bits(raw, dim: int) -> tuple[int, ...]:
    if not isinstance(raw, str) or len(raw) != dim or set(raw) - {"0", "1"}:
        raise RemoteProtocolError(f"malformed bits field {raw!r} for dim {dim}")
    return tuple(int(c) for c in raw)


def sample_remote(
    q: QuboProblem,
    endpoint: str,
    num_reads: int = DEFAULT_NUM_READS,
    timeout: float = DEFAULT_TIMEOUT,
    usage: RemoteUsage | None = None,
) -> list[Sample]:
    """POST one subproblem, return its samples sorted by (local) energy."""
    if num_reads < 1:
        raise ValueError("num_reads must be positive")
    payload = {
        "dim": q.dim,
        "terms": [[i, j, float(value)] for i, j, value in terms(q)],
        "offset": float(q.offset),
        "num_reads": int(num_reads),
    }
    try:
        response = requests.post(endpoint, json=payload, timeout=timeout)
    except requests.Timeout as error:
        raise RemoteTimeout(f"no reply from {endpoint} within {timeout}s") from error
    except requests.RequestException as error:
        raise RemoteHttpError(f"request to {endpoint} failed: {error}") from error
    if response.status_code != 200:
        raise RemoteHttpError(f"{endpoint} answered HTTP {response.status_code}")
    try:
        document = response.json()
    except ValueError as error:
        raise RemoteProtocolError(f"response is not JSON: {error}") from error

    corrections = 0
    samples = []
    try:
        entries = document["samples"]
        access_time_us = int(document["timing"]["access_time_us"])
        for entry in entries:
            bits = _parse_bits(entry["bits"], q.dim)
            reported = float(entry["energy"])
            local = evaluate(q, bits)
            if abs(local - reported) > ENERGY_AGREEMENT:
                corrections += 1
            samples.append(
                Sample(bits=bits, energy=local, total_energy=local + q.offset)
            )
    except RemoteProtocolError:
        raise
    except (KeyError, TypeError, ValueError) as error:
        raise RemoteProtocolError(f"response missing or mistyped field: {error}") from error
    if not samples:
        raise RemoteProtocolError("response carried no samples")

    if corrections:
        warnings.warn(
            f"{corrections} sample energies from {endpoint} disagreed with "
            "local evaluation; local values kept",
            RemoteEnergyWarning,
            stacklevel=2,
        )
    if usage is not None:
        usage.requests += 1
        usage.access_time_us += access_time_us
        usage.energy_corrections += corrections
    samples.sort(key=lambda s: (s.energy, s.bits))
    return samples
