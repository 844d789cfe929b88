"""Decomposition solver: tabu-seeded splitting of a QUBO into clamped subproblems.

The outer loop mirrors the classic large-QUBO strategy: start from a seeded
random assignment polished by tabu search over the whole problem, then
repeatedly rank variables by one-flip impact, carve them into fixed-size
groups, clamp everything outside a group, and let a backend solve the small
subproblem.  Each round ends with another full-problem tabu pass that
consolidates the group-level jumps.  A sub-solution is adopted only when it
strictly lowers the full energy, so the accepted-energy sequence is
monotone.  A round counter starts at ``num_repeats``, decrements on rounds
without improvement and resets on improvement; the solve stops when it
reaches zero.

Backends: exhaustive enumeration (exact, small groups only), tabu search,
simulated annealing, and a remote sampler service (with optional local
fallback).  All local backends are deterministic for a fixed seed.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import remote as remote_client
from .qubo import QuboBuilder, QuboProblem, Sample, evaluate, make_sample

DEFAULT_SUBQUBO_SIZE = 20
DEFAULT_NUM_REPEATS = 250
EXHAUSTIVE_MAX_DIM = 24
SA_COOLING = 0.98
SA_SWEEPS = 500
POLISH_ITERATIONS_PER_VARIABLE = 300  # length of the per-round consolidation pass


class Backend(enum.Enum):
    EXHAUSTIVE = "exhaustive"
    TABU = "tabu"
    SIMULATED_ANNEALING = "sa"
    REMOTE = "remote"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RemoteSettings:
    """Connection details for the remote sampler backend.

    `usage`, when given, accumulates service-side counters (request count,
    reported access time, energy corrections) across the whole solve.
    """

    endpoint: str
    num_reads: int = 50
    timeout: float = 10.0
    fallback: Backend | None = None
    usage: remote_client.RemoteUsage | None = None


@dataclass(frozen=True)
class SolverConfig:
    subqubo_size: int = DEFAULT_SUBQUBO_SIZE
    num_repeats: int = DEFAULT_NUM_REPEATS
    backend: Backend = Backend.TABU
    seed: int = 0
    tabu_tenure: int | None = None      # default: min(20, dim // 4) + 1
    tabu_iterations: int | None = None  # default: 500 * dim
    sa_schedule: tuple[float, float, int] | None = None  # (T0, cooling, sweeps)
    remote: RemoteSettings | None = None

    def validate(self) -> None:
        if self.subqubo_size < 1:
            raise ValueError("subqubo_size must be at least 1")
        if self.num_repeats < 0:
            raise ValueError("num_repeats must be non-negative")
        if self.backend is Backend.EXHAUSTIVE and self.subqubo_size > EXHAUSTIVE_MAX_DIM:
            raise ValueError(
                f"exhaustive backend is limited to subqubo_size {EXHAUSTIVE_MAX_DIM}"
            )
        if self.backend is Backend.REMOTE:
            if self.remote is None:
                raise ValueError("remote backend requires RemoteSettings")
            if self.remote.fallback is Backend.REMOTE:
                raise ValueError("remote fallback cannot itself be remote")
        if self.tabu_tenure is not None and self.tabu_tenure < 1:
            raise ValueError("tabu_tenure must be positive")
        if self.tabu_iterations is not None and self.tabu_iterations < 1:
            raise ValueError("tabu_iterations must be positive")


@dataclass(frozen=True)
class SolveReport:
    best: Sample
    iterations: int           # completed split rounds
    subqubo_calls: int
    backend_time: float       # seconds spent inside backend solves
    outer_time: float         # wall time of the whole solve
    diagnostics: tuple[str, ...] = ()


class SolverAbort(RuntimeError):
    """Backend failure without a fallback; carries the best-so-far report."""

    def __init__(self, message: str, report: SolveReport):
        super().__init__(message)
        self.report = report


def default_tenure(dim: int) -> int:
    return min(20, dim // 4) + 1


def default_iterations(dim: int) -> int:
    return 500 * dim


def _dense_arrays(q: QuboProblem) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal vector and symmetric off-diagonal coupling matrix."""
    diag = np.zeros(q.dim)
    couplings = np.zeros((q.dim, q.dim))
    for (i, j), value in q.coefficients.items():
        if i == j:
            diag[i] = value
        else:
            couplings[i, j] = value
            couplings[j, i] = value
    return diag, couplings


@njit(cache=True, nogil=True)
def _advance(state):
    state = state ^ (state << np.uint64(13))
    state = state ^ (state >> np.uint64(7))
    state = state ^ (state << np.uint64(17))
    return state


@njit(cache=True, nogil=True)
def _initial_field(diag, couplings, bits):
    dim = bits.shape[0]
    local = diag.copy()
    for i in range(dim):
        if bits[i]:
            for j in range(dim):
                local[j] += couplings[j, i]
    return local


@njit(cache=True, nogil=True)
def _bits_energy(diag, couplings, bits):
    dim = bits.shape[0]
    energy = 0.0
    for i in range(dim):
        if bits[i]:
            energy += diag[i]
            for j in range(i + 1, dim):
                if bits[j]:
                    energy += couplings[i, j]
    return energy


@njit(cache=True, nogil=True)
def _tabu_kernel(diag, couplings, bits, tenure, iterations, seed):
    dim = bits.shape[0]
    local = _initial_field(diag, couplings, bits)
    energy = _bits_energy(diag, couplings, bits)
    best_energy = energy
    best_bits = bits.copy()
    last_flip = np.full(dim, np.int64(-(1 << 60)), dtype=np.int64)
    state = seed if seed != np.uint64(0) else np.uint64(0x9E3779B97F4A7C15)
    for step in range(iterations):
        chosen = -1
        chosen_gain = 0.0
        ties = np.uint64(1)
        for i in range(dim):
            gain = local[i] if bits[i] == 0 else -local[i]
            if step - last_flip[i] <= tenure:
                if not (energy + gain < best_energy):  # aspiration
                    continue
            if chosen == -1 or gain < chosen_gain:
                chosen = i
                chosen_gain = gain
                ties = np.uint64(1)
            elif gain == chosen_gain:
                # reservoir pick among equal-gain moves keeps trajectories
                # seed-dependent on the highly symmetric problems
                ties += np.uint64(1)
                state = _advance(state)
                if state % ties == np.uint64(0):
                    chosen = i
        if chosen == -1:  # everything tabu; burn a pseudorandom move
            state = _advance(state)
            chosen = np.int64(state % np.uint64(dim))
            chosen_gain = local[chosen] if bits[chosen] == 0 else -local[chosen]
        energy += chosen_gain
        if bits[chosen] == 0:
            bits[chosen] = 1
            direction = 1.0
        else:
            bits[chosen] = 0
            direction = -1.0
        for j in range(dim):
            local[j] += couplings[j, chosen] * direction
        last_flip[chosen] = step
        if energy < best_energy:
            best_energy = energy
            best_bits[:] = bits
    return best_bits


@njit(cache=True, nogil=True)
def _sa_kernel(diag, couplings, bits, t_start, cooling, sweeps, seed):
    dim = bits.shape[0]
    local = _initial_field(diag, couplings, bits)
    energy = _bits_energy(diag, couplings, bits)
    best_energy = energy
    best_bits = bits.copy()
    state = seed if seed != np.uint64(0) else np.uint64(0x9E3779B97F4A7C15)
    temperature = t_start
    for _ in range(sweeps):
        for _ in range(dim):
            state = _advance(state)
            i = np.int64(state % np.uint64(dim))
            gain = local[i] if bits[i] == 0 else -local[i]
            accept = gain <= 0.0
            if not accept and temperature > 0.0:
                state = _advance(state)
                uniform = (state >> np.uint64(11)) * (1.0 / 9007199254740992.0)
                accept = uniform < np.exp(-gain / temperature)
            if accept:
                energy += gain
                if bits[i] == 0:
                    bits[i] = 1
                    direction = 1.0
                else:
                    bits[i] = 0
                    direction = -1.0
                for j in range(dim):
                    local[j] += couplings[j, i] * direction
                if energy < best_energy:
                    best_energy = energy
                    best_bits[:] = bits
        temperature *= cooling
    return best_bits


@njit(cache=True, nogil=True)
def _exhaustive_kernel(diag, couplings):
    # Gray-code walk: one flip per state, O(dim) field refresh per step.
    # Ties resolve to the smallest bit vector read with bit 0 as the most
    # significant digit, which the xor-maintained key tracks exactly.
    dim = diag.shape[0]
    bits = np.zeros(dim, dtype=np.uint8)
    local = diag.copy()
    energy = 0.0
    best_energy = 0.0
    best_bits = bits.copy()
    best_key = np.uint64(0)
    key = np.uint64(0)
    count = np.uint64(1) << np.uint64(dim)
    code = np.uint64(1)
    while code < count:
        trailing = 0
        probe = code
        while probe & np.uint64(1) == np.uint64(0):
            probe >>= np.uint64(1)
            trailing += 1
        gain = local[trailing] if bits[trailing] == 0 else -local[trailing]
        energy += gain
        if bits[trailing] == 0:
            bits[trailing] = 1
            direction = 1.0
        else:
            bits[trailing] = 0
            direction = -1.0
        for j in range(dim):
            local[j] += couplings[j, trailing] * direction
        key ^= np.uint64(1) << np.uint64(dim - 1 - trailing)
        if energy < best_energy or (energy == best_energy and key < best_key):
            best_energy = energy
            best_key = key
            best_bits[:] = bits
        code += np.uint64(1)
    return best_bits


def solve_subqubo_exhaustive(q: QuboProblem) -> Sample:
    """Exact minimum by full enumeration; ties -> lowest bit-vector value."""
    if q.dim > EXHAUSTIVE_MAX_DIM:
        raise ValueError(
            f"exhaustive solve is limited to {EXHAUSTIVE_MAX_DIM} variables, got {q.dim}"
        )
    diag, couplings = _dense_arrays(q)
    bits = _exhaustive_kernel(diag, couplings)
    return make_sample(q, bits)


def tabu_improve(
    q: QuboProblem,
    start,
    tenure: int | None = None,
    iterations: int | None = None,
    seed: int = 0,
) -> Sample:
    """Best-of-trajectory tabu search from `start` (1-flip moves, recency list).

    A tabu move is still taken when it beats the best energy seen so far.
    The result is never worse than the start.
    """
    bits = np.asarray(start, dtype=np.uint8)
    if bits.shape != (q.dim,):
        raise ValueError(f"expected {q.dim} start bits")
    diag, couplings = _dense_arrays(q)
    final = _tabu_kernel(
        diag,
        couplings,
        bits.copy(),
        np.int64(tenure if tenure is not None else default_tenure(q.dim)),
        np.int64(iterations if iterations is not None else default_iterations(q.dim)),
        np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
    )
    return make_sample(q, final)


def anneal_improve(
    q: QuboProblem,
    start,
    schedule: tuple[float, float, int] | None = None,
    seed: int = 0,
) -> Sample:
    """Simulated annealing from `start` under a geometric cooling schedule."""
    bits = np.asarray(start, dtype=np.uint8)
    if bits.shape != (q.dim,):
        raise ValueError(f"expected {q.dim} start bits")
    diag, couplings = _dense_arrays(q)
    if schedule is None:
        coefficients = [abs(v) for v in q.coefficients.values()]
        schedule = (max(coefficients, default=1.0), SA_COOLING, SA_SWEEPS)
    t_start, cooling, sweeps = schedule
    final = _sa_kernel(
        diag,
        couplings,
        bits.copy(),
        float(t_start),
        float(cooling),
        np.int64(sweeps),
        np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
    )
    return make_sample(q, final)


def _qubo_from_arrays(sub_diag: np.ndarray, sub_couplings: np.ndarray) -> QuboProblem:
    builder = QuboBuilder(sub_diag.shape[0])
    for i, value in enumerate(sub_diag):
        if value:
            builder.add(i, i, float(value))
    for i in range(sub_diag.shape[0]):
        for j in range(i + 1, sub_diag.shape[0]):
            if sub_couplings[i, j]:
                builder.add(i, j, float(sub_couplings[i, j]))
    return builder.build()


def _solve_group(
    sub_diag: np.ndarray,
    sub_couplings: np.ndarray,
    backend: Backend,
    config: SolverConfig,
    seed: int,
    diagnostics: list[str],
) -> np.ndarray:
    """Minimize one clamped subproblem given densely; returns its bit vector."""
    dim = sub_diag.shape[0]
    if backend is Backend.EXHAUSTIVE:
        return _exhaustive_kernel(sub_diag, sub_couplings)
    if backend is Backend.REMOTE:
        settings = config.remote
        try:
            samples = remote_client.sample_remote(
                _qubo_from_arrays(sub_diag, sub_couplings),
                settings.endpoint, settings.num_reads, settings.timeout,
                usage=settings.usage,
            )
            return np.array(samples[0].bits, dtype=np.uint8)
        except remote_client.RemoteError as error:
            if settings.fallback is None:
                raise
            diagnostics.append(
                f"remote solve failed ({error.__class__.__name__}: {error}); "
                f"fell back to {settings.fallback.value}"
            )
            return _solve_group(
                sub_diag, sub_couplings, settings.fallback, config, seed, diagnostics
            )
    start = np.random.default_rng(seed).integers(0, 2, dim, dtype=np.uint8)
    if backend is Backend.TABU:
        return _tabu_kernel(
            sub_diag, sub_couplings, start,
            np.int64(config.tabu_tenure or default_tenure(dim)),
            np.int64(config.tabu_iterations or default_iterations(dim)),
            np.uint64(seed),
        )
    assert backend is Backend.SIMULATED_ANNEALING
    if config.sa_schedule is not None:
        t_start, cooling, sweeps = config.sa_schedule
    else:
        t_start = max(
            float(np.max(np.abs(sub_diag))), float(np.max(np.abs(sub_couplings)))
        ) or 1.0
        cooling, sweeps = SA_COOLING, SA_SWEEPS
    return _sa_kernel(
        sub_diag, sub_couplings, start,
        float(t_start), float(cooling), np.int64(sweeps), np.uint64(seed),
    )


def solve(q: QuboProblem, config: SolverConfig | None = None) -> SolveReport:
    """Run the full decomposition loop; deterministic for local backends."""
    config = config or SolverConfig()
    config.validate()
    if q.dim < 1:
        raise ValueError("cannot solve an empty problem")
    started = time.perf_counter()
    rng = np.random.default_rng(np.uint64(config.seed & 0xFFFFFFFFFFFFFFFF))
    diag, couplings = _dense_arrays(q)

    initial = rng.integers(0, 2, q.dim, dtype=np.uint8)
    seeded = tabu_improve(
        q, initial, config.tabu_tenure, config.tabu_iterations,
        seed=int(rng.integers(1, 1 << 63)),
    )
    bits = np.asarray(seeded.bits, dtype=np.uint8)
    current_energy = seeded.energy  # matrix energy, offset excluded

    best_bits = bits.copy()
    best_energy = current_energy
    rounds = 0
    calls = 0
    backend_seconds = 0.0
    diagnostics: list[str] = []
    countdown = config.num_repeats

    def report() -> SolveReport:
        return SolveReport(
            best=make_sample(q, best_bits),
            iterations=rounds,
            subqubo_calls=calls,
            backend_time=backend_seconds,
            outer_time=time.perf_counter() - started,
            diagnostics=tuple(diagnostics),
        )

    while countdown > 0:
        rounds += 1
        improved = False
        gains = (1 - 2 * bits.astype(np.int64)) * (diag + couplings @ bits)
        order = np.argsort(-np.abs(gains), kind="stable")
        for begin in range(0, q.dim, config.subqubo_size):
            group = np.sort(order[begin:begin + config.subqubo_size])
            # clamp densely: fixed-on couplings fold onto the free diagonal
            on_outside = bits.copy()
            on_outside[group] = 0
            outside = np.flatnonzero(on_outside)
            sub_diag = diag[group] + couplings[np.ix_(group, outside)].sum(axis=1)
            sub_couplings = couplings[np.ix_(group, group)]
            sub_current = _bits_energy(sub_diag, sub_couplings, bits[group])
            calls += 1
            backend_started = time.perf_counter()
            try:
                candidate = _solve_group(
                    sub_diag, sub_couplings, config.backend, config,
                    int(rng.integers(1, 1 << 63)), diagnostics,
                )
            except remote_client.RemoteError as error:
                backend_seconds += time.perf_counter() - backend_started
                raise SolverAbort(
                    f"backend failed with no fallback: {error}", report()
                ) from error
            backend_seconds += time.perf_counter() - backend_started
            candidate_energy = _bits_energy(sub_diag, sub_couplings, candidate)
            if candidate_energy < sub_current:
                trial = bits.copy()
                trial[group] = candidate
                trial_energy = evaluate(q, trial)
                # folding consistency: the clamp identity makes the full-energy
                # change equal the subproblem change, exactly for integer inputs
                assert trial_energy - current_energy == candidate_energy - sub_current
                bits = trial
                current_energy = trial_energy
                improved = True
                if current_energy < best_energy:
                    best_energy = current_energy
                    best_bits = bits.copy()
        # consolidation pass: full-problem tabu from the incumbent ties the
        # group-level jumps back together (the "tabu search heuristic in
        # each iteration" part of the scheme)
        polished = _tabu_kernel(
            diag, couplings, bits.copy(),
            np.int64(config.tabu_tenure or default_tenure(q.dim)),
            np.int64(POLISH_ITERATIONS_PER_VARIABLE * q.dim),
            np.uint64(int(rng.integers(1, 1 << 63))),
        )
        polished_energy = _bits_energy(diag, couplings, polished)
        if polished_energy < current_energy:
            trial_energy = evaluate(q, polished)
            assert trial_energy == polished_energy
            bits = polished.astype(np.uint8)
            current_energy = trial_energy
            improved = True
            if current_energy < best_energy:
                best_energy = current_energy
                best_bits = bits.copy()
        countdown = config.num_repeats if improved else countdown - 1
    return report()
