"""Solver backends behind one interface, plus run-time analysis helpers.

Backends:

* ``brute``    exact enumeration with deterministic lexicographic tie-break,
* ``sa``       single-flip simulated annealing, Metropolis acceptance,
* ``glauber``  the same sweep with Glauber (heat-bath) acceptance,
* ``softspin`` best-effort continuous relaxation with a pump ramp.

Every stochastic backend is deterministic given its seed.  Analysis helpers
cover success-probability estimation, the 99%-confidence time-to-solution
formula, and exact minimax energy-barrier search at toy sizes.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .problems import IsingProblem, QuboProblem, to_ising
from .types import SelectionMask, SpinState, ValidationError, spins_to_mask

__all__ = [
    "AnnealSchedule",
    "SolveResult",
    "TtsReport",
    "BarrierReport",
    "CapacityError",
    "BarrierUnreachableError",
    "DEFAULT_SCHEDULE",
    "BACKENDS",
    "acceptance_probability",
    "brute_force",
    "simulated_anneal",
    "soft_spin_anneal",
    "solve",
    "register_backend",
    "estimate_success_probability",
    "success_tolerance",
    "time_to_solution",
    "min_barrier",
]

BRUTE_FORCE_CAP = 24
BARRIER_CAP = 12
_CHUNK = 1 << 16


class CapacityError(RuntimeError):
    """Problem size exceeds what an exhaustive routine will attempt."""


class BarrierUnreachableError(RuntimeError):
    """No single-flip path within the length bound connects the two states."""


@dataclass(frozen=True)
class AnnealSchedule:
    """Inverse-temperature ramp for single-flip annealing."""

    beta_start: float = 0.1
    beta_end: float = 10.0
    sweeps: int = 200
    interpolation: str = "geometric"

    def __post_init__(self) -> None:
        if not self.beta_start > 0.0:
            raise ValidationError(f"beta_start must be > 0, got {self.beta_start}")
        if self.beta_end < self.beta_start:
            raise ValidationError(
                f"beta_end {self.beta_end} must be >= beta_start {self.beta_start}"
            )
        if self.sweeps < 1:
            raise ValidationError(f"sweeps must be >= 1, got {self.sweeps}")
        if self.interpolation not in ("geometric", "linear"):
            raise ValidationError(
                f"interpolation must be 'geometric' or 'linear', got {self.interpolation!r}"
            )

    def betas(self) -> np.ndarray:
        """Per-sweep inverse temperatures; endpoints are hit exactly."""
        if self.sweeps == 1:
            # single sweep runs at the final (coldest) temperature
            return np.array([self.beta_end])
        if self.interpolation == "geometric":
            return np.geomspace(self.beta_start, self.beta_end, self.sweeps)
        return np.linspace(self.beta_start, self.beta_end, self.sweeps)


DEFAULT_SCHEDULE = AnnealSchedule()


@dataclass(frozen=True)
class SolveResult:
    """Best state found by one solver run, as selection bits."""

    best_state: SelectionMask
    best_energy: float
    energy_trace: np.ndarray | None
    sweeps_used: int
    seed: int
    backend: str


@dataclass(frozen=True)
class TtsReport:
    """Repeats and wall time needed to hit the ground state with 99% confidence."""

    p_success: float
    t_ann: float
    runs: int
    t_sol: float


@dataclass(frozen=True)
class BarrierReport:
    """Minimax energy barrier between two states over single-flip paths.

    ``b_min`` is the largest positive single-flip step along the best path,
    ``b_u`` the cumulative sum of positive steps along that same witness path.
    """

    b_min: float
    witness_path: tuple[int, ...]
    b_u: float
    flips: int


def acceptance_probability(delta: float, beta: float, rule: str = "metropolis") -> float:
    """Probability of accepting a move with energy change ``delta`` at ``beta``."""
    if beta < 0.0:
        raise ValidationError(f"beta must be >= 0, got {beta}")
    if rule == "metropolis":
        if delta <= 0.0:
            return 1.0
        return math.exp(-beta * delta)
    if rule == "glauber":
        # evaluate with a non-positive exponent either way to avoid overflow
        bd = beta * delta
        if bd >= 0.0:
            e = math.exp(-bd)
            return e / (1.0 + e)
        return 1.0 / (1.0 + math.exp(bd))
    raise ValidationError(f"unknown acceptance rule {rule!r}")


def _enumerate_bits(first: int, last: int, n: int) -> np.ndarray:
    """Rows of binary states for integers [first, last), bit 0 most significant.

    With this encoding, numeric order of the integers equals lexicographic
    order of the bit strings, so the first minimum seen is the lexicographic
    tie-break winner.
    """
    ms = np.arange(first, last, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((ms[:, None] >> shifts[None, :]) & 1).astype(np.float64)


def _batch_energies(problem: QuboProblem | IsingProblem, bits: np.ndarray) -> np.ndarray:
    if isinstance(problem, QuboProblem):
        return problem.energies(bits)
    return problem.energies(2.0 * bits - 1.0)


def brute_force(
    problem: QuboProblem | IsingProblem, cap: int = BRUTE_FORCE_CAP
) -> SolveResult:
    """Exact minimum by enumeration; ties go to the lexicographically smallest bits."""
    n = problem.n
    if n > cap:
        raise CapacityError(f"brute force over {n} variables exceeds cap {cap}")
    best_energy = math.inf
    best_bits: np.ndarray | None = None
    total = 1 << n
    for first in range(0, total, _CHUNK):
        bits = _enumerate_bits(first, min(first + _CHUNK, total), n)
        energies = _batch_energies(problem, bits)
        i = int(np.argmin(energies))
        if energies[i] < best_energy:
            best_energy = float(energies[i])
            best_bits = bits[i].astype(np.int64)
    assert best_bits is not None
    return SolveResult(
        best_state=SelectionMask(bits=best_bits, shape=problem.shape),
        best_energy=best_energy,
        energy_trace=None,
        sweeps_used=0,
        seed=0,
        backend="brute",
    )


def simulated_anneal(
    problem: IsingProblem,
    schedule: AnnealSchedule | None = None,
    seed: int = 0,
    acceptance: str = "metropolis",
    random_order: bool = False,
    track_trace: bool = True,
) -> SolveResult:
    """Single-flip annealing over the schedule, tracking the best state ever seen.

    Sites are visited in fixed sequential order unless ``random_order`` is set;
    the sequential default keeps runs bit-reproducible across platforms.
    """
    if acceptance not in ("metropolis", "glauber"):
        raise ValidationError(f"unknown acceptance rule {acceptance!r}")
    schedule = schedule or DEFAULT_SCHEDULE
    rng = np.random.default_rng(seed)
    n = problem.n
    fields = problem.fields
    adjacency = problem.adjacency

    spins = (rng.integers(0, 2, size=n) * 2 - 1).astype(np.float64)
    current = problem.energy(spins.astype(np.int64))
    best = current
    best_spins = spins.copy()
    metropolis = acceptance == "metropolis"

    betas = schedule.betas()
    trace = np.empty(betas.size) if track_trace else None
    for sweep, beta in enumerate(betas):
        order = rng.permutation(n) if random_order else range(n)
        for k in order:
            nbr, val = adjacency[k]
            local = fields[k]
            if nbr.size:
                local = local + val @ spins[nbr]
            delta = 2.0 * spins[k] * local
            if metropolis:
                accept = delta <= 0.0 or rng.random() < math.exp(-beta * delta)
            else:
                accept = rng.random() < acceptance_probability(delta, beta, "glauber")
            if accept:
                spins[k] = -spins[k]
                current += delta
                if current < best:
                    best = current
                    best_spins = spins.copy()
        if trace is not None:
            trace[sweep] = current

    state = SpinState(spins=best_spins.astype(np.int64), shape=problem.shape)
    return SolveResult(
        best_state=spins_to_mask(state),
        best_energy=float(best),
        energy_trace=trace,
        sweeps_used=int(betas.size),
        seed=seed,
        backend="sa" if metropolis else "glauber",
    )


def soft_spin_anneal(
    problem: IsingProblem,
    steps: int = 400,
    dt: float = 0.05,
    gain_start: float = 0.0,
    gain_end: float = 2.0,
    noise: float = 0.05,
    coupling_strength: float = 1.0,
    seed: int = 0,
) -> SolveResult:
    """Continuous soft-spin relaxation, binarized by sign at every step.

    Amplitudes follow  dx = ((g - 1) x - x^3 + xi (J x + h)) dt + noise dW
    while the gain g ramps linearly across the run.  Best-effort: useful as
    an alternative heuristic, no success guarantee is attached.
    """
    if steps < 1:
        raise ValidationError(f"steps must be >= 1, got {steps}")
    if dt <= 0.0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    rng = np.random.default_rng(seed)
    n = problem.n
    j = problem.coupling_matrix
    h = problem.fields

    x = 0.1 * rng.standard_normal(n)
    gains = np.linspace(gain_start, gain_end, steps)
    sqrt_dt = math.sqrt(dt)
    best = math.inf
    best_spins = np.where(x >= 0.0, 1, -1).astype(np.int64)
    trace = np.empty(steps)
    for step in range(steps):
        drive = coupling_strength * (j @ x + h)
        x = x + dt * ((gains[step] - 1.0) * x - x**3 + drive)
        x = x + noise * sqrt_dt * rng.standard_normal(n)
        np.clip(x, -3.0, 3.0, out=x)  # keep the cubic term from overflowing
        spins = np.where(x >= 0.0, 1, -1).astype(np.int64)
        e = problem.energy(spins)
        trace[step] = e
        if e < best:
            best = e
            best_spins = spins
    state = SpinState(spins=best_spins, shape=problem.shape)
    return SolveResult(
        best_state=spins_to_mask(state),
        best_energy=float(best),
        energy_trace=trace,
        sweeps_used=steps,
        seed=seed,
        backend="softspin",
    )


BackendFn = Callable[[IsingProblem, int, dict], SolveResult]
_BACKENDS: dict[str, BackendFn] = {}


def register_backend(name: str, fn: BackendFn) -> None:
    """Register a solver callable (problem, seed, config) -> SolveResult.

    This is the seam where hardware or external annealers plug in.
    """
    if name in _BACKENDS:
        raise ValidationError(f"backend {name!r} is already registered")
    _BACKENDS[name] = fn


def _sa_config(config: dict, acceptance: str) -> Callable[[IsingProblem, int], SolveResult]:
    schedule = AnnealSchedule(
        beta_start=config.get("beta_start", DEFAULT_SCHEDULE.beta_start),
        beta_end=config.get("beta_end", DEFAULT_SCHEDULE.beta_end),
        sweeps=config.get("sweeps", DEFAULT_SCHEDULE.sweeps),
        interpolation=config.get("interpolation", DEFAULT_SCHEDULE.interpolation),
    )
    return lambda problem, seed: simulated_anneal(
        problem,
        schedule=schedule,
        seed=seed,
        acceptance=acceptance,
        random_order=config.get("random_order", False),
    )


def solve(
    problem: QuboProblem | IsingProblem,
    backend: str = "sa",
    seed: int = 0,
    config: dict | None = None,
) -> SolveResult:
    """Solve with a named backend; any backend accepts the spin form.

    ``brute`` runs on the problem exactly as given (no change of basis, so
    tie-breaking is unaffected by conversion rounding).  The stochastic
    backends convert binary problems to spin form first.
    """
    config = dict(config or {})
    if backend == "brute":
        return brute_force(problem, cap=config.get("cap", BRUTE_FORCE_CAP))
    ising = problem if isinstance(problem, IsingProblem) else to_ising(problem)
    if backend in ("sa", "glauber"):
        return _sa_config(config, "metropolis" if backend == "sa" else "glauber")(
            ising, seed
        )
    if backend == "softspin":
        return soft_spin_anneal(
            ising,
            steps=config.get("steps", 400),
            dt=config.get("dt", 0.05),
            gain_start=config.get("gain_start", 0.0),
            gain_end=config.get("gain_end", 2.0),
            noise=config.get("noise", 0.05),
            coupling_strength=config.get("coupling_strength", 1.0),
            seed=seed,
        )
    if backend in _BACKENDS:
        return _BACKENDS[backend](ising, seed, config)
    raise ValidationError(f"unknown backend {backend!r}")


BACKENDS = ("brute", "sa", "glauber", "softspin")


def success_tolerance(ground_energy: float) -> float:
    """Default slack for counting a run as a ground-state hit."""
    return 1e-6 * max(1.0, abs(ground_energy))


def estimate_success_probability(
    problem: QuboProblem | IsingProblem,
    ground_energy: float,
    backend: str = "sa",
    runs: int = 100,
    tol: float | None = None,
    seed: int = 0,
    config: dict | None = None,
) -> float:
    """Fraction of seeded runs reaching the ground energy within tolerance."""
    if runs < 1:
        raise ValidationError(f"runs must be >= 1, got {runs}")
    if tol is None:
        tol = success_tolerance(ground_energy)
    hits = 0
    for i in range(runs):
        result = solve(problem, backend=backend, seed=seed + i, config=config)
        if result.best_energy <= ground_energy + tol:
            hits += 1
    return hits / runs


def time_to_solution(p_success: float, t_ann: float) -> TtsReport:
    """Total anneal time for 99% confidence of at least one ground-state hit.

    ``p_success == 1`` needs a single run; ``p_success == 0`` is reported as
    unbounded (``runs == 0``, ``t_sol == inf``).
    """
    if not 0.0 <= p_success <= 1.0:
        raise ValidationError(f"p_success must lie in [0, 1], got {p_success}")
    if not t_ann > 0.0:
        raise ValidationError(f"t_ann must be > 0, got {t_ann}")
    if p_success == 0.0:
        return TtsReport(p_success=0.0, t_ann=t_ann, runs=0, t_sol=math.inf)
    if p_success == 1.0:
        return TtsReport(p_success=1.0, t_ann=t_ann, runs=1, t_sol=t_ann)
    runs = math.ceil(math.log(0.01) / math.log(1.0 - p_success))
    return TtsReport(p_success=p_success, t_ann=t_ann, runs=runs, t_sol=t_ann * runs)


def _all_state_energies(problem: IsingProblem, n: int) -> np.ndarray:
    """Energies of every spin state; state integer bit k holds site k."""
    total = 1 << n
    out = np.empty(total)
    shifts = np.arange(n, dtype=np.int64)
    for first in range(0, total, _CHUNK):
        ms = np.arange(first, min(first + _CHUNK, total), dtype=np.int64)
        bits = ((ms[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        out[first : first + ms.size] = problem.energies(2.0 * bits - 1.0)
    return out


def _spins_to_int(spins: np.ndarray) -> int:
    bits = (np.asarray(spins) + 1) // 2
    return int(bits @ (1 << np.arange(bits.size, dtype=np.int64)))


def min_barrier(
    problem: IsingProblem,
    start: SpinState,
    ground: SpinState,
    max_flips: int | None = None,
    cap: int = BARRIER_CAP,
) -> BarrierReport:
    """Smallest maximum uphill step over single-flip paths from start to ground.

    Exhaustive best-first search over (state, path length) pairs, path length
    bounded by ``max_flips`` (default 2n) with no immediate backtracking.
    ``ground`` must be a true ground state; this is verified against the full
    enumeration the search needs anyway.
    """
    n = problem.n
    if n > cap:
        raise CapacityError(f"barrier search over {n} variables exceeds cap {cap}")
    if len(start) != n or len(ground) != n:
        raise ValidationError("start and ground must match the problem size")
    if max_flips is None:
        max_flips = 2 * n
    if max_flips < 0:
        raise ValidationError(f"max_flips must be >= 0, got {max_flips}")

    energies = _all_state_energies(problem, n)
    start_int = _spins_to_int(start.spins)
    ground_int = _spins_to_int(ground.spins)
    lowest = float(energies.min())
    if energies[ground_int] > lowest + 1e-12 * max(1.0, abs(lowest)):
        raise ValidationError(
            f"ground state has energy {energies[ground_int]}, true minimum is {lowest}"
        )
    if start_int == ground_int:
        return BarrierReport(b_min=0.0, witness_path=(), b_u=0.0, flips=0)

    # Dijkstra on bottleneck cost over (state, depth); cost only grows along
    # a path, so the first pop of the ground state is optimal.
    dist = np.full((1 << n, max_flips + 1), math.inf)
    dist[start_int, 0] = 0.0
    parent: dict[tuple[int, int], tuple[int, int, int]] = {}
    heap: list[tuple[float, int, int]] = [(0.0, start_int, 0)]
    goal: tuple[int, int] | None = None
    while heap:
        b, state, depth = heapq.heappop(heap)
        if b > dist[state, depth]:
            continue
        if state == ground_int:
            goal = (state, depth)
            break
        if depth == max_flips:
            continue
        prev_state = parent.get((state, depth), (-1, -1, -1))[0]
        e_here = energies[state]
        for k in range(n):
            nxt = state ^ (1 << k)
            if nxt == prev_state:
                continue
            nb = max(b, max(0.0, float(energies[nxt] - e_here)))
            if nb < dist[nxt, depth + 1]:
                dist[nxt, depth + 1] = nb
                parent[(nxt, depth + 1)] = (state, depth, k)
                heapq.heappush(heap, (nb, nxt, depth + 1))
    if goal is None:
        raise BarrierUnreachableError(
            f"no single-flip path of length <= {max_flips} reaches the ground state"
        )

    flips: list[int] = []
    node = goal
    while node != (start_int, 0):
        state, depth, k = parent[node][0], parent[node][1], parent[node][2]
        flips.append(k)
        node = (state, depth)
    flips.reverse()

    b_u = 0.0
    b_min = 0.0
    cur = start_int
    for k in flips:
        nxt = cur ^ (1 << k)
        step = float(energies[nxt] - energies[cur])
        if step > 0.0:
            b_u += step
            b_min = max(b_min, step)
        cur = nxt
    return BarrierReport(
        b_min=b_min, witness_path=tuple(flips), b_u=b_u, flips=len(flips)
    )
