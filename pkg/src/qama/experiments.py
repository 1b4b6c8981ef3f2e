"""Reproducible experiment harness: instance generation, reports, benchmarks.

Everything here is deterministic given the config (seeds included) except
wall-clock timing columns.  Data products are CSV for matrix-like output and
JSON for structured reports; floats are written in shortest round-trip form,
so re-parsing a file reproduces the in-memory values exactly.  Report paths
additionally render figures next to the delimited files.
"""

from __future__ import annotations

import dataclasses
import json
import math
import statistics
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hamiltonian import (
    CouplingTensor,
    DynamicCoefficients,
    FieldVector,
    assemble_qubo,
    compute_coupling,
    compute_field,
    dynamic_coefficients,
    energy_breakdown,
)
from .operator import forward
from .problems import IsingProblem, QuboProblem, to_ising
from .solvers import (
    BACKENDS,
    brute_force,
    estimate_success_probability,
    min_barrier,
    solve,
    success_tolerance,
    time_to_solution,
)
from .types import (
    AttentionInput,
    CoefficientConfig,
    SelectionMask,
    Shape,
    ValidationError,
    mask_to_spins,
)

__all__ = [
    "ExperimentConfig",
    "LandscapeRow",
    "MutationLandscape",
    "generate_instance",
    "build_problem",
    "run_forward_report",
    "mutation_landscape",
    "write_landscape_report",
    "benchmark_solvers",
    "barrier_success_study",
    "export_problem",
    "import_problem",
]

PROBLEM_SCHEMA = "qama-problem-v1"
REPORT_SCHEMA = "qama-report-v1"


@dataclass
class ExperimentConfig:
    """Full description of one experiment; JSON round-trippable."""

    batch: int = 1
    heads: int = 2
    seq_len: int = 6
    dim: int = 8
    rho0: float = 0.16
    lambda0: float = 0.8
    seed: int = 0
    backend: str = "sa"
    sweeps: int = 200
    beta_start: float = 0.1
    beta_end: float = 10.0
    interpolation: str = "geometric"
    softspin_steps: int = 400
    softspin_noise: float = 0.05
    runs: int = 100
    barrier_instances: int = 0
    barrier_runs: int = 50
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise ValidationError(
                f"backend must be one of {BACKENDS}, got {self.backend!r}"
            )
        if self.runs < 1:
            raise ValidationError(f"runs must be >= 1, got {self.runs}")

    def shape(self) -> Shape:
        return Shape(
            batch=self.batch, heads=self.heads, seq_len=self.seq_len, dim=self.dim
        )

    def coefficients(self) -> CoefficientConfig:
        return CoefficientConfig(rho0=self.rho0, lambda0=self.lambda0)

    def solver_config(self) -> dict:
        return {
            "sweeps": self.sweeps,
            "beta_start": self.beta_start,
            "beta_end": self.beta_end,
            "interpolation": self.interpolation,
            "steps": self.softspin_steps,
            "noise": self.softspin_noise,
        }

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _standardize_tokens(x: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance per feature channel across the token axis."""
    mean = x.mean(axis=2, keepdims=True)
    std = x.std(axis=2, keepdims=True)
    std = np.where(std < 1e-12, 1.0, std)  # degenerate at seq_len == 1
    return (x - mean) / std


def generate_instance(shape: Shape, seed: int = 0) -> AttentionInput:
    """Synthetic attention input: standardized Gaussian q, k, v and scaled w_eps.

    Draw order is q, k, v, w_eps from one generator, so a seed pins the whole
    instance bit-for-bit.
    """
    rng = np.random.default_rng(seed)
    dims = (shape.batch, shape.heads, shape.seq_len, shape.dim)
    q = _standardize_tokens(rng.standard_normal(dims))
    k = _standardize_tokens(rng.standard_normal(dims))
    v = _standardize_tokens(rng.standard_normal(dims))
    w_eps = rng.standard_normal((shape.dim, 1)) / math.sqrt(shape.dim)
    return AttentionInput(q=q, k=k, v=v, w_eps=w_eps)


def build_problem(
    inputs: AttentionInput, config: CoefficientConfig, element: int = 0
) -> tuple[QuboProblem, CouplingTensor, FieldVector, DynamicCoefficients]:
    """Assemble the QUBO for one batch element of an instance."""
    shape = inputs.shape
    if not 0 <= element < shape.batch:
        raise IndexError(f"batch element {element} out of range [0, {shape.batch})")
    single = Shape(batch=1, heads=shape.heads, seq_len=shape.seq_len, dim=shape.dim)
    coupling = compute_coupling(inputs.q[element], inputs.k[element])
    field = compute_field(inputs.v[element], inputs.w_eps)
    coefficients = dynamic_coefficients(single, config)
    qubo = assemble_qubo(coupling, field, coefficients, single)
    return qubo, coupling, field, coefficients


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, bool):
                cells.append("true" if cell else "false")
            elif isinstance(cell, float):
                cells.append(repr(cell))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def run_forward_report(config: ExperimentConfig, out_dir: str | Path) -> dict:
    """Run the operator once and write masks, energy breakdowns, and figures.

    Emits per element: a selection-mask CSV, a mask figure, and a token-energy
    figure; plus one JSON report and a feature-energy histogram for the batch.
    """
    from . import figures

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    shape = config.shape()
    inputs = generate_instance(shape, seed=config.seed)
    output, cache = forward(
        inputs,
        config.coefficients(),
        backend=config.backend,
        seed=config.seed,
        solver_config=config.solver_config(),
    )

    paths: dict[str, str] = {}
    elements = []
    for b in range(shape.batch):
        mask = cache.masks[b]
        mask_csv = out / f"mask_b{b}.csv"
        _write_csv(
            mask_csv,
            [f"token_{i}" for i in range(shape.seq_len)],
            [list(map(int, row)) for row in mask],
        )
        mask_png = out / f"mask_b{b}.png"
        figures.save_mask_figure(mask, mask_png, title=f"selected tokens, element {b}")
        energy_png = out / f"token_energy_b{b}.png"
        figures.save_token_energy_figure(
            output.e_token[b], energy_png, title=f"token energies, element {b}"
        )
        breakdown = energy_breakdown(
            SelectionMask(bits=mask.reshape(-1), shape=None),
            CouplingTensor(j=cache.coupling[b]),
            FieldVector(h=cache.field[b]),
            cache.coefficients,
        )
        elements.append(
            {
                "element": b,
                "h_alpha": breakdown.h_alpha,
                "h_beta": breakdown.h_beta,
                "h_gamma": breakdown.h_gamma,
                "e_out": float(output.e_out[b]),
                "solver_energy": cache.results[b].best_energy,
                "mask_csv": mask_csv.name,
            }
        )
        paths[f"mask_b{b}"] = str(mask_csv)
        paths[f"mask_figure_b{b}"] = str(mask_png)
        paths[f"token_energy_figure_b{b}"] = str(energy_png)

    hist_png = out / "e_dist_hist.png"
    figures.save_distribution_figure(
        output.e_dist.reshape(-1), hist_png, title="feature energy distribution"
    )
    paths["e_dist_figure"] = str(hist_png)

    report = {
        "schema": REPORT_SCHEMA,
        "backend": config.backend,
        "seed": config.seed,
        "coefficients": {
            "rho0": config.rho0,
            "lambda0": config.lambda0,
            "rho": cache.coefficients.rho,
            "lambda": cache.coefficients.lambda_,
            "penalty_disabled": cache.coefficients.penalty_disabled,
        },
        "elements": elements,
        "e_dist": {
            "mean": float(output.e_dist.mean()),
            "std": float(output.e_dist.std()),
        },
    }
    report_path = out / "report.json"
    _write_json(report_path, report)
    paths["report"] = str(report_path)
    return {"report": report, "paths": paths}


@dataclass(frozen=True)
class LandscapeRow:
    """One single-bit mutation of a solved mask."""

    flat_index: int
    head: int
    token: int
    mutated_energy: float
    delta: float


@dataclass(frozen=True)
class MutationLandscape:
    """Energies of every single-bit mutation around a base mask."""

    base_energy: float
    rows: tuple[LandscapeRow, ...]


def mutation_landscape(problem: QuboProblem, mask: SelectionMask) -> MutationLandscape:
    """Flip each bit of ``mask`` once and record the full recomputed energy."""
    if len(mask) != problem.n:
        raise ValidationError(
            f"mask has {len(mask)} bits, problem has {problem.n} variables"
        )
    base = problem.energy(mask)
    seq_len = problem.shape.seq_len if problem.shape is not None else problem.n
    rows = []
    for k in range(problem.n):
        bits = mask.bits.copy()
        bits[k] = 1 - bits[k]
        e = problem.energy(bits)
        head, token = divmod(k, seq_len)
        rows.append(
            LandscapeRow(
                flat_index=k,
                head=head,
                token=token,
                mutated_energy=e,
                delta=e - base,
            )
        )
    return MutationLandscape(base_energy=base, rows=tuple(rows))


def write_landscape_report(
    landscape: MutationLandscape, out_dir: str | Path
) -> dict[str, str]:
    """Write the landscape CSV and its figure; returns the paths."""
    from . import figures

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "landscape.csv"
    _write_csv(
        csv_path,
        ["flat_index", "head", "token", "mutated_energy", "delta", "base_energy"],
        [
            [r.flat_index, r.head, r.token, r.mutated_energy, r.delta, landscape.base_energy]
            for r in landscape.rows
        ],
    )
    png_path = out / "landscape.png"
    figures.save_landscape_figure(landscape, png_path)
    return {"landscape_csv": str(csv_path), "landscape_figure": str(png_path)}


def benchmark_solvers(config: ExperimentConfig, out_dir: str | Path) -> dict:
    """Compare every backend against brute force over seeded instances.

    Writes one CSV row per (backend, instance) plus per-backend aggregates
    with measured success probability, wall-time statistics, and the implied
    time to solution.  Wall time is the only non-deterministic output.
    """
    from . import figures

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    shape = config.shape()
    single = Shape(batch=1, heads=shape.heads, seq_len=shape.seq_len, dim=shape.dim)
    rows = []
    times: dict[str, list[float]] = {b: [] for b in BACKENDS}
    hits: dict[str, int] = {b: 0 for b in BACKENDS}
    solver_config = config.solver_config()

    for i in range(config.runs):
        instance_seed = config.seed + i
        inputs = generate_instance(single, seed=instance_seed)
        qubo, _, _, _ = build_problem(inputs, config.coefficients())
        ising = to_ising(qubo)
        t0 = time.perf_counter()
        exact = brute_force(qubo)
        brute_time = time.perf_counter() - t0
        ground = exact.best_energy
        tol = success_tolerance(ground)
        for backend in BACKENDS:
            if backend == "brute":
                best, wall = ground, brute_time
            else:
                t0 = time.perf_counter()
                result = solve(
                    ising, backend=backend, seed=instance_seed, config=solver_config
                )
                wall = time.perf_counter() - t0
                best = result.best_energy
            hit = best <= ground + tol
            hits[backend] += int(hit)
            times[backend].append(wall)
            rows.append([backend, instance_seed, best, ground, hit, wall])

    csv_path = out / "bench.csv"
    _write_csv(
        csv_path,
        ["backend", "instance_seed", "best_energy", "ground_energy", "hit", "wall_time_s"],
        rows,
    )

    aggregates = {}
    for backend in BACKENDS:
        p = hits[backend] / config.runs
        mean_t = statistics.fmean(times[backend])
        median_t = statistics.median(times[backend])
        tts = time_to_solution(p, mean_t) if mean_t > 0 else None
        aggregates[backend] = {
            "p_success": p,
            "runs": config.runs,
            "wall_time_mean_s": mean_t,
            "wall_time_median_s": median_t,
            "tts_runs": tts.runs if tts else None,
            "t_sol_s": (None if tts is None or math.isinf(tts.t_sol) else tts.t_sol),
            "t_sol_unbounded": bool(tts and math.isinf(tts.t_sol)),
        }
    json_path = out / "tts.json"
    _write_json(json_path, {"schema": REPORT_SCHEMA, "backends": aggregates})
    png_path = out / "bench.png"
    figures.save_benchmark_figure(aggregates, png_path)

    paths = {"bench_csv": str(csv_path), "tts_json": str(json_path), "bench_figure": str(png_path)}
    if config.barrier_instances > 0:
        paths.update(barrier_success_study(config, out))
    return {"rows": rows, "aggregates": aggregates, "paths": paths}


def barrier_success_study(config: ExperimentConfig, out_dir: str | Path) -> dict[str, str]:
    """Relate measured success probability to the minimax barrier per instance.

    For each instance: exact ground state, barrier from the all-deselected
    state, and the annealer's measured hit rate.  The scatter of log p against
    -beta_end * b_min is a qualitative diagnostic; no functional form is fit.
    """
    from . import figures

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    single = Shape(batch=1, heads=config.heads, seq_len=config.seq_len, dim=config.dim)
    solver_config = config.solver_config()
    rows = []
    for i in range(config.barrier_instances):
        instance_seed = config.seed + i
        inputs = generate_instance(single, seed=instance_seed)
        qubo, _, _, _ = build_problem(inputs, config.coefficients())
        ising = to_ising(qubo)
        exact = brute_force(qubo)
        start = mask_to_spins(
            SelectionMask(bits=np.zeros(qubo.n, dtype=np.int64), shape=qubo.shape)
        )
        ground = mask_to_spins(exact.best_state)
        barrier = min_barrier(ising, start, ground)
        p = estimate_success_probability(
            ising,
            exact.best_energy,
            backend=config.backend if config.backend != "brute" else "sa",
            runs=config.barrier_runs,
            seed=instance_seed,
            config=solver_config,
        )
        log_p = math.log(p) if p > 0.0 else None
        rows.append(
            [
                instance_seed,
                barrier.b_min,
                barrier.b_u,
                barrier.flips,
                p,
                -config.beta_end * barrier.b_min,
                "" if log_p is None else log_p,
            ]
        )
    csv_path = out / "barrier.csv"
    _write_csv(
        csv_path,
        ["instance_seed", "b_min", "b_u", "flips", "p_success", "neg_beta_b_min", "log_p"],
        rows,
    )
    png_path = out / "barrier.png"
    figures.save_barrier_figure(rows, png_path)
    return {"barrier_csv": str(csv_path), "barrier_figure": str(png_path)}


def export_problem(problem: QuboProblem | IsingProblem, path: str | Path) -> None:
    """Write a problem as canonical JSON; floats survive the round trip exactly."""
    if isinstance(problem, QuboProblem):
        kind = "qubo"
        weights = problem.linear
        pairs = problem.quad
    elif isinstance(problem, IsingProblem):
        kind = "ising"
        weights = problem.fields
        pairs = problem.couplings
    else:
        raise TypeError(f"unsupported problem type {type(problem).__name__}")
    shape = problem.shape
    payload = {
        "schema": PROBLEM_SCHEMA,
        "kind": kind,
        "n": problem.n,
        "offset": problem.offset,
        "weights": [float(x) for x in weights],
        "quadratic": [[p, q, float(c)] for (p, q), c in sorted(pairs.items())],
        "shape": None
        if shape is None
        else {
            "batch": shape.batch,
            "heads": shape.heads,
            "seq_len": shape.seq_len,
            "dim": shape.dim,
        },
    }
    _write_json(Path(path), payload)


def import_problem(path: str | Path) -> QuboProblem | IsingProblem:
    """Inverse of :func:`export_problem`."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("schema") != PROBLEM_SCHEMA:
        raise ValidationError(
            f"unsupported problem schema {payload.get('schema')!r}"
        )
    shape = payload.get("shape")
    shape_obj = None if shape is None else Shape(**shape)
    pairs = {(int(p), int(q)): float(c) for p, q, c in payload["quadratic"]}
    if len(pairs) != len(payload["quadratic"]):
        raise ValidationError("duplicate quadratic keys in problem file")
    kind = payload.get("kind")
    if kind == "qubo":
        return QuboProblem(
            n=int(payload["n"]),
            quad=pairs,
            linear=np.array(payload["weights"], dtype=np.float64),
            offset=float(payload["offset"]),
            shape=shape_obj,
        )
    if kind == "ising":
        return IsingProblem(
            n=int(payload["n"]),
            couplings=pairs,
            fields=np.array(payload["weights"], dtype=np.float64),
            offset=float(payload["offset"]),
            shape=shape_obj,
        )
    raise ValidationError(f"unknown problem kind {kind!r}")
