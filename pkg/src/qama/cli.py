"""Command line harness around the experiment module.

Every command prints one JSON line on success and exits 0; failures print one
JSON error line on stderr and exit nonzero.  Flags override config file
values; the output directory falls back to the QAMA_OUT_DIR environment
variable when --out is absent.

Usage examples:

    qama generate --heads 2 --seq-len 6 --dim 8 --seed 7 --out run/
    qama solve --backend sa --sweeps 400 --out run/
    qama forward --config experiment.json --out run/
    qama landscape --backend brute --seq-len 5 --out run/
    qama bench --runs 50 --out run/
    qama export --seed 3 --out run/
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from .experiments import (
    ExperimentConfig,
    benchmark_solvers,
    build_problem,
    export_problem,
    generate_instance,
    import_problem,
    mutation_landscape,
    run_forward_report,
    write_landscape_report,
)
from .problems import to_ising
from .solvers import BACKENDS, solve
from .types import ValidationError

OUT_DIR_ENV = "QAMA_OUT_DIR"

_FLAG_FIELDS = {
    "seed": "seed",
    "batch": "batch",
    "heads": "heads",
    "seq_len": "seq_len",
    "dim": "dim",
    "rho0": "rho0",
    "lambda0": "lambda0",
    "backend": "backend",
    "sweeps": "sweeps",
    "beta_start": "beta_start",
    "beta_end": "beta_end",
    "runs": "runs",
}


class _Parser(argparse.ArgumentParser):
    # argparse would exit(2) with a usage dump; raise instead so main() can
    # emit the machine-readable error line
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ValidationError(message)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON experiment config")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--batch", type=int)
    parser.add_argument("--heads", type=int)
    parser.add_argument("--seq-len", type=int, dest="seq_len")
    parser.add_argument("--dim", type=int)
    parser.add_argument("--rho0", type=float)
    parser.add_argument("--lambda0", type=float)
    parser.add_argument("--backend", choices=list(BACKENDS))
    parser.add_argument("--sweeps", type=int)
    parser.add_argument("--beta-start", type=float, dest="beta_start")
    parser.add_argument("--beta-end", type=float, dest="beta_end")
    parser.add_argument("--runs", type=int)
    parser.add_argument("--out", type=Path, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qama", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("generate", "generate an instance and write its tensors and problem"),
        ("solve", "solve one instance (or a problem file) with a backend"),
        ("forward", "run the operator and write masks, energies, figures"),
        ("landscape", "single-bit mutation landscape around a solved mask"),
        ("bench", "benchmark all backends against brute force"),
        ("export", "write the binary and spin problem files for an instance"),
    ):
        p = sub.add_parser(name, help=doc, description=doc)
        _add_common(p)
        if name in ("solve", "landscape"):
            p.add_argument("--problem", type=Path, help="problem JSON instead of a generated instance")
    return parser


def _merge_config(args: argparse.Namespace) -> ExperimentConfig:
    config = (
        ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    )
    for flag, field in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config, field, value)
    # re-run dataclass validation after the overlay
    return ExperimentConfig.from_dict(dataclasses.asdict(config))


def _out_dir(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    if args.out is not None:
        return Path(args.out)
    env = os.environ.get(OUT_DIR_ENV)
    if env:
        return Path(env)
    if config.out_dir:
        return Path(config.out_dir)
    return Path("qama_out")


def _load_or_build(args: argparse.Namespace, config: ExperimentConfig):
    problem_path = getattr(args, "problem", None)
    if problem_path is not None:
        return import_problem(problem_path)
    inputs = generate_instance(config.shape(), seed=config.seed)
    qubo, _, _, _ = build_problem(inputs, config.coefficients())
    return qubo


def _cmd_generate(config: ExperimentConfig, out: Path, args) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    inputs = generate_instance(config.shape(), seed=config.seed)
    tensors = out / "instance.npz"
    np.savez(tensors, q=inputs.q, k=inputs.k, v=inputs.v, w_eps=inputs.w_eps)
    outputs = {"instance": str(tensors)}
    for b in range(config.batch):
        qubo, _, _, _ = build_problem(inputs, config.coefficients(), element=b)
        path = out / f"qubo_b{b}.json"
        export_problem(qubo, path)
        outputs[f"qubo_b{b}"] = str(path)
    config_path = out / "config.json"
    config_path.write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    outputs["config"] = str(config_path)
    return outputs


def _cmd_solve(config: ExperimentConfig, out: Path, args) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    problem = _load_or_build(args, config)
    result = solve(
        problem,
        backend=config.backend,
        seed=config.seed,
        config=config.solver_config(),
    )
    payload = {
        "backend": result.backend,
        "seed": result.seed,
        "n": problem.n,
        "best_energy": result.best_energy,
        "bits": [int(b) for b in result.best_state.bits],
        "sweeps_used": result.sweeps_used,
    }
    path = out / "solution.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"solution": str(path)}


def _cmd_forward(config: ExperimentConfig, out: Path, args) -> dict:
    return run_forward_report(config, out)["paths"]


def _cmd_landscape(config: ExperimentConfig, out: Path, args) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    problem = _load_or_build(args, config)
    result = solve(
        problem,
        backend=config.backend,
        seed=config.seed,
        config=config.solver_config(),
    )
    landscape = mutation_landscape(problem, result.best_state)
    return write_landscape_report(landscape, out)


def _cmd_bench(config: ExperimentConfig, out: Path, args) -> dict:
    return benchmark_solvers(config, out)["paths"]


def _cmd_export(config: ExperimentConfig, out: Path, args) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    inputs = generate_instance(config.shape(), seed=config.seed)
    qubo, _, _, _ = build_problem(inputs, config.coefficients())
    qubo_path = out / "qubo.json"
    ising_path = out / "ising.json"
    export_problem(qubo, qubo_path)
    export_problem(to_ising(qubo), ising_path)
    return {"qubo": str(qubo_path), "ising": str(ising_path)}


_COMMANDS = {
    "generate": _cmd_generate,
    "solve": _cmd_solve,
    "forward": _cmd_forward,
    "landscape": _cmd_landscape,
    "bench": _cmd_bench,
    "export": _cmd_export,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _merge_config(args)
        out = _out_dir(args, config)
        outputs = _COMMANDS[args.command](config, out, args)
    except Exception as exc:  # noqa: BLE001 - boundary turns anything into an error line
        line = json.dumps(
            {"ok": False, "error": {"type": type(exc).__name__, "message": str(exc)}}
        )
        print(line, file=sys.stderr)
        return 1
    print(json.dumps({"ok": True, "command": args.command, "outputs": outputs}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
