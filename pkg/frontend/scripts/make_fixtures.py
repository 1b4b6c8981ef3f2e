"""Generate tests/fixtures.json for the TypeScript client.

Runs the core package directly (not through the stdio endpoint) so the
fixtures are an independent oracle: the client tests then demand that the
endpoint reproduces these buffers bit for bit.
"""

import base64
import json
import tempfile
from pathlib import Path

import numpy as np

import qama
from qama import CoefficientConfig, Shape, backward, forward
from qama.experiments import build_problem, export_problem, generate_instance

PARITY_SHAPES = [
    (1, 2, 6, 8),
    (1, 1, 5, 4),
    (2, 2, 4, 3),
    (1, 3, 4, 2),
    (1, 2, 3, 5),
]

# small enough that a finite-difference sweep over every coordinate is cheap
GRADIENT_SHAPES = [
    (1, 2, 3, 2),
    (1, 1, 3, 2),
    (1, 2, 2, 3),
]


def b64(arr) -> str:
    data = np.ascontiguousarray(arr, dtype="<f8")
    return base64.b64encode(data.tobytes()).decode("ascii")


def make_case(dims: tuple[int, int, int, int], seed: int, rng) -> dict:
    shape = Shape(*dims)
    inputs = generate_instance(shape, seed=seed)
    config = CoefficientConfig(rho0=0.16, lambda0=0.8)
    solver = {"sweeps": 80}
    output, cache = forward(
        inputs, config, backend="sa", seed=seed, solver_config=solver
    )
    grad = rng.standard_normal(inputs.q.shape)
    bundle = backward(grad, cache)
    return {
        "shape": list(dims),
        "seed": seed,
        "rho0": config.rho0,
        "lambda0": config.lambda0,
        "backend": "sa",
        "solver": solver,
        "rho": cache.coefficients.rho,
        "q": b64(inputs.q),
        "k": b64(inputs.k),
        "v": b64(inputs.v),
        "w_eps": b64(inputs.w_eps),
        "expected": {
            "e_dist": b64(output.e_dist),
            "e_token": b64(output.e_token),
            "e_out": b64(output.e_out),
            "masks": [int(b) for b in cache.masks.reshape(-1)],
            "grad": b64(grad),
            "dq": b64(bundle.dq),
            "dk": b64(bundle.dk),
            "dv": b64(bundle.dv),
            "dw_eps": b64(bundle.dw_eps),
        },
    }


def make_export_case() -> dict:
    dims = (1, 2, 4, 3)
    inputs = generate_instance(Shape(*dims), seed=42)
    qubo, _, _, _ = build_problem(inputs, CoefficientConfig(0.16, 0.8))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "qubo.json"
        export_problem(qubo, path)
        text = path.read_text(encoding="utf-8")
    return {
        "shape": list(dims),
        "seed": 42,
        "rho0": 0.16,
        "lambda0": 0.8,
        "q": b64(inputs.q),
        "k": b64(inputs.k),
        "v": b64(inputs.v),
        "w_eps": b64(inputs.w_eps),
        "file_text": text,
    }


def main() -> None:
    rng = np.random.default_rng(2718)
    fixtures = {
        "version": qama.__version__,
        "instances": [
            make_case(PARITY_SHAPES[i % len(PARITY_SHAPES)], seed=i, rng=rng)
            for i in range(10)
        ],
        "gradient_cases": [
            make_case(dims, seed=100 + i, rng=rng)
            for i, dims in enumerate(GRADIENT_SHAPES)
        ],
        "export_case": make_export_case(),
    }
    out = Path(__file__).resolve().parents[1] / "tests" / "fixtures.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(fixtures) + "\n", encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
