"""Shared builders for randomized tests; every helper takes an explicit rng."""

from __future__ import annotations

import numpy as np

from qama import (
    AttentionInput,
    CoefficientConfig,
    IsingProblem,
    QuboProblem,
    Shape,
    assemble_qubo,
    compute_coupling,
    compute_field,
    dynamic_coefficients,
)
from qama.experiments import generate_instance


def random_qubo(rng: np.random.Generator, n: int, density: float = 0.5) -> QuboProblem:
    quad = {}
    for p in range(n):
        for q in range(p + 1, n):
            if rng.random() < density:
                quad[(p, q)] = float(rng.standard_normal())
    return QuboProblem(
        n=n,
        quad=quad,
        linear=rng.standard_normal(n),
        offset=float(rng.standard_normal()),
    )


def random_ising(rng: np.random.Generator, n: int, density: float = 0.6) -> IsingProblem:
    couplings = {}
    for p in range(n):
        for q in range(p + 1, n):
            if rng.random() < density:
                couplings[(p, q)] = float(rng.standard_normal())
    return IsingProblem(
        n=n,
        couplings=couplings,
        fields=rng.standard_normal(n),
        offset=float(rng.standard_normal()),
    )


def random_spins(rng: np.random.Generator, n: int) -> np.ndarray:
    return (rng.integers(0, 2, size=n) * 2 - 1).astype(np.int64)


def qama_problem(
    seed: int,
    heads: int = 2,
    seq_len: int = 6,
    dim: int = 8,
    rho0: float = 0.16,
    lambda0: float = 0.8,
):
    """Full stack for one generated instance: inputs, terms, coeffs, qubo."""
    shape = Shape(batch=1, heads=heads, seq_len=seq_len, dim=dim)
    inputs = generate_instance(shape, seed=seed)
    coupling = compute_coupling(inputs.q[0], inputs.k[0])
    field = compute_field(inputs.v[0], inputs.w_eps)
    coefficients = dynamic_coefficients(shape, CoefficientConfig(rho0, lambda0))
    qubo = assemble_qubo(coupling, field, coefficients, shape)
    return inputs, coupling, field, coefficients, qubo


def enumerate_bits(n: int) -> np.ndarray:
    """All binary states, one per row, in lexicographic order of the bit tuple."""
    ms = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((ms[:, None] >> shifts[None, :]) & 1).astype(np.int64)


def random_attention_input(rng: np.random.Generator, shape: Shape) -> AttentionInput:
    dims = (shape.batch, shape.heads, shape.seq_len, shape.dim)
    return AttentionInput(
        q=rng.standard_normal(dims),
        k=rng.standard_normal(dims),
        v=rng.standard_normal(dims),
        w_eps=rng.standard_normal((shape.dim, 1)),
    )
