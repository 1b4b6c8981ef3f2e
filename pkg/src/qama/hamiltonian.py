"""Builds the attention selection Hamiltonian.

Three ingredients go into the binary problem for one batch element:

* pairwise couplings per head, J_t = (Q_t K_t^T)(Q_t K_t^T)^T / (2 dim),
  diagonal removed, rewarding jointly relevant token pairs;
* linear importance fields h[t, i] = V[t, i, :] . w_eps, rewarding
  individually important tokens;
* a cross-head overlap penalty that charges lambda whenever two heads
  select the same token.

The assembled QUBO minimizes  -H_alpha - rho * H_beta + lambda * H_gamma
where H_alpha sums J over selected same-head pairs, H_beta sums h over
selected tokens, and H_gamma counts selected same-token head pairs.

Inputs are used as given; any standardization happens upstream in the
instance generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problems import QuboProblem
from .types import (
    CoefficientConfig,
    SelectionMask,
    Shape,
    ShapeError,
    ValidationError,
)

__all__ = [
    "CouplingTensor",
    "FieldVector",
    "DynamicCoefficients",
    "EnergyBreakdown",
    "compute_coupling",
    "compute_field",
    "dynamic_coefficients",
    "expected_max_subterms",
    "subterm_ratios",
    "assemble_qubo",
    "energy_breakdown",
]

# E[max(0, X)] for standard normal X; used by the size-balancing heuristics.
HALF_NORMAL_MEAN = math.sqrt(1.0 / (2.0 * math.pi))


@dataclass(frozen=True, eq=False)
class CouplingTensor:
    """Per-head symmetric coupling matrices with zero diagonal, (heads, n, n)."""

    j: np.ndarray

    def __post_init__(self) -> None:
        j = np.array(self.j, dtype=np.float64, order="C")
        if j.ndim != 3 or j.shape[1] != j.shape[2]:
            raise ShapeError(f"coupling tensor must be (heads, n, n), got {j.shape}")
        if not np.all(np.isfinite(j)):
            raise ValidationError("coupling tensor contains non-finite entries")
        scale = max(1.0, float(np.abs(j).max(initial=0.0)))
        if np.abs(j - j.transpose(0, 2, 1)).max(initial=0.0) > 1e-12 * scale:
            raise ValidationError("coupling tensor is not symmetric per head")
        diag = j[:, np.arange(j.shape[1]), np.arange(j.shape[1])]
        if np.any(diag != 0.0):
            raise ValidationError("coupling tensor has nonzero diagonal entries")
        j.flags.writeable = False
        object.__setattr__(self, "j", j)


@dataclass(frozen=True, eq=False)
class FieldVector:
    """Per-token linear importance values, (heads, seq_len)."""

    h: np.ndarray

    def __post_init__(self) -> None:
        h = np.array(self.h, dtype=np.float64, order="C")
        if h.ndim != 2:
            raise ShapeError(f"field vector must be (heads, seq_len), got {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValidationError("field vector contains non-finite entries")
        h.flags.writeable = False
        object.__setattr__(self, "h", h)


@dataclass(frozen=True)
class DynamicCoefficients:
    """Size-balanced term weights for one problem shape.

    ``penalty_disabled`` is set for single-head problems, where no cross-head
    overlap exists and the penalty weight is pinned to zero.
    """

    rho: float
    lambda_: float
    penalty_disabled: bool = False


@dataclass(frozen=True)
class EnergyBreakdown:
    """Hamiltonian subterm values at one mask, plus the weighted total."""

    h_alpha: float
    h_beta: float
    h_gamma: float
    total: float


def compute_coupling(q: np.ndarray, k: np.ndarray) -> CouplingTensor:
    """Couplings for one batch element from (heads, seq_len, dim) q and k.

    Per head, with M = q_t k_t^T:  J_t = M M^T / (2 dim), diagonal zeroed.
    The result is symmetric by construction and scales quadratically with
    any common scaling of q and k.
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if q.ndim != 3 or q.shape != k.shape:
        raise ShapeError(f"q and k must share shape (heads, n, dim), got {q.shape} and {k.shape}")
    dim = q.shape[2]
    m = q @ k.transpose(0, 2, 1)
    j = (m @ m.transpose(0, 2, 1)) / (2.0 * dim)
    idx = np.arange(j.shape[1])
    j[:, idx, idx] = 0.0
    return CouplingTensor(j=j)


def compute_field(v: np.ndarray, w_eps: np.ndarray) -> FieldVector:
    """Linear fields h[t, i] = v[t, i, :] . w_eps for one batch element."""
    v = np.asarray(v, dtype=np.float64)
    w = np.asarray(w_eps, dtype=np.float64)
    if v.ndim != 3:
        raise ShapeError(f"v must be (heads, n, dim), got {v.shape}")
    if w.shape != (v.shape[2], 1):
        raise ShapeError(f"w_eps must be ({v.shape[2]}, 1), got {w.shape}")
    return FieldVector(h=v @ w[:, 0])


def dynamic_coefficients(shape: Shape, config: CoefficientConfig) -> DynamicCoefficients:
    """Term weights scaled so no subterm dominates as the problem grows.

    rho grows linearly with token count; lambda additionally normalizes by
    the number of competing heads.  With a single head the penalty term is
    empty, so lambda is zero and flagged disabled.
    """
    rho = shape.seq_len * config.rho0
    if shape.heads == 1:
        return DynamicCoefficients(rho=rho, lambda_=0.0, penalty_disabled=True)
    lam = shape.seq_len * math.sqrt(2.0 / math.pi) / (shape.heads - 1) * config.lambda0
    return DynamicCoefficients(rho=rho, lambda_=lam, penalty_disabled=False)


def expected_max_subterms(shape: Shape) -> tuple[float, float, float]:
    """Expected magnitude bounds of the three unweighted subterms.

    Returned as (interaction, linear, overlap) under the modelling assumption
    that couplings and fields are i.i.d. standard normal and every variable is
    selected.  These are diagnostics used to motivate the dynamic weights, not
    quantities the solver depends on.
    """
    h, n = shape.heads, shape.seq_len
    alpha = h * n * n * HALF_NORMAL_MEAN
    beta = h * n * HALF_NORMAL_MEAN
    gamma = h * (h - 1) * n / 2.0
    return alpha, beta, gamma


def subterm_ratios(shape: Shape, config: CoefficientConfig) -> dict[str, float]:
    """Expected weighted-subterm ratios relative to the interaction term.

    Exposes how the dynamic weights trade the terms off against each other;
    ratios involving a disabled or zero-weight term are reported as inf.
    """
    alpha, beta, gamma = expected_max_subterms(shape)
    coeff = dynamic_coefficients(shape, config)
    lin = coeff.rho * beta
    pen = coeff.lambda_ * gamma
    return {
        "interaction_to_linear": alpha / lin if lin > 0.0 else math.inf,
        "interaction_to_penalty": alpha / pen if pen > 0.0 else math.inf,
    }


def assemble_qubo(
    coupling: CouplingTensor,
    field: FieldVector,
    coefficients: DynamicCoefficients,
    shape: Shape,
) -> QuboProblem:
    """Assemble the selection QUBO for one batch element.

    Same-head pairs get -J[t, i, j], each variable gets -rho * h[t, i], and
    same-token cross-head pairs get +lambda.  The two pair families never
    collide: same-head keys differ in token, cross-head keys differ in head.
    Accumulation uses += so future extensions cannot silently overwrite.
    """
    h, n = shape.heads, shape.seq_len
    if coupling.j.shape != (h, n, n):
        raise ShapeError(f"coupling shape {coupling.j.shape} does not match ({h}, {n}, {n})")
    if field.h.shape != (h, n):
        raise ShapeError(f"field shape {field.h.shape} does not match ({h}, {n})")

    quad: dict[tuple[int, int], float] = {}
    for t in range(h):
        base = t * n
        for i in range(n):
            for jj in range(i + 1, n):
                c = -coupling.j[t, i, jj]
                if c != 0.0:
                    key = (base + i, base + jj)
                    quad[key] = quad.get(key, 0.0) + c
    if not coefficients.penalty_disabled and coefficients.lambda_ != 0.0:
        for i in range(n):
            for t1 in range(h):
                for t2 in range(t1 + 1, h):
                    key = (t1 * n + i, t2 * n + i)
                    quad[key] = quad.get(key, 0.0) + coefficients.lambda_

    linear = (-coefficients.rho * field.h).reshape(h * n)
    return QuboProblem(n=h * n, quad=quad, linear=linear, offset=0.0, shape=shape)


def energy_breakdown(
    mask: SelectionMask,
    coupling: CouplingTensor,
    field: FieldVector,
    coefficients: DynamicCoefficients,
) -> EnergyBreakdown:
    """Subterm values at a mask; total matches the assembled QUBO energy."""
    h, n = coupling.j.shape[0], coupling.j.shape[1]
    if field.h.shape != (h, n):
        raise ShapeError(f"field shape {field.h.shape} does not match ({h}, {n})")
    if len(mask) != h * n:
        raise ShapeError(f"mask has {len(mask)} bits, expected {h * n}")
    s = mask.bits.reshape(h, n).astype(np.float64)

    # J has zero diagonal, so the full quadratic form double counts i < j.
    h_alpha = 0.5 * float(np.einsum("tij,ti,tj->", coupling.j, s, s))
    h_beta = float((field.h * s).sum())
    counts = s.sum(axis=0)
    h_gamma = float((counts * (counts - 1.0) / 2.0).sum())
    total = -h_alpha - coefficients.rho * h_beta + coefficients.lambda_ * h_gamma
    return EnergyBreakdown(h_alpha=h_alpha, h_beta=h_beta, h_gamma=h_gamma, total=total)
