"""End-to-end selection operator: build, solve, map to features, differentiate.

The forward pass builds one selection problem per batch element, solves it
with a pluggable backend, and decomposes the resulting ground-state energy
(interaction and linear terms only, the overlap penalty never reaches the
output) into per-token energies

    e_token[t, i] = -s[t, i] * (0.5 * sum_j J[t, i, j] s[t, j] + rho * h[t, i])

which sum to the energy output and are mapped to feature space through the
same mixing column that defines the fields, e_dist = e_token (x) w_eps^T.

The backward pass treats the solved mask as a constant (the discrete solve
is not differentiated through) and applies the chain rule to everything
else.  w_eps receives contributions from both of its roles: the field path
through h = V . w_eps and the mapping path through the outer product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import (
    DynamicCoefficients,
    assemble_qubo,
    compute_coupling,
    compute_field,
    dynamic_coefficients,
)
from .solvers import SolveResult, solve
from .types import (
    AttentionInput,
    CoefficientConfig,
    ShapeError,
    ValidationError,
)

__all__ = [
    "EnergyOutput",
    "ForwardCache",
    "GradientBundle",
    "forward",
    "forward_given_masks",
    "backward",
    "extract_head_masks",
]


@dataclass(frozen=True, eq=False)
class EnergyOutput:
    """Forward results: token energies, their per-element sum, feature mapping."""

    e_token: np.ndarray  # (batch, heads, seq_len)
    e_out: np.ndarray  # (batch,)
    e_dist: np.ndarray  # (batch, heads, seq_len, dim), same shape as v


@dataclass(frozen=True, eq=False)
class ForwardCache:
    """Everything backward needs; masks are detached constants."""

    inputs: AttentionInput
    masks: np.ndarray  # (batch, heads, seq_len) int64
    coupling: np.ndarray  # (batch, heads, seq_len, seq_len)
    field: np.ndarray  # (batch, heads, seq_len)
    coefficients: DynamicCoefficients
    results: tuple[SolveResult, ...]


@dataclass(frozen=True, eq=False)
class GradientBundle:
    """Gradients with respect to q, k, v and w_eps."""

    dq: np.ndarray
    dk: np.ndarray
    dv: np.ndarray
    dw_eps: np.ndarray


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _build_terms(inputs: AttentionInput) -> tuple[np.ndarray, np.ndarray]:
    """Couplings (b, h, n, n) and fields (b, h, n) for the whole batch."""
    shape = inputs.shape
    j = np.empty((shape.batch, shape.heads, shape.seq_len, shape.seq_len))
    h = np.empty((shape.batch, shape.heads, shape.seq_len))
    for b in range(shape.batch):
        j[b] = compute_coupling(inputs.q[b], inputs.k[b]).j
        h[b] = compute_field(inputs.v[b], inputs.w_eps).h
    return j, h


def _evaluate(
    j: np.ndarray, h: np.ndarray, w_eps: np.ndarray, masks: np.ndarray, rho: float
) -> EnergyOutput:
    s = masks.astype(np.float64)
    pair = 0.5 * np.einsum("bhij,bhj->bhi", j, s)
    e_token = -s * (pair + rho * h)
    e_out = e_token.sum(axis=(1, 2))
    e_dist = e_token[..., None] * w_eps[:, 0]
    return EnergyOutput(
        e_token=_freeze(e_token), e_out=_freeze(e_out), e_dist=_freeze(e_dist)
    )


def _masks_array(masks, shape) -> np.ndarray:
    arr = np.asarray(masks)
    expected = (shape.batch, shape.heads, shape.seq_len)
    if arr.shape != expected:
        raise ShapeError(f"masks have shape {arr.shape}, expected {expected}")
    if not np.isin(arr, (0, 1)).all():
        raise ValidationError("mask entries must be 0 or 1")
    return arr.astype(np.int64)


def forward(
    inputs: AttentionInput,
    config: CoefficientConfig,
    backend: str = "sa",
    seed: int = 0,
    solver_config: dict | None = None,
) -> tuple[EnergyOutput, ForwardCache]:
    """Solve each batch element's selection problem and map energies to features.

    Every batch element is solved independently with the same seed, so
    permuting elements permutes the outputs identically.
    """
    shape = inputs.shape
    coefficients = dynamic_coefficients(shape, config)
    j, h = _build_terms(inputs)
    masks = np.empty((shape.batch, shape.heads, shape.seq_len), dtype=np.int64)
    results = []
    for b in range(shape.batch):
        qubo = assemble_qubo(
            compute_coupling(inputs.q[b], inputs.k[b]),
            compute_field(inputs.v[b], inputs.w_eps),
            coefficients,
            shape,
        )
        result = solve(qubo, backend=backend, seed=seed, config=solver_config)
        masks[b] = result.best_state.bits.reshape(shape.heads, shape.seq_len)
        results.append(result)
    output = _evaluate(j, h, inputs.w_eps, masks, coefficients.rho)
    cache = ForwardCache(
        inputs=inputs,
        masks=_freeze(masks),
        coupling=_freeze(j),
        field=_freeze(h),
        coefficients=coefficients,
        results=tuple(results),
    )
    return output, cache


def forward_given_masks(
    inputs: AttentionInput, masks: np.ndarray, rho: float
) -> EnergyOutput:
    """Forward evaluation at fixed masks, no solve.

    This is the continuous map the backward rule differentiates; finite
    differences of this function validate the analytic gradients.
    """
    arr = _masks_array(masks, inputs.shape)
    j, h = _build_terms(inputs)
    return _evaluate(j, h, inputs.w_eps, arr, rho)


def backward(grad_e_dist: np.ndarray, cache: ForwardCache) -> GradientBundle:
    """Chain rule through the fixed-mask forward map.

    A mask entry of zero gates every downstream term of its token, so fully
    deselected inputs receive exactly zero gradient.
    """
    inputs = cache.inputs
    shape = inputs.shape
    g = np.asarray(grad_e_dist, dtype=np.float64)
    expected = (shape.batch, shape.heads, shape.seq_len, shape.dim)
    if g.shape != expected:
        raise ShapeError(f"grad_e_dist has shape {g.shape}, expected {expected}")
    if not np.all(np.isfinite(g)):
        raise ValidationError("grad_e_dist contains non-finite entries")

    w = inputs.w_eps[:, 0]
    s = cache.masks.astype(np.float64)
    j = cache.coupling
    h = cache.field
    rho = cache.coefficients.rho
    dim = shape.dim
    n = shape.seq_len

    pair = 0.5 * np.einsum("bhij,bhj->bhi", j, s)
    e_token = -s * (pair + rho * h)

    g_tok = np.einsum("bhnd,d->bhn", g, w)
    u = -s * g_tok  # dL/d(pair + rho*h)

    # couplings enter token i's energy with weight s_i s_j / 2 per ordered pair
    gj = 0.5 * np.einsum("bhi,bhj->bhij", u, s)
    idx = np.arange(n)
    gj[:, :, idx, idx] = 0.0

    m = np.einsum("bhnd,bhmd->bhnm", inputs.q, inputs.k)
    dm = np.einsum("bhik,bhkm->bhim", gj + gj.transpose(0, 1, 3, 2), m) / (2.0 * dim)
    dq = np.einsum("bhnm,bhmd->bhnd", dm, inputs.k)
    dk = np.einsum("bhnm,bhnd->bhmd", dm, inputs.q)

    dh = rho * u
    dv = dh[..., None] * w
    dw = np.einsum("bhnd,bhn->d", g, e_token) + np.einsum("bhn,bhnd->d", dh, inputs.v)
    return GradientBundle(
        dq=_freeze(dq), dk=_freeze(dk), dv=_freeze(dv), dw_eps=_freeze(dw[:, None])
    )


def extract_head_masks(cache: ForwardCache) -> np.ndarray:
    """Solved selection maps, shape (batch, heads, seq_len)."""
    return cache.masks.copy()
