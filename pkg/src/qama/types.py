"""Core data model shared by every other module.

All value types here are immutable after construction: arrays are copied,
cast to float64 (or int64 for binary and spin states), and marked read-only,
so instances can be shared across threads and cached without defensive
copies.

Binary variables are indexed flat, head-major: variable ``t * seq_len + i``
is token ``i`` of head ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ValidationError",
    "ShapeError",
    "Shape",
    "AttentionInput",
    "CoefficientConfig",
    "SelectionMask",
    "SpinState",
    "flat_index",
    "unflatten_index",
    "mask_to_spins",
    "spins_to_mask",
]


class ValidationError(ValueError):
    """An input value violates a documented precondition."""


class ShapeError(ValidationError):
    """Tensor shapes are inconsistent with each other."""


def _read_only_f64(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, order="C")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


def _read_only_i64(a) -> np.ndarray:
    arr = np.array(a, dtype=np.int64, order="C")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Shape:
    """Problem dimensions: batch size, head count, tokens per head, feature width."""

    batch: int
    heads: int
    seq_len: int
    dim: int

    def __post_init__(self) -> None:
        for name in ("batch", "heads", "seq_len", "dim"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise ValidationError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise ValidationError(f"{name} must be >= 1, got {value}")
            object.__setattr__(self, name, int(value))

    def qubits(self) -> int:
        """Number of binary variables per batch element."""
        return self.heads * self.seq_len


def flat_index(head: int, token: int, shape: Shape) -> int:
    """Flat variable index of ``(head, token)`` under head-major ordering."""
    if not 0 <= head < shape.heads:
        raise IndexError(f"head {head} out of range [0, {shape.heads})")
    if not 0 <= token < shape.seq_len:
        raise IndexError(f"token {token} out of range [0, {shape.seq_len})")
    return head * shape.seq_len + token


def unflatten_index(index: int, shape: Shape) -> tuple[int, int]:
    """Inverse of :func:`flat_index`; returns ``(head, token)``."""
    if not 0 <= index < shape.qubits():
        raise IndexError(f"flat index {index} out of range [0, {shape.qubits()})")
    return divmod(index, shape.seq_len)


@dataclass(frozen=True, eq=False)
class AttentionInput:
    """One batch of query, key, value tensors plus the feature mixing column.

    ``q``, ``k`` and ``v`` all have shape ``(batch, heads, seq_len, dim)``;
    ``w_eps`` is a ``(dim, 1)`` column that turns value rows into scalar
    importances and maps token energies back to feature space.
    """

    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    w_eps: np.ndarray

    def __post_init__(self) -> None:
        q = _read_only_f64(self.q, "q")
        k = _read_only_f64(self.k, "k")
        v = _read_only_f64(self.v, "v")
        w = _read_only_f64(self.w_eps, "w_eps")
        if q.ndim != 4:
            raise ShapeError(f"q must be 4-dimensional, got shape {q.shape}")
        if k.shape != q.shape or v.shape != q.shape:
            raise ShapeError(
                f"q, k, v shapes differ: {q.shape}, {k.shape}, {v.shape}"
            )
        if w.shape != (q.shape[3], 1):
            raise ShapeError(
                f"w_eps must have shape ({q.shape[3]}, 1), got {w.shape}"
            )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w_eps", w)

    @property
    def shape(self) -> Shape:
        b, h, n, d = self.q.shape
        return Shape(batch=b, heads=h, seq_len=n, dim=d)


@dataclass(frozen=True)
class CoefficientConfig:
    """Base strengths of the linear and overlap-penalty terms, both in [0, 1]."""

    rho0: float
    lambda0: float

    def __post_init__(self) -> None:
        for name in ("rho0", "lambda0"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {value!r}")
            object.__setattr__(self, name, value)


def _check_state_values(arr: np.ndarray, allowed: tuple[int, int], what: str) -> None:
    if arr.ndim != 1:
        raise ShapeError(f"{what} must be 1-dimensional, got shape {arr.shape}")
    bad = ~np.isin(arr, allowed)
    if bad.any():
        raise ValidationError(
            f"{what} entries must be in {set(allowed)}, found {arr[bad][0]}"
        )


@dataclass(frozen=True, eq=False)
class SelectionMask:
    """Binary selection state over all heads and tokens, flat head-major."""

    bits: np.ndarray
    shape: Shape | None = None

    def __post_init__(self) -> None:
        bits = _read_only_i64(self.bits)
        _check_state_values(bits, (0, 1), "mask bits")
        if self.shape is not None and bits.size != self.shape.qubits():
            raise ShapeError(
                f"mask has {bits.size} bits but shape expects {self.shape.qubits()}"
            )
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return int(self.bits.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SelectionMask):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.bits, other.bits)

    def per_head(self) -> np.ndarray:
        """Bits reshaped to ``(heads, seq_len)``; requires a shape."""
        if self.shape is None:
            raise ValidationError("mask has no shape attached")
        return self.bits.reshape(self.shape.heads, self.shape.seq_len).copy()


@dataclass(frozen=True, eq=False)
class SpinState:
    """Spin (+/-1) state over all heads and tokens, same indexing as SelectionMask."""

    spins: np.ndarray
    shape: Shape | None = None

    def __post_init__(self) -> None:
        spins = _read_only_i64(self.spins)
        _check_state_values(spins, (-1, 1), "spins")
        if self.shape is not None and spins.size != self.shape.qubits():
            raise ShapeError(
                f"state has {spins.size} spins but shape expects {self.shape.qubits()}"
            )
        object.__setattr__(self, "spins", spins)

    def __len__(self) -> int:
        return int(self.spins.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpinState):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.spins, other.spins)


def mask_to_spins(mask: SelectionMask) -> SpinState:
    """Map selection bits to spins via sigma = 2 x - 1."""
    return SpinState(spins=2 * mask.bits - 1, shape=mask.shape)


def spins_to_mask(state: SpinState) -> SelectionMask:
    """Map spins to selection bits via x = (1 + sigma) / 2."""
    return SelectionMask(bits=(state.spins + 1) // 2, shape=state.shape)
