"""Binary-quadratic and spin-form problem representations.

A QUBO minimizes

    E(x) = offset + sum_p linear[p] x_p + sum_{p<q} quad[p,q] x_p x_q

over x in {0,1}^n.  The equivalent spin form uses the convention

    E(sigma) = -sum_{p<q} J_pq sigma_p sigma_q - sum_p h_p sigma_p + offset

so that after the change of basis x = (1 + sigma) / 2 both representations
assign the same energy to every state.  Offsets are always carried so the
equality is exact, not merely up to a constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Mapping, Sequence, Union

import numpy as np

from .types import SelectionMask, Shape, ShapeError, SpinState, ValidationError

__all__ = [
    "QuboProblem",
    "IsingProblem",
    "FlipDelta",
    "to_ising",
    "energy",
    "flip_delta",
]

BinaryState = Union[SelectionMask, np.ndarray, Sequence[int]]
SpinLike = Union[SpinState, np.ndarray, Sequence[int]]


def _validated_pairs(
    quad: Mapping[tuple[int, int], float], n: int
) -> Mapping[tuple[int, int], float]:
    clean: dict[tuple[int, int], float] = {}
    for key, value in quad.items():
        if len(key) != 2:
            raise ValidationError(f"quadratic key {key!r} is not a pair")
        p, q = int(key[0]), int(key[1])
        if not 0 <= p < q < n:
            raise ValidationError(
                f"quadratic key ({p}, {q}) must satisfy 0 <= p < q < {n}"
            )
        value = float(value)
        if not np.isfinite(value):
            raise ValidationError(f"quadratic coefficient for ({p}, {q}) is not finite")
        if (p, q) in clean:
            raise ValidationError(f"duplicate quadratic key ({p}, {q})")
        clean[(p, q)] = value
    return MappingProxyType(clean)


def _as_binary_vector(state: BinaryState, n: int) -> np.ndarray:
    if isinstance(state, SelectionMask):
        bits = state.bits
    else:
        bits = np.asarray(state)
    if bits.shape != (n,):
        raise ShapeError(f"state has shape {bits.shape}, expected ({n},)")
    if not np.isin(bits, (0, 1)).all():
        raise ValidationError("binary state entries must be 0 or 1")
    return bits.astype(np.float64)


def _as_spin_vector(state: SpinLike, n: int) -> np.ndarray:
    if isinstance(state, SpinState):
        spins = state.spins
    else:
        spins = np.asarray(state)
    if spins.shape != (n,):
        raise ShapeError(f"state has shape {spins.shape}, expected ({n},)")
    if not np.isin(spins, (-1, 1)).all():
        raise ValidationError("spin state entries must be -1 or +1")
    return spins.astype(np.float64)


@dataclass(frozen=True, eq=False)
class QuboProblem:
    """Quadratic binary problem with pair keys normalized to p < q."""

    n: int
    quad: Mapping[tuple[int, int], float] = field(default_factory=dict)
    linear: np.ndarray | None = None
    offset: float = 0.0
    shape: Shape | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        linear = (
            np.zeros(self.n)
            if self.linear is None
            else np.array(self.linear, dtype=np.float64)
        )
        if linear.shape != (self.n,):
            raise ShapeError(f"linear has shape {linear.shape}, expected ({self.n},)")
        if not np.all(np.isfinite(linear)):
            raise ValidationError("linear coefficients must be finite")
        if not np.isfinite(self.offset):
            raise ValidationError("offset must be finite")
        if self.shape is not None and self.shape.qubits() != self.n:
            raise ShapeError(
                f"shape expects {self.shape.qubits()} variables, problem has {self.n}"
            )
        linear.flags.writeable = False
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "quad", _validated_pairs(self.quad, self.n))

    @cached_property
    def _pair_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.quad:
            keys = sorted(self.quad)
            p = np.array([k[0] for k in keys], dtype=np.intp)
            q = np.array([k[1] for k in keys], dtype=np.intp)
            c = np.array([self.quad[k] for k in keys], dtype=np.float64)
        else:
            p = np.zeros(0, dtype=np.intp)
            q = np.zeros(0, dtype=np.intp)
            c = np.zeros(0, dtype=np.float64)
        return p, q, c

    @cached_property
    def quad_matrix(self) -> np.ndarray:
        """Strictly upper-triangular coefficient matrix."""
        u = np.zeros((self.n, self.n), dtype=np.float64)
        p, q, c = self._pair_arrays
        u[p, q] = c
        u.flags.writeable = False
        return u

    def energy(self, state: BinaryState) -> float:
        x = _as_binary_vector(state, self.n)
        p, q, c = self._pair_arrays
        return float(self.offset + self.linear @ x + (c * x[p] * x[q]).sum())

    def energies(self, states: np.ndarray) -> np.ndarray:
        """Energies of a batch of binary rows, shape (count, n)."""
        x = np.asarray(states, dtype=np.float64)
        return self.offset + x @ self.linear + ((x @ self.quad_matrix) * x).sum(axis=1)


@dataclass(frozen=True, eq=False)
class IsingProblem:
    """Spin problem under the sign convention in the module docstring."""

    n: int
    couplings: Mapping[tuple[int, int], float] = field(default_factory=dict)
    fields: np.ndarray | None = None
    offset: float = 0.0
    shape: Shape | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        fields = (
            np.zeros(self.n)
            if self.fields is None
            else np.array(self.fields, dtype=np.float64)
        )
        if fields.shape != (self.n,):
            raise ShapeError(f"fields has shape {fields.shape}, expected ({self.n},)")
        if not np.all(np.isfinite(fields)):
            raise ValidationError("field coefficients must be finite")
        if not np.isfinite(self.offset):
            raise ValidationError("offset must be finite")
        if self.shape is not None and self.shape.qubits() != self.n:
            raise ShapeError(
                f"shape expects {self.shape.qubits()} variables, problem has {self.n}"
            )
        fields.flags.writeable = False
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "couplings", _validated_pairs(self.couplings, self.n))

    @cached_property
    def _pair_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.couplings:
            keys = sorted(self.couplings)
            p = np.array([k[0] for k in keys], dtype=np.intp)
            q = np.array([k[1] for k in keys], dtype=np.intp)
            c = np.array([self.couplings[k] for k in keys], dtype=np.float64)
        else:
            p = np.zeros(0, dtype=np.intp)
            q = np.zeros(0, dtype=np.intp)
            c = np.zeros(0, dtype=np.float64)
        return p, q, c

    @cached_property
    def coupling_matrix(self) -> np.ndarray:
        """Dense symmetric coupling matrix with zero diagonal."""
        m = np.zeros((self.n, self.n), dtype=np.float64)
        p, q, c = self._pair_arrays
        m[p, q] = c
        m[q, p] = c
        m.flags.writeable = False
        return m

    @cached_property
    def adjacency(self) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
        """Per-site (neighbor indices, coupling values) for O(degree) flip deltas."""
        nbr: list[list[int]] = [[] for _ in range(self.n)]
        val: list[list[float]] = [[] for _ in range(self.n)]
        for (p, q), c in self.couplings.items():
            nbr[p].append(q)
            val[p].append(c)
            nbr[q].append(p)
            val[q].append(c)
        return tuple(
            (np.array(i, dtype=np.intp), np.array(v, dtype=np.float64))
            for i, v in zip(nbr, val)
        )

    def energy(self, state: SpinLike) -> float:
        s = _as_spin_vector(state, self.n)
        p, q, c = self._pair_arrays
        return float(self.offset - (c * s[p] * s[q]).sum() - self.fields @ s)

    def energies(self, states: np.ndarray) -> np.ndarray:
        """Energies of a batch of spin rows, shape (count, n)."""
        s = np.asarray(states, dtype=np.float64)
        pair = -0.5 * ((s @ self.coupling_matrix) * s).sum(axis=1)
        return self.offset + pair - s @ self.fields


@dataclass(frozen=True)
class FlipDelta:
    """Energy change from flipping one spin; ``new_spin`` is the value after."""

    index: int
    delta: float
    new_spin: int


def to_ising(problem: QuboProblem) -> IsingProblem:
    """Exact change of basis x = (1 + sigma) / 2 from binary to spin form."""
    fields = np.zeros(problem.n, dtype=np.float64)
    couplings: dict[tuple[int, int], float] = {}
    offset = problem.offset
    for (p, q), c in problem.quad.items():
        # c*x_p*x_q expands to c/4 * (1 + s_p + s_q + s_p s_q)
        couplings[(p, q)] = couplings.get((p, q), 0.0) - c / 4.0
        fields[p] -= c / 4.0
        fields[q] -= c / 4.0
        offset += c / 4.0
    for p in range(problem.n):
        c = problem.linear[p]
        if c != 0.0:
            fields[p] -= c / 2.0
            offset += c / 2.0
    return IsingProblem(
        n=problem.n,
        couplings=couplings,
        fields=fields,
        offset=offset,
        shape=problem.shape,
    )


def energy(problem: QuboProblem | IsingProblem, state) -> float:
    """Full energy evaluation for either representation."""
    if isinstance(problem, QuboProblem):
        return problem.energy(state)
    if isinstance(problem, IsingProblem):
        return problem.energy(state)
    raise TypeError(f"unsupported problem type {type(problem).__name__}")


def flip_delta(problem: IsingProblem, state: SpinLike, index: int) -> FlipDelta:
    """Energy change from flipping spin ``index``, computed in O(degree).

    The value is defined operationally as energy-after minus energy-before,
    which makes flipping the same site back an exact negation.
    """
    if not 0 <= index < problem.n:
        raise IndexError(f"site {index} out of range [0, {problem.n})")
    s = _as_spin_vector(state, problem.n)
    nbr, val = problem.adjacency[index]
    local = problem.fields[index]
    if nbr.size:
        local = local + val @ s[nbr]
    delta = 2.0 * s[index] * local
    return FlipDelta(index=index, delta=float(delta), new_spin=int(-s[index]))
