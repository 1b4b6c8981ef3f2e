"""Coupling/field construction, dynamic weights, assembly, and breakdowns."""

import math

import numpy as np
import pytest

from qama import (
    CoefficientConfig,
    CouplingTensor,
    FieldVector,
    SelectionMask,
    Shape,
    ShapeError,
    ValidationError,
    assemble_qubo,
    compute_coupling,
    compute_field,
    dynamic_coefficients,
    energy_breakdown,
    expected_max_subterms,
    subterm_ratios,
)
from conftest import enumerate_bits, qama_problem


def naive_coupling(q: np.ndarray, k: np.ndarray) -> np.ndarray:
    heads, n, dim = q.shape
    j = np.zeros((heads, n, n))
    for t in range(heads):
        m = np.zeros((n, n))
        for i in range(n):
            for jj in range(n):
                m[i, jj] = sum(q[t, i, d] * k[t, jj, d] for d in range(dim))
        for i in range(n):
            for jj in range(n):
                if i != jj:
                    j[t, i, jj] = sum(m[i, d] * m[jj, d] for d in range(n)) / (2 * dim)
    return j


class TestComputeCoupling:
    def test_hand_example(self):
        q = np.array([[[1.0], [2.0]]])
        k = np.array([[[1.0], [1.0]]])
        j = compute_coupling(q, k).j
        assert j[0, 0, 1] == 2.0
        assert j[0, 1, 0] == 2.0
        assert j[0, 0, 0] == 0.0

    def test_zero_inputs(self):
        j = compute_coupling(np.zeros((2, 3, 4)), np.zeros((2, 3, 4))).j
        assert np.all(j == 0.0)

    def test_against_naive_loops(self):
        rng = np.random.default_rng(0)
        q = rng.standard_normal((2, 5, 3))
        k = rng.standard_normal((2, 5, 3))
        j = compute_coupling(q, k).j
        assert np.max(np.abs(j - naive_coupling(q, k))) < 1e-12

    def test_symmetry_and_zero_diagonal(self):
        rng = np.random.default_rng(1)
        q = rng.standard_normal((3, 6, 4))
        k = rng.standard_normal((3, 6, 4))
        j = compute_coupling(q, k).j
        assert np.array_equal(j, j.transpose(0, 2, 1))
        idx = np.arange(6)
        assert np.all(j[:, idx, idx] == 0.0)

    def test_quadratic_scaling(self):
        rng = np.random.default_rng(2)
        q = rng.standard_normal((1, 4, 3))
        k = rng.standard_normal((1, 4, 3))
        base = compute_coupling(q, k).j
        scaled = compute_coupling(2.0 * q, 2.0 * k).j
        assert np.allclose(scaled, 16.0 * base, atol=1e-10)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            compute_coupling(np.zeros((1, 2, 3)), np.zeros((1, 3, 3)))


class TestCouplingTensorValidation:
    def test_rejects_asymmetric(self):
        j = np.zeros((1, 2, 2))
        j[0, 0, 1] = 1.0
        with pytest.raises(ValidationError):
            CouplingTensor(j=j)

    def test_rejects_nonzero_diagonal(self):
        j = np.zeros((1, 2, 2))
        j[0, 0, 0] = 1.0
        with pytest.raises(ValidationError):
            CouplingTensor(j=j)


class TestComputeField:
    def test_hand_example(self):
        v = np.array([[[1.0, 2.0], [0.5, -1.0]]])
        w = np.array([[2.0], [1.0]])
        h = compute_field(v, w).h
        assert np.allclose(h, [[4.0, 0.0]])

    def test_against_naive_loops(self):
        rng = np.random.default_rng(3)
        v = rng.standard_normal((3, 4, 5))
        w = rng.standard_normal((5, 1))
        h = compute_field(v, w).h
        expected = np.array(
            [[sum(v[t, i, d] * w[d, 0] for d in range(5)) for i in range(4)] for t in range(3)]
        )
        assert np.max(np.abs(h - expected)) < 1e-12


class TestDynamicCoefficients:
    def test_rho_exact(self):
        shape = Shape(batch=1, heads=2, seq_len=64, dim=8)
        assert dynamic_coefficients(shape, CoefficientConfig(0.16, 0.8)).rho == 10.24

    def test_lambda_formula(self):
        shape = Shape(batch=1, heads=2, seq_len=10, dim=8)
        coeff = dynamic_coefficients(shape, CoefficientConfig(0.16, 0.8))
        expected = 10 * math.sqrt(2.0 / math.pi) / 1 * 0.8
        assert coeff.lambda_ == expected
        assert coeff.lambda_ == pytest.approx(6.38308, abs=1e-5)
        assert not coeff.penalty_disabled

    def test_zero_base_strengths(self):
        shape = Shape(batch=1, heads=3, seq_len=7, dim=2)
        coeff = dynamic_coefficients(shape, CoefficientConfig(0.0, 0.0))
        assert coeff.rho == 0.0
        assert coeff.lambda_ == 0.0

    def test_single_head_disables_penalty(self):
        shape = Shape(batch=1, heads=1, seq_len=9, dim=2)
        coeff = dynamic_coefficients(shape, CoefficientConfig(0.16, 0.8))
        assert coeff.lambda_ == 0.0
        assert coeff.penalty_disabled


class TestExpectedMaxSubterms:
    def test_unit_shape(self):
        alpha, beta, gamma = expected_max_subterms(Shape(batch=1, heads=1, seq_len=1, dim=1))
        assert alpha == pytest.approx(0.3989422804, abs=1e-6)
        assert beta == pytest.approx(0.3989422804, abs=1e-6)
        assert gamma == 0.0

    def test_overlap_count_exact(self):
        _, _, gamma = expected_max_subterms(Shape(batch=1, heads=8, seq_len=49, dim=4))
        assert gamma == 1372.0

    def test_monte_carlo_half_normal_mean(self):
        # the constant the size heuristics rest on: E[max(0, X)] = 1/sqrt(2 pi)
        rng = np.random.default_rng(12345)
        draws = rng.standard_normal(10**6)
        estimate = np.maximum(0.0, draws).mean()
        assert abs(estimate - 0.3989422804) < 0.01 * 0.3989422804

    def test_ratios_exposed(self):
        shape = Shape(batch=1, heads=2, seq_len=10, dim=4)
        ratios = subterm_ratios(shape, CoefficientConfig(0.16, 0.8))
        assert ratios["interaction_to_linear"] == pytest.approx(1.0 / 0.16, rel=1e-12)
        assert ratios["interaction_to_penalty"] == pytest.approx(1.0 / 0.8, rel=1e-12)
        single = subterm_ratios(Shape(batch=1, heads=1, seq_len=10, dim=4), CoefficientConfig(0.16, 0.8))
        assert single["interaction_to_penalty"] == math.inf


def brute_minimum(problem):
    states = enumerate_bits(problem.n)
    energies = problem.energies(states)
    best = int(np.argmin(energies))
    return states[best], float(energies[best])


class TestAssembleQubo:
    def test_single_pair_reward(self):
        # one head, two tokens, coupling 2, no fields: selecting both wins
        shape = Shape(batch=1, heads=1, seq_len=2, dim=1)
        coupling = CouplingTensor(j=np.array([[[0.0, 2.0], [2.0, 0.0]]]))
        field = FieldVector(h=np.zeros((1, 2)))
        coeff = dynamic_coefficients(shape, CoefficientConfig(0.16, 0.8))
        qubo = assemble_qubo(coupling, field, coeff, shape)
        assert qubo.quad == {(0, 1): -2.0}
        bits, energy = brute_minimum(qubo)
        assert np.array_equal(bits, [1, 1])
        assert energy == -2.0

    def test_pure_field_selection(self):
        # H=1, N=1, h=[[3]], rho0=1: single variable with linear -3
        shape = Shape(batch=1, heads=1, seq_len=1, dim=1)
        coupling = CouplingTensor(j=np.zeros((1, 1, 1)))
        field = FieldVector(h=np.array([[3.0]]))
        coeff = dynamic_coefficients(shape, CoefficientConfig(1.0, 0.8))
        qubo = assemble_qubo(coupling, field, coeff, shape)
        assert qubo.linear[0] == -3.0
        bits, energy = brute_minimum(qubo)
        assert np.array_equal(bits, [1])
        assert energy == -3.0

    def test_pure_penalty_ties(self):
        # two heads, one token, lambda = 3: grounds are everything except both-selected
        shape = Shape(batch=1, heads=2, seq_len=1, dim=1)
        coupling = CouplingTensor(j=np.zeros((2, 1, 1)))
        field = FieldVector(h=np.zeros((2, 1)))
        from qama import DynamicCoefficients

        coeff = DynamicCoefficients(rho=0.0, lambda_=3.0)
        qubo = assemble_qubo(coupling, field, coeff, shape)
        assert qubo.quad == {(0, 1): 3.0}
        states = enumerate_bits(2)
        energies = qubo.energies(states)
        grounds = states[energies == energies.min()]
        assert len(grounds) == 3
        assert all(qubo.energies(np.array([g]))[0] == 0.0 for g in grounds)

    def test_breakdown_consistent_with_qubo_exhaustively(self):
        # total from the subterm decomposition equals the assembled QUBO energy
        for seed in (0, 1, 2):
            inputs, coupling, field, coeff, qubo = qama_problem(
                seed, heads=2, seq_len=5, dim=3
            )
            states = enumerate_bits(10)
            energies = qubo.energies(states)
            for row in range(0, 1024, 37):
                mask = SelectionMask(bits=states[row])
                breakdown = energy_breakdown(mask, coupling, field, coeff)
                assert breakdown.total == pytest.approx(energies[row], abs=1e-9)

    def test_flat_layout_head_major(self):
        # coupling between tokens 0,1 of head 1 must land on variables (N+0, N+1)
        shape = Shape(batch=1, heads=2, seq_len=3, dim=1)
        j = np.zeros((2, 3, 3))
        j[1, 0, 1] = j[1, 1, 0] = 5.0
        coupling = CouplingTensor(j=j)
        field = FieldVector(h=np.zeros((2, 3)))
        from qama import DynamicCoefficients

        qubo = assemble_qubo(coupling, field, DynamicCoefficients(rho=0.0, lambda_=0.0), shape)
        assert qubo.quad == {(3, 4): -5.0}


class TestEnergyBreakdown:
    def test_all_zero_mask(self):
        inputs, coupling, field, coeff, _ = qama_problem(9, heads=2, seq_len=4, dim=3)
        mask = SelectionMask(bits=np.zeros(8, dtype=int))
        breakdown = energy_breakdown(mask, coupling, field, coeff)
        assert breakdown.h_alpha == 0.0
        assert breakdown.h_beta == 0.0
        assert breakdown.h_gamma == 0.0
        assert breakdown.total == 0.0

    def test_overlap_counting(self):
        inputs, coupling, field, coeff, _ = qama_problem(10, heads=3, seq_len=2, dim=3)
        # all three heads select token 0: C(3,2) = 3 overlapping pairs
        mask = SelectionMask(bits=np.array([1, 0, 1, 0, 1, 0]))
        breakdown = energy_breakdown(mask, coupling, field, coeff)
        assert breakdown.h_gamma == 3.0

    def test_interaction_term_known_value(self):
        shape = Shape(batch=1, heads=1, seq_len=2, dim=1)
        coupling = CouplingTensor(j=np.array([[[0.0, 2.0], [2.0, 0.0]]]))
        field = FieldVector(h=np.array([[0.5, 0.25]]))
        from qama import DynamicCoefficients

        coeff = DynamicCoefficients(rho=2.0, lambda_=0.0)
        mask = SelectionMask(bits=np.array([1, 1]))
        breakdown = energy_breakdown(mask, coupling, field, coeff)
        assert breakdown.h_alpha == 2.0
        assert breakdown.h_beta == 0.75
        assert breakdown.total == -2.0 - 2.0 * 0.75
