"""Top-level acceptance checks with pinned tolerances and runtime budgets.

Each check prints one PASS/FAIL line with the measured quantity (visible
under ``pytest -s`` or when running this file directly) and then asserts.
The file is runnable standalone:

    python3 tests/test_acceptance.py
"""

import math
import tempfile
import time
from pathlib import Path

import numpy as np

from qama import (
    CoefficientConfig,
    DynamicCoefficients,
    Shape,
    assemble_qubo,
    backward,
    brute_force,
    compute_coupling,
    compute_field,
    dynamic_coefficients,
    flip_delta,
    forward,
    forward_given_masks,
    simulated_anneal,
    solve,
    success_tolerance,
    time_to_solution,
    to_ising,
)
from qama.cli import main as cli_main
from qama.experiments import build_problem, generate_instance, mutation_landscape
from qama.hamiltonian import HALF_NORMAL_MEAN
from conftest import enumerate_bits, random_ising, random_qubo


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", flush=True)


def test_qubo_ising_exactness():
    # 50 random problems, n <= 12: all 2^n state energies agree across the
    # two representations within 1e-9
    budget = 10.0
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(50):
        n = 4 + i % 9  # cycles 4..12
        qubo = random_qubo(rng, n)
        ising = to_ising(qubo)
        states = enumerate_bits(n)
        gap = np.abs(qubo.energies(states) - ising.energies(2 * states - 1)).max()
        worst = max(worst, float(gap))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < budget
    _report(
        "qubo-ising exactness",
        ok,
        f"max state-energy gap {worst:.3e} over 50 problems ({elapsed:.2f}s < {budget:.0f}s)",
    )
    assert worst < 1e-9
    assert elapsed < budget


def test_flip_delta_equals_recompute():
    # 1000 random (instance, state, site) triples within 1e-9
    budget = 5.0
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(4, 17))
        problem = random_ising(rng, n)
        for _ in range(50):
            spins = (rng.integers(0, 2, size=n) * 2 - 1).astype(np.float64)
            site = int(rng.integers(n))
            before = problem.energy(spins)
            flipped = spins.copy()
            flipped[site] = -flipped[site]
            exact = problem.energy(flipped) - before
            fast = flip_delta(problem, spins, site).delta
            worst = max(worst, abs(fast - exact))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < budget
    _report(
        "incremental flip deltas",
        ok,
        f"max |delta - recompute| {worst:.3e} over 1000 triples ({elapsed:.2f}s < {budget:.0f}s)",
    )
    assert worst < 1e-9
    assert elapsed < budget


def test_default_sa_finds_ground():
    # default-schedule SA reaches the exact ground energy on >= 95/100
    # seeded 12-variable instances
    budget = 60.0
    t0 = time.perf_counter()
    shape = Shape(batch=1, heads=2, seq_len=6, dim=8)
    hits = 0
    for seed in range(100):
        inputs = generate_instance(shape, seed=seed)
        qubo, _, _, _ = build_problem(inputs, CoefficientConfig(0.16, 0.8))
        ground = brute_force(qubo).best_energy
        result = solve(qubo, backend="sa", seed=seed)
        if result.best_energy <= ground + success_tolerance(ground):
            hits += 1
    elapsed = time.perf_counter() - t0
    ok = hits >= 95 and elapsed < budget
    _report(
        "annealer vs exact oracle",
        ok,
        f"{hits}/100 seeded runs hit the brute-force ground energy ({elapsed:.2f}s < {budget:.0f}s)",
    )
    assert hits >= 95
    assert elapsed < budget


def _fd_loss_gradients(inputs, masks, rho, upstream, step):
    def loss(q, k, v, w):
        from qama import AttentionInput

        out = forward_given_masks(AttentionInput(q=q, k=k, v=v, w_eps=w), masks, rho)
        return float((upstream * out.e_dist).sum())

    tensors = {
        "q": inputs.q.copy(),
        "k": inputs.k.copy(),
        "v": inputs.v.copy(),
        "w_eps": inputs.w_eps.copy(),
    }
    grads = {}
    for name, arr in tensors.items():
        grad = np.zeros_like(arr)
        flat, gflat = arr.reshape(-1), grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = loss(tensors["q"], tensors["k"], tensors["v"], tensors["w_eps"])
            flat[i] = orig - step
            lo = loss(tensors["q"], tensors["k"], tensors["v"], tensors["w_eps"])
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * step)
        grads[name] = grad
    return grads


def test_gradients_match_finite_differences():
    # >= 20 instances (H <= 2, N <= 4, D <= 4), mask frozen, central step
    # 1e-5: relative error < 1e-4, absolute < 1e-8 for near-zero entries
    budget = 30.0
    near_zero = 1e-6
    t0 = time.perf_counter()
    worst_rel = 0.0
    worst_abs = 0.0
    instances = 0
    for seed in range(20):
        heads = 1 + seed % 2
        seq_len = 2 + seed % 3
        dim = 2 + (seed // 2) % 3
        shape = Shape(batch=1, heads=heads, seq_len=seq_len, dim=dim)
        inputs = generate_instance(shape, seed=1000 + seed)
        _, cache = forward(inputs, CoefficientConfig(0.16, 0.8), backend="brute")
        rng = np.random.default_rng(seed)
        upstream = rng.standard_normal((1, heads, seq_len, dim))
        bundle = backward(upstream, cache)
        fd = _fd_loss_gradients(
            inputs, cache.masks, cache.coefficients.rho, upstream, step=1e-5
        )
        analytic = {
            "q": bundle.dq,
            "k": bundle.dk,
            "v": bundle.dv,
            "w_eps": bundle.dw_eps,
        }
        for name in analytic:
            a = analytic[name].reshape(-1)
            f = fd[name].reshape(-1)
            scale = np.maximum(np.abs(a), np.abs(f))
            small = scale < near_zero
            if small.any():
                worst_abs = max(worst_abs, float(np.abs(a - f)[small].max()))
            if (~small).any():
                rel = (np.abs(a - f)[~small] / scale[~small]).max()
                worst_rel = max(worst_rel, float(rel))
        instances += 1
    elapsed = time.perf_counter() - t0
    ok = (
        instances >= 20
        and worst_rel < 1e-4
        and worst_abs < 1e-8
        and elapsed < budget
    )
    _report(
        "analytic gradients vs finite differences",
        ok,
        f"worst relative error {worst_rel:.3e}, worst near-zero abs {worst_abs:.3e} "
        f"over {instances} instances ({elapsed:.2f}s < {budget:.0f}s)",
    )
    assert instances >= 20
    assert worst_rel < 1e-4
    assert worst_abs < 1e-8
    assert elapsed < budget


def test_coefficient_formulas_exact():
    shape = Shape(batch=1, heads=2, seq_len=64, dim=8)
    rho = dynamic_coefficients(shape, CoefficientConfig(0.16, 0.8)).rho
    report = time_to_solution(0.5, 1.0)
    ok = rho == 10.24 and report.runs == 7 and report.t_sol == 7.0
    _report(
        "closed-form coefficients",
        ok,
        f"rho(N=64, 0.16) = {rho!r} (want 10.24 exactly); "
        f"TTS(0.5, 1) = {report.runs} runs (want 7 exactly)",
    )
    assert rho == 10.24
    assert report.runs == 7
    assert report.t_sol == 7.0


def test_half_normal_mean_monte_carlo():
    # E[max(0, X)] for standard normal X within 1% of 1/sqrt(2 pi)
    budget = 5.0
    t0 = time.perf_counter()
    rng = np.random.default_rng(31415)
    estimate = float(np.maximum(0.0, rng.standard_normal(10**6)).mean())
    elapsed = time.perf_counter() - t0
    err = abs(estimate - HALF_NORMAL_MEAN) / HALF_NORMAL_MEAN
    ok = err < 0.01 and elapsed < budget
    _report(
        "half-normal mean diagnostic",
        ok,
        f"MC estimate {estimate:.6f} vs {HALF_NORMAL_MEAN:.6f}, "
        f"relative error {err:.4%} < 1% ({elapsed:.2f}s < {budget:.0f}s)",
    )
    assert err < 0.01
    assert elapsed < budget


def test_large_penalty_forces_disjoint_heads():
    # with lambda = 1e3 * max|J|, on instances where a disjoint selection
    # attains the unpenalized optimum, every ground state is disjoint
    budget = 10.0
    t0 = time.perf_counter()
    premise_true = 0
    overlapping_grounds = 0
    for seed in range(40):
        seq_len = 3 + seed % 3  # N in {3, 4, 5}
        shape = Shape(batch=1, heads=2, seq_len=seq_len, dim=4)
        inputs = generate_instance(shape, seed=seed)
        coupling = compute_coupling(inputs.q[0], inputs.k[0])
        field = compute_field(inputs.v[0], inputs.w_eps)
        rho = seq_len * 0.16
        states = enumerate_bits(2 * seq_len)
        counts = states.reshape(-1, 2, seq_len).sum(axis=1)
        overlap = (counts * (counts - 1) / 2.0).sum(axis=1)

        free = assemble_qubo(
            coupling, field, DynamicCoefficients(rho=rho, lambda_=0.0), shape
        )
        fe = free.energies(states)
        ground_rows = fe <= fe.min() + 1e-9
        if not np.any(ground_rows & (overlap == 0)):
            continue  # premise does not hold for this instance
        premise_true += 1

        lam = 1e3 * float(np.abs(coupling.j).max())
        penalized = assemble_qubo(
            coupling, field, DynamicCoefficients(rho=rho, lambda_=lam), shape
        )
        pe = penalized.energies(states)
        bad = (pe <= pe.min() + 1e-9) & (overlap != 0)
        overlapping_grounds += int(bad.sum())
    elapsed = time.perf_counter() - t0
    ok = premise_true >= 5 and overlapping_grounds == 0 and elapsed < budget
    _report(
        "overlap penalty behavior",
        ok,
        f"{premise_true} qualifying instances, {overlapping_grounds} overlapping "
        f"ground states ({elapsed:.2f}s < {budget:.0f}s)",
    )
    assert premise_true >= 5
    assert overlapping_grounds == 0
    assert elapsed < budget


def test_ground_state_is_single_flip_stable():
    # at brute-forced grounds, every single-bit mutation delta >= -1e-9
    budget = 5.0
    t0 = time.perf_counter()
    worst = math.inf
    for seed in range(10):
        inputs = generate_instance(Shape(batch=1, heads=2, seq_len=6, dim=8), seed=seed)
        qubo, _, _, _ = build_problem(inputs, CoefficientConfig(0.16, 0.8))
        mask = brute_force(qubo).best_state
        landscape = mutation_landscape(qubo, mask)
        worst = min(worst, min(r.delta for r in landscape.rows))
    elapsed = time.perf_counter() - t0
    ok = worst >= -1e-9 and elapsed < budget
    _report(
        "ground-state mutation landscape",
        ok,
        f"most negative single-flip delta {worst:.3e} over 10 instances "
        f"({elapsed:.2f}s < {budget:.0f}s)",
    )
    assert worst >= -1e-9
    assert elapsed < budget


def test_determinism_bit_identical():
    # a repeated solve and a repeated CLI run reproduce their outputs exactly
    rng = np.random.default_rng(99)
    problem = random_qubo(rng, 10)
    a = solve(problem, backend="sa", seed=5)
    b = solve(problem, backend="sa", seed=5)
    solver_same = (
        a.best_energy == b.best_energy
        and np.array_equal(a.best_state.bits, b.best_state.bits)
        and np.array_equal(a.energy_trace, b.energy_trace)
    )

    ising = to_ising(problem)
    c = simulated_anneal(ising, seed=8)
    d = simulated_anneal(ising, seed=8)
    anneal_same = np.array_equal(c.best_state.bits, d.best_state.bits)

    argv = ["forward", "--heads", "2", "--seq-len", "4", "--dim", "3",
            "--seed", "6", "--sweeps", "30"]
    with tempfile.TemporaryDirectory() as tmp:
        out_a, out_b = Path(tmp) / "a", Path(tmp) / "b"
        rc_a = cli_main([*argv, "--out", str(out_a)])
        rc_b = cli_main([*argv, "--out", str(out_b)])
        files_a = sorted(p.name for p in out_a.iterdir())
        files_b = sorted(p.name for p in out_b.iterdir())
        cli_same = (
            rc_a == 0
            and rc_b == 0
            and files_a == files_b
            and all(
                (out_a / n).read_bytes() == (out_b / n).read_bytes() for n in files_a
            )
        )
    ok = solver_same and anneal_same and cli_same
    _report(
        "determinism",
        ok,
        f"repeated solve identical: {solver_same}; repeated CLI run "
        f"byte-identical across {len(files_a)} files: {cli_same}",
    )
    assert solver_same
    assert anneal_same
    assert cli_same


_CHECKS = [
    test_qubo_ising_exactness,
    test_flip_delta_equals_recompute,
    test_default_sa_finds_ground,
    test_gradients_match_finite_differences,
    test_coefficient_formulas_exact,
    test_half_normal_mean_monte_carlo,
    test_large_penalty_forces_disjoint_heads,
    test_ground_state_is_single_flip_stable,
    test_determinism_bit_identical,
]


if __name__ == "__main__":
    import sys

    failures = 0
    for check in _CHECKS:
        try:
            check()
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)
