import json
import logging
import math

import numpy as np
import pytest

from nisqkit.market import DEFAULT_OPTION, PriceGrid, binned_payoff, discretize
from nisqkit.sim import NoiseModel, circuit_unitary, run_exact
from nisqkit.unary import (AllShotsRejected, GateCountModel, block_counts, build_bundle,
                           build_distributor, build_payoff, crossover_bins,
                           exact_ancilla_probability, gate_counts, kl_divergence,
                           measured_distribution, middle, run_priced, solve_distributor_angles,
                           unary_mask)

S = DEFAULT_OPTION


def _random_grid(rng, n):
    prices = np.sort(rng.uniform(1.0, 3.0, n)) + np.arange(n) * 1e-3
    probs = rng.dirichlet(np.ones(n))
    return PriceGrid(prices, probs / probs.sum()), float(rng.uniform(prices[0], prices[-1]))


def _unary_amplitudes(circ, n):
    amps = run_exact(circ).amps
    return amps[1 << np.arange(n)]


def test_two_bin_angles():
    assert np.isclose(solve_distributor_angles(np.array([0.5, 0.5])).thetas[0], np.pi / 2)
    th = solve_distributor_angles(np.array([0.8, 0.2])).thetas[0]
    assert np.isclose(th, 2 * math.atan(2.0))
    assert np.isclose(np.tan(th / 2) ** 2, 0.8 / 0.2)
    circ = build_distributor(solve_distributor_angles(np.array([0.8, 0.2])))
    assert np.allclose(np.abs(_unary_amplitudes(circ, 2)) ** 2, [0.8, 0.2])


def test_uniform_two_bins_state():
    amps = run_exact(build_distributor(solve_distributor_angles(np.array([0.5, 0.5])))).amps
    assert np.allclose(np.abs(amps), [0, 1 / np.sqrt(2), 1 / np.sqrt(2), 0])


def test_three_bins_amplitudes():
    circ = build_distributor(solve_distributor_angles(np.array([0.25, 0.5, 0.25])))
    assert np.allclose(np.abs(_unary_amplitudes(circ, 3)), [0.5, 1 / np.sqrt(2), 0.5])


def test_middle_qubit_convention():
    assert [middle(n) for n in (2, 3, 7, 8)] == [1, 1, 3, 4]
    c = build_distributor(solve_distributor_angles(np.full(7, 1 / 7)))
    assert c.ops[0].kind == "X" and c.ops[0].targets == (3,)


@pytest.mark.parametrize("native", [None, "CNOT", "PARTIAL_ISWAP", "BEST"])
def test_reference_grid_loaded_exactly(native):
    g = discretize(S, 8)
    circ = build_distributor(solve_distributor_angles(g), native)
    p = np.abs(_unary_amplitudes(circ, 8)) ** 2
    assert kl_divergence(g.probs, p) < 1e-10
    assert abs(p.sum() - 1) < 1e-12


def test_zero_probability_bins(caplog):
    with caplog.at_level(logging.WARNING):
        ang = solve_distributor_angles(np.array([0.0, 0.5, 0.5, 0.0]))
    assert "zero probability" in caplog.text
    p = np.abs(_unary_amplitudes(build_distributor(ang), 4)) ** 2
    assert np.allclose(p, [0, 0.5, 0.5, 0])
    with pytest.raises(ValueError):
        solve_distributor_angles(np.zeros(4))


def test_unary_subspace_preserved():
    rng = np.random.default_rng(0)
    for n in (2, 5, 9, 12):
        g, k = _random_grid(rng, n)
        b = build_bundle(g, k)
        amps = run_exact(b.full(0)).amps
        assert np.abs(amps[~unary_mask(n)]).max() < 1e-10


def test_payoff_identity_random_grids():
    rng = np.random.default_rng(1)
    for _ in range(100):
        g, k = _random_grid(rng, int(rng.integers(2, 8)))
        b = build_bundle(g, k)
        assert abs(exact_ancilla_probability(b) * b.scale - binned_payoff(g, k)) < 1e-10


def test_payoff_degenerate_cases():
    g = PriceGrid(np.array([1.0, 2.0, 3.0]), np.array([0.2, 0.3, 0.5]))
    assert len(build_payoff(g, 5.0).ops) == 0
    b = build_bundle(g, 2.5)  # only the top bin is in the money
    assert np.isclose(exact_ancilla_probability(b), 0.5)


@pytest.mark.parametrize("native", [None, "CNOT", "PARTIAL_ISWAP", "BEST"])
def test_grover_phase_law(native):
    rng = np.random.default_rng(2)
    for _ in range(5):
        g, k = _random_grid(rng, int(rng.integers(2, 9)))
        b = build_bundle(g, k, native)
        th = math.asin(math.sqrt(exact_ancilla_probability(b, 0)))
        for m in range(5):
            assert abs(exact_ancilla_probability(b, m) - math.sin((2 * m + 1) * th) ** 2) < 1e-8


def test_grover_is_unitary():
    rng = np.random.default_rng(3)
    for n in (2, 4, 6):
        g, k = _random_grid(rng, n)
        u = circuit_unitary(build_bundle(g, k).grover)
        assert np.abs(u.conj().T @ u - np.eye(len(u))).max() < 1e-9


def test_width_mismatch_rejected():
    g = discretize(S, 4)
    b = build_bundle(g, S.k)
    with pytest.raises(ValueError):
        type(b)(g, S.k, None, build_distributor(solve_distributor_angles(g)), b.payoff)


def test_noiseless_priced_run():
    g = discretize(S, 8)
    b = build_bundle(g, S.k)
    run = run_priced(b, 100_000, None, 0, seed=4)
    p = exact_ancilla_probability(b)
    assert run.accepted == run.shots
    assert abs(run.p_hat - p) < 3 * math.sqrt(p * (1 - p) / run.shots)
    assert abs(run.payoff_estimate - binned_payoff(g, S.k)) < 3 * math.sqrt(p * (1 - p) / 1e5) * b.scale
    rec = run.record()
    assert json.loads(json.dumps(rec))["accepted"] == 100_000


def test_random_readout_accepts_one_hot_fraction():
    # readout flips capped at 1/2 make every bitstring equally likely
    n = 4
    b = build_bundle(discretize(S, n), S.k)
    run = run_priced(b, 200_000, NoiseModel(0.05), 0, seed=5)
    want = n / 2 ** n
    assert abs(run.acceptance - want) < 4 * math.sqrt(want * (1 - want) / 2e5)


def test_all_rejected_is_explicit():
    b = build_bundle(discretize(S, 8), S.k)
    runs = [run_priced(b, 1, NoiseModel(0.05), 0, seed=s) for s in range(40)]
    empty = next(r for r in runs if r.accepted == 0)
    with pytest.raises(AllShotsRejected):
        empty.p_hat
    assert empty.record()["status"] == "all shots rejected"


def test_acceptance_falls_with_noise():
    b = build_bundle(discretize(S, 8), S.k)
    acc = [run_priced(b, 20_000, NoiseModel(e), 1, seed=6).acceptance
           for e in (0.0, 0.001, 0.003, 0.005)]
    assert acc[0] == 1.0 and acc[1] > acc[2] > acc[3]


def test_kl_divergence():
    assert kl_divergence([0.2, 0.8], [0.2, 0.8]) == 0
    assert np.isclose(kl_divergence([1, 0], [0.5, 0.5]), math.log(2))
    assert np.isfinite(kl_divergence([0.5, 0.5], [1.0, 0.0], shots=100))
    with pytest.raises(ValueError):
        kl_divergence([1, 0], [1, 0, 0])


def test_sampled_distributor_kl():
    g = discretize(S, 8)
    circ = build_distributor(solve_distributor_angles(g))
    kls = [kl_divergence(g.probs, measured_distribution(circ, 8, 10_000, seed=s), 10_000)
           for s in range(10)]
    assert np.median(kls) < 5e-3


# --------------------------------------------------------------- gate-count model

def test_table_examples():
    assert gate_counts(GateCountModel("unary", "PARTIAL_ISWAP", 8), "D")["two_qubit"] == 8
    assert gate_counts(GateCountModel("unary", "CNOT", 8), "D") == \
        {"one_qubit": 16, "two_qubit": 32, "depth": 24}
    assert gate_counts(GateCountModel("binary", "CNOT", 8), "S_0")["two_qubit"] == 78


@pytest.mark.parametrize("kappa", [0.25, 0.5, 1.0])
def test_best_a_operator_totals(kappa):
    for n in (4, 8, 64):
        c = gate_counts(GateCountModel("unary", "BEST", n, kappa, m=0))
        assert np.isclose(c["total"], (4 * kappa + 1) * n + 1)
        assert np.isclose(c["depth"], (4 * kappa + 0.5) * n)


def test_counts_nonnegative_and_full_circuit_composition():
    for rep in ("unary", "binary"):
        for nat in ("CNOT", "PARTIAL_ISWAP", "BEST"):
            mdl = GateCountModel(rep, nat, 16, 0.5, m=2)
            blocks = block_counts(mdl)
            assert all(v >= 0 for b in blocks.values() for v in b.values())
            full = gate_counts(mdl)
            want = 5 * (blocks["D"]["two_qubit"] + blocks["CR"]["two_qubit"]) + \
                2 * (blocks["S_psi0"]["two_qubit"] + blocks["S_0"]["two_qubit"])
            assert np.isclose(full["two_qubit"], want)


def test_gate_count_model_validation():
    with pytest.raises(ValueError):
        GateCountModel("ternary")
    with pytest.raises(ValueError):
        GateCountModel(native="TOFFOLI")
    with pytest.raises(ValueError):
        GateCountModel(kappa=2)


def test_unary_cheaper_for_few_bins():
    for nat in ("PARTIAL_ISWAP", "BEST"):
        b = crossover_bins(nat)
        assert 50 <= b <= 200
        small = gate_counts(GateCountModel("unary", nat, 16))["total"]
        assert small < gate_counts(GateCountModel("binary", nat, 4))["total"]
