import numpy as np
import pytest
from scipy import integrate, optimize

from nisqkit.market import (DEFAULT_OPTION, OptionSpec, PriceGrid, analytic_payoff, binned_payoff,
                            discretize, expected_payoff, lognormal_pdf, monte_carlo_payoff,
                            truncated_payoff, window)

S = DEFAULT_OPTION


def test_spec_validation():
    with pytest.raises(ValueError):
        OptionSpec(-1, 0.05, 0.4, 0.1, 1.9)
    with pytest.raises(ValueError):
        OptionSpec(2, 0.05, 0.4, float("inf"), 1.9)


def test_pdf_mode_and_normalisation():
    mode = S.s0 * np.exp((S.r - 1.5 * S.sigma ** 2) * S.t)
    found = optimize.minimize_scalar(lambda s: -lognormal_pdf(S, s), bounds=(0.5, 4),
                                     method="bounded", options={"xatol": 1e-10}).x
    assert abs(found - mode) < 1e-6
    total, _ = integrate.quad(lambda s: lognormal_pdf(S, s), 0, np.inf, epsabs=1e-12)
    assert abs(total - 1) < 1e-8
    with pytest.raises(ValueError):
        lognormal_pdf(S, 0.0)


def test_pdf_concentrates_for_small_sigma():
    s = OptionSpec(2, 0.05, 1e-4, 0.1, 1.9)
    assert abs(s.dist().mean() - 2 * np.exp(0.005)) < 1e-6
    assert s.dist().std() < 1e-3


@pytest.mark.parametrize("n", [2, 8, 33])
def test_discretize_shape(n):
    g = discretize(S, n)
    assert g.bins == n and abs(g.probs.sum() - 1) < 1e-12
    assert np.all(np.diff(g.prices) > 0)
    # bin masses equal the CDF differences, renormalised: KL to the exact masses is 0
    mass = np.diff(S.dist().cdf(g.edges))
    assert np.allclose(g.probs, mass / mass.sum(), rtol=0, atol=1e-15)
    lo, hi = window(S)
    assert np.isclose(g.edges[0], lo) and np.isclose(g.edges[-1], hi)


def test_discretize_rejects_bad_input():
    with pytest.raises(ValueError):
        discretize(S, 1)
    with pytest.raises(ValueError):
        discretize(S, 8, width=0)


def test_strike_alignment_puts_strike_on_an_edge():
    g = discretize(S, 16, align_strike=True)
    assert np.min(np.abs(g.edges - S.k)) < 1e-12


def test_analytic_limits():
    assert abs(analytic_payoff(OptionSpec(2, 0.05, 0.4, 0.1, 1e-9)) - 2) < 1e-6
    assert analytic_payoff(OptionSpec(2, 0.05, 1e-6, 0.1, 3.0)) < 1e-12


def test_analytic_matches_quadrature():
    f = lambda s: max(0.0, s - S.k) * lognormal_pdf(S, s)  # noqa: E731
    und, _ = integrate.quad(f, S.k, np.inf, epsabs=1e-13, epsrel=1e-12)
    assert abs(expected_payoff(S) - und) / und < 1e-6
    assert abs(analytic_payoff(S) - und * np.exp(-S.r * S.t)) / analytic_payoff(S) < 1e-6


def test_analytic_monotonicity_sweep():
    ks = np.linspace(1.0, 3.0, 10)
    sig = np.linspace(0.05, 0.9, 10)
    v = np.array([[analytic_payoff(OptionSpec(2, 0.05, s, 0.1, k)) for s in sig] for k in ks])
    assert np.all(np.diff(v, axis=0) <= 1e-15)
    assert np.all(np.diff(v, axis=1) >= -1e-15)


def test_binned_payoff_examples():
    g = PriceGrid(np.array([1.0, 3.0]), np.array([0.5, 0.5]))
    assert binned_payoff(g, 2.0) == 0.5
    assert binned_payoff(g, 5.0) == 0.0


def test_grid_validation_and_csv():
    with pytest.raises(ValueError):
        PriceGrid(np.array([1.0, 2.0]), np.array([0.6, 0.6]))
    with pytest.raises(ValueError):
        PriceGrid(np.array([2.0, 1.0]), np.array([0.5, 0.5]))
    g = discretize(S, 8)
    h = PriceGrid.from_csv(g.to_csv())
    assert np.array_equal(g.prices, h.prices) and np.array_equal(g.probs, h.probs)
    assert g.to_csv().splitlines()[0] == "bin,price,prob"


def test_refinement_converges_to_truncated_integral():
    errs = []
    for n in (8, 16, 32, 64, 128, 256, 512, 1024):
        g = discretize(S, n)
        errs.append(abs(binned_payoff(g, S.k) - truncated_payoff(S)) / truncated_payoff(S))
    assert errs[-1] < 1e-3
    assert errs[-1] < errs[0]


def test_truncated_payoff_matches_quadrature():
    lo, hi = window(S)
    d = S.dist()
    num, _ = integrate.quad(lambda s: (s - S.k) * d.pdf(s), S.k, hi, epsabs=1e-14)
    assert abs(truncated_payoff(S) - num / (d.cdf(hi) - d.cdf(lo))) < 1e-10
    # a wide window recovers the full undiscounted integral
    assert abs(truncated_payoff(S, width=12) - expected_payoff(S)) < 1e-10


def test_monte_carlo():
    est, err = monte_carlo_payoff(S, 1_000_000, seed=1)
    assert abs(est - analytic_payoff(S)) < 4 * err
    e = [monte_carlo_payoff(S, p, seed=2)[1] for p in (1000, 10_000, 100_000)]
    assert 0.8 < (e[0] / e[1]) / np.sqrt(10) < 1.2
    assert 0.8 < (e[1] / e[2]) / np.sqrt(10) < 1.2
    with pytest.raises(ValueError):
        monte_carlo_payoff(S, 0)


def test_monte_carlo_zero_volatility():
    s = OptionSpec(2, 0.05, 1e-12, 0.1, 1.9)
    est, err = monte_carlo_payoff(s, 1000, discounted=False)
    assert abs(est - (2 * np.exp(0.005) - 1.9)) < 1e-9 and err < 1e-9


def test_monte_carlo_coverage():
    hits = 0
    for seed in range(200):
        est, err = monte_carlo_payoff(S, 2000, seed=seed)
        hits += abs(est - analytic_payoff(S)) <= 2 * err
    assert hits >= 180
