"""Black-Scholes market layer: log-normal terminal prices, binning, payoffs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class OptionSpec:
    s0: float
    r: float
    sigma: float
    t: float
    k: float

    def __post_init__(self):
        vals = (self.s0, self.r, self.sigma, self.t, self.k)
        if not all(np.isfinite(vals)):
            raise ValueError("option parameters must be finite")
        if min(self.s0, self.sigma, self.t, self.k) <= 0:
            raise ValueError("s0, sigma, t and k must be positive")

    @property
    def log_mean(self) -> float:
        return np.log(self.s0) + (self.r - 0.5 * self.sigma ** 2) * self.t

    @property
    def log_std(self) -> float:
        return self.sigma * np.sqrt(self.t)

    def dist(self):
        return stats.lognorm(s=self.log_std, scale=np.exp(self.log_mean))


DEFAULT_OPTION = OptionSpec(s0=2.0, r=0.05, sigma=0.4, t=0.1, k=1.9)


@dataclass(frozen=True)
class PriceGrid:
    prices: np.ndarray
    probs: np.ndarray
    edges: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        s = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "prices", s)
        if p.shape != s.shape or s.size < 2:
            raise ValueError("need at least 2 bins with matching prices/probs")
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise ValueError("probs must be non-negative and sum to 1")
        if np.any(np.diff(s) <= 0):
            raise ValueError("prices must be strictly increasing")

    @property
    def bins(self) -> int:
        return self.prices.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["bin", "price", "prob"])
        for i, (s, p) in enumerate(zip(self.prices, self.probs)):
            w.writerow([i, repr(float(s)), repr(float(p))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PriceGrid":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(np.array([float(r["price"]) for r in rows]),
                   np.array([float(r["prob"]) for r in rows]))


def lognormal_pdf(spec: OptionSpec, s):
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("price must be positive")
    return spec.dist().pdf(s)


def discretize(spec: OptionSpec, n: int, width: float = 3.0, align_strike: bool = False) -> PriceGrid:
    """Equal-width bins over mean +- width*std of S_T, mass from the CDF.

    With ``align_strike`` the window is shifted so that the strike falls on a
    bin edge instead of wherever the centred window puts it.
    """
    if n < 2:
        raise ValueError("need at least 2 bins")
    if width <= 0:
        raise ValueError("width must be positive")
    d = spec.dist()
    mean, std = d.mean(), d.std()
    lo, hi = max(mean - width * std, np.finfo(float).tiny), mean + width * std
    if align_strike:
        h = (hi - lo) / n
        shift = (spec.k - lo) / h
        lo += (shift - np.round(shift)) * h
        lo = max(lo, np.finfo(float).tiny)
        hi = lo + n * h
    edges = np.linspace(lo, hi, n + 1)
    mass = np.diff(d.cdf(edges))
    probs = mass / mass.sum()
    return PriceGrid(0.5 * (edges[1:] + edges[:-1]), probs, edges)


def analytic_payoff(spec: OptionSpec) -> float:
    """Discounted Black-Scholes call value."""
    st = spec.log_std
    d1 = (np.log(spec.s0 / spec.k) + (spec.r + 0.5 * spec.sigma ** 2) * spec.t) / st
    d2 = d1 - st
    return float(spec.s0 * stats.norm.cdf(d1) - spec.k * np.exp(-spec.r * spec.t) * stats.norm.cdf(d2))


def expected_payoff(spec: OptionSpec) -> float:
    """Undiscounted E[max(0, S_T - K)]; the quantity binned estimators converge to."""
    return analytic_payoff(spec) * np.exp(spec.r * spec.t)


def window(spec: OptionSpec, width: float = 3.0) -> tuple[float, float]:
    d = spec.dist()
    return max(d.mean() - width * d.std(), np.finfo(float).tiny), d.mean() + width * d.std()


def truncated_payoff(spec: OptionSpec, width: float = 3.0, lo: float | None = None,
                     hi: float | None = None) -> float:
    """Undiscounted payoff of the log-normal restricted to [lo, hi] and renormalised.

    This is the infinite-bin limit of ``binned_payoff`` on a ``discretize`` grid.
    Closed form via the log-normal partial expectation.
    """
    wlo, whi = window(spec, width)
    lo = wlo if lo is None else lo
    hi = whi if hi is None else hi
    mu, s = spec.log_mean, spec.log_std
    a, b = max(lo, spec.k), hi
    if b <= a:
        return 0.0
    za, zb = (np.log(a) - mu) / s, (np.log(b) - mu) / s
    fwd = np.exp(mu + 0.5 * s * s)
    first = fwd * (stats.norm.cdf(zb - s) - stats.norm.cdf(za - s))
    second = spec.k * (stats.norm.cdf(zb) - stats.norm.cdf(za))
    mass = spec.dist().cdf(hi) - spec.dist().cdf(lo)
    return float((first - second) / mass)


def binned_payoff(grid: PriceGrid, k: float) -> float:
    return float(np.sum(grid.probs * np.maximum(0.0, grid.prices - k)))


def monte_carlo_payoff(spec: OptionSpec, paths: int, seed: int = 0,
                       discounted: bool = True) -> tuple[float, float]:
    """Monte Carlo mean payoff and its standard error.

    Discounted by ``exp(-rT)`` by default so it estimates ``analytic_payoff``;
    pass ``discounted=False`` to estimate ``expected_payoff``.
    """
    if paths < 1:
        raise ValueError("paths must be >= 1")
    rng = np.random.default_rng(seed)
    st = np.exp(spec.log_mean + spec.log_std * rng.standard_normal(paths))
    pay = np.maximum(0.0, st - spec.k)
    if discounted:
        pay *= np.exp(-spec.r * spec.t)
    err = pay.std(ddof=1) / np.sqrt(paths) if paths > 1 else float("nan")
    return float(pay.mean()), float(err)
