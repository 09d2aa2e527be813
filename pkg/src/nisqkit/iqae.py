"""Iterative amplitude estimation with Gaussian fusion of per-power estimates."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .sim import NoiseModel
from .unary import AllShotsRejected, GateCountModel, UnaryCircuitBundle, gate_counts, run_priced

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SchedulePolicy:
    kind: str = "linear"
    J: int = 4

    def __post_init__(self):
        if self.kind not in ("linear", "exponential"):
            raise ValueError("schedule kind must be linear or exponential")
        if self.J < 0:
            raise ValueError("J must be >= 0")

    def powers(self) -> list[int]:
        if self.kind == "linear":
            return list(range(self.J + 1))
        return [0] + [2 ** j for j in range(self.J)]


def z_value(alpha: float) -> float:
    return float(stats.norm.ppf(1 - alpha / 2))


def multiple_values_arcsin(a: float, m: int) -> np.ndarray:
    """All ``2m+1`` angles in [0, pi/2] with ``sin^2((2m+1) theta) = a``."""
    if not 0 <= a <= 1 or m < 0:
        raise ValueError("need 0 <= a <= 1 and m >= 0")
    t0 = math.asin(math.sqrt(a))
    k = np.arange(1, m + 1)
    out = np.empty(2 * m + 1)
    out[0] = t0
    out[1::2] = k * np.pi - t0
    out[2::2] = k * np.pi + t0
    return out / (2 * m + 1)


def round_dtheta(m: int, shots: int, alpha: float = 0.05) -> float:
    return z_value(alpha) / (2 * (2 * m + 1) * math.sqrt(shots))


def fuse(thetas, dthetas) -> tuple[float, float]:
    """Inverse-variance weighted mean and its uncertainty."""
    w = 1.0 / np.asarray(dthetas, dtype=float) ** 2
    return float(np.sum(w * np.asarray(thetas)) / w.sum()), float(w.sum() ** -0.5)


def select_candidate(cands: np.ndarray, prev: float) -> float:
    d = np.abs(cands - prev)
    best = np.flatnonzero(np.isclose(d, d.min(), rtol=0, atol=1e-15))
    if best.size > 1:
        log.info("candidate tie at %s; taking the smaller angle", cands[best])
    return float(cands[best].min())


def round_update(prev_theta: float | None, prev_dtheta: float | None, a_hat: float, m: int,
                 shots: int, alpha: float = 0.05):
    """One iteration: disambiguate, attach uncertainty, fuse with the running estimate.

    Returns ``(theta_j, dtheta_j, (fused_theta, fused_dtheta))``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not 0 <= a_hat <= 1:
        raise ValueError("a_hat must lie in [0, 1]")
    dth = round_dtheta(m, shots, alpha)
    if prev_theta is None:
        if m != 0:
            raise ValueError("the first round must use m = 0")
        th = math.asin(math.sqrt(a_hat))
        return th, dth, (th, dth)
    th = select_candidate(multiple_values_arcsin(a_hat, m), prev_theta)
    return th, dth, fuse([prev_theta, th], [prev_dtheta, dth])


@dataclass
class EstimationRecord:
    alpha: float
    scale: float = 1.0
    rounds: list[dict] = field(default_factory=list)
    fused_theta: float = float("nan")
    fused_dtheta: float = float("nan")
    seed: int | None = None
    status: str = "ok"

    @property
    def fused_a(self) -> float:
        return math.sin(min(max(self.fused_theta, 0.0), math.pi / 2)) ** 2

    @property
    def fused_da(self) -> float:
        t = min(max(self.fused_theta, 0.0), math.pi / 2)
        return math.sin(2 * t) * self.fused_dtheta

    @property
    def payoff(self) -> float:
        return self.fused_a * self.scale

    @property
    def payoff_err(self) -> float:
        return self.fused_da * self.scale

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(fused_a=self.fused_a, fused_da=self.fused_da, payoff=self.payoff,
                 payoff_err=self.payoff_err)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["round", "m", "shots", "accepted", "theta", "dtheta"])
        for i, r in enumerate(self.rounds):
            w.writerow([i, r["m_j"], r["shots"], r["accepted"], r["theta_j"], r["dtheta_j"]])
        return buf.getvalue()


def _subseeds(seed: int | None, k: int) -> list[int]:
    ss = np.random.SeedSequence(seed)
    return [int(c.generate_state(1)[0]) for c in ss.spawn(k)]


def estimate_from_fractions(fractions, powers, accepted, alpha: float = 0.05,
                            scale: float = 1.0) -> EstimationRecord:
    """Fuse already-measured fractions (``a_hat`` per power) into a record."""
    rec = EstimationRecord(alpha=alpha, scale=scale)
    th = dth = None
    for a_hat, m, n_acc in zip(fractions, powers, accepted):
        tj, dj, (th, dth) = round_update(th, dth, a_hat, m, n_acc, alpha)
        rec.rounds.append({"m_j": m, "shots": n_acc, "accepted": n_acc, "a_hat": a_hat,
                           "theta_j": tj, "dtheta_j": dj})
    rec.fused_theta, rec.fused_dtheta = th, dth
    return rec


def estimate(bundle: UnaryCircuitBundle, policy: SchedulePolicy, shots: int,
             noise: NoiseModel | None = None, alpha: float = 0.05,
             seed: int | None = 0) -> EstimationRecord:
    """Run the schedule on the unary circuits with post-selection.

    Per-round uncertainties use the accepted shot count.  A round with no
    accepted shots stops the loop and returns a partial record.
    """
    rec = EstimationRecord(alpha=alpha, scale=bundle.scale, seed=seed)
    powers = policy.powers()
    th = dth = None
    for m, sub in zip(powers, _subseeds(seed, len(powers))):
        run = run_priced(bundle, shots, noise, m, sub)
        if run.accepted == 0:
            rec.status = f"all shots rejected at m={m}"
            log.warning(rec.status)
            break
        a_hat = run.ones / run.accepted
        tj, dj, (th, dth) = round_update(th, dth, a_hat, m, run.accepted, alpha)
        rec.rounds.append({"m_j": m, "shots": shots, "accepted": run.accepted, "a_hat": a_hat,
                           "theta_j": tj, "dtheta_j": dj, "seed": sub})
    if th is not None:
        rec.fused_theta, rec.fused_dtheta = th, dth
    return rec


# ---------------------------------------------------------------- precision laws

def sum_sq_powers(powers) -> int:
    return int(sum((2 * m + 1) ** 2 for m in powers))


def uncertainty(N: int, powers, alpha: float | None = 0.05) -> float:
    """Fused half-width ``z/(2 sqrt(N)) * (sum (2m+1)^2)^(-1/2)``.

    Pass ``alpha=None`` for the one-sigma version (``z = 1``).
    """
    z = 1.0 if alpha is None else z_value(alpha)
    return z / (2 * math.sqrt(N)) * sum_sq_powers(powers) ** -0.5


def precision_law(policy: SchedulePolicy, N: int, J: int | None = None,
                  alpha: float | None = 0.05) -> float:
    if J is not None:
        policy = SchedulePolicy(policy.kind, J)
    return uncertainty(N, policy.powers(), alpha)


def classical_bound(N: int, powers, alpha: float | None = None) -> float:
    """Angle error of plain sampling given the same number of A applications."""
    z = 1.0 if alpha is None else z_value(alpha)
    calls = N * sum(2 * m + 1 for m in powers)
    return z / (2 * math.sqrt(calls))


def optimal_bound(N: int, powers, alpha: float | None = None) -> float:
    """Heisenberg-type error: every application acts coherently, ``1/(sqrt(N) sum(2m+1))``."""
    z = 1.0 if alpha is None else z_value(alpha)
    return z / (2 * math.sqrt(N) * sum(2 * m + 1 for m in powers))


def total_power(policy: SchedulePolicy) -> int:
    return sum(policy.powers())


def printed_linear_sum(J: int) -> float:
    """Closed form for sum_{j<=J} j^2 exactly as it appears in the literature (off for J >= 1)."""
    return J * (2 * J + 1) * (J + 2) / 6


def printed_exponential_sum(J: int) -> float:
    return (2 ** (2 * J) - 1) / 3


def advantage_threshold(M: float, alpha_exponent: float) -> float:
    """Minimum retained fraction p_J >= M^(1 - 2 alpha)."""
    return float(M ** (1 - 2 * alpha_exponent))


def advantage_bound(coeffs: tuple[float, float], n: float, m_J: int,
                    alpha_exponent: float) -> dict:
    """Largest per-gate error keeping the advantage after post-selection."""
    if m_J < 2:
        raise ValueError("bound is degenerate for m_J < 2")
    a, b = coeffs
    gates = a * n + b
    if alpha_exponent == 1:
        M = 2 * m_J - 1  # {0, 1, 2, ..., m_J} in powers of two
    else:
        M = m_J * (m_J + 1) / 2
    p_e = 1 - m_J ** ((2 - 4 * alpha_exponent) / (gates * m_J))
    return {"M": M, "p_threshold": advantage_threshold(M, alpha_exponent), "p_e": float(p_e),
            "gates_per_step": gates}


def gate_coefficients(native: str = "CNOT", kappa: float = 0.5, representation: str = "unary"):
    """(a, b) with ``a n + b`` gates per Grover step, from the closed-form table."""
    def per_step(n):
        g1 = gate_counts(GateCountModel(representation, native, n, kappa, m=1))["total"]
        g0 = gate_counts(GateCountModel(representation, native, n, kappa, m=0))["total"]
        return g1 - g0
    b = 2 * per_step(8) - per_step(16)
    a = (per_step(16) - per_step(8)) / 8
    return float(a), float(b)


__all__ = ["SchedulePolicy", "EstimationRecord", "AllShotsRejected", "multiple_values_arcsin",
           "round_update", "fuse", "estimate", "estimate_from_fractions", "precision_law",
           "uncertainty", "classical_bound", "optimal_bound", "advantage_bound",
           "advantage_threshold", "gate_coefficients"]
