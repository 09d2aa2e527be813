"""Unary-basis option pricing circuits and their gate-count model.

Register layout: price bin ``i`` lives on qubit ``i`` (one-hot), the payoff
ancilla is qubit ``n``.  Distributor gate ``j`` (1 <= j <= n-1) couples qubits
``j-1`` and ``j``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .market import PriceGrid
from .sim import (DENSITY_MAX_QUBITS, Circuit, NoiseModel, outcome_probabilities, run_exact,
                  sample_distribution, sample_shots)

log = logging.getLogger(__name__)

NATIVE_SETS = ("CNOT", "PARTIAL_ISWAP", "BEST")
HALF_PI = np.pi / 2


@dataclass(frozen=True)
class DistributorAngles:
    thetas: np.ndarray  # thetas[j-1] drives gate j

    @property
    def n(self) -> int:
        return self.thetas.size + 1


def middle(n: int) -> int:
    return n // 2


def _angle(keep: float, total: float, label: str) -> float:
    if total <= 0:
        log.warning("distributor gate %s carries no probability; angle set to 0", label)
        return 0.0
    c2 = min(max(keep / total, 0.0), 1.0)
    return 2.0 * math.acos(math.sqrt(c2))


def solve_distributor_angles(grid: PriceGrid | np.ndarray) -> DistributorAngles:
    """Angles loading ``sum_i sqrt(p_i)|i>`` from the middle qubit outwards.

    Gate ``c = n//2`` splits the left mass off the middle qubit.  Left gates
    ``j < c`` keep ``p_j`` on qubit ``j`` and pass the rest to ``j-1``; right
    gates ``j > c`` keep ``p_{j-1}`` on ``j-1`` and pass the rest to ``j``.
    This realises ``tan^2(theta_1/2) = p_0/p_1`` and its mirror at the right edge.
    """
    p = np.asarray(grid.probs if isinstance(grid, PriceGrid) else grid, dtype=float)
    if p.sum() <= 0:
        raise ValueError("all-zero distribution")
    p = p / p.sum()
    n = p.size
    if np.any(p == 0):
        log.warning("bins %s have zero probability; their gates take limiting angles",
                    np.flatnonzero(p == 0).tolist())
    c = middle(n)
    th = np.zeros(n - 1)
    left = np.cumsum(p)            # left[j] = sum_{i<=j} p_i
    right = np.cumsum(p[::-1])[::-1]  # right[j] = sum_{i>=j} p_i
    for j in range(1, n):
        if j < c:
            th[j - 1] = _angle(p[j], left[j], str(j))
        elif j == c:
            th[j - 1] = _angle(right[c], 1.0, str(j))
        else:
            th[j - 1] = _angle(p[j - 1], right[j - 1], str(j))
    return DistributorAngles(th)


def ladder_order(n: int) -> list[int]:
    """Gate indices in execution order: middle gate, then both chains outwards."""
    c = middle(n)
    order = [c]
    for s in range(1, n):
        if c - s >= 1:
            order.append(c - s)
        if c + s <= n - 1:
            order.append(c + s)
    return order


# ---------------------------------------------------------------- native expansions

def _cnot(circ: Circuit, control: int, target: int, native: str):
    if native == "PARTIAL_ISWAP":
        # CNOT from two partial-iSWAP(pi) gates and five pi/2 rotations (up to phase)
        circ.add("RZ", control, params=[HALF_PI])
        circ.add("PARTIAL_ISWAP", (target, control), params=[np.pi])
        circ.add("RZ", target, params=[HALF_PI])
        circ.add("H", control)
        circ.add("PARTIAL_ISWAP", (target, control), params=[np.pi])
        circ.add("RX", target, params=[-HALF_PI])
        circ.add("RZ", control, params=[-HALF_PI])
    else:
        circ.add("CNOT", target, control)


def _cry(circ: Circuit, control: int, target: int, theta: float, native: str | None):
    if native is None:
        circ.add("CRY", target, control, [theta])
        return
    circ.add("RY", target, params=[theta / 2])
    _cnot(circ, control, target, native)
    circ.add("RY", target, params=[-theta / 2])
    _cnot(circ, control, target, native)


def _pswap(circ: Circuit, dest: int, src: int, theta: float, native: str | None):
    """Move sin(theta/2) of the amplitude on ``src`` to ``dest``."""
    if native in (None, "PARTIAL_SWAP"):
        circ.add("PARTIAL_SWAP", (dest, src), params=[theta])
    elif native in ("PARTIAL_ISWAP", "BEST"):
        circ.add("PARTIAL_ISWAP", (dest, src), params=[theta])
    else:
        circ.add("CNOT", src, dest)
        _cry(circ, src, dest, theta, "CNOT")
        circ.add("CNOT", src, dest)


def build_distributor(angles: DistributorAngles, native: str | None = None,
                      width: int | None = None) -> Circuit:
    """X on the middle qubit followed by the partial-SWAP ladder.

    ``native`` selects the gate set: ``None`` keeps PARTIAL_SWAP, ``"CNOT"``
    expands each into CNOT-cRy-CNOT with cRy as 2 CNOT + 2 RY,
    ``"PARTIAL_ISWAP"``/``"BEST"`` use partial-iSWAPs (phases differ, moduli
    agree).
    """
    n = angles.n
    if n < 2:
        raise ValueError("need n >= 2")
    circ = Circuit(width or n)
    c = middle(n)
    circ.add("X", c)
    for j in ladder_order(n):
        th = float(angles.thetas[j - 1])
        if j <= c:
            _pswap(circ, j - 1, j, th, native)
        else:
            _pswap(circ, j, j - 1, th, native)
    return circ


def payoff_angles(grid: PriceGrid, k: float) -> dict[int, float]:
    smax = grid.prices[-1]
    if smax <= k:
        return {}
    frac = np.clip((grid.prices - k) / (smax - k), 0.0, 1.0)
    return {i: 2 * math.asin(math.sqrt(f)) for i, f in enumerate(frac) if grid.prices[i] > k}


def build_payoff(grid: PriceGrid, k: float, native: str | None = None) -> Circuit:
    """Controlled-RY from every in-the-money price qubit onto the ancilla."""
    n = grid.bins
    circ = Circuit(n + 1)
    cr_native = None if native is None else ("CNOT" if native == "BEST" else native)
    for i, phi in payoff_angles(grid, k).items():
        _cry(circ, i, n, phi, cr_native)
    return circ


def s_psi0(n: int) -> Circuit:
    """Phase flip of the ancilla's |0> part; XZX equals -Z so one Z suffices."""
    return Circuit(n + 1).add("Z", n)


def s_zero(n: int, native: str | None = None) -> Circuit:
    circ = Circuit(n + 1)
    circ.add("X", n).add("H", n)
    _cnot(circ, middle(n), n, "PARTIAL_ISWAP" if native == "PARTIAL_ISWAP" else "CNOT")
    circ.add("H", n).add("X", n)
    return circ


@dataclass
class UnaryCircuitBundle:
    grid: PriceGrid
    k: float
    native: str | None
    distributor: Circuit
    payoff: Circuit
    init: Circuit = field(init=False)
    a_op: Circuit = field(init=False)
    grover: Circuit = field(init=False)

    def __post_init__(self):
        n = self.grid.bins
        if self.distributor.n_qubits != n + 1 or self.payoff.n_qubits != n + 1:
            raise ValueError("distributor/payoff width mismatch")
        first = self.distributor.ops[0] if self.distributor.ops else None
        if first is None or first.kind != "X" or first.targets != (middle(n),):
            raise ValueError("distributor must start with X on the middle qubit")
        # A maps the one-hot start state |mid> onward; the X is a one-off preparation
        self.init = Circuit(n + 1, [first])
        self.a_op = Circuit(n + 1, self.distributor.ops[1:]).extend(self.payoff)
        q = s_psi0(n)
        q.extend(self.a_op.adjoint())
        q.extend(s_zero(n, self.native))
        q.extend(self.a_op)
        self.grover = q

    @property
    def n(self) -> int:
        return self.grid.bins

    @property
    def scale(self) -> float:
        return float(self.grid.prices[-1] - self.k)

    def outcome_distribution(self, m: int, noise: NoiseModel | None) -> np.ndarray:
        """Exact measured-bitstring law of ``full(m)``, memoised per (m, eps)."""
        key = (m, 0.0 if noise is None else noise.eps)
        cache = self.__dict__.setdefault("_dist_cache", {})
        if key not in cache:
            cache[key] = outcome_probabilities(self.full(m), None, noise)
        return cache[key]

    def full(self, m: int = 0) -> Circuit:
        circ = self.init.copy().extend(self.a_op)
        for _ in range(m):
            circ.extend(self.grover)
        return circ


def build_bundle(grid: PriceGrid, k: float, native: str | None = None) -> UnaryCircuitBundle:
    n = grid.bins
    dist = build_distributor(solve_distributor_angles(grid), native, width=n + 1)
    return UnaryCircuitBundle(grid, k, native, dist, build_payoff(grid, k, native))


def build_grover(bundle: UnaryCircuitBundle) -> Circuit:
    return bundle.grover


def exact_ancilla_probability(bundle: UnaryCircuitBundle, m: int = 0) -> float:
    st = run_exact(bundle.full(m))
    n = bundle.n
    return float(st.probs[(np.arange(st.amps.size) >> n) & 1 == 1].sum())


def unary_mask(n: int, width: int | None = None) -> np.ndarray:
    """Boolean mask over basis indices whose low ``n`` bits are one-hot."""
    width = width or n + 1
    low = np.arange(2 ** width) & ((1 << n) - 1)
    return (low != 0) & (low & (low - 1) == 0)


class AllShotsRejected(RuntimeError):
    pass


@dataclass
class PricedRun:
    shots: int
    accepted: int
    ones: int
    m: int
    seed: int | None
    eps: float
    scale: float

    @property
    def p_hat(self) -> float:
        if self.accepted == 0:
            raise AllShotsRejected("all shots rejected by post-selection")
        return self.ones / self.accepted

    @property
    def payoff_estimate(self) -> float:
        return self.p_hat * self.scale

    @property
    def acceptance(self) -> float:
        return self.accepted / self.shots

    def record(self) -> dict:
        out = {"shots": self.shots, "accepted": self.accepted, "ones": self.ones, "m": self.m,
               "eps": self.eps, "seed": self.seed}
        if self.accepted:
            out.update(p_hat=self.p_hat, payoff_estimate=self.payoff_estimate)
        else:
            out.update(p_hat=None, payoff_estimate=None, status="all shots rejected")
        return out


def run_priced(bundle: UnaryCircuitBundle, shots: int, noise: NoiseModel | None = None,
               m: int = 0, seed: int | None = 0) -> PricedRun:
    """Measure every qubit and keep only shots with a one-hot price register."""
    n = bundle.n
    if n + 1 <= DENSITY_MAX_QUBITS:
        res = sample_distribution(bundle.outcome_distribution(m, noise), n + 1, shots, seed)
    else:
        res = sample_shots(bundle.full(m), None, shots, noise, seed)
    low = res.outcomes & ((1 << n) - 1)
    keep = (low != 0) & (low & (low - 1) == 0)
    ones = int(((res.outcomes[keep] >> n) & 1).sum())
    return PricedRun(shots, int(keep.sum()), ones, m, seed,
                     0.0 if noise is None else noise.eps, bundle.scale)


def kl_divergence(target, measured, shots: int | None = None) -> float:
    """KL(target || measured); zero measured bins get 1/(2 shots) before renormalising."""
    t = np.asarray(target, dtype=float)
    q = np.asarray(measured, dtype=float)
    if t.shape != q.shape:
        raise ValueError("length mismatch")
    if np.any(q == 0):
        pseudo = 1.0 / (2 * shots) if shots else 1e-12
        q = np.where(q == 0, pseudo, q)
    q = q / q.sum()
    nz = t > 0
    return float(max(np.sum(t[nz] * np.log(t[nz] / q[nz])), 0.0))


def measured_distribution(circ: Circuit, n: int, shots: int, seed: int | None = 0,
                          noise: NoiseModel | None = None) -> np.ndarray:
    """Histogram of the one-hot price register (non one-hot shots dropped)."""
    res = sample_shots(circ, None, shots, noise, seed)
    low = res.outcomes & ((1 << n) - 1)
    keep = (low != 0) & (low & (low - 1) == 0)
    idx = np.log2(low[keep]).astype(int)
    return np.bincount(idx, minlength=n) / max(keep.sum(), 1)


# ---------------------------------------------------------------- gate-count model

@dataclass(frozen=True)
class GateCountModel:
    representation: str = "unary"
    native: str = "CNOT"
    n: int = 8
    kappa: float = 0.5
    l: float | None = None  # qGAN layers for binary; defaults to n/2
    m: int = 1

    def __post_init__(self):
        if self.representation not in ("unary", "binary"):
            raise ValueError("representation must be unary or binary")
        if self.native not in NATIVE_SETS:
            raise ValueError(f"native must be one of {NATIVE_SETS}")
        if not 0 <= self.kappa <= 1 or self.n <= 0:
            raise ValueError("invalid n or kappa")


def _unary_blocks(native: str, n: float, kappa: float) -> dict[str, tuple[float, float, float]]:
    if native == "CNOT":
        return {"D": (2 * n, 4 * n, 3 * n), "CR": (2 * kappa * n, 2 * kappa * n, 4 * kappa * n),
                "S_psi0": (1, 0, 1), "S_0": (4, 1, 5)}
    if native == "PARTIAL_ISWAP":
        return {"D": (1, n, n / 2), "CR": (10 * kappa * n, 5 * kappa * n, 15 * kappa * n),
                "S_psi0": (1, 0, 1), "S_0": (9, 2, 10)}
    cn, isw = _unary_blocks("CNOT", n, kappa), _unary_blocks("PARTIAL_ISWAP", n, kappa)
    return {"D": isw["D"], "CR": cn["CR"], "S_psi0": cn["S_psi0"], "S_0": cn["S_0"]}


def _binary_blocks(native: str, n: float, kappa: float, l: float) -> dict[str, tuple[float, float, float]]:
    if native == "CNOT":
        return {"D": (3 * n * l, n * l, n * l + l),
                "CR": ((16 + 5 * kappa) * n, 14 * n, (27 + 2 * kappa) * n),
                "S_psi0": (1, 0, 1), "S_0": (20 * n - 23, 12 * n - 18, 24 * n - 30)}
    if native == "PARTIAL_ISWAP":
        return {"D": (8 * n * l, 2 * n * l, 6 * n * l + l),
                "CR": ((86 + 5 * kappa) * n, 28 * n, (97 + 2 * kappa) * n),
                "S_psi0": (1, 0, 1), "S_0": (80 * n - 113, 24 * n - 36, 90 * n - 129)}
    cn, isw = _binary_blocks("CNOT", n, kappa, l), _binary_blocks("PARTIAL_ISWAP", n, kappa, l)
    return {b: min(cn[b], isw[b], key=lambda t: t[0] + t[1]) for b in cn}


def block_counts(model: GateCountModel) -> dict[str, dict[str, float]]:
    """Per-block (one_qubit, two_qubit, depth) from the published scaling table."""
    if model.representation == "unary":
        raw = _unary_blocks(model.native, model.n, model.kappa)
    else:
        l = model.n / 2 if model.l is None else model.l
        raw = _binary_blocks(model.native, model.n, model.kappa, l)
    return {b: {"one_qubit": v[0], "two_qubit": v[1], "depth": v[2]} for b, v in raw.items()}


def gate_counts(model: GateCountModel, block: str | None = None) -> dict[str, float]:
    """Closed-form counts for one block or the full circuit with ``m`` Grover steps.

    The full circuit is ``(2m+1)`` applications of D and C+R plus ``m`` of each
    reflection.  For unary BEST the A-operator totals reduce to
    ``(4 kappa + 1) n + 1`` gates at depth ``(4 kappa + 1/2) n``.
    """
    blocks = block_counts(model)
    if block is not None:
        return dict(blocks[block])
    reps = {"D": 2 * model.m + 1, "CR": 2 * model.m + 1, "S_psi0": model.m, "S_0": model.m}
    out = {key: sum(reps[b] * blocks[b][key] for b in blocks) for key in ("one_qubit", "two_qubit", "depth")}
    out["total"] = out["one_qubit"] + out["two_qubit"]
    return out


def exact_block_counts(n: int, n_itm: int, native: str) -> dict[str, dict[str, int]]:
    """Tallies of the circuits this module builds.

    ``n_itm`` is the number of in-the-money bins (``kappa * n`` in the table).
    """
    if native == "CNOT":
        d = (1 + 2 * (n - 1), 4 * (n - 1))
        cr = (2 * n_itm, 2 * n_itm)
        s0 = (4, 1)
    elif native == "PARTIAL_ISWAP":
        d = (1, n - 1)
        cr = (12 * n_itm, 4 * n_itm)
        s0 = (9, 2)
    elif native == "BEST":
        d = (1, n - 1)
        cr = (2 * n_itm, 2 * n_itm)
        s0 = (4, 1)
    else:
        raise ValueError(native)
    raw = {"D": d, "CR": cr, "S_psi0": (1, 0), "S_0": s0}
    return {b: {"one_qubit": v[0], "two_qubit": v[1]} for b, v in raw.items()}


def tally_blocks(bundle: UnaryCircuitBundle) -> dict[str, dict[str, int]]:
    n = bundle.n
    out = {}
    for name, circ in (("D", bundle.distributor), ("CR", bundle.payoff),
                       ("S_psi0", s_psi0(n)), ("S_0", s_zero(n, bundle.native))):
        c = circ.count()
        out[name] = {"one_qubit": c["one_qubit"], "two_qubit": c["two_qubit"]}
    return out


def crossover_bins(native: str, kappa: float = 0.5, m: int = 1,
                   bins=None) -> float | None:
    """Smallest bin count at which the unary total exceeds the binary total.

    Binary registers use ``log2(bins)`` qubits (fractional values allowed so
    the curves are smooth) with ``l = log2(bins)/2``.
    """
    bins = np.arange(4, 4097) if bins is None else np.asarray(bins)
    for b in bins:
        u = gate_counts(GateCountModel("unary", native, int(b), kappa, m=m))["total"]
        nb = math.log2(b)
        bi = gate_counts(GateCountModel("binary", native, nb, kappa, m=m))["total"]
        if u > bi:
            return float(b)
    return None
