"""Dense state-vector simulator.

Qubit 0 is the least-significant bit of a basis index, so the amplitude of
``|q_{n-1} ... q_1 q_0>`` lives at ``sum_q q * 2**q``.

Rotations follow ``R_P(t) = exp(-i t P / 2)``.  Two-qubit matrices act on the
local basis ``|b(targets[0]) b(targets[1])>``, i.e. local index
``2*b(targets[0]) + b(targets[1])``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ONE_QUBIT = ("RX", "RY", "RZ", "X", "Z", "H", "U3")
CONTROLLED = ("CNOT", "CZ", "CRY")
TWO_QUBIT = ("PARTIAL_SWAP", "PARTIAL_ISWAP")
KINDS = ONE_QUBIT + CONTROLLED + TWO_QUBIT
N_PARAMS = {"RX": 1, "RY": 1, "RZ": 1, "U3": 3, "CRY": 1,
            "PARTIAL_SWAP": 1, "PARTIAL_ISWAP": 1}

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULIS = (_I2, _X, _Y, _Z)


class UnboundParameterError(ValueError):
    pass


@dataclass(frozen=True)
class Param:
    """Placeholder for a free circuit parameter."""

    index: int


# ---------------------------------------------------------------- matrices

def rx(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(t):
    return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]], dtype=complex)


def u3(a, b, c):
    """U3(a, b, c) = RZ(a) RY(b) RZ(c)."""
    return rz(a) @ ry(b) @ rz(c)


def partial_swap(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[1, 0, 0, 0], [0, c, -s, 0], [0, s, c, 0], [0, 0, 0, 1]],
                    dtype=complex)


def partial_iswap(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[1, 0, 0, 0], [0, c, -1j * s, 0], [0, -1j * s, c, 0],
                     [0, 0, 0, 1]], dtype=complex)


def _controlled(u):
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = u
    return m


def gate_matrix(kind: str, params: Sequence[float] = ()) -> np.ndarray:
    """Unitary of a gate on its local qubits (controls first, then targets)."""
    p = [float(v) for v in params]
    if kind not in KINDS:
        raise ValueError(f"unknown gate kind {kind!r}")
    if len(p) != N_PARAMS.get(kind, 0):
        raise ValueError(f"{kind} expects {N_PARAMS.get(kind, 0)} params, got {len(p)}")
    if not all(np.isfinite(p)):
        raise ValueError(f"non-finite parameter in {kind}: {p}")
    table = {
        "RX": lambda: rx(*p), "RY": lambda: ry(*p), "RZ": lambda: rz(*p),
        "X": lambda: _X, "Z": lambda: _Z, "H": lambda: _H, "U3": lambda: u3(*p),
        "CNOT": lambda: _controlled(_X), "CZ": lambda: _controlled(_Z),
        "CRY": lambda: _controlled(ry(*p)),
        "PARTIAL_SWAP": lambda: partial_swap(*p),
        "PARTIAL_ISWAP": lambda: partial_iswap(*p),
    }
    return table[kind]().copy()


# ---------------------------------------------------------------- types

@dataclass(frozen=True)
class GateOp:
    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        object.__setattr__(self, "params", tuple(self.params))
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        want_t = 2 if self.kind in TWO_QUBIT else 1
        want_c = 1 if self.kind in CONTROLLED else 0
        if len(self.targets) != want_t or len(self.controls) != want_c:
            raise ValueError(f"{self.kind} needs {want_t} target(s) and {want_c} control(s)")
        if set(self.targets) & set(self.controls) or len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"overlapping qubits in {self}")
        if len(self.params) != N_PARAMS.get(self.kind, 0):
            raise ValueError(f"{self.kind} expects {N_PARAMS.get(self.kind, 0)} params")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    @property
    def arity(self) -> int:
        return len(self.qubits)

    @property
    def is_bound(self) -> bool:
        return not any(isinstance(v, Param) for v in self.params)

    def matrix(self) -> np.ndarray:
        if not self.is_bound:
            raise UnboundParameterError(f"unbound parameter in {self}")
        return gate_matrix(self.kind, self.params)

    def adjoint(self) -> "GateOp":
        p = self.params
        if any(isinstance(v, Param) for v in p):
            raise UnboundParameterError("cannot take adjoint of an unbound gate")
        if self.kind == "U3":
            p = (-p[2], -p[1], -p[0])
        else:
            p = tuple(-v for v in p)
        return GateOp(self.kind, self.targets, self.controls, p)

    def to_dict(self) -> dict:
        params = [{"param": v.index} if isinstance(v, Param) else float(v) for v in self.params]
        return {"kind": self.kind, "targets": list(self.targets),
                "controls": list(self.controls), "params": params}

    @classmethod
    def from_dict(cls, d: dict) -> "GateOp":
        params = [Param(v["param"]) if isinstance(v, dict) else float(v) for v in d.get("params", [])]
        return cls(d["kind"], tuple(d["targets"]), tuple(d.get("controls", ())), tuple(params))


@dataclass
class StateVector:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (2 ** self.n_qubits,):
            raise ValueError(f"expected {2 ** self.n_qubits} amplitudes, got {self.amps.shape}")

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        return cls.basis(n, 0)

    @classmethod
    def basis(cls, n: int, index: int) -> "StateVector":
        a = np.zeros(2 ** n, dtype=complex)
        a[index] = 1.0
        return cls(n, a)

    @property
    def probs(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


@dataclass
class Circuit:
    n_qubits: int
    ops: list[GateOp] = field(default_factory=list)

    def add(self, kind: str, targets, controls=(), params=()) -> "Circuit":
        targets = (targets,) if isinstance(targets, (int, np.integer)) else tuple(targets)
        controls = (controls,) if isinstance(controls, (int, np.integer)) else tuple(controls)
        op = GateOp(kind, targets, controls, tuple(params))
        if max(op.qubits) >= self.n_qubits or min(op.qubits) < 0:
            raise IndexError(f"{op} does not fit in {self.n_qubits} qubits")
        self.ops.append(op)
        return self

    def extend(self, other: "Circuit") -> "Circuit":
        if other.n_qubits > self.n_qubits:
            raise ValueError("cannot append a wider circuit")
        self.ops.extend(other.ops)
        return self

    def copy(self) -> "Circuit":
        return Circuit(self.n_qubits, list(self.ops))

    @property
    def parameter_slots(self) -> dict[int, list[tuple[int, int]]]:
        slots: dict[int, list[tuple[int, int]]] = {}
        for i, op in enumerate(self.ops):
            for j, v in enumerate(op.params):
                if isinstance(v, Param):
                    slots.setdefault(v.index, []).append((i, j))
        return slots

    def bind(self, values: Sequence[float]) -> "Circuit":
        """New circuit with every ``Param(i)`` replaced by ``values[i]``."""
        values = np.asarray(values, dtype=float)
        ops = []
        for op in self.ops:
            p = tuple(float(values[v.index]) if isinstance(v, Param) else v for v in op.params)
            ops.append(GateOp(op.kind, op.targets, op.controls, p))
        return Circuit(self.n_qubits, ops)

    def adjoint(self) -> "Circuit":
        return Circuit(self.n_qubits, [op.adjoint() for op in reversed(self.ops)])

    def count(self) -> dict[str, int]:
        one = sum(op.arity == 1 for op in self.ops)
        return {"one_qubit": one, "two_qubit": len(self.ops) - one, "depth": self.depth()}

    def depth(self) -> int:
        level = [0] * self.n_qubits
        for op in self.ops:
            d = max(level[q] for q in op.qubits) + 1
            for q in op.qubits:
                level[q] = d
        return max(level, default=0)

    def to_json(self) -> str:
        return json.dumps({"n_qubits": self.n_qubits, "ops": [op.to_dict() for op in self.ops]})

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        d = json.loads(text)
        return cls(d["n_qubits"], [GateOp.from_dict(o) for o in d["ops"]])


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing strength ``eps``; two-qubit gates get ``2 eps``, readout ``10 eps``."""

    eps: float

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")

    @property
    def one_qubit_rate(self) -> float:
        return self.eps

    @property
    def two_qubit_rate(self) -> float:
        return min(2.0 * self.eps, 1.0)

    @property
    def readout_flip(self) -> float:
        return min(10.0 * self.eps, 0.5)

    def rate(self, arity: int) -> float:
        return self.one_qubit_rate if arity == 1 else self.two_qubit_rate


@dataclass
class ShotResult:
    n_qubits: int
    outcomes: np.ndarray  # integer basis indices, one per shot
    seed: int | None = None

    @property
    def bitstrings(self) -> np.ndarray:
        """(shots, n) array of bits; column q holds qubit q."""
        return ((self.outcomes[:, None] >> np.arange(self.n_qubits)) & 1).astype(np.uint8)

    @property
    def counts(self) -> dict[str, int]:
        """Histogram keyed by bitstrings printed with qubit n-1 first."""
        idx, cnt = np.unique(self.outcomes, return_counts=True)
        return {format(int(i), f"0{self.n_qubits}b"): int(c) for i, c in zip(idx, cnt)}

    @property
    def shots(self) -> int:
        return int(self.outcomes.size)


# ---------------------------------------------------------------- kernels

def apply_matrix(amps: np.ndarray, mat: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply ``mat`` to ``qubits`` of a state or a batch of states.

    ``amps`` has shape ``(..., 2**n)``.  ``mat`` is ``(d, d)`` or batched as
    ``(B, d, d)`` matching a leading batch axis of ``amps``.  ``qubits[0]`` is
    the most significant local bit.
    """
    k = len(qubits)
    lead = amps.shape[:-1]
    if k == 1:
        q = qubits[0]
        t = amps.reshape(lead + (2 ** (n - 1 - q), 2, 2 ** q))
        if mat.ndim == 2:
            return np.matmul(mat, t).reshape(amps.shape)
        return np.matmul(mat[:, None], t).reshape(amps.shape)
    if k == 2 and mat.ndim == 2:
        qa, qb = qubits
        hq, lq = max(qa, qb), min(qa, qb)
        nl = len(lead)
        t = amps.reshape(lead + (2 ** (n - 1 - hq), 2, 2 ** (hq - lq - 1), 2, 2 ** lq))
        H, M, L = nl, nl + 2, nl + 4
        perm = list(range(nl)) + [H, M, L, nl + 1, nl + 3]
        x = t.transpose(perm)
        shp = x.shape
        # local index 2*bit(qa) + bit(qb); the transposed pair is (bit(hq), bit(lq))
        m = mat if qa == hq else mat.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
        y = (x.reshape(shp[:-2] + (4,)) @ m.T).reshape(shp)
        return y.transpose(np.argsort(perm)).reshape(amps.shape)
    t = amps.reshape(lead + (2,) * n)
    nl = len(lead)
    axes = [nl + n - 1 - q for q in qubits]
    t = np.moveaxis(t, axes, range(t.ndim - k, t.ndim))
    shp = t.shape
    t = t.reshape(shp[:-k] + (2 ** k,))
    if mat.ndim == 2:
        t = t @ mat.T
    else:
        # batched per-state matrices: leading axis of t is the batch axis
        t = np.einsum("bij,b...j->b...i", mat, t)
    t = np.moveaxis(t.reshape(shp), list(range(len(shp) - k, len(shp))), axes)
    return t.reshape(amps.shape)


def _check_op(op: GateOp, n: int):
    if max(op.qubits) >= n or min(op.qubits) < 0:
        raise IndexError(f"{op} out of range for {n} qubits")


def apply_gate(state: StateVector, op: GateOp) -> StateVector:
    _check_op(op, state.n_qubits)
    amps = apply_matrix(state.amps, op.matrix(), op.qubits, state.n_qubits)
    return StateVector(state.n_qubits, amps)


def _evolve(amps: np.ndarray, circuit: Circuit) -> np.ndarray:
    n = circuit.n_qubits
    for op in circuit.ops:
        _check_op(op, n)
        amps = apply_matrix(amps, op.matrix(), op.qubits, n)
    return amps


def run_exact(circuit: Circuit, initial: StateVector | None = None) -> StateVector:
    if initial is None:
        initial = StateVector.zero(circuit.n_qubits)
    if initial.n_qubits != circuit.n_qubits:
        raise ValueError("state and circuit widths differ")
    return StateVector(circuit.n_qubits, _evolve(initial.amps.copy(), circuit))


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    d = 2 ** circuit.n_qubits
    cols = _evolve(np.eye(d, dtype=complex), circuit)  # rows are evolved basis states
    return cols.T


# ---------------------------------------------------------------- noise

def _pauli_ops(arity: int):
    if arity == 1:
        return [p for p in PAULIS]
    return [np.kron(a, b) for a in PAULIS for b in PAULIS]


def trajectory_states(circuit: Circuit, initial: StateVector | None, n_traj: int,
                      noise: NoiseModel | None, rng: np.random.Generator):
    """Unravel the depolarizing channel into Pauli trajectories.

    After each gate, with probability ``rate(arity)`` a Pauli drawn uniformly
    from all ``4**arity`` (identity included) hits the touched qubits, which
    averages to ``(1-rate) rho + rate I/d`` on those qubits.

    Trajectories that have not yet suffered a non-identity Pauli are identical,
    so they are tracked as one shared state plus a head count.  Returns
    ``(clean_amps, clean_count, err_amps)``.
    """
    n = circuit.n_qubits
    clean = (initial or StateVector.zero(n)).amps.copy()
    buf = np.empty((n_traj, clean.size), dtype=complex)
    n_err = 0
    n_clean = n_traj
    paulis = {1: _pauli_ops(1), 2: _pauli_ops(2)}
    for op in circuit.ops:
        _check_op(op, n)
        m = op.matrix()
        clean = apply_matrix(clean, m, op.qubits, n)
        if n_err:
            buf[:n_err] = apply_matrix(buf[:n_err], m, op.qubits, n)
        if noise is None or noise.eps == 0:
            continue
        k = op.arity
        p_hit = noise.rate(k) * (4 ** k - 1) / 4 ** k  # non-identity part
        # erred rows
        rows = np.flatnonzero(rng.random(n_err) < p_hit)
        # fresh errors among the clean trajectories
        fresh = int(rng.binomial(n_clean, p_hit)) if n_clean else 0
        if fresh:
            buf[n_err:n_err + fresh] = clean
            rows = np.concatenate([rows, np.arange(n_err, n_err + fresh)])
            n_err += fresh
            n_clean -= fresh
        if rows.size:
            codes = rng.integers(1, 4 ** k, size=rows.size)
            for code in np.unique(codes):
                sel = rows[codes == code]
                buf[sel] = apply_matrix(buf[sel], paulis[k][code], op.qubits, n)
    return clean, n_clean, buf[:n_err]


DENSITY_MAX_QUBITS = 10


def _replace_by_mixed(rho: np.ndarray, q: int, n: int) -> np.ndarray:
    """Tr_q(rho) (x) I/2, placed back on qubit ``q``."""
    hi, lo = 2 ** (n - 1 - q), 2 ** q
    r = rho.reshape(hi, 2, lo, hi, 2, lo)
    red = 0.5 * (r[:, 0, :, :, 0, :] + r[:, 1, :, :, 1, :])
    out = np.zeros_like(r)
    out[:, 0, :, :, 0, :] = red
    out[:, 1, :, :, 1, :] = red
    return out.reshape(rho.shape)


def _depolarize(rho: np.ndarray, qubits: Sequence[int], p: float, n: int) -> np.ndarray:
    """rho -> (1-p) rho + p Tr_Q(rho) (x) I/d on ``qubits``."""
    mixed = rho
    for q in qubits:
        mixed = _replace_by_mixed(mixed, q, n)
    return (1 - p) * rho + p * mixed


def density_evolve(circuit: Circuit, initial: StateVector | None = None,
                   noise: NoiseModel | None = None) -> np.ndarray:
    """Exact density matrix of the gate-noise channel (readout excluded)."""
    n = circuit.n_qubits
    psi = (initial or StateVector.zero(n)).amps
    rho = np.outer(psi, psi.conj())
    for op in circuit.ops:
        _check_op(op, n)
        u = op.matrix()
        # vec(rho) as a 2n-qubit state: columns on qubits 0..n-1, rows on n..2n-1
        flat = apply_matrix(rho.reshape(-1), u.conj(), op.qubits, 2 * n)
        flat = apply_matrix(flat, u, [q + n for q in op.qubits], 2 * n)
        rho = flat.reshape(rho.shape)
        if noise is not None and noise.eps > 0:
            rho = _depolarize(rho, op.qubits, noise.rate(op.arity), n)
    return rho


def readout_channel(probs: np.ndarray, flip: float, n: int) -> np.ndarray:
    """Outcome distribution after independent symmetric bit flips."""
    t = probs.reshape((2,) * n)
    m = np.array([[1 - flip, flip], [flip, 1 - flip]])
    for ax in range(n):
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [ax])), 0, ax)
    return t.reshape(-1)


def outcome_probabilities(circuit: Circuit, initial: StateVector | None = None,
                          noise: NoiseModel | None = None) -> np.ndarray:
    """Exact distribution of measured bitstrings, gate noise and readout included."""
    n = circuit.n_qubits
    if noise is None or noise.eps == 0:
        return run_exact(circuit, initial).probs
    probs = np.real(np.diag(density_evolve(circuit, initial, noise))).clip(min=0)
    return readout_channel(probs / probs.sum(), noise.readout_flip, n)


def sample_distribution(probs: np.ndarray, n: int, shots: int, seed: int | None = 0) -> ShotResult:
    return ShotResult(n, _draw(probs, shots, np.random.default_rng(seed)).astype(np.int64), seed)


def sample_shots(circuit: Circuit, initial: StateVector | None, shots: int,
                 noise: NoiseModel | None = None, seed: int | None = 0,
                 method: str = "auto") -> ShotResult:
    """Sample measurement outcomes of every qubit.

    With noise, ``method="density"`` evolves the exact channel and draws i.i.d.
    shots from its diagonal, which has the same law as independent Pauli
    trajectories; ``"trajectory"`` unravels explicitly.  ``"auto"`` picks the
    density route up to ``DENSITY_MAX_QUBITS`` qubits.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    n = circuit.n_qubits
    if noise is None or noise.eps == 0:
        probs = run_exact(circuit, initial).probs
        return ShotResult(n, _draw(probs, shots, rng).astype(np.int64), seed)
    if method == "auto":
        method = "density" if n <= DENSITY_MAX_QUBITS else "trajectory"
    if method == "density":
        probs = np.real(np.diag(density_evolve(circuit, initial, noise))).clip(min=0)
        outcomes = _draw(probs, shots, rng).astype(np.int64)
    elif method == "trajectory":
        clean, n_clean, err = trajectory_states(circuit, initial, shots, noise, rng)
        parts = [_draw(np.abs(clean) ** 2, n_clean, rng)] if n_clean else []
        if err.shape[0]:
            p = np.abs(err) ** 2
            cdf = np.cumsum(p / p.sum(axis=1, keepdims=True), axis=1)
            u = rng.random((err.shape[0], 1))
            parts.append(np.minimum((cdf < u).sum(axis=1), 2 ** n - 1))
        outcomes = np.concatenate(parts).astype(np.int64)
        rng.shuffle(outcomes)
    else:
        raise ValueError(f"unknown method {method!r}")
    f = noise.readout_flip
    if f > 0:
        flips = rng.random((shots, n)) < f
        outcomes ^= (flips.astype(np.int64) << np.arange(n)).sum(axis=1)
    return ShotResult(n, outcomes, seed)


def _draw(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    probs = probs / probs.sum()
    counts = rng.multinomial(shots, probs)
    out = np.repeat(np.arange(probs.size), counts)
    rng.shuffle(out)
    return out


# ---------------------------------------------------------------- observables

def reduced_density(state: StateVector, keep: Sequence[int]) -> np.ndarray:
    """Partial trace onto ``keep``; ``keep[0]`` is the most significant local bit."""
    keep = list(keep)
    n = state.n_qubits
    if len(keep) > 4:
        raise ValueError("at most 4 kept qubits")
    if len(set(keep)) != len(keep) or any(q < 0 or q >= n for q in keep):
        raise IndexError("invalid kept qubits")
    t = state.amps.reshape((2,) * n)
    axes = [n - 1 - q for q in keep]
    t = np.moveaxis(t, axes, range(len(keep))).reshape(2 ** len(keep), -1)
    return t @ t.conj().T


def expectation_z(state: StateVector, qubit: int) -> float:
    if not 0 <= qubit < state.n_qubits:
        raise IndexError("qubit out of range")
    bit = (np.arange(state.amps.size) >> qubit) & 1
    return float(np.sum(state.probs * (1 - 2 * bit)))


def marginal(probs: np.ndarray, qubits: Iterable[int], n: int) -> np.ndarray:
    """Marginal distribution on ``qubits`` (first listed = most significant)."""
    qubits = list(qubits)
    idx = np.arange(2 ** n)
    local = np.zeros_like(idx)
    for q in qubits:
        local = (local << 1) | ((idx >> q) & 1)
    return np.bincount(local, weights=probs, minlength=2 ** len(qubits))
