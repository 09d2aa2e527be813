"""Data re-uploading models: layered single- and multi-qubit circuits with inputs in the angles.

Every rotation angle is an affine function of the data with coefficients that
are linear in the trainable parameters::

    angle[m, g] = sum_{p, f} C[g, p, f] * params[p] * xx[m, f],   xx = [1, x_1, ..., x_d]

so one compiled coefficient tensor drives batched simulation, circuit export
and parameter-shift gradients alike.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .datasets import LabeledDataset, LabelSet
from .optim import OptimProblem, OptimResult, best_of_restarts, minimize_quasi_newton
from .sim import Circuit

log = logging.getLogger(__name__)

FAMILIES = ("FOURIER", "UAT", "CLASSIFIER_U3", "ANSATZ_A")
ENTANGLING = ("none", "CZ_alternating")


class SharedParameterError(ValueError):
    """Raised when a single-parameter shift is requested for a parameter used by several gates."""


def params_per_gate(family: str, d: int) -> int:
    if family == "FOURIER":
        if d != 1:
            raise ValueError("the Fourier gate takes one-dimensional inputs")
        return 5
    if family in ("UAT", "ANSATZ_A"):
        return d + 2
    if family == "CLASSIFIER_U3":
        return 6 * math.ceil(d / 3)
    raise ValueError(f"unknown family {family!r}")


def cz_pairs(n_qubits: int, layer: int) -> list[tuple[int, int]]:
    """Entangling pairs after ``layer``: (0,1)(2,3)... then (1,2)(3,4)...(0,n-1), alternating."""
    if n_qubits < 2:
        return []
    if n_qubits == 2 or layer % 2 == 0:
        return [(q, q + 1) for q in range(0, n_qubits - 1, 2)]
    return [(q, q + 1) for q in range(1, n_qubits - 1, 2)] + [(0, n_qubits - 1)]


@dataclass
class _Program:
    """Compiled layout: rotation slots plus CZ positions, in application order."""

    n_qubits: int
    n_params: int
    data_dim: int
    kinds: list = field(default_factory=list)  # "RY" / "RZ" per slot
    qubits: list = field(default_factory=list)
    terms: list = field(default_factory=list)  # per slot: list of (param, scale, feature)
    ops: list = field(default_factory=list)  # ("rot", slot) / ("cz", a, b)

    def rotation(self, kind: str, q: int, terms):
        if kind == "RZ":
            # RZ commutes with CZ and with RZ; merge into the last RZ on this qubit if
            # no non-diagonal gate touched the qubit since.
            for op in reversed(self.ops):
                if op[0] == "rot" and self.qubits[op[1]] == q:
                    if self.kinds[op[1]] == "RZ":
                        self.terms[op[1]].extend(terms)
                        return
                    break
        self.kinds.append(kind)
        self.qubits.append(q)
        self.terms.append(list(terms))
        self.ops.append(("rot", len(self.kinds) - 1))

    @cached_property
    def coeff(self) -> np.ndarray:
        c = np.zeros((len(self.kinds), self.n_params, self.data_dim + 1))
        for g, ts in enumerate(self.terms):
            for p, s, f in ts:
                c[g, p, f] += s
        return c

    @cached_property
    def param_slots(self) -> list[list[int]]:
        used = self.coeff.any(axis=2)
        return [list(np.flatnonzero(used[:, p])) for p in range(self.n_params)]

    def angles(self, params: np.ndarray, xx: np.ndarray) -> np.ndarray:
        return np.einsum("gpf,p,mf->mg", self.coeff, params, xx, optimize=True)


def _gate_terms(family: str, o: int, d: int):
    """Rotation list (kind, terms) for one re-uploading gate with parameter offset ``o``.

    Features are indexed 1..d inside ``terms`` (0 is the constant term).
    """
    if family == "FOURIER":
        w, a, b, phi, lam = range(o, o + 5)
        # the gate's z rotations are diag(e^{it/2}, e^{-it/2}) = RZ(-t) here
        return [("RY", [(phi, 2.0, 0)]),
                ("RZ", [(w, -2.0, 1)]),
                ("RZ", [(a, -1.0, 0), (b, 1.0, 0)]),
                ("RY", [(lam, 2.0, 0)]),
                ("RZ", [(a, -1.0, 0), (b, -1.0, 0)])]
    if family == "UAT":
        z = [(o + i, -2.0, i + 1) for i in range(d)] + [(o + d, -2.0, 0)]
        return [("RY", [(o + d + 1, 2.0, 0)]), ("RZ", z)]
    if family == "ANSATZ_A":
        tz, ty = o, o + 1
        y = [(ty, 1.0, 0)] + [(o + 2 + i, 1.0, i + 1) for i in range(d)]
        return [("RY", y), ("RZ", [(tz, 1.0, 0)])]
    if family == "CLASSIFIER_U3":
        out = []
        for c in range(math.ceil(d / 3)):
            base = o + 6 * c

            def angle(k):  # theta_k + w_k x_{3c+k}, padded features dropped
                t = [(base + k, 1.0, 0)]
                f = 3 * c + k
                if f < d:
                    t.append((base + 3 + k, 1.0, f + 1))
                return t
            # U3(a, b, c) = RZ(a) RY(b) RZ(c): RZ(c) acts first
            out += [("RZ", angle(2)), ("RY", angle(1)), ("RZ", angle(0))]
        return out
    raise ValueError(f"unknown family {family!r}")


@dataclass
class ReuploadModel:
    family: str
    layers: int
    data_dim: int = 1
    n_qubits: int = 1
    entangling: str = "none"
    params: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.layers < 1:
            raise ValueError("need at least one layer")
        if self.n_qubits < 1 or self.data_dim < 1:
            raise ValueError("n_qubits and data_dim must be positive")
        if self.entangling not in ENTANGLING:
            raise ValueError(f"entangling must be one of {ENTANGLING}")
        if self.entangling != "none" and self.n_qubits < 2:
            raise ValueError("entangling layers need at least two qubits")
        n = self.n_params
        if self.params is None:
            self.params = np.zeros(n)
        self.params = np.asarray(self.params, dtype=float).ravel()
        if self.params.size != n:
            raise ValueError(f"{self.family} with {self.layers} layers, {self.n_qubits} qubit(s) "
                             f"and d={self.data_dim} takes {n} parameters, got {self.params.size}")

    @property
    def per_gate(self) -> int:
        return params_per_gate(self.family, self.data_dim)

    @property
    def n_params(self) -> int:
        return self.layers * self.n_qubits * self.per_gate

    @property
    def split_factor(self) -> int:
        return math.ceil(self.data_dim / 3) if self.family == "CLASSIFIER_U3" else 1

    def with_params(self, params) -> "ReuploadModel":
        return ReuploadModel(self.family, self.layers, self.data_dim, self.n_qubits,
                             self.entangling, np.asarray(params, dtype=float).copy())

    @cached_property
    def program(self) -> _Program:
        prog = _Program(self.n_qubits, self.n_params, self.data_dim)
        for layer in range(self.layers):
            for q in range(self.n_qubits):
                o = (layer * self.n_qubits + q) * self.per_gate
                for kind, terms in _gate_terms(self.family, o, self.data_dim):
                    prog.rotation(kind, q, terms)
            if self.entangling != "none" and layer < self.layers - 1:
                for a, b in cz_pairs(self.n_qubits, layer):
                    prog.ops.append(("cz", a, b))
        return prog

    def to_dict(self) -> dict:
        return {"family": self.family, "n_qubits": self.n_qubits, "layers": self.layers,
                "entangling": self.entangling, "data_dim": self.data_dim,
                "params": [float(v) for v in self.params]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ReuploadModel":
        return cls(d["family"], d["layers"], d.get("data_dim", 1), d.get("n_qubits", 1),
                   d.get("entangling", "none"), d.get("params"))

    @classmethod
    def from_json(cls, text: str) -> "ReuploadModel":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------- simulation

def _design(model: ReuploadModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1 and model.data_dim == 1:
        x = x.reshape(-1, 1)
    x = np.atleast_2d(x)
    if x.shape[1] != model.data_dim:
        raise ValueError(f"model expects {model.data_dim} features, got {x.shape[1]}")
    return np.hstack([np.ones((len(x), 1)), x])


def _initial(m: int, nq: int, initial: str) -> np.ndarray:
    psi = np.zeros((m, 2 ** nq), dtype=complex)
    if initial == "zero":
        psi[:, 0] = 1
    elif initial == "plus":  # |+> on every qubit
        psi[:] = 2 ** (-nq / 2)
    else:
        raise ValueError("initial must be 'zero' or 'plus'")
    return psi


def _cz_signs(nq: int, a: int, b: int) -> np.ndarray:
    idx = np.arange(2 ** nq)
    return np.where(((idx >> a) & 1) & ((idx >> b) & 1), -1.0, 1.0)


def run_angles(prog: _Program, angles: np.ndarray, initial: str = "zero") -> np.ndarray:
    """Batched evolution: one state per row of ``angles`` (M, G)."""
    m, nq = angles.shape[0], prog.n_qubits
    psi = _initial(m, nq, initial)
    for op in prog.ops:
        if op[0] == "cz":
            psi *= _cz_signs(nq, op[1], op[2])
            continue
        g = op[1]
        q = prog.qubits[g]
        s = psi.reshape(m, 2 ** (nq - q - 1), 2, 2 ** q)
        t = angles[:, g]
        if prog.kinds[g] == "RZ":
            ph = np.exp(-0.5j * t)[:, None, None]
            s[:, :, 0, :] *= ph
            s[:, :, 1, :] *= ph.conj()
        else:
            c, sn = np.cos(t / 2)[:, None, None], np.sin(t / 2)[:, None, None]
            a0, a1 = s[:, :, 0, :].copy(), s[:, :, 1, :]
            s[:, :, 0, :] = c * a0 - sn * a1
            s[:, :, 1, :] = sn * a0 + c * a1
    return psi


def simulate(model: ReuploadModel, x, initial: str = "zero") -> np.ndarray:
    """Output states, shape (M, 2**n_qubits)."""
    xx = _design(model, x)
    return run_angles(model.program, model.program.angles(model.params, xx), initial)


def build_model_circuit(model: ReuploadModel, x, initial: str = "zero") -> Circuit:
    """Gate-list circuit for a single data point."""
    xx = _design(model, x)
    if len(xx) != 1:
        raise ValueError("build_model_circuit takes a single data point")
    ang = model.program.angles(model.params, xx)[0]
    circ = Circuit(model.n_qubits)
    if initial == "plus":
        for q in range(model.n_qubits):
            circ.add("H", [q])
    for op in model.program.ops:
        if op[0] == "cz":
            circ.add("CZ", [op[2]], [op[1]])
        else:
            g = op[1]
            circ.add(model.program.kinds[g], [model.program.qubits[g]], params=[float(ang[g])])
    return circ


# ---------------------------------------------------------------- readouts

def _qubit_rho(psi: np.ndarray, q: int, nq: int) -> np.ndarray:
    s = psi.reshape(len(psi), 2 ** (nq - q - 1), 2, 2 ** q)
    return np.einsum("mhal,mhbl->mab", s, s.conj())


def readout_z(psi, nq):
    p = np.abs(psi) ** 2
    bit = (np.arange(2 ** nq) & 1).astype(bool)
    return (p[:, ~bit].sum(1) - p[:, bit].sum(1))[:, None]


def readout_xy(psi, nq):
    rho = _qubit_rho(psi, 0, nq)
    return np.stack([2 * rho[:, 0, 1].real, -2 * rho[:, 0, 1].imag], axis=1)


def label_fidelities(psi, nq, labels: LabelSet, qubits=(0,)) -> np.ndarray:
    """F[m, j, q] = <phi_j| rho_q |phi_j> for each measured qubit."""
    st = labels.states
    out = np.empty((len(psi), labels.classes, len(qubits)))
    for k, q in enumerate(qubits):
        if nq == 1:
            amp = psi @ st.conj().T
            out[:, :, k] = np.abs(amp) ** 2
        else:
            rho = _qubit_rho(psi, q, nq)
            out[:, :, k] = np.einsum("ja,mab,jb->mj", st.conj(), rho, st).real
    return out


def basis_fidelities(psi, classes: int) -> np.ndarray:
    if classes > psi.shape[1]:
        raise ValueError("more classes than computational basis states")
    return np.abs(psi[:, :classes]) ** 2


# ---------------------------------------------------------------- objectives

class Objective:
    """Loss over a fixed batch with exact expectations and parameter-shift gradients.

    ``theta`` is the model parameter vector followed by ``n_extra`` classical
    parameters (the class weights of the weighted-fidelity cost).
    """

    def __init__(self, model: ReuploadModel, x, readout, loss, n_extra: int = 0,
                 initial: str = "zero"):
        self.model = model
        self.xx = _design(model, x)
        self.readout = readout
        self.loss = loss
        self.n_extra = n_extra
        self.initial = initial

    @property
    def dim(self) -> int:
        return self.model.n_params + self.n_extra

    def split(self, theta):
        theta = np.asarray(theta, dtype=float)
        return theta[:self.model.n_params], theta[self.model.n_params:]

    def observables(self, angles) -> np.ndarray:
        return self.readout(run_angles(self.model.program, angles, self.initial))

    def value(self, theta) -> float:
        p, e = self.split(theta)
        obs = self.observables(self.model.program.angles(p, self.xx))
        return float(self.loss(obs, e)[0])

    __call__ = value

    def _slot_weights(self, angles, dobs, slots) -> np.ndarray:
        w = np.zeros((len(angles), len(self.model.program.kinds)))
        for g in slots:
            a = angles.copy()
            a[:, g] += np.pi / 2
            plus = self.observables(a)
            a[:, g] -= np.pi
            minus = self.observables(a)
            w[:, g] = np.sum(dobs * (plus - minus), axis=tuple(range(1, dobs.ndim))) / 2
        return w

    def value_and_grad(self, theta):
        p, e = self.split(theta)
        prog = self.model.program
        angles = prog.angles(p, self.xx)
        val, dobs, dextra = self.loss(self.observables(angles), e)
        w = self._slot_weights(angles, dobs, range(len(prog.kinds)))
        gp = np.einsum("gf,gpf->p", w.T @ self.xx, prog.coeff)
        return float(val), np.concatenate([gp, np.ravel(dextra)])

    def grad(self, theta) -> np.ndarray:
        return self.value_and_grad(theta)[1]

    def problem(self) -> OptimProblem:
        return OptimProblem(self.dim, self.value, self.grad)


def parameter_shift_grad(objective: Objective, theta, index: int) -> float:
    """d loss / d theta[index] from two shifted evaluations of the one gate using it.

    The shift acts on the rotation angle; the chain rule supplies the factor
    d angle / d param (which carries the data for input weights).
    """
    p, e = objective.split(theta)
    prog = objective.model.program
    if index >= objective.model.n_params:
        return float(objective.grad(theta)[index])  # class weights enter classically
    slots = prog.param_slots[index]
    if len(slots) > 1:
        raise SharedParameterError(f"parameter {index} enters {len(slots)} gates")
    if not slots:
        return 0.0
    angles = prog.angles(p, objective.xx)
    _, dobs, _ = objective.loss(objective.observables(angles), e)
    w = objective._slot_weights(angles, dobs, slots)
    return float(np.einsum("mg,gf,mf->", w, prog.coeff[:, index, :], objective.xx))


# -- loss functions: (observables, extra) -> (value, d value / d observables, d value / d extra)

def _z_loss(targets):
    t = np.asarray(targets, dtype=float).reshape(-1, 1)

    def f(obs, _):
        r = obs - t
        return np.mean(r ** 2), 2 * r / len(r), np.zeros(0)
    return f


def _xy_loss(targets):
    z = np.asarray(targets, dtype=complex).ravel()
    t = np.stack([z.real, z.imag], axis=1)

    def f(obs, _):
        r = obs - t
        return np.sum(r ** 2) / len(r), 2 * r / len(r), np.zeros(0)
    return f


def _fidelity_loss(labels_idx):
    y = np.asarray(labels_idx, dtype=int)

    def f(obs, _):
        fy = obs[np.arange(len(y)), y]
        d = np.zeros_like(obs)
        d[np.arange(len(y)), y] = -2 * fy
        return np.sum(1 - fy ** 2), d, np.zeros(0)
    return f


def _weighted_loss(labels_idx, overlaps, n_measured):
    y = np.asarray(labels_idx, dtype=int)
    target = overlaps[y][:, :, None]  # (M, C, 1)

    def f(obs, alpha):
        a = np.asarray(alpha, dtype=float).reshape(obs.shape[1], n_measured)
        r = a[None] * obs - target
        return 0.5 * np.sum(r ** 2), r * a[None], np.sum(r * obs, axis=0)
    return f


def z_objective(model, x, targets) -> Objective:
    nq = model.n_qubits
    return Objective(model, x, lambda psi: readout_z(psi, nq), _z_loss(targets))


def xy_objective(model, x, targets) -> Objective:
    z = np.asarray(targets, dtype=complex)
    if np.any(np.abs(z) > 1 + 1e-12):
        raise ValueError("complex targets must satisfy |z| <= 1")
    nq = model.n_qubits
    return Objective(model, x, lambda psi: readout_xy(psi, nq), _xy_loss(z), initial="plus")


def measured_qubits(model) -> tuple[int, ...]:
    return tuple(range(model.n_qubits))


def fidelity_objective(model, data: LabeledDataset, labels: LabelSet) -> Objective:
    """Fidelity cost: single-qubit label states, or computational-basis states on several qubits."""
    nq = model.n_qubits
    if nq == 1:
        ro = lambda psi: label_fidelities(psi, 1, labels)[:, :, 0]  # noqa: E731
    else:
        ro = lambda psi: basis_fidelities(psi, labels.classes)  # noqa: E731
    return Objective(model, data.points, ro, _fidelity_loss(data.labels))


def weighted_objective(model, data: LabeledDataset, labels: LabelSet) -> Objective:
    """Weighted-fidelity cost; class weights (C x Q) are appended to the parameters."""
    nq, qs = model.n_qubits, measured_qubits(model)
    ro = lambda psi: label_fidelities(psi, nq, labels, qs)  # noqa: E731
    return Objective(model, data.points, ro, _weighted_loss(data.labels, labels.overlaps, len(qs)),
                     n_extra=labels.classes * len(qs))


def z_benchmark_loss(model, x, targets) -> float:
    return z_objective(model, x, targets).value(model.params)


def xy_benchmark_loss(model, x, targets) -> float:
    return xy_objective(model, x, targets).value(model.params)


def fidelity_cost(model, data: LabeledDataset, labels: LabelSet) -> float:
    return fidelity_objective(model, data, labels).value(model.params)


def weighted_fidelity_cost(model, data: LabeledDataset, labels: LabelSet, alphas) -> float:
    obj = weighted_objective(model, data, labels)
    a = np.asarray(alphas, dtype=float)
    if a.size != obj.n_extra:
        raise ValueError(f"need {obj.n_extra} class weights, got {a.size}")
    return obj.value(np.concatenate([model.params, a.ravel()]))


# ---------------------------------------------------------------- decisions

def class_fidelities(model, labels: LabelSet, x, measure: str = "reduced",
                     weights=None) -> np.ndarray:
    """(M, C) scores used for decisions.

    ``reduced``: label-state fidelity of each qubit's reduced state, averaged
    over qubits.  ``basis``: probability of computational basis state |j>.
    ``weights`` (C or C x Q class weights from the weighted cost) multiply the
    per-qubit fidelities before averaging.
    """
    psi = simulate(model, x)
    if measure == "basis":
        if weights is not None:
            raise ValueError("class weights apply to the reduced-state readout only")
        return basis_fidelities(psi, labels.classes)
    if measure != "reduced":
        raise ValueError("measure must be 'reduced' or 'basis'")
    f = label_fidelities(psi, model.n_qubits, labels, measured_qubits(model))
    if weights is not None:
        f = f * np.asarray(weights, dtype=float).reshape(1, labels.classes, -1)
    return f.mean(axis=2)


def _argmax_low(f: np.ndarray) -> np.ndarray:
    top = f.max(axis=1, keepdims=True)
    hits = np.isclose(f, top, rtol=0, atol=1e-12)
    ties = hits.sum(axis=1) > 1
    if ties.any():
        log.info("%d fidelity tie(s); choosing the lowest class id", int(ties.sum()))
    return np.argmax(hits, axis=1)


def classify(model, labels: LabelSet, x, measure: str = "reduced", weights=None):
    """Class ids by largest (optionally class-weighted) fidelity and the raw fidelity vectors.

    Ties go to the lowest class id.  Scaling all weights by one positive
    constant never changes a decision.
    """
    f = class_fidelities(model, labels, x, measure)
    score = f if weights is None else class_fidelities(model, labels, x, measure, weights)
    return _argmax_low(score), f


def accuracy(model, labels: LabelSet, data: LabeledDataset, threshold: float | None = None,
             measure: str = "reduced", weights=None) -> float:
    """Fraction of correct guesses; ``threshold`` (binary) guesses class 0 when P(0) > threshold."""
    if threshold is not None:
        if not 0 <= threshold <= 1:
            raise ValueError("threshold must lie in [0, 1]")
        if labels.classes != 2:
            raise ValueError("a threshold only applies to binary problems")
        f = class_fidelities(model, labels, data.points, measure)
        guess = np.where(f[:, 0] > threshold, 0, 1)
    else:
        guess, _ = classify(model, labels, data.points, measure, weights)
    return float(np.mean(guess == data.labels))


def best_threshold(model, labels: LabelSet, data: LabeledDataset, grid=None,
                   measure: str = "reduced") -> tuple[float, float]:
    """Sweep the binary threshold on ``data`` and return (lambda, accuracy)."""
    grid = np.linspace(0, 1, 101) if grid is None else np.asarray(grid)
    accs = [accuracy(model, labels, data, float(t), measure) for t in grid]
    k = int(np.argmax(accs))
    return float(grid[k]), float(accs[k])


# ---------------------------------------------------------------- training

@dataclass
class TrainResult:
    model: ReuploadModel
    extra: np.ndarray
    result: OptimResult
    runs: list


def train(objective: Objective, restarts: int = 10, seed: int | None = 0, max_evals: int = 400,
          method=minimize_quasi_newton, init_scale: float = np.pi, **kw) -> TrainResult:
    """Best of ``restarts`` optimizations from random starts (class weights start at 1)."""
    rng = np.random.default_rng(seed)
    n = objective.model.n_params
    starts = [np.concatenate([rng.uniform(-init_scale, init_scale, n), np.ones(objective.n_extra)])
              for _ in range(restarts)]
    best, runs = best_of_restarts(objective.problem(), starts, method, max_evals=max_evals, **kw)
    best.seed = seed
    p, e = objective.split(best.best_params)
    return TrainResult(objective.model.with_params(p), e, best, runs)


# ---------------------------------------------------------------- structural helpers

def fourier_gate_matrix(x: float, w: float, a: float, b: float, phi: float, lam: float):
    """Closed-form 2x2 Fourier gate in terms of a_+-, b_+- and e^{+-i w x}."""
    ap = math.cos(lam) * math.cos(phi) * np.exp(1j * a)
    am = -math.sin(lam) * math.sin(phi) * np.exp(1j * b)
    bp = -math.cos(lam) * math.sin(phi) * np.exp(1j * a)
    bm = -math.sin(lam) * math.cos(phi) * np.exp(1j * b)
    e, ei = np.exp(1j * w * x), np.exp(-1j * w * x)
    return np.array([[ap * e + am * ei, bp * e + bm * ei],
                     [-np.conj(bm) * e - np.conj(bp) * ei, np.conj(am) * e + np.conj(ap) * ei]])


def uat_recursion(model: ReuploadModel, x) -> tuple[complex, complex]:
    """(A_N, B_N) = (<0|U|0>, <1|U|0>) built gate by gate with the UAT update rule."""
    if model.family != "UAT" or model.n_qubits != 1:
        raise ValueError("recursion applies to single-qubit UAT models")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = model.data_dim
    A, B = 1.0 + 0j, 0.0 + 0j
    for layer in model.params.reshape(model.layers, d + 2):
        w, alpha, phi = layer[:d], layer[d], layer[d + 1]
        g = float(w @ x) + alpha
        c, s = math.cos(phi), math.sin(phi)
        A, B = np.exp(1j * g) * (c * A - s * B), np.exp(-1j * g) * (s * A + c * B)
    return A, B


def uat_rotation_angles(model: ReuploadModel, x) -> list[tuple[float, float]]:
    """Per layer (Z angle 2(w.x + alpha), Y angle 2 phi), both reduced to [0, 2 pi)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = model.data_dim
    out = []
    for layer in model.params.reshape(-1, d + 2):
        out.append((float((2 * (layer[:d] @ x + layer[d])) % (2 * np.pi)),
                    float((2 * layer[d + 1]) % (2 * np.pi))))
    return out


def output_amplitude(model: ReuploadModel, x, index: int = 1) -> np.ndarray:
    """<index| U(x) |0> over a batch of inputs."""
    return simulate(model, x)[:, index]
