"""Classification datasets, regression targets and single-qubit label states."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

# ---------------------------------------------------------------- label states


@dataclass(frozen=True)
class LabelSet:
    """Maximally separated single-qubit states, one per class."""

    bloch: np.ndarray  # (C, 3) unit Bloch vectors

    @property
    def classes(self) -> int:
        return len(self.bloch)

    @property
    def states(self) -> np.ndarray:
        """(C, 2) kets with a real, non-negative |0> amplitude."""
        x, y, z = self.bloch.T
        theta = np.arccos(np.clip(z, -1, 1))
        phi = np.arctan2(y, x)
        return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=1)

    @property
    def overlaps(self) -> np.ndarray:
        """Y[y, j] = |<phi_y|phi_j>|^2."""
        s = self.states
        return np.abs(s.conj() @ s.T) ** 2

    @classmethod
    def for_classes(cls, c: int) -> "LabelSet":
        if c == 2:
            v = [[0, 0, 1], [0, 0, -1]]
        elif c == 3:
            a = 2 * np.pi * np.arange(3) / 3
            v = np.stack([np.cos(a), np.sin(a), np.zeros(3)], axis=1)
        elif c == 4:
            t = math.acos(-1 / 3)
            a = 2 * np.pi * np.arange(3) / 3
            v = np.vstack([[0, 0, 1], np.stack([np.sin(t) * np.cos(a), np.sin(t) * np.sin(a),
                                                np.full(3, np.cos(t))], axis=1)])
        elif c == 6:
            v = [[0, 0, 1], [0, 0, -1], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]]
        else:
            raise ValueError(f"no built-in label configuration for {c} classes (have 2, 3, 4, 6)")
        return cls(np.asarray(v, dtype=float))


# ---------------------------------------------------------------- datasets

PROBLEMS = {  # name -> (dimension, classes, default train size)
    "circle": (2, 2, 200),
    "3circles": (2, 4, 200),
    "tricrown": (2, 3, 200),
    "crown": (2, 2, 200),
    "nonconvex": (2, 2, 200),
    "wavylines": (2, 4, 200),
    "squares": (2, 4, 200),
    "sphere": (3, 2, 500),
    "hypersphere": (4, 2, 1000),
}


def _circle(x):
    return (np.sum(x ** 2, axis=1) >= 2 / np.pi).astype(int)


def _three_circles(x):
    lab = np.full(len(x), 3)
    c = [((-1.0, 1.0), 1.0), ((1.0, 0.0), 0.75), ((-0.5, -0.5), 0.5)]
    for k in reversed(range(3)):  # earlier circles win where they overlap
        (cx, cy), r = c[k]
        inside = (x[:, 0] - cx) ** 2 + (x[:, 1] - cy) ** 2 < r * r
        lab[inside] = k
    return lab


def _tricrown(x):
    r2 = np.sum(x ** 2, axis=1)
    return np.where(r2 < 4 / (3 * np.pi), 0, np.where(r2 < 8 / (3 * np.pi), 1, 2))


def _crown(x):
    r2 = np.sum(x ** 2, axis=1)
    return ((r2 > 1 / np.pi) & (r2 < 3 / np.pi)).astype(int)


def _nonconvex(x):
    return (x[:, 1] < -2 * x[:, 0] + 1.5 * np.sin(np.pi * x[:, 0])).astype(int)


def _wavylines(x):
    s = np.sin(np.pi * x[:, 0])
    return 2 * (x[:, 1] > s + x[:, 0]).astype(int) + (x[:, 1] > s - x[:, 0]).astype(int)


def _squares(x):
    return 2 * (x[:, 1] > 0).astype(int) + (x[:, 0] > 0).astype(int)


def _sphere(x):
    return (np.sum(x ** 2, axis=1) >= (3 / np.pi) ** (2 / 3)).astype(int)


def _square_cdf(a: float) -> float:
    """Area of {u, v in [0, 1]: u^2 + v^2 <= a}."""
    if a <= 0:
        return 0.0
    if a <= 1:
        return math.pi * a / 4
    if a >= 2:
        return 1.0
    r = 1 / math.sqrt(a)
    return math.sqrt(a - 1) + a / 2 * (math.asin(r) - math.acos(r))


@lru_cache(maxsize=None)
def hypersphere_radius_sq() -> float:
    """r^2 such that the ball fills half of [-1, 1]^4.

    The unclipped 4-ball formula r^4 = 16 / pi^2 gives r > 1, so the ball pokes
    out of the box and covers only about 48.5% of it; solve for the clipped volume.
    """
    def frac(s):
        return integrate.dblquad(lambda v, u: _square_cdf(s - u * u - v * v), 0, 1, 0, 1,
                                 epsabs=1e-12)[0]
    return optimize.brentq(lambda s: frac(s) - 0.5, 1.0, 2.0, xtol=1e-14)


def _hypersphere(x):
    return (np.sum(x ** 2, axis=1) >= hypersphere_radius_sq()).astype(int)


_RULES = {"circle": _circle, "3circles": _three_circles, "tricrown": _tricrown, "crown": _crown,
          "nonconvex": _nonconvex, "wavylines": _wavylines, "squares": _squares,
          "sphere": _sphere, "hypersphere": _hypersphere}


def label_points(problem: str, x) -> np.ndarray:
    """Exact geometric class of each point (class 0 is the inside region where one exists)."""
    if problem not in _RULES:
        raise ValueError(f"unknown problem {problem!r}; choose from {sorted(_RULES)}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != PROBLEMS[problem][0]:
        raise ValueError(f"{problem} points have dimension {PROBLEMS[problem][0]}")
    return _RULES[problem](x)


@dataclass
class LabeledDataset:
    points: np.ndarray
    labels: np.ndarray
    split: np.ndarray  # "train" / "test" per point
    problem: str = ""
    classes: int = 2

    def subset(self, which: str) -> "LabeledDataset":
        m = self.split == which
        return LabeledDataset(self.points[m], self.labels[m], self.split[m], self.problem,
                              self.classes)

    @property
    def train(self) -> "LabeledDataset":
        return self.subset("train")

    @property
    def test(self) -> "LabeledDataset":
        return self.subset("test")

    def __len__(self) -> int:
        return len(self.labels)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        d = self.points.shape[1]
        w.writerow([f"x{i}" for i in range(d)] + ["label", "split"])
        for p, lab, s in zip(self.points, self.labels, self.split):
            w.writerow([repr(float(v)) for v in p] + [int(lab), s])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, problem: str = "", classes: int | None = None) -> "LabeledDataset":
        rows = list(csv.reader(io.StringIO(text)))
        head, body = rows[0], rows[1:]
        d = len(head) - 2
        pts = np.array([[float(v) for v in r[:d]] for r in body])
        lab = np.array([int(r[d]) for r in body])
        split = np.array([r[d + 1] for r in body])
        return cls(pts, lab, split, problem, classes or int(lab.max()) + 1)


def make_dataset(problem: str, n_train: int | None = None, n_test: int = 4000,
                 seed: int | None = 0) -> LabeledDataset:
    """Uniform points in [-1, 1]^d labelled by the problem's geometric rule."""
    if problem not in PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}; choose from {sorted(PROBLEMS)}")
    d, c, default_train = PROBLEMS[problem]
    n_train = default_train if n_train is None else n_train
    if n_train < 0 or n_test < 0:
        raise ValueError("sizes must be non-negative")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, size=(n_train + n_test, d))
    split = np.array(["train"] * n_train + ["test"] * n_test)
    return LabeledDataset(pts, label_points(problem, pts), split, problem, c)


# ---------------------------------------------------------------- regression targets

def _relu(x):
    return np.maximum(0.0, x)


def _tanh5(x):
    return np.tanh(5 * x)


def _step(x):
    return np.sign(x)  # sign(0) = 0


def _poly(x):
    return np.abs(3 * x ** 3 * (1 - x ** 4))


def himmelblau(x, y):
    return (x ** 2 + y - 11) ** 2 + (x + y ** 2 - 7) ** 2


def brent(x, y):
    return (x / 2) ** 2 + (y / 2) ** 2 + np.exp(-((x / 2 - 5) ** 2 + (y / 2 - 5) ** 2))


def threehump(x, y):
    u, v = 2 * x / 5, 2 * y / 5
    return 2 * u ** 2 - 1.05 * u ** 4 + u ** 6 / 6 + u * v + v ** 2


def adjiman(x, y):
    return np.cos(x) * np.sin(y) - x / (y ** 2 + 1)


TARGETS_1D = {"relu": _relu, "tanh": _tanh5, "step": _step, "poly": _poly}
TARGETS_2D = {"himmelblau": himmelblau, "brent": brent, "threehump": threehump,
              "adjiman": adjiman}
GRID_POINTS = 201


def _extrema(name: str) -> tuple[float, float]:
    if name in TARGETS_1D:
        v = TARGETS_1D[name](np.linspace(-1, 1, GRID_POINTS))
    else:
        g = np.linspace(-5, 5, GRID_POINTS)
        v = TARGETS_2D[name](*np.meshgrid(g, g, indexing="ij"))
    return float(v.min()), float(v.max())


def target_functions(name: str, x, normalize: bool = True) -> np.ndarray:
    """Benchmark target values.

    1D targets take x in [-1, 1]; 2D targets take an (M, 2) array in [-5, 5]^2.
    With ``normalize`` the values are mapped affinely so that the extrema on a
    201-point (1D) or 201x201 (2D) grid land on -1 and +1.
    """
    if name in TARGETS_1D:
        raw = TARGETS_1D[name](np.asarray(x, dtype=float))
    elif name in TARGETS_2D:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        raw = TARGETS_2D[name](x[:, 0], x[:, 1])
    else:
        raise ValueError(f"unknown target {name!r}; choose from "
                         f"{sorted(TARGETS_1D) + sorted(TARGETS_2D)}")
    if not normalize:
        return raw
    lo, hi = _extrema(name)
    return 2 * (raw - lo) / (hi - lo) - 1


def complex_target(real: str, imag: str, x) -> np.ndarray:
    """``re(x) + i im(x)`` from two 1D targets, divided by its largest modulus on the grid."""
    g = np.linspace(-1, 1, GRID_POINTS)
    zg = target_functions(real, g) + 1j * target_functions(imag, g)
    z = target_functions(real, x) + 1j * target_functions(imag, x)
    return z / np.abs(zg).max()


def regression_grid(n: int = 200, dim: int = 1, seed: int | None = None) -> np.ndarray:
    """Evenly spaced 1D points on [-1, 1] (seed=None) or uniform random ones."""
    if dim == 1:
        if seed is None:
            return np.linspace(-1, 1, n)
        return np.sort(np.random.default_rng(seed).uniform(-1, 1, n))
    rng = np.random.default_rng(seed)
    return rng.uniform(-5, 5, size=(n, dim))
