"""Kernel-method learning on top of a Gram matrix.

The linear model ``z = K theta`` trained by full-batch gradient descent on
``L = 1/2 sum eps^2`` has residual dynamics

    eps_{t+1} = (I - eta K_H) eps_t,     K_H = K @ K,

so along a Gram eigenvector with eigenvalue lam the residual shrinks by
exactly ``(1 - eta lam^2)`` per step, whatever the labels.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .data import DataRanges
from .dynamics import DataPoint
from .errors import KerrLearnError, UnstableLearningRate

DEFAULT_THRESHOLD = 1e-7


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    source: str = ""

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def eigh(self):
        """Eigenpairs sorted by descending eigenvalue."""
        w, v = np.linalg.eigh(self.values)
        order = np.argsort(w)[::-1]
        return w[order], v[:, order]

    def check(self, diag_tol=1e-9, sym_tol=1e-12, psd_tol=1e-8) -> list[str]:
        """Return the list of violated invariants (empty when valid)."""
        k = self.values
        problems = []
        if np.max(np.abs(k - k.T), initial=0.0) > sym_tol:
            problems.append("not symmetric")
        if np.max(np.abs(np.diag(k) - 1), initial=0.0) > diag_tol:
            problems.append("diagonal differs from 1")
        if k.min() < 0 or k.max() > 1:
            problems.append("entries outside [0, 1]")
        w = np.linalg.eigvalsh(k)
        if w[0] < -psd_tol * max(w[-1], 0.0):
            problems.append(f"not PSD (min eigenvalue {w[0]:.3g})")
        return problems

    def submatrix(self, rows, cols) -> np.ndarray:
        return self.values[np.ix_(rows, cols)]


@dataclass(frozen=True)
class NtkMatrix:
    values: np.ndarray


@dataclass(frozen=True)
class SpectrumStats:
    eigenvalues: np.ndarray
    effective_dimension: int
    max_eigenvalue: float
    threshold: float


@dataclass
class TrainRecord:
    learning_rate: float
    steps: int
    residual_norms: np.ndarray
    projections: np.ndarray
    eigenvalue: float
    theta: np.ndarray = field(repr=False)

    @property
    def projected_relative(self) -> np.ndarray:
        """``|eps_t . v| / |eps_0 . v|`` along the tracked eigenvector."""
        p0 = self.projections[0]
        if p0 == 0:
            return np.full_like(self.projections, math.nan)
        return np.abs(self.projections / p0)

    def closed_form(self) -> np.ndarray:
        t = np.arange(self.steps + 1)
        return np.abs(1 - self.learning_rate * self.eigenvalue ** 2) ** t


@dataclass(frozen=True)
class LabeledDataset:
    points: tuple
    labels: np.ndarray

    def __post_init__(self):
        if len(self.points) != len(self.labels):
            raise ValueError(f"{len(self.points)} points but {len(self.labels)} labels")
        if len(set(self.points)) != len(self.points):
            raise ValueError("dataset points must be pairwise distinct")

    @classmethod
    def from_function(cls, points: Sequence[DataPoint], fn: Callable) -> "LabeledDataset":
        return cls(tuple(points), np.array([fn(x) for x in points], dtype=float))


class GramAssemblyError(KerrLearnError):
    def __init__(self, i, j, cause):
        super().__init__(f"kernel failed on pair ({i}, {j}): {cause}")
        self.i, self.j = i, j


def assemble_gram(points: Sequence[DataPoint], kernel: Callable, source: Optional[str] = None) -> GramMatrix:
    """Evaluate ``kernel`` on the upper triangle and mirror it."""
    n = len(points)
    if n == 0:
        raise ValueError("cannot assemble a Gram matrix over no points")
    k = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            try:
                k[i, j] = k[j, i] = kernel(points[i], points[j])
            except Exception as exc:
                raise GramAssemblyError(i, j, exc) from exc
    if source is None:
        source = getattr(kernel, "describe", lambda: getattr(kernel, "__name__", repr(kernel)))()
    return GramMatrix(values=k, source=source)


def ntk_from_gram(g: GramMatrix) -> NtkMatrix:
    """NTK of the linear model: the matrix square ``K @ K``."""
    k = g.values
    h = k @ k
    return NtkMatrix(values=0.5 * (h + h.T))


def spectrum_stats(ntk: NtkMatrix, threshold: float = DEFAULT_THRESHOLD) -> SpectrumStats:
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    w = np.linalg.eigvalsh(ntk.values)[::-1]
    return SpectrumStats(
        eigenvalues=w,
        effective_dimension=int(np.sum(w > threshold)),
        max_eigenvalue=float(w[0]),
        threshold=threshold,
    )


def gram_spectrum_stats(g: GramMatrix, threshold: float = DEFAULT_THRESHOLD) -> SpectrumStats:
    """NTK spectrum via squared Gram eigenvalues (better conditioned than eig(K @ K))."""
    w = np.sort(np.linalg.eigvalsh(g.values) ** 2)[::-1]
    return SpectrumStats(w, int(np.sum(w > threshold)), float(w[0]), threshold)


def check_learning_rate(g: GramMatrix, eta: float) -> bool:
    lam_max = float(np.max(np.abs(np.linalg.eigvalsh(g.values))))
    stable = eta * lam_max ** 2 < 2
    if not stable:
        warnings.warn(f"eta * lambda_max(NTK) = {eta * lam_max ** 2:.3g} >= 2", UnstableLearningRate, stacklevel=3)
    return stable


def train_gradient_descent(dataset: LabeledDataset, g: GramMatrix, eta: float, steps: int,
                           projection: int = 0, theta0: Optional[np.ndarray] = None) -> TrainRecord:
    """Run ``steps`` full-batch updates ``theta -= eta K (K theta - y)``.

    ``projection`` indexes the Gram eigenvectors in descending order of
    eigenvalue (0 is the top direction).
    """
    if eta < 0:
        raise ValueError("learning rate must be non-negative")
    if g.n != len(dataset.labels):
        raise ValueError(f"Gram is {g.n}x{g.n} but dataset has {len(dataset.labels)} labels")
    check_learning_rate(g, eta)
    k = g.values
    y = dataset.labels
    w, v = g.eigh()
    direction = v[:, projection]
    theta = np.zeros(g.n) if theta0 is None else np.array(theta0, dtype=float)
    norms = np.empty(steps + 1)
    proj = np.empty(steps + 1)
    for t in range(steps + 1):
        eps = k @ theta - y
        norms[t] = np.linalg.norm(eps)
        proj[t] = direction @ eps
        if t < steps:
            theta = theta - eta * (k @ eps)
    return TrainRecord(eta, steps, norms, proj, float(w[projection]), theta)


def gradient_descent_theta(k: np.ndarray, y: np.ndarray, eta: float, steps: Optional[int],
                           rcond: float = math.sqrt(DEFAULT_THRESHOLD)) -> np.ndarray:
    """Parameters after ``steps`` updates from zero, in closed form.

    ``theta_t = sum_i (1 - (1 - eta lam_i^2)^t) / lam_i * v_i v_i^T y``.
    ``steps=None`` returns the t -> infinity limit, the minimum-norm
    interpolant, restricted to eigenvalues above ``rcond * lam_max``.
    """
    w, v = np.linalg.eigh(k)
    coeff = v.T @ y
    keep = np.abs(w) > rcond * np.max(np.abs(w))
    gain = np.zeros_like(w)
    if steps is None:
        gain[keep] = 1 / w[keep]
    else:
        decay = eta * w ** 2
        small = (w != 0) & (decay < 1)
        large = decay >= 1
        gain[small] = -np.expm1(steps * np.log1p(-decay[small])) / w[small]
        gain[large] = (1 - (1 - decay[large]) ** steps) / w[large]
    return v @ (gain * coeff)


def generalization_experiment(all_points: Sequence[DataPoint], g_full: GramMatrix, target: Callable,
                              eta: float = 1e-3, steps: Optional[int] = 500,
                              self_test: bool = False) -> float:
    """Train on the first half, return ``1/(2|B|) sum_B eps^2`` on the second half.

    ``self_test`` evaluates on the training half instead (diagnostic).
    """
    n = len(all_points)
    if n < 4 or n % 2:
        raise ValueError(f"need an even number of at least 4 points, got {n}")
    if g_full.n != n:
        raise ValueError("Gram size does not match the point list")
    y = np.array([target(x) for x in all_points], dtype=float)
    half = n // 2
    train = np.arange(half)
    test = train if self_test else np.arange(half, n)
    theta = gradient_descent_theta(g_full.submatrix(train, train), y[train], eta, steps)
    z = g_full.submatrix(test, train) @ theta
    return float(0.5 * np.mean((z - y[test]) ** 2))


def target_function(x: DataPoint, ranges: DataRanges) -> float:
    """``sum_i sin^2(u_i^2)`` with each coordinate rescaled to ``u_i = x_i / range_i``."""
    u = x.as_array() / ranges.as_array()
    return float(np.sum(np.sin(u ** 2) ** 2))


def zero_target(x: DataPoint) -> float:
    return 0.0


def steps_to_reach(eigenvalue: float, eta: float, level: float = 0.5) -> float:
    """Smallest t with ``|1 - eta lam^2|^t <= level`` (inf if it never gets there)."""
    rate = abs(1 - eta * eigenvalue ** 2)
    if rate == 0:
        return 1
    if rate >= 1:
        return math.inf
    return math.ceil(math.log(level) / math.log(rate))
