"""Analytic K_err = 0 kernel and its first-order Kerr correction.

For the vacuum initial state the Kerr-free dynamics keeps the mode in a
coherent state.  In the rotating frame the amplitude obeys
``d alpha/dt = -i (Delta alpha + Omega)``, so

    alpha(t) = Omega (exp(-i Delta t) - 1) / Delta,

and the lab-frame amplitude is ``beta = exp(-i w_L T) alpha(T)``.  The
zeroth-order kernel is the coherent-state overlap ``exp(-|beta - beta'|^2)``.

First order in K_err: expanding both time-ordered exponentials around the
Kerr-free propagator and keeping O(K) terms of ``|<psi'|psi>|^2`` gives

    K1 = -2 K_err K0 Im[I(x -> x') + I(x' -> x)],
    I(x -> x') = int_0^T conj(gamma(t))^2 alpha(t)^2 dt,

where ``alpha(t)`` is the forward trajectory of x and ``gamma(t)`` is the
coherent amplitude of x' pulled back into x's rotating frame
(``gamma(T) = exp(i w_L T) beta'``) and propagated backwards under x's
Kerr-free Hamiltonian.  The global phases of the coherent states cancel
because the integrand enters as ``<gamma|b^dag^2 b^2|alpha> / <gamma|alpha>``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import roots_legendre

from .dynamics import DataPoint, FidelityKernel, PhysicalParams, detuning
from .errors import QuadratureUnderResolved

_SERIES_LIMIT = 1e-10
# below this |Delta T| the exponential expansion cancels badly; integrate numerically
_CLOSED_FORM_MIN_PHASE = 1.0
_SMALL_PHASE_NODES = 64


@dataclass(frozen=True)
class CoherentAmplitude:
    alpha: complex
    beta: complex


@dataclass(frozen=True)
class PerturbativeKernelValue:
    zeroth: float
    first_correction: float
    kerr: float

    @property
    def value(self) -> float:
        return min(1.0, max(0.0, self.zeroth + self.first_correction))


def _forward(omega, delta, t):
    """Rotating-frame coherent amplitude at times ``t`` starting from vacuum."""
    t = np.asarray(t, dtype=float)
    if abs(delta) * np.max(t, initial=0.0) < _SERIES_LIMIT:
        return -1j * omega * t * (1 - 0.5j * delta * t)
    return omega * np.expm1(-1j * delta * t) / delta


def _backward(gamma_end, omega, delta, s):
    """Amplitude a time ``s`` before reaching ``gamma_end``."""
    s = np.asarray(s, dtype=float)
    if abs(delta) * np.max(s, initial=0.0) < _SERIES_LIMIT:
        return gamma_end * np.exp(1j * delta * s) + 1j * omega * s * (1 + 0.5j * delta * s)
    return gamma_end * np.exp(1j * delta * s) + omega * np.expm1(1j * delta * s) / delta


def coherent_amplitude(x: DataPoint, p: PhysicalParams) -> CoherentAmplitude:
    alpha = complex(_forward(x.omega_drive, detuning(x, p), x.time))
    beta = complex(np.exp(-1j * x.omega_laser * x.time) * alpha)
    return CoherentAmplitude(alpha=alpha, beta=beta)


def gaussian_kernel_zeroth(x: DataPoint, x2: DataPoint, p: PhysicalParams) -> float:
    """Exact K_err = 0 kernel ``exp(-|beta - beta'|^2)`` (vacuum initial state)."""
    if x == x2:
        return 1.0
    b1 = coherent_amplitude(x, p).beta
    b2 = coherent_amplitude(x2, p).beta
    return math.exp(-abs(b1 - b2) ** 2)


def _pullback(x: DataPoint, x2: DataPoint, p: PhysicalParams) -> complex:
    """Amplitude of x2's Kerr-free state seen in x's rotating frame at time T."""
    return complex(np.exp(1j * x.omega_laser * x.time) * coherent_amplitude(x2, p).beta)


def _integrand(x, x2, p, t):
    omega, delta = x.omega_drive, detuning(x, p)
    alpha = _forward(omega, delta, t)
    gamma = _backward(_pullback(x, x2, p), omega, delta, x.time - t)
    return np.conj(gamma) ** 2 * alpha ** 2


def _overlap_integral_quadrature(x, x2, p, nodes: int) -> complex:
    if x.time == 0:
        return 0j
    u, w = roots_legendre(nodes)
    t = 0.5 * x.time * (u + 1)
    return complex(0.5 * x.time * np.sum(w * _integrand(x, x2, p, t)))


def _exp_integral(freq: float, T: float) -> complex:
    """``int_0^T exp(i freq t) dt``."""
    theta = freq * T
    if abs(theta) < 1e-8:
        return T * (1 + 0.5j * theta - theta ** 2 / 6)
    return T * np.expm1(1j * theta) / (1j * theta)


def _overlap_integral_closed(x, x2, p) -> complex:
    """Same integral, expanded as a sum of exp(i m Delta t), m = -2..2."""
    omega, delta, T = x.omega_drive, detuning(x, p), x.time
    if T == 0:
        return 0j
    if abs(delta) * T < _CLOSED_FORM_MIN_PHASE:
        return _overlap_integral_quadrature(x, x2, p, _SMALL_PHASE_NODES)
    a = omega / delta
    q = (np.conj(_pullback(x, x2, p)) + a) * np.exp(-1j * delta * T)
    # coefficients of w^m, w = exp(i Delta t); index k <-> m = k - 2
    alpha_sq = np.array([a * a, -2 * a * a, a * a, 0, 0], dtype=complex)
    gamma_sq = np.array([0, 0, a * a, -2 * a * q, q * q], dtype=complex)
    total = 0j
    for i in range(5):
        for j in range(5):
            m = i + j - 4
            c = alpha_sq[i] * gamma_sq[j]
            if c != 0 and -2 <= m <= 2:
                total += c * _exp_integral(m * delta, T)
    return complex(total)


def first_order_correction(x: DataPoint, x2: DataPoint, p: PhysicalParams,
                           quad_points: Optional[int] = None) -> float:
    if p.kerr == 0 or x == x2:
        return 0.0
    k0 = gaussian_kernel_zeroth(x, x2, p)
    if quad_points is None:
        i12 = _overlap_integral_closed(x, x2, p)
        i21 = _overlap_integral_closed(x2, x, p)
        return -2 * p.kerr * k0 * (i12.imag + i21.imag)

    if quad_points < 16:
        raise ValueError(f"quad_points must be >= 16, got {quad_points}")

    def correction(n):
        i12 = _overlap_integral_quadrature(x, x2, p, n)
        i21 = _overlap_integral_quadrature(x2, x, p, n)
        return -2 * p.kerr * k0 * (i12.imag + i21.imag)

    coarse, fine = correction(quad_points), correction(2 * quad_points)
    if abs(fine - coarse) > 1e-8 * abs(fine) + 1e-13:
        raise QuadratureUnderResolved(
            f"{quad_points} Gauss-Legendre nodes give {coarse!r}, "
            f"{2 * quad_points} give {fine!r}"
        )
    return coarse


def perturbative_kernel(x: DataPoint, x2: DataPoint, p: PhysicalParams,
                        quad_points: Optional[int] = None) -> PerturbativeKernelValue:
    """Kernel to first order in K_err.

    With ``quad_points=None`` the time integrals use the closed form;
    otherwise Gauss-Legendre quadrature with that many nodes, checked
    against twice as many.
    """
    return PerturbativeKernelValue(
        zeroth=gaussian_kernel_zeroth(x, x2, p),
        first_correction=first_order_correction(x, x2, p, quad_points),
        kerr=p.kerr,
    )


@dataclass(frozen=True)
class ErrorRecord:
    index_i: int
    index_j: int
    k_exact: float
    k_pert: float
    rel_error: float


@dataclass
class RelativeErrorReport:
    records: list
    excluded: list
    kerr: float

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.rel_error for r in self.records])

    def summary(self) -> dict:
        e = self.errors
        if e.size == 0:
            stats = dict(min=math.nan, median=math.nan, max=math.nan)
        else:
            stats = dict(min=float(e.min()), median=float(np.median(e)), max=float(e.max()))
        return dict(kerr=self.kerr, count=int(e.size), excluded=len(self.excluded), **stats)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index_i", "index_j", "k_exact", "k_pert", "rel_error"])
        for r in self.records:
            writer.writerow([r.index_i, r.index_j, repr(r.k_exact), repr(r.k_pert), repr(r.rel_error)])
        return buf.getvalue()


def relative_error_report(dataset: Sequence[DataPoint], p: PhysicalParams,
                          quad_points: Optional[int] = None, min_exact: float = 1e-10,
                          include_diagonal: bool = True,
                          leakage_tol: float = 1e-6) -> RelativeErrorReport:
    """``|K_pert - K_exact| / K_exact`` over all unordered pairs (i <= j).

    Pairs whose exact kernel is below ``min_exact`` are left out of the
    statistics and listed in ``excluded``.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    exact = FidelityKernel(p, leakage_tol=leakage_tol)
    records, excluded = [], []
    n = len(dataset)
    for i in range(n):
        for j in range(i if include_diagonal else i + 1, n):
            ke = exact(dataset[i], dataset[j])
            kp = perturbative_kernel(dataset[i], dataset[j], p, quad_points).value
            if ke < min_exact:
                excluded.append((i, j, ke))
                continue
            records.append(ErrorRecord(i, j, ke, kp, abs(kp - ke) / ke))
    return RelativeErrorReport(records=records, excluded=excluded, kerr=p.kerr)
