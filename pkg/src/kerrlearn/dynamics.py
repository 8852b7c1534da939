"""Driven Kerr oscillator: Hamiltonian, evolution and the fidelity kernel.

Units are fixed throughout the package: angular frequencies in rad/us,
times in us, hbar = 1.  ``MHZ`` and ``GHZ`` convert a cyclic frequency to
these units, e.g. ``300 * MHZ`` is 2*pi*300 MHz.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import fock
from .errors import DimensionMismatch, TruncationWarning
from .fock import EigenSystem, FockSpace

MHZ = 2 * math.pi
GHZ = 2 * math.pi * 1e3

DEFAULT_DIM = 100
DEFAULT_LEAKAGE_TOL = 1e-6


@dataclass(frozen=True)
class DataPoint:
    """Encoded input x = (drive amplitude, drive frequency, evolution time).

    ``omega_drive`` and ``omega_laser`` are in rad/us, ``time`` in us.
    """

    omega_drive: float
    omega_laser: float
    time: float

    def __post_init__(self):
        for name in ("omega_drive", "omega_laser", "time"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"DataPoint.{name} must be finite and >= 0, got {value!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.omega_drive, self.omega_laser, self.time])

    @classmethod
    def from_array(cls, values) -> "DataPoint":
        a, b, c = (float(v) for v in values)
        return cls(a, b, c)


@dataclass(frozen=True)
class PhysicalParams:
    """Fixed device constants: mode frequency and Kerr coefficient (rad/us)."""

    omega_mode: float = 10 * GHZ
    kerr: float = 0.0
    space: FockSpace = field(default_factory=lambda: FockSpace(DEFAULT_DIM))

    def __post_init__(self):
        if not self.omega_mode > 0:
            raise ValueError(f"omega_mode must be > 0, got {self.omega_mode!r}")
        if not self.kerr >= 0:
            raise ValueError(f"kerr must be >= 0, got {self.kerr!r}")

    @property
    def dim(self) -> int:
        return self.space.dim

    def with_kerr(self, kerr: float) -> "PhysicalParams":
        return replace(self, kerr=float(kerr))

    def with_dim(self, dim: int) -> "PhysicalParams":
        return replace(self, space=FockSpace(dim))


@dataclass(frozen=True)
class EvolutionResult:
    state: np.ndarray
    top_leakage: float


def detuning(x: DataPoint, p: PhysicalParams) -> float:
    return p.omega_mode - x.omega_laser


def rotating_hamiltonian(x: DataPoint, p: PhysicalParams) -> np.ndarray:
    """Hamiltonian in the frame rotating at the drive frequency.

    ``H = (w_m - w_L) b^dag b + Omega (b + b^dag) - K b^dag b^dag b b``.
    The zero-point constant is dropped since it only adds a global phase.
    """
    space = p.space
    b = fock.annihilation(space)
    h = detuning(x, p) * fock.number_operator(space)
    h += x.omega_drive * (b + b.conj().T)
    h -= p.kerr * fock.kerr_operator(space)
    return h


def top_leakage(state: np.ndarray) -> float:
    """Population in the highest ceil(dim/10) Fock levels."""
    k = math.ceil(len(state) / 10)
    return float(min(1.0, np.sum(np.abs(state[-k:]) ** 2)))


def _initial_state(space: FockSpace, initial) -> np.ndarray:
    if initial is None:
        return space.vacuum()
    if isinstance(initial, (int, np.integer)):
        return space.basis_state(int(initial))
    psi = np.asarray(initial, dtype=complex)
    if psi.shape != (space.dim,):
        raise DimensionMismatch(f"initial state has shape {psi.shape}, space dim is {space.dim}")
    return psi


def evolve(x: DataPoint, p: PhysicalParams, initial=None, *,
           lab_frame: bool = True, eigensystem: Optional[EigenSystem] = None) -> EvolutionResult:
    """Evolve ``initial`` (default vacuum, or a Fock level given as an int).

    Returns ``exp(-i w_L T n) exp(-i H_rot T) |initial>``; the first factor
    moves the state back to the lab frame so that overlaps between points
    with different drive frequencies are meaningful.
    """
    psi = _initial_state(p.space, initial)
    if x.time == 0:
        out = psi.copy()
    else:
        es = eigensystem if eigensystem is not None else fock.eigendecompose(rotating_hamiltonian(x, p))
        out = es.evolve(psi, x.time)
        if lab_frame:
            out = np.exp(-1j * x.omega_laser * x.time * np.arange(p.dim)) * out
    return EvolutionResult(state=out, top_leakage=top_leakage(out))


def overlap_kernel(a: np.ndarray, b: np.ndarray) -> float:
    """``|<b|a>|^2`` clamped to [0, 1]; rejects excursions beyond rounding."""
    value = abs(fock.inner_product(b, a)) ** 2
    if not -1e-9 <= value <= 1 + 1e-9:
        raise AssertionError(f"kernel value {value!r} outside [0, 1]; states not normalised")
    return min(1.0, max(0.0, value))


def _warn_leakage(results, leakage_tol):
    worst = max(r.top_leakage for r in results)
    if worst > leakage_tol:
        warnings.warn(
            f"top-level population {worst:.3g} exceeds leakage_tol={leakage_tol:g}; "
            "increase the Fock dimension",
            TruncationWarning,
            stacklevel=3,
        )


def fidelity_kernel(x: DataPoint, x2: DataPoint, p: PhysicalParams, initial=None,
                    leakage_tol: float = DEFAULT_LEAKAGE_TOL) -> float:
    """Squared overlap of the two evolved states."""
    if x == x2:
        return 1.0
    ra = evolve(x, p, initial)
    rb = evolve(x2, p, initial)
    _warn_leakage((ra, rb), leakage_tol)
    return overlap_kernel(ra.state, rb.state)


def qubit_limit_kernel(x: DataPoint, x2: DataPoint, p: PhysicalParams) -> float:
    """Fidelity kernel with the mode truncated to its two lowest levels.

    Meant for K_err >> Omega, where the Kerr shift pushes |2> far off resonance.
    """
    return fidelity_kernel(x, x2, p.with_dim(2), leakage_tol=math.inf)


class FidelityKernel:
    """Callable fidelity kernel that evolves each distinct point only once.

    The cache is read-through: results are identical with or without it.
    """

    def __init__(self, params: PhysicalParams, initial=None,
                 leakage_tol: float = DEFAULT_LEAKAGE_TOL, warn: bool = True):
        self.params = params
        self.initial = initial
        self.leakage_tol = leakage_tol
        self.warn = warn
        self._cache: dict[DataPoint, EvolutionResult] = {}

    def evolve(self, x: DataPoint) -> EvolutionResult:
        result = self._cache.get(x)
        if result is None:
            result = evolve(x, self.params, self.initial)
            self._cache[x] = result
            if self.warn:
                _warn_leakage((result,), self.leakage_tol)
        return result

    def __call__(self, x: DataPoint, x2: DataPoint) -> float:
        if x == x2:
            return 1.0
        return overlap_kernel(self.evolve(x).state, self.evolve(x2).state)

    def max_leakage(self) -> float:
        return max((r.top_leakage for r in self._cache.values()), default=0.0)

    def describe(self) -> str:
        p = self.params
        return f"fidelity(omega_mode={p.omega_mode!r}, kerr={p.kerr!r}, dim={p.dim})"
