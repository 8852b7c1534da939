"""Truncated single-mode Fock space.

Matrices are indexed (bra, ket) and the basis is ordered by occupation
number, ``|0>, |1>, ..., |dim-1>``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonConvergence


@dataclass(frozen=True)
class FockSpace:
    """Fock space keeping the levels ``0 .. dim-1``."""

    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"FockSpace needs an integer dim >= 2, got {self.dim!r}")

    def basis_state(self, n: int) -> np.ndarray:
        if not 0 <= n < self.dim:
            raise ValueError(f"level {n} outside truncated space of dim {self.dim}")
        psi = np.zeros(self.dim, dtype=complex)
        psi[n] = 1.0
        return psi

    def vacuum(self) -> np.ndarray:
        return self.basis_state(0)


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and the matching unitary (columns are eigenvectors)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def propagator(self, time: float) -> np.ndarray:
        """Return ``exp(-i H time)``."""
        v = self.eigenvectors
        return (v * np.exp(-1j * self.eigenvalues * time)) @ v.conj().T

    def evolve(self, psi: np.ndarray, time: float) -> np.ndarray:
        """Apply ``exp(-i H time)`` to a vector without forming the propagator."""
        v = self.eigenvectors
        return v @ (np.exp(-1j * self.eigenvalues * time) * (v.conj().T @ psi))


def annihilation(space: FockSpace) -> np.ndarray:
    """Lowering operator b with ``b[n-1, n] = sqrt(n)``."""
    return np.diag(np.sqrt(np.arange(1, space.dim)), k=1).astype(complex)


def creation(space: FockSpace) -> np.ndarray:
    return annihilation(space).conj().T


def number_operator(space: FockSpace) -> np.ndarray:
    return np.diag(np.arange(space.dim)).astype(complex)


def kerr_operator(space: FockSpace) -> np.ndarray:
    """``b^dag b^dag b b``, diagonal with entries n(n-1)."""
    n = np.arange(space.dim)
    return np.diag(n * (n - 1)).astype(complex)


def eigendecompose(op: np.ndarray) -> EigenSystem:
    """Diagonalise a Hermitian matrix (LAPACK ``heevr`` via scipy)."""
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {op.shape}")
    if not np.all(np.isfinite(op)):
        raise NonConvergence("operator contains non-finite entries")
    try:
        w, v = scipy.linalg.eigh(op, driver="evr")
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc
    return EigenSystem(eigenvalues=w, eigenvectors=v)


def inner_product(a: np.ndarray, b: np.ndarray) -> complex:
    """``<a|b>``, conjugate-linear in the first argument."""
    if np.shape(a) != np.shape(b):
        raise DimensionMismatch(f"state shapes differ: {np.shape(a)} vs {np.shape(b)}")
    return complex(np.vdot(a, b))


def normalize(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("cannot normalise the zero vector")
    return psi / norm


def coherent_state(space: FockSpace, alpha: complex) -> np.ndarray:
    """Truncated coherent state, amplitudes ``e^{-|a|^2/2} a^n / sqrt(n!)``.

    Built by recursion to avoid factorial overflow; not renormalised, so the
    norm deficit equals the population lost above the cutoff.
    """
    amps = np.empty(space.dim, dtype=complex)
    amps[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, space.dim):
        amps[n] = amps[n - 1] * alpha / np.sqrt(n)
    return amps
