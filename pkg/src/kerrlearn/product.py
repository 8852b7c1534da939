"""Kernels of several uncoupled Kerr modes started in a product state.

For ``H = H_a (x) I + I (x) H_b`` and ``|psi (x) phi>`` the overlap
factorises, so the Gram matrix is the entrywise (Hadamard) product of the
single-mode Grams.  Its spectral radius obeys
``rho(K_a o K_b) <= rho(K_a) rho(K_b)``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import fock
from .dynamics import DataPoint, FidelityKernel, PhysicalParams, rotating_hamiltonian
from .errors import DimensionMismatch, ResourceLimit
from .kernel_ml import GramMatrix, assemble_gram

ORACLE_MAX_DIM = 20
ORACLE_MAX_POINTS = 6


@dataclass(frozen=True)
class ProductKernelSpec:
    """One ``PhysicalParams`` per mode; ``input_split[k]`` lists the three
    coordinates of a flat input vector that form mode k's (Omega, w_L, T)."""

    subsystem_params: tuple
    input_split: tuple

    def __post_init__(self):
        if len(self.subsystem_params) < 2:
            raise ValueError("a product kernel needs at least two subsystems")
        if len(self.input_split) != len(self.subsystem_params):
            raise ValueError("input_split must have one entry per subsystem")
        if any(len(idx) != 3 for idx in self.input_split):
            raise ValueError("each subsystem takes exactly three coordinates")
        flat = sorted(i for idx in self.input_split for i in idx)
        if flat != list(range(len(flat))):
            raise ValueError(f"input_split must cover coordinates 0..{len(flat) - 1} exactly once")

    @classmethod
    def consecutive(cls, params: Sequence[PhysicalParams]) -> "ProductKernelSpec":
        split = tuple(tuple(range(3 * k, 3 * k + 3)) for k in range(len(params)))
        return cls(tuple(params), split)

    @property
    def n_inputs(self) -> int:
        return 3 * len(self.subsystem_params)

    def split(self, vector) -> tuple:
        """Map a flat input vector to one DataPoint per subsystem."""
        v = np.asarray(vector, dtype=float)
        if v.shape != (self.n_inputs,):
            raise DimensionMismatch(f"expected {self.n_inputs} coordinates, got shape {v.shape}")
        return tuple(DataPoint.from_array(v[list(idx)]) for idx in self.input_split)


def hadamard_kernel(g_list: Sequence[GramMatrix]) -> GramMatrix:
    if not g_list:
        raise ValueError("need at least one factor")
    shape = g_list[0].values.shape
    if any(g.values.shape != shape for g in g_list):
        raise DimensionMismatch(f"factor shapes differ: {[g.values.shape for g in g_list]}")
    out = np.ones(shape)
    for g in g_list:
        out = out * g.values
    return GramMatrix(values=out, source=" o ".join(g.source or "?" for g in g_list))


def spectral_radius(k: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(k))))


@dataclass(frozen=True)
class BoundCheck:
    rho_product: float
    rho_factors: tuple
    bound_holds: bool

    @property
    def margin(self) -> float:
        return float(np.prod(self.rho_factors)) - self.rho_product


def spectral_radius_bound_check(g_list: Sequence[GramMatrix], slack: float = 1e-10) -> BoundCheck:
    product = hadamard_kernel(g_list)
    rho = spectral_radius(product.values)
    factors = tuple(spectral_radius(g.values) for g in g_list)
    return BoundCheck(rho, factors, bool(rho <= np.prod(factors) + slack))


def bound_checks_csv(checks: Sequence[BoundCheck]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    n_factors = max(len(c.rho_factors) for c in checks)
    writer.writerow(["rho_product", *[f"rho_factor_{k + 1}" for k in range(n_factors)], "bound_margin"])
    for c in checks:
        writer.writerow([repr(c.rho_product), *map(repr, c.rho_factors), repr(c.margin)])
    return buf.getvalue()


def product_gram(spec: ProductKernelSpec, points: Sequence[tuple]) -> GramMatrix:
    """Hadamard product of the per-subsystem fidelity Grams."""
    factors = []
    for k, params in enumerate(spec.subsystem_params):
        factors.append(assemble_gram([pt[k] for pt in points], FidelityKernel(params)))
    return hadamard_kernel(factors)


def _joint_state(spec: ProductKernelSpec, point: tuple) -> np.ndarray:
    """Evolve the vacuum of the full tensor-product space.

    Uses ``exp(-i sum_k T_k H_k)`` on the joint space, where each ``H_k``
    is embedded with identities on the other modes, followed by the joint
    lab-frame phase ``exp(-i sum_k w_Lk T_k n_k)``.
    """
    dims = [p.dim for p in spec.subsystem_params]
    total = int(np.prod(dims))
    generator = np.zeros((total, total), dtype=complex)
    lab_phase = np.zeros(total)
    for k, (p, x) in enumerate(zip(spec.subsystem_params, point)):
        left = np.eye(int(np.prod(dims[:k])))
        right = np.eye(int(np.prod(dims[k + 1:])))
        h = rotating_hamiltonian(x, p) * x.time
        generator += np.kron(np.kron(left, h), right)
        n_k = np.kron(np.kron(np.ones(left.shape[0]), np.arange(p.dim)), np.ones(right.shape[0]))
        lab_phase += x.omega_laser * x.time * n_k
    psi = np.zeros(total, dtype=complex)
    psi[0] = 1.0
    psi = fock.eigendecompose(generator).evolve(psi, 1.0)
    return np.exp(-1j * lab_phase) * psi


def product_simulation_crosscheck(spec: ProductKernelSpec, points: Sequence[tuple]) -> float:
    """Max |joint-space kernel - Hadamard product| over all pairs of ``points``.

    Each element of ``points`` is a tuple of DataPoints, one per subsystem.
    Test oracle only: capped at dim 20 per mode and 6 points.
    """
    if any(p.dim > ORACLE_MAX_DIM for p in spec.subsystem_params):
        raise ResourceLimit(f"oracle is limited to dim <= {ORACLE_MAX_DIM} per subsystem")
    if len(points) > ORACLE_MAX_POINTS:
        raise ResourceLimit(f"oracle is limited to {ORACLE_MAX_POINTS} points")
    for pt in points:
        if len(pt) != len(spec.subsystem_params):
            raise DimensionMismatch("each composite point needs one DataPoint per subsystem")
    states = [_joint_state(spec, pt) for pt in points]
    joint = np.array([[abs(np.vdot(b, a)) ** 2 for b in states] for a in states])
    return float(np.max(np.abs(joint - product_gram(spec, points).values)))
