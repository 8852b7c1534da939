"""Quantum kernels from a driven Kerr oscillator in a truncated Fock space."""

__version__ = "0.1.0"

from .dynamics import GHZ, MHZ, DataPoint, FidelityKernel, PhysicalParams, evolve, fidelity_kernel  # noqa: E402
from .fock import FockSpace  # noqa: E402

__all__ = ["GHZ", "MHZ", "DataPoint", "FidelityKernel", "FockSpace", "PhysicalParams", "evolve",
           "fidelity_kernel"]
