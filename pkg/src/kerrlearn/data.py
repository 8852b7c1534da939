"""Sampling ranges and seeded dataset generation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import GHZ, MHZ, DataPoint


@dataclass(frozen=True)
class DataRanges:
    """Upper ends of the uniform sampling box (rad/us, rad/us, us)."""

    omega_drive_max: float = 300 * MHZ
    omega_laser_max: float = 10 * GHZ
    time_max: float = 0.05

    def __post_init__(self):
        if min(self.omega_drive_max, self.omega_laser_max, self.time_max) <= 0:
            raise ValueError(f"all ranges must be positive: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.omega_drive_max, self.omega_laser_max, self.time_max])


def sample_dataset(seed: int, n_points: int, ranges: DataRanges = DataRanges()) -> list[DataPoint]:
    """Draw ``n_points`` points i.i.d. uniform on ``[0, range]`` per coordinate.

    Uses numpy's PCG64 bit generator (``np.random.default_rng(seed)``); one
    ``(n_points, 3)`` draw, so a given seed always yields the same rows.
    """
    if n_points < 1:
        raise ValueError(f"n_points must be >= 1, got {n_points}")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random((n_points, 3)) * ranges.as_array()
    return [DataPoint.from_array(row) for row in u]
