"""Polar evaluation of a box's inscribed ellipse and its discrete radial profile."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxes import OrientedBox
from .errors import DiscretizationError


def radius_at(box: OrientedBox, theta):
    """Polar radius of the box's inscribed ellipse at angle theta, about the center.

    rho(theta) = r1*r2 / sqrt(r2^2 cos^2(theta - phi) + r1^2 sin^2(theta - phi)),
    so the point (rho cos theta, rho sin theta) relative to the center lies on
    the ellipse with semi-axes (r1, r2) rotated by phi.  Accepts a scalar or
    an array of angles.
    """
    t = np.asarray(theta, dtype=np.float64) - box.phi
    c = np.cos(t)
    s = np.sin(t)
    rho = box.r1 * box.r2 / np.sqrt((box.r2 * c) ** 2 + (box.r1 * s) ** 2)
    return float(rho) if rho.ndim == 0 else rho


def grid_angles(n: int) -> np.ndarray:
    """The shared discretization grid theta_i = 2*pi*i/n for i in [0, n)."""
    if n < 4:
        raise DiscretizationError(f"need at least 4 grid angles, got n={n}")
    return np.arange(n) * (2.0 * math.pi / n)


@dataclass(frozen=True)
class RadialProfile:
    """Inscribed-ellipse radii sampled on the even angle grid theta_i = 2*pi*i/n."""

    n: int
    rho: np.ndarray

    def __post_init__(self):
        if self.n < 4:
            raise DiscretizationError(f"need at least 4 grid angles, got n={self.n}")
        arr = np.array(self.rho, dtype=np.float64)
        if arr.shape != (self.n,):
            raise DiscretizationError(
                f"profile shape {arr.shape} does not match n={self.n}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "rho", arr)

    @property
    def theta(self) -> np.ndarray:
        return grid_angles(self.n)


def discretize(box: OrientedBox, n: int) -> RadialProfile:
    """Sample the inscribed ellipse's polar radius at each of the n grid angles."""
    return RadialProfile(n, radius_at(box, grid_angles(n)))
