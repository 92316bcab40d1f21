"""Truncated simulation domains.

Two shapes are supported: the half interval ``(a, L)`` in one dimension and
the shell ``R <= |x| <= L`` around a spherical (d=3) or circular (d=2) cell
centered at the origin. Points are always arrays whose last axis has length
``d`` (``(N, 1)`` in 1D), and every method accepts a single point or a stack.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .exceptions import NotOnBoundary

logger = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-9

INTERVAL = "interval"
SHELL = "shell"


def unit_ball_volume(d):
    """alpha(d) = pi^(d/2) / Gamma(d/2 + 1); 2, pi, 4pi/3 for d = 1, 2, 3."""
    return np.pi ** (d / 2) / gamma(d / 2 + 1)


@dataclass(frozen=True)
class SimDomain:
    """
    The truncated region Omega_L between the membrane and the artificial wall.

    :ivar dimension: spatial dimension d (1, 2 or 3).
    :ivar kind: ``"interval"`` (d=1 only) or ``"shell"`` (d >= 2 only).
    :ivar inner: membrane position a (interval) or cell radius R (shell).
    :ivar outer: wall position / radius L.
    """
    dimension: int
    kind: str
    inner: float
    outer: float

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if self.kind == INTERVAL and self.dimension != 1:
            raise ValueError("interval domains are one-dimensional")
        if self.kind == SHELL and self.dimension < 2:
            raise ValueError("shell domains need d >= 2")
        if self.kind not in (INTERVAL, SHELL):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if not 0 < self.inner < self.outer:
            raise ValueError(f"need 0 < inner < outer, got ({self.inner}, {self.outer})")

    @classmethod
    def interval(cls, a, L):
        return cls(1, INTERVAL, float(a), float(L))

    @classmethod
    def shell(cls, d, R, L):
        return cls(int(d), SHELL, float(R), float(L))

    @property
    def is_shell(self):
        return self.kind == SHELL

    def radial(self, x):
        """Scalar coordinate used for binning: x itself in 1D, |x| in a shell."""
        x = np.asarray(x, dtype=float)
        if self.is_shell:
            return np.linalg.norm(x, axis=-1)
        return x[..., 0]

    def contains(self, x, tol=BOUNDARY_TOL):
        r = self.radial(x)
        return (r >= self.inner - tol) & (r <= self.outer + tol)

    def project_to_boundary(self, x):
        """
        Nearest boundary point for exterior points; interior points pass through.

        In a shell the projection is a radial rescaling onto whichever sphere
        was crossed. A point at the exact center has no radial direction and
        is sent along the first coordinate axis.
        """
        x = np.array(x, dtype=float)
        if not self.is_shell:
            return np.clip(x, self.inner, self.outer)

        r = np.linalg.norm(x, axis=-1, keepdims=True)
        target = np.where(r > self.outer, self.outer, np.where(r < self.inner, self.inner, r))
        outside = (r > self.outer) | (r < self.inner)
        if not outside.any():
            return x

        at_center = (r == 0.0)[..., 0]
        if at_center.any():
            logger.debug("Projecting %d point(s) from the shell center along e1", at_center.sum())
            x[at_center, 0] = 1.0
            r = np.where(r == 0.0, 1.0, r)
        return np.where(outside, x * (target / r), x)

    def outward_normal(self, x, tol=BOUNDARY_TOL):
        """Unit exterior normal of Omega_L at boundary points (into the cell on the inner wall)."""
        x = np.asarray(x, dtype=float)
        r = self.radial(x)
        on_inner = np.abs(r - self.inner) <= tol
        on_outer = np.abs(r - self.outer) <= tol
        if not np.all(on_inner | on_outer):
            raise NotOnBoundary(f"points not on the boundary of {self}")
        sign = np.where(on_outer, 1.0, -1.0)[..., None]
        if not self.is_shell:
            return sign * np.ones_like(x)
        return sign * x / r[..., None]

    def volume(self):
        if not self.is_shell:
            return self.outer - self.inner
        return unit_ball_volume(self.dimension) * (self.outer ** self.dimension - self.inner ** self.dimension)

    def bin_measure(self, edges):
        """Length of each 1D bin, or volume of each radial shell between consecutive edges."""
        edges = np.asarray(edges, dtype=float)
        if not self.is_shell:
            return np.diff(edges)
        return unit_ball_volume(self.dimension) * np.diff(edges ** self.dimension)

    def default_edges(self, n_bins):
        return np.linspace(self.inner, self.outer, n_bins + 1)
