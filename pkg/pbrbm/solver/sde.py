"""Euler-Maruyama steps for reflected diffusions, and their random streams.

The reflecting process is realised numerically by one of three boundary
schemes applied after each unconstrained step:

- projection:    x <- pi(x)
- reflection:    x <- 2 pi(x) - x
- penalization:  x <- x - lam (x - pi(x))

where pi is the nearest-point projection onto the domain boundary.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import ReflectionFailure

logger = logging.getLogger(__name__)

PROJECTION = "projection"
REFLECTION = "reflection"
PENALIZATION = "penalization"

DEFAULT_BOUNDARY_CAP = 8

# counter words of the Philox stream, one per consumer of randomness
SHUFFLE = 1
NOISE = 2
ADD = 3
REMOVE = 4
INIT = 5


@dataclass(frozen=True)
class ReflectionScheme:
    variant: str = REFLECTION
    lam: float = 1.0

    def __post_init__(self):
        if self.variant not in (PROJECTION, REFLECTION, PENALIZATION):
            raise ValueError(f"unknown reflection scheme {self.variant!r}")
        if self.variant == PENALIZATION and not 0 < self.lam <= 1:
            raise ValueError(f"penalization weight must lie in (0, 1], got {self.lam}")

    @classmethod
    def penalization(cls, lam):
        return cls(PENALIZATION, float(lam))

    @property
    def keeps_inside(self):
        """Penalization may leave points in an exterior collar; the other schemes never do."""
        return self.variant != PENALIZATION


@dataclass(frozen=True)
class RngSpec:
    """
    Counter-based random streams.

    A generator is keyed by ``(master_seed, stream_id)`` and positioned by the
    counter words ``(step, purpose)``, so the draws of a given step never
    depend on how many draws other steps or workers made.
    """
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2 ** 64 or not 0 <= self.stream_id < 2 ** 64:
            raise ValueError("seed and stream must fit in 64 unsigned bits")

    def generator(self, step, purpose):
        key = (self.master_seed << 64) | self.stream_id
        counter = (int(purpose) << 192) | (int(step) << 128)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def gaussians(self, step, shape):
        return self.generator(step, NOISE).standard_normal(shape)

    def substream(self, stream_id):
        return RngSpec(self.master_seed, stream_id)


def em_step(x, drift, tau, gauss):
    """One unconstrained Euler-Maruyama step of dX = drift dt + sqrt(2) dB."""
    return x + drift * tau + np.sqrt(2.0 * tau) * gauss


def apply_boundary(x, domain, scheme, cap=DEFAULT_BOUNDARY_CAP):
    """
    Bring exterior points back according to ``scheme``.

    Reflection is repeated (at most ``cap`` times) while a point is still
    outside, which only happens for overshoots across a whole shell.
    Projection lands on the boundary in one application. Penalization is
    applied once and may leave the point outside.
    """
    x = np.array(x, dtype=float)
    outside = ~domain.contains(x)
    if not outside.any():
        return x

    if scheme.variant == PROJECTION:
        x[outside] = domain.project_to_boundary(x[outside])
        return x
    if scheme.variant == PENALIZATION:
        y = x[outside]
        x[outside] = y - scheme.lam * (y - domain.project_to_boundary(y))
        return x

    for _ in range(cap):
        y = x[outside]
        x[outside] = 2.0 * domain.project_to_boundary(y) - y
        outside = ~domain.contains(x)
        if not outside.any():
            return x
    raise ReflectionFailure(
        f"{outside.sum()} point(s) still outside {domain} after {cap} reflections; "
        "the time step is too large for this geometry"
    )
