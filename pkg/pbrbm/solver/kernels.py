"""Coulomb kernels in nondimensional units.

Psi solves -nu * Laplace(Psi) = delta in R^d, F = -grad(Psi) is the pairwise
repulsive force, and E_f is the field of the fixed free charge in the cell.
All functions act on the last axis of ``x`` and broadcast over the rest.
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .exceptions import SingularKernel
from .geometry import unit_ball_volume


@dataclass(frozen=True)
class PhysicalParams:
    """
    Physical parameters of one experiment.

    :ivar nu: (Debye length / cell size)^2.
    :ivar Q_f: total free charge located at ``x_c`` inside the cell.
    :ivar q: charge carried by one numerical particle.
    :ivar rho_inf: far-field concentration; ``None`` when Q_plus is prescribed.
    :ivar x_c: free-charge location (ignored by the 1D half-domain field).
    """
    nu: float
    Q_f: float
    q: float = 1e-4
    rho_inf: Optional[float] = None
    x_c: Tuple[float, ...] = field(default=(0.0,))

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if self.q <= 0:
            raise ValueError(f"particle charge q must be positive, got {self.q}")
        if self.rho_inf is not None and self.rho_inf < 0:
            raise ValueError(f"rho_inf must be non-negative, got {self.rho_inf}")


def _norm(x, d):
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if d >= 2 and np.any(r == 0.0):
        raise SingularKernel(f"Coulomb kernel evaluated at the origin in d={d}")
    return x, r


def coulomb_potential(d, nu, x):
    x, r = _norm(x, d)
    if d == 1:
        return -r / (2 * nu)
    if d == 2:
        return -np.log(r) / (2 * np.pi * nu)
    return 1.0 / (d * (d - 2) * unit_ball_volume(d) * nu * r ** (d - 2))


def coulomb_force(d, nu, x):
    """F(x) = -grad Psi(x); sgn(x)/(2 nu) in 1D with F(0) = 0."""
    x, r = _norm(x, d)
    if d == 1:
        return np.sign(x) / (2 * nu)
    return x / (d * unit_ball_volume(d) * nu * r[..., None] ** d)


def external_field(params, domain, x):
    """
    Field of the free charge acting on the simulated ions.

    On the 1D half domain the drive is the constant Q_f / (4 nu): the free
    charge contributes Q_f / (4 nu) after halving, and the mirrored left half
    (net charge -Q_f / 2) is folded in. In a shell it is Q_f F(x - x_c).
    """
    x = np.asarray(x, dtype=float)
    if params.Q_f == 0:
        return np.zeros_like(x)
    if not domain.is_shell:
        return np.full_like(x, params.Q_f / (4 * params.nu))
    x_c = np.asarray(params.x_c, dtype=float)
    if x_c.shape != (domain.dimension,):
        raise ValueError(f"x_c must have {domain.dimension} components, got {params.x_c}")
    if np.linalg.norm(x_c) >= domain.inner:
        raise ValueError(f"free charge at {params.x_c} is not strictly inside the cell of radius {domain.inner}")
    return params.Q_f * coulomb_force(domain.dimension, params.nu, x - x_c)
