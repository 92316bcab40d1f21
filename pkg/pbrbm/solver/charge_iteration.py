"""
Fixed-point iteration for the total positive charge when rho_inf is prescribed.

Each round simulates the ensemble for T_c, measures the bulk product
rho_+ rho_- in a half ball at the artificial wall, and adds or removes equal
numbers of particles of both species until the product matches rho_inf^2.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from . import rbm, sde
from .geometry import unit_ball_volume
from .observables import bulk_density

logger = logging.getLogger(__name__)

TRAILING_FRACTION = 0.25


@dataclass
class IterationRecord:
    iteration: int
    Q_plus: float
    bulk_rho_plus: float
    bulk_rho_minus: float
    err: float
    delta_N: int
    floor_hit: bool = False

    @property
    def product(self):
        return self.bulk_rho_plus * self.bulk_rho_minus

    def as_row(self):
        return (self.iteration, self.Q_plus, self.bulk_rho_plus, self.bulk_rho_minus, self.err,
                self.delta_N, int(self.floor_hit))


@dataclass
class IterationState:
    Q_plus: float
    err: float = math.inf
    iteration: int = 0
    history: List[IterationRecord] = field(default_factory=list)
    converged: bool = False
    floor_hit: bool = False
    last_frames: list = field(default_factory=list, repr=False)


def signed_error(rho_plus, rho_minus, rho_inf):
    """Err = sign(I) sqrt(|I|) with I = rho_+ rho_- - rho_inf^2."""
    imbalance = rho_plus * rho_minus - rho_inf ** 2
    return math.copysign(math.sqrt(abs(imbalance)), imbalance)


def charge_increment(err, d, L):
    """Delta Q = alpha(d) L^d / 2 |Err|."""
    return unit_ball_volume(d) * L ** d / 2 * abs(err)


def particle_increment(delta_Q, q):
    return int(math.floor(delta_Q / q + 1e-9))


def default_bulk_point(domain):
    x_bar = np.zeros(domain.dimension)
    x_bar[0] = domain.outer
    return x_bar


def measure_bulk(frames, x_bar, h, domain):
    return (bulk_density(frames, x_bar, h, 1, domain), bulk_density(frames, x_bar, h, -1, domain))


def iterate_q_plus(params, domain, scheme, tau, T_c, q, h, epsilon, max_iters, rng, init,
                   Q_plus=1.0, x_bar=None, p=2, cap=sde.DEFAULT_BOUNDARY_CAP):
    """
    Adjust Q_plus until the bulk product at ``x_bar`` equals ``rho_inf^2``.

    Returns the final :class:`IterationState` and ensemble. Running out of
    ``max_iters`` returns ``converged=False`` rather than raising.
    """
    if params.rho_inf is None or params.rho_inf <= 0:
        raise ValueError("charge iteration needs a positive rho_inf")
    if epsilon <= 0 or Q_plus <= 0:
        raise ValueError("epsilon and the initial Q_plus must be positive")
    if p != 2:
        raise ValueError("charge iteration keeps species counts equal and needs p = 2")
    x_bar = default_bulk_point(domain) if x_bar is None else np.atleast_1d(np.asarray(x_bar, dtype=float))

    n_steps = max(1, int(round(T_c / tau)))
    window = max(1, int(math.ceil(TRAILING_FRACTION * n_steps)))
    frame_steps = rbm.trailing_frames(n_steps, window)

    Q_minus = Q_plus + rbm.net_negative_charge(params.Q_f, domain)
    ensemble = rbm.build_ensemble(domain, Q_plus, Q_minus, int(round(Q_plus / q)), init, rng, p)
    state = IterationState(Q_plus=ensemble.Q_plus)
    step = 0

    for iteration in range(1, max_iters + 1):
        result = rbm.simulate(ensemble, params, domain, scheme, tau, n_steps, rng, frame_steps,
                              start_step=step, p=p, cap=cap)
        ensemble, step = result.ensemble, result.last_step
        state.last_frames = result.frames
        rho_plus, rho_minus = measure_bulk(result.frames, x_bar, h, domain)
        err = signed_error(rho_plus, rho_minus, params.rho_inf)
        record = IterationRecord(iteration, ensemble.Q_plus, rho_plus, rho_minus, err, 0)
        state.history.append(record)
        state.iteration, state.err, state.Q_plus = iteration, err, ensemble.Q_plus

        if abs(err) <= epsilon:
            state.converged = True
            logger.info("Charge iteration %d: Q+=%.6g rho+rho-=%.6g Err=%.3e converged",
                        iteration, ensemble.Q_plus, record.product, err)
            break

        delta_N = particle_increment(charge_increment(err, domain.dimension, domain.outer), ensemble.q)
        if err < 0:
            ensemble = rbm.add_particles(ensemble, delta_N, domain, init, rng, step)
            record.delta_N = delta_N
        else:
            ensemble, removed, floor_hit = rbm.remove_particles(ensemble, delta_N, rng, step)
            record.delta_N = -removed
            record.floor_hit = floor_hit
            state.floor_hit = state.floor_hit or floor_hit
            if floor_hit:
                logger.warning("Charge iteration %d hit the particle floor (requested %d, removed %d)",
                               iteration, delta_N, removed)
        logger.info("Charge iteration %d: Q+=%.6g rho+rho-=%.6g Err=%.3e dN=%+d",
                    iteration, record.Q_plus, record.product, err, record.delta_N)
        state.Q_plus = ensemble.Q_plus
    else:
        logger.warning("Charge iteration stopped after %d rounds with Err=%.3e", max_iters, state.err)

    return state, ensemble


def equilibrium_bulk(params, domain, scheme, tau, T_c, Q_plus, q, h, rng, init, x_bar=None, p=2):
    """sqrt(rho_+ rho_-) at the wall after relaxing an ensemble with fixed Q_plus for T_c."""
    x_bar = default_bulk_point(domain) if x_bar is None else np.atleast_1d(np.asarray(x_bar, dtype=float))
    n_steps = max(1, int(round(T_c / tau)))
    frame_steps = rbm.trailing_frames(n_steps, max(1, int(math.ceil(TRAILING_FRACTION * n_steps))))
    Q_minus = Q_plus + rbm.net_negative_charge(params.Q_f, domain)
    ensemble = rbm.build_ensemble(domain, Q_plus, Q_minus, int(round(Q_plus / q)), init, rng, p)
    result = rbm.simulate(ensemble, params, domain, scheme, tau, n_steps, rng, frame_steps, p=p)
    rho_plus, rho_minus = measure_bulk(result.frames, x_bar, h, domain)
    return math.sqrt(rho_plus * rho_minus)


TRACE_COLUMNS = ("iteration", "Q_plus", "bulk_rho_plus", "bulk_rho_minus", "Err", "delta_N", "floor_hit")


def trace_rows(state):
    return [record.as_row() for record in state.history]
