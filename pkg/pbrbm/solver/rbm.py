"""Random Batch dynamics for two-species Coulomb particles.

Each step reshuffles the particles into batches of size ``p`` and lets a
particle interact only with its batch mates, with the coefficient
``|Q| (N-1) / (N (p-1))`` that keeps the expected force equal to the full
mean-field sum. In 1D the bounded interaction is integrated with Euler;
for d >= 2 the singular pair flow of a p=2 batch is solved in closed form and
the external field, noise and reflection follow as a second sub-step.
"""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from . import sde
from .exceptions import InvalidBatchSize
from .geometry import unit_ball_volume
from .kernels import coulomb_force, external_field

logger = logging.getLogger(__name__)


@dataclass
class ParticleEnsemble:
    """
    Positions and signs of the numerical particles, each carrying charge ``q``.

    The empirical measures of the two species, scaled by Q_plus and Q_minus,
    approximate the ion densities.
    """
    positions: np.ndarray
    signs: np.ndarray
    q: float

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 2:
            raise ValueError("positions must have shape (N, d)")
        self.signs = np.asarray(self.signs, dtype=np.int8)
        if self.signs.shape != (self.positions.shape[0],):
            raise ValueError("one sign per particle")

    @property
    def N(self):
        return self.positions.shape[0]

    @property
    def dimension(self):
        return self.positions.shape[1]

    @property
    def N_plus(self):
        return int(np.count_nonzero(self.signs > 0))

    @property
    def N_minus(self):
        return self.N - self.N_plus

    @property
    def absQ(self):
        return self.q * self.N

    @property
    def Q_plus(self):
        return self.q * self.N_plus

    @property
    def Q_minus(self):
        return self.q * self.N_minus

    def species(self, sign):
        return self.positions[self.signs == sign]

    def charge_scale(self, sign):
        return self.Q_plus if sign > 0 else self.Q_minus

    def copy(self):
        return ParticleEnsemble(self.positions.copy(), self.signs.copy(), self.q)

    def with_positions(self, positions):
        return ParticleEnsemble(positions, self.signs, self.q)


@dataclass(frozen=True)
class BatchPartition:
    """Rows of ``batches`` are the index sets of one step's batches."""
    batches: np.ndarray
    step_index: int

    @property
    def p(self):
        return self.batches.shape[1]


@dataclass
class SimulationResult:
    ensemble: ParticleEnsemble
    frames: List[ParticleEnsemble] = field(default_factory=list)
    frame_steps: List[int] = field(default_factory=list)
    last_step: int = 0


def net_negative_charge(Q_f, domain):
    """Q_minus - Q_plus required by neutrality: Q_f in a shell, Q_f / 2 on the half interval."""
    return Q_f if domain.is_shell else Q_f / 2


def sample_initial(domain, init, n, generator):
    """
    I.i.d. uniform initial positions on ``init = (lo, hi)``.

    ``lo, hi`` bound x in 1D and |x| in a shell, where sampling is uniform in
    volume with isotropic directions.
    """
    lo, hi = init
    d = domain.dimension
    if not domain.is_shell:
        return generator.uniform(lo, hi, size=(n, 1))
    u = generator.uniform(0.0, 1.0, size=n)
    r = (lo ** d + u * (hi ** d - lo ** d)) ** (1.0 / d)
    direction = generator.standard_normal((n, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    return direction * r[:, None]


def build_ensemble(domain, Q_plus, Q_minus, N_plus, init, rng, p=2):
    """
    Draw the initial ensemble with q = Q_plus / N_plus.

    N_minus is Q_minus / q rounded; for p = 2 the floor or ceiling is chosen
    so the total count is even, keeping the charge error below one q.
    """
    if N_plus < 1 or Q_plus <= 0:
        raise ValueError("need at least one positive particle and Q_plus > 0")
    q = Q_plus / N_plus
    exact = Q_minus / q
    N_minus = int(round(exact))
    if p == 2 and (N_plus + N_minus) % 2:
        below, above = int(np.floor(exact)), int(np.ceil(exact))
        if below == above:
            above += 1
        N_minus = below if (N_plus + below) % 2 == 0 else above
    N_minus = max(N_minus, 1)

    generator = rng.generator(0, sde.INIT)
    positions = sample_initial(domain, init, N_plus + N_minus, generator)
    signs = np.concatenate([np.ones(N_plus, dtype=np.int8), -np.ones(N_minus, dtype=np.int8)])
    logger.debug("Built ensemble N+=%d N-=%d q=%.3g", N_plus, N_minus, q)
    return ParticleEnsemble(positions, signs, q)


def add_particles(ensemble, n_each, domain, init, rng, step):
    """Append ``n_each`` positive and ``n_each`` negative particles drawn from the initial law."""
    if n_each <= 0:
        return ensemble
    generator = rng.generator(step, sde.ADD)
    fresh = sample_initial(domain, init, 2 * n_each, generator)
    signs = np.concatenate([np.ones(n_each, dtype=np.int8), -np.ones(n_each, dtype=np.int8)])
    return ParticleEnsemble(
        np.concatenate([ensemble.positions, fresh]),
        np.concatenate([ensemble.signs, signs]),
        ensemble.q,
    )


def remove_particles(ensemble, n_each, rng, step, floor=1):
    """
    Remove ``n_each`` uniformly chosen particles from each species.

    Never goes below ``floor`` particles per species; returns the new
    ensemble, the number actually removed per species, and whether the floor
    cut the request short.
    """
    available = min(ensemble.N_plus, ensemble.N_minus) - floor
    removed = max(0, min(n_each, available))
    if removed <= 0:
        return ensemble, 0, n_each > 0
    generator = rng.generator(step, sde.REMOVE)
    plus = np.flatnonzero(ensemble.signs > 0)
    minus = np.flatnonzero(ensemble.signs < 0)
    drop = np.concatenate([
        generator.choice(plus, size=removed, replace=False),
        generator.choice(minus, size=removed, replace=False),
    ])
    keep = np.ones(ensemble.N, dtype=bool)
    keep[drop] = False
    trimmed = ParticleEnsemble(ensemble.positions[keep], ensemble.signs[keep], ensemble.q)
    return trimmed, removed, removed < n_each


def shuffle_batches(N, p, rng, step=0):
    """Uniform random partition of range(N) into consecutive groups of a random permutation."""
    if p < 2 or N % p:
        raise InvalidBatchSize(f"batch size {p} does not divide N={N}")
    order = rng.generator(step, sde.SHUFFLE).permutation(N)
    return BatchPartition(order.reshape(-1, p), step)


def batch_drift_1d(ensemble, partition, params, domain, index=None):
    """
    Drift z_i E_f + (1/(p-1)) sum_k z_i z_k |Q| (N-1)/N F(X_i - X_k) over batch mates.

    Returns the drift of every particle as an (N, 1) array, or of particle
    ``index`` as a scalar.
    """
    N, p = ensemble.N, partition.p
    idx = partition.batches
    x = ensemble.positions[idx, 0]
    z = ensemble.signs[idx].astype(float)
    force = coulomb_force(1, params.nu, (x[:, :, None] - x[:, None, :])[..., None])[..., 0]
    pair = (z[:, :, None] * z[:, None, :] * force).sum(axis=2)
    coefficient = ensemble.absQ * (N - 1) / N / (p - 1)

    drift = ensemble.signs[:, None] * external_field(params, domain, ensemble.positions)
    drift[idx.ravel(), 0] += coefficient * pair.ravel()
    if index is not None:
        return float(drift[index, 0])
    return drift


def pair_splitting_exact(Xi, Xk, zi, zk, tau, absQ, N, nu, d):
    """
    Exact flow of the p = 2 pair interaction over a time ``tau``.

    With v the unit separation and s = |Xi - Xk|^d + beta tau, the pair keeps
    its midpoint and moves to separation s^(1/d); an attracting pair with
    s < 0 merges at the midpoint. Coincident inputs stay where they are.
    Arguments broadcast over a leading pair axis.
    """
    Xi = np.asarray(Xi, dtype=float)
    Xk = np.asarray(Xk, dtype=float)
    beta = 2.0 * np.asarray(zi) * np.asarray(zk) * absQ * (N - 1) / (unit_ball_volume(d) * nu * N)
    delta = Xi - Xk
    r = np.linalg.norm(delta, axis=-1)
    s = r ** d + beta * tau
    separation = np.where(s > 0, np.abs(s) ** (1.0 / d), 0.0)
    coincident = r == 0
    v = delta / np.where(coincident, 1.0, r)[..., None]
    half = 0.5 * np.where(coincident, 0.0, separation)[..., None]
    mid = 0.5 * (Xi + Xk)
    new_i = np.where(coincident[..., None], Xi, mid + v * half)
    new_k = np.where(coincident[..., None], Xk, mid - v * half)
    return new_i, new_k


def rbm_step(ensemble, params, domain, scheme, tau, rng, step, p=2, noise=True,
             cap=sde.DEFAULT_BOUNDARY_CAP):
    """
    Advance the ensemble by one Random Batch step.

    All forces of a sub-step are evaluated at positions frozen at its start,
    and the Gaussian increments are keyed by ``step``, so the result does not
    depend on evaluation order. ``noise=False`` switches the diffusion off.
    """
    if tau == 0:
        return ensemble.copy()
    d = ensemble.dimension
    if d != domain.dimension:
        raise ValueError(f"ensemble is {d}-dimensional, domain is {domain.dimension}-dimensional")

    partition = shuffle_batches(ensemble.N, p, rng, step)
    gauss = rng.gaussians(step, ensemble.positions.shape) if noise else 0.0

    if d == 1:
        drift = batch_drift_1d(ensemble, partition, params, domain)
        x = sde.em_step(ensemble.positions, drift, tau, gauss)
        return ensemble.with_positions(sde.apply_boundary(x, domain, scheme, cap))

    if p != 2:
        raise InvalidBatchSize(f"the exact pair split needs p = 2 in d = {d}, got p = {p}")
    i, k = partition.batches[:, 0], partition.batches[:, 1]
    x = ensemble.positions.copy()
    x[i], x[k] = pair_splitting_exact(
        x[i], x[k], ensemble.signs[i], ensemble.signs[k], tau, ensemble.absQ, ensemble.N, params.nu, d,
    )
    x = sde.apply_boundary(x, domain, scheme, cap)
    drift = ensemble.signs[:, None] * external_field(params, domain, x)
    x = sde.em_step(x, drift, tau, gauss)
    return ensemble.with_positions(sde.apply_boundary(x, domain, scheme, cap))


def simulate(ensemble, params, domain, scheme, tau, n_steps, rng, frame_steps=(), start_step=0, p=2,
             noise=True, cap=sde.DEFAULT_BOUNDARY_CAP):
    """
    Run ``n_steps`` Random Batch steps and record snapshots after the steps in ``frame_steps``.

    Steps are numbered ``start_step + 1 .. start_step + n_steps`` for the random
    streams; ``frame_steps`` counts from 1 within this call.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    wanted = sorted(set(int(s) for s in frame_steps))
    if wanted and (wanted[0] < 1 or wanted[-1] > n_steps):
        raise ValueError(f"frame steps must lie in 1..{n_steps}")
    wanted_set = set(wanted)

    logger.debug("Simulating %d steps of N=%d (d=%d, tau=%g, %s)", n_steps, ensemble.N, domain.dimension,
                 tau, scheme.variant)
    result = SimulationResult(ensemble)
    current = ensemble
    for local in range(1, n_steps + 1):
        current = rbm_step(current, params, domain, scheme, tau, rng, start_step + local, p, noise, cap)
        if local in wanted_set:
            result.frames.append(current.copy())
            result.frame_steps.append(local)
    result.ensemble = current
    result.last_step = start_step + n_steps
    return result


def trailing_frames(n_steps, window):
    """Indices of the last ``window`` steps of a run, used for time averaging."""
    window = max(1, min(window, n_steps))
    return range(n_steps - window + 1, n_steps + 1)
