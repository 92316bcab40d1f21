"""
Finite-difference reference solutions of the truncated Poisson-Boltzmann problem.

Solves

    -nu (phi'' + k/r phi') = rho_inf (exp(-phi) - exp(phi))   on (r0, r1)
    -phi'(r0) = sigma_f,   phi'(r1) = 0

with k = 0 on the 1D half domain and k = 2 for the radially symmetric 3D
shell. Second-order central differences, ghost points for both Neumann
conditions, and a damped Newton iteration on the tridiagonal system.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .exceptions import NewtonDivergence, SolverError
from .geometry import SimDomain, unit_ball_volume

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 50
MAX_HALVINGS = 30


@dataclass
class GridSolution:
    """
    Nodal potential on a uniform grid.

    :ivar nodes: positions (1D) or radii (shell), uniformly spaced.
    :ivar phi: potential at the nodes.
    :ivar domain: the domain the grid discretizes.
    :ivar residual_norm: sup-norm of the discrete residual at exit.
    """
    nodes: np.ndarray
    phi: np.ndarray
    nu: float
    rho_inf: float
    sigma_f: float
    domain: SimDomain
    residual_norm: float
    iterations: int = 0

    @property
    def h(self):
        return self.nodes[1] - self.nodes[0]

    def weights(self):
        """Measure density along the grid: 1 in 1D, d alpha(d) r^(d-1) in a shell."""
        if not self.domain.is_shell:
            return np.ones_like(self.nodes)
        d = self.domain.dimension
        return d * unit_ball_volume(d) * self.nodes ** (d - 1)

    def integrate(self, values):
        return trapezoid(values * self.weights(), self.nodes)


def _geometry_factor(domain):
    return domain.dimension - 1 if domain.is_shell else 0


def _residual(phi, r, h, k, nu, rho_inf, sigma_f):
    lower = -nu * (1.0 / h ** 2 - k / (2 * r * h))
    upper = -nu * (1.0 / h ** 2 + k / (2 * r * h))
    diag = 2 * nu / h ** 2

    F = diag * phi + 2 * rho_inf * np.sinh(phi)
    F[1:-1] += lower[1:-1] * phi[:-2] + upper[1:-1] * phi[2:]
    F[0] += (lower[0] + upper[0]) * phi[1] + lower[0] * 2 * h * sigma_f
    F[-1] += (lower[-1] + upper[-1]) * phi[-2]
    return F, lower, upper, diag


def _jacobian_bands(phi, lower, upper, diag, rho_inf):
    n = phi.size
    ab = np.zeros((3, n))
    ab[1] = diag + 2 * rho_inf * np.cosh(phi)
    ab[0, 1:] = upper[:-1]
    ab[0, 1] = lower[0] + upper[0]
    ab[2, :-1] = lower[1:]
    ab[2, -2] = lower[-1] + upper[-1]
    return ab


def solve_pb(domain, nu, rho_inf, sigma_f, n_nodes, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, phi0=None):
    """Damped Newton solve on ``domain`` (1D interval or radial 3D shell)."""
    if n_nodes < 16:
        raise ValueError(f"need at least 16 nodes, got {n_nodes}")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if domain.is_shell and domain.dimension != 3:
        raise ValueError("the radial reference solver covers the 3D shell only")

    r = np.linspace(domain.inner, domain.outer, n_nodes)
    h = r[1] - r[0]
    k = _geometry_factor(domain)
    phi = np.zeros(n_nodes) if phi0 is None else np.array(phi0, dtype=float)

    F, lower, upper, diag = _residual(phi, r, h, k, nu, rho_inf, sigma_f)
    norm = np.abs(F).max()
    iteration = 0
    while norm > tol:
        if iteration >= max_iter:
            raise NewtonDivergence(f"Newton did not converge in {max_iter} iterations", norm)
        iteration += 1
        step = solve_banded((1, 1), _jacobian_bands(phi, lower, upper, diag, rho_inf), -F)

        damping = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = phi + damping * step
            F_trial = _residual(trial, r, h, k, nu, rho_inf, sigma_f)[0]
            trial_norm = np.abs(F_trial).max()
            if np.isfinite(trial_norm) and trial_norm < norm:
                break
            damping *= 0.5
        else:
            raise NewtonDivergence("line search could not reduce the residual", norm)

        phi, F, norm = trial, F_trial, trial_norm
        logger.debug("Newton step %d: damping %.3g, residual %.3e", iteration, damping, norm)

    return GridSolution(r, phi, nu, rho_inf, sigma_f, domain, norm, iteration)


def solve_pb_1d(nu, rho_inf, sigma_f, a, L, n_nodes, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    return solve_pb(SimDomain.interval(a, L), nu, rho_inf, sigma_f, n_nodes, tol, max_iter)


def surface_charge_radial3d(nu, Q_f, R):
    return Q_f / (4 * np.pi * R ** 2 * nu)


def solve_pb_radial3d(nu, rho_inf, Q_f, R, L, n_nodes, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Radial 3D problem with sigma_f = Q_f / (4 pi R^2 nu)."""
    sigma_f = surface_charge_radial3d(nu, Q_f, R)
    return solve_pb(SimDomain.shell(3, R, L), nu, rho_inf, sigma_f, n_nodes, tol, max_iter)


def surface_charge(nu, Q_f, domain):
    """Effective membrane charge of the reference problem for a free charge Q_f."""
    if domain.is_shell:
        return surface_charge_radial3d(nu, Q_f, domain.inner)
    return Q_f / (2 * nu)


def densities_from_phi(sol):
    """Boltzmann densities rho_plus = rho_inf e^-phi, rho_minus = rho_inf e^phi."""
    return sol.rho_inf * np.exp(-sol.phi), sol.rho_inf * np.exp(sol.phi)


def net_charge_defect(sol):
    """nu * (flux through the membrane) + integral of (rho_plus - rho_minus); zero up to O(h^2)."""
    rho_plus, rho_minus = densities_from_phi(sol)
    membrane_area = sol.weights()[0]
    return sol.nu * sol.sigma_f * membrane_area + sol.integrate(rho_plus - rho_minus)


def fit_rho_inf(domain, nu, Q_plus, sigma_f, n_nodes, tol=DEFAULT_TOL, xtol=1e-12):
    """
    Far-field concentration whose Boltzmann profile carries total positive charge ``Q_plus``.

    The positive charge grows monotonically with rho_inf, so the root is
    bracketed on log(rho_inf) starting from the uniform guess Q_plus / |Omega|.
    Returns ``(rho_inf, solution)``.
    """
    if Q_plus <= 0:
        raise ValueError("Q_plus must be positive")
    cache = {}

    def excess(log_rho):
        sol = solve_pb(domain, nu, np.exp(log_rho), sigma_f, n_nodes, tol, max_iter=200,
                       phi0=cache.get("phi"))
        cache["phi"], cache["sol"] = sol.phi, sol
        return sol.integrate(densities_from_phi(sol)[0]) - Q_plus

    guess = np.log(Q_plus / domain.volume())
    lo, hi = guess - np.log(100.0), guess + np.log(10.0)
    for _ in range(12):
        if excess(lo) < 0:
            break
        lo -= np.log(10.0)
    else:
        raise SolverError("could not bracket rho_inf from below")
    for _ in range(12):
        if excess(hi) > 0:
            break
        hi += np.log(10.0)
    else:
        raise SolverError("could not bracket rho_inf from above")

    log_rho = brentq(excess, lo, hi, xtol=xtol)
    rho_inf = float(np.exp(log_rho))
    sol = solve_pb(domain, nu, rho_inf, sigma_f, n_nodes, tol, max_iter=200, phi0=cache.get("phi"))
    logger.info("Fitted rho_inf=%.6g for Q_plus=%.6g", rho_inf, Q_plus)
    return rho_inf, sol


def screening_constant(nu, rho_inf):
    return np.sqrt(2 * rho_inf / nu)


def linearized_1d(nu, rho_inf, sigma_f, a, L, x):
    """Debye-Hueckel solution of the truncated 1D problem."""
    kappa = screening_constant(nu, rho_inf)
    return sigma_f * np.cosh(kappa * (L - np.asarray(x))) / (kappa * np.sinh(kappa * (L - a)))


def linearized_radial3d(nu, rho_inf, sigma_f, R, L, r):
    """Screened-Coulomb solution (A e^-kr + B e^kr) / r matching both Neumann conditions."""
    kappa = screening_constant(nu, rho_inf)

    def dphi(s):
        return (np.exp(-kappa * s) * (-kappa / s - 1 / s ** 2),
                np.exp(kappa * s) * (kappa / s - 1 / s ** 2))

    A, B = np.linalg.solve(np.array([dphi(R), dphi(L)]), np.array([-sigma_f, 0.0]))
    r = np.asarray(r, dtype=float)
    return (A * np.exp(-kappa * r) + B * np.exp(kappa * r)) / r


def truncation_study(nu, rho_inf, sigma_f, L_list, L_ref, inner=1.0, h=0.01, executor=None):
    """
    L1(Omega_L) distance between the solution on (inner, L) and a long-domain reference.

    The reference on (inner, L_ref) stands in for the unbounded problem and is
    linearly interpolated onto each coarse grid; the integral is a composite
    trapezoid. Returns a list of ``(L, error)``.
    """
    if max(L_list) > L_ref:
        raise ValueError("every truncation length must be at most L_ref")
    if max(L_list) > L_ref / 2:
        logger.warning("L=%g exceeds L_ref/2=%g; the reference is too short to stand in for the "
                       "unbounded domain", max(L_list), L_ref / 2)

    jobs = [(nu, rho_inf, sigma_f, inner, L, h) for L in [L_ref, *L_list]]
    solve = executor.map if executor is not None else map
    reference, *solutions = list(solve(_truncated_solution, jobs))

    table = []
    for L, sol in zip(L_list, solutions):
        phi_ref = np.interp(sol.nodes, reference.nodes, reference.phi)
        table.append((float(L), float(sol.integrate(np.abs(sol.phi - phi_ref)))))
    return table


def _truncated_solution(job):
    nu, rho_inf, sigma_f, inner, L, h = job
    n_nodes = int(round((L - inner) / h)) + 1
    return solve_pb_1d(nu, rho_inf, sigma_f, inner, L, n_nodes)


@dataclass
class DecayReport:
    holds: bool
    max_violation: float
    worst_node: float


def decay_bound_check(sol, slack=1.05, wall_image=True):
    """
    Compare |phi| and |phi'| with the exponential decay envelopes of the 1D problem.

    The bounds are |sigma_f|/kappa e^(-kappa d) and |sigma_f| e^(-kappa d) with
    d the distance to the membrane. With ``wall_image`` the potential bound
    adds the mirror term of the reflecting outer wall, which the truncated
    solution carries on top of the unbounded decay.
    """
    if sol.domain.is_shell:
        raise ValueError("decay bounds are checked on 1D solutions")
    kappa = screening_constant(sol.nu, sol.rho_inf)
    dist = sol.nodes - sol.domain.inner
    width = sol.domain.outer - sol.domain.inner
    sigma = abs(sol.sigma_f)

    envelope = np.exp(-kappa * dist)
    if wall_image:
        envelope = envelope + np.exp(-kappa * (2 * width - dist))
    phi_bound = sigma / kappa * envelope
    dphi_bound = sigma * np.exp(-kappa * dist)
    dphi = np.gradient(sol.phi, sol.nodes, edge_order=2)

    excess = np.maximum(np.abs(sol.phi) - slack * phi_bound, np.abs(dphi) - slack * dphi_bound)
    worst = int(np.argmax(excess))
    violation = max(float(excess[worst]), 0.0)
    return DecayReport(violation <= 1e-14, violation, float(sol.nodes[worst]))


def grid_table(sol):
    """Columns (node, phi, rho_plus, rho_minus) for CSV export."""
    rho_plus, rho_minus = densities_from_phi(sol)
    return ("node", "phi", "rho_plus", "rho_minus"), np.column_stack([sol.nodes, sol.phi, rho_plus, rho_minus])
