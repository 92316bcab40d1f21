"""
Reductions of particle snapshots into densities, potentials and error metrics.

Frames are :class:`~solver.rbm.ParticleEnsemble` snapshots. Densities are
binned along the scalar coordinate of the domain (x in 1D, |x| in a shell) and
normalized by bin length or shell volume, so a ``DensityEstimate`` is a
probability density on Omega_L; multiplying by the species charge gives the
charge density compared against the reference solver.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.ndimage import uniform_filter1d
from scipy.stats import gaussian_kde, ks_2samp

from .exceptions import CoverageError, DegenerateReference, NonMonotoneVoltage
from .geometry import BOUNDARY_TOL, unit_ball_volume

logger = logging.getLogger(__name__)

KDE_MAX_SAMPLES = 20000


@dataclass
class DensityEstimate:
    """
    Pooled, normalized histogram of one species.

    :ivar pdf: probability density per bin (sum of pdf * measure is 1 minus
        the exterior share).
    :ivar charge_scale: Q_plus or Q_minus, turning pdf into a charge density.
    :ivar exterior_fraction: share of samples outside the bins (only under
        penalization, which lets particles sit just outside the wall).
    """
    bin_edges: np.ndarray
    pdf: np.ndarray
    measure: np.ndarray
    species: int
    charge_scale: float
    frame_count: int
    sample_count: int
    exterior_fraction: float = 0.0

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])


@dataclass
class MSEReport:
    """Relative root mean square error of one test function, per species."""
    test_function: str
    rmse: dict
    repetitions: int
    N_plus: int


def charge_density(estimate):
    return estimate.pdf * estimate.charge_scale


def _species_coordinates(frames, species, domain):
    return np.concatenate([domain.radial(frame.species(species)) for frame in frames])


def histogram_density(frames, species, bin_edges, domain, allow_exterior=False):
    """
    Histogram of ``species`` pooled over ``frames``, normalized by bin measure.

    Samples within the boundary tolerance of the outer edges are counted in
    the edge bins. Anything farther out raises :class:`CoverageError` unless
    ``allow_exterior`` is set, in which case it enters the normalization only.
    """
    if not frames:
        raise ValueError("need at least one frame")
    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be strictly increasing")

    samples = _species_coordinates(frames, species, domain)
    if samples.size == 0:
        raise ValueError(f"no particles of species {species:+d} in the frames")
    near = (samples >= edges[0] - BOUNDARY_TOL) & (samples <= edges[-1] + BOUNDARY_TOL)
    samples = np.where(near, np.clip(samples, edges[0], edges[-1]), samples)
    outside = ~near
    if outside.any() and not allow_exterior:
        raise CoverageError(f"{outside.sum()} sample(s) outside [{edges[0]}, {edges[-1]}]")

    counts, _ = np.histogram(samples[near], bins=edges)
    measure = domain.bin_measure(edges)
    pdf = counts / (samples.size * measure)
    scale = float(np.mean([frame.charge_scale(species) for frame in frames]))
    return DensityEstimate(edges, pdf, measure, species, scale, len(frames), samples.size,
                           float(outside.mean()))


def bulk_density(frames, x_bar, h, species, domain):
    """
    Charge density in the half ball D_h around the wall point ``x_bar``, averaged over frames.

    rho = Q * 2 N(D_h) / (alpha(d) h^d N), with the half-ball volume
    alpha(d) h^d / 2 standing in for |D_h|.
    """
    if h >= domain.outer - domain.inner:
        raise ValueError("the half ball must be thinner than the domain")
    x_bar = np.atleast_1d(np.asarray(x_bar, dtype=float))
    d = domain.dimension
    half_ball = unit_ball_volume(d) * h ** d / 2
    values = []
    for frame in frames:
        points = frame.species(species)
        if points.shape[0] == 0:
            values.append(0.0)
            continue
        inside = np.count_nonzero(np.linalg.norm(points - x_bar, axis=1) <= h)
        values.append(frame.charge_scale(species) * inside / (half_ball * points.shape[0]))
    return float(np.mean(values)) if values else 0.0


def potential_from_densities(rho_plus, rho_minus):
    """
    Potential per bin from phi = ln(rho_inf/rho_plus) = ln(rho_minus/rho_inf).

    Averaging the two forms eliminates rho_inf: phi = 0.5 ln(rho_minus/rho_plus).
    Bins where either charge density vanishes are NaN.
    """
    if not np.array_equal(rho_plus.bin_edges, rho_minus.bin_edges):
        raise ValueError("densities must share their bins")
    plus, minus = charge_density(rho_plus), charge_density(rho_minus)
    valid = (plus > 0) & (minus > 0)
    phi = np.full(plus.shape, np.nan)
    phi[valid] = 0.5 * np.log(minus[valid] / plus[valid])
    return rho_plus.centers, phi


def reference_bin_average(estimate, nodes, values, domain):
    """Average of a nodal field over each bin, with respect to the domain measure."""
    weights = np.ones_like(nodes) if not domain.is_shell else (
        domain.dimension * unit_ball_volume(domain.dimension) * nodes ** (domain.dimension - 1))
    cumulative = cumulative_trapezoid(values * weights, nodes, initial=0.0)
    return np.diff(np.interp(estimate.bin_edges, nodes, cumulative)) / estimate.measure


def l1_distance(estimate, nodes, reference_density, domain, normalized=True):
    """
    L1 distance between a particle density and a reference density over the bins.

    With ``normalized`` both sides are probability densities (the reference is
    divided by its integral); otherwise the charge density is compared with
    the reference as given.
    """
    reference = reference_bin_average(estimate, nodes, reference_density, domain)
    if normalized:
        particle = estimate.pdf
        reference = reference / np.sum(reference * estimate.measure)
    else:
        particle = charge_density(estimate)
    return float(np.sum(np.abs(particle - reference) * estimate.measure))


def last_bin_ratio(estimate, nodes, reference_density, domain):
    """Charge density of the outermost bin over the reference average on that bin."""
    reference = reference_bin_average(estimate, nodes, reference_density, domain)
    if reference[-1] <= 0:
        raise DegenerateReference("reference density vanishes on the outermost bin")
    return float(charge_density(estimate)[-1] / reference[-1])


def stationarity_distance(frames_a, frames_b, bin_edges, domain, species):
    """L1 distance between the pooled histograms of two groups of frames."""
    a = histogram_density(frames_a, species, bin_edges, domain, allow_exterior=True)
    b = histogram_density(frames_b, species, bin_edges, domain, allow_exterior=True)
    return float(np.sum(np.abs(a.pdf - b.pdf) * a.measure))


def test_function(f_id, L):
    functions = {
        "f1": lambda x: x,
        "f2": lambda x: x ** 2,
        "f3": lambda x: np.cos(x / 8),
        "f4": lambda x: np.exp(-(x - L / 2) ** 2 / 4),
    }
    try:
        return functions[f_id]
    except KeyError:
        raise ValueError(f"unknown test function {f_id!r}; known: {sorted(functions)}") from None


TEST_FUNCTIONS = ("f1", "f2", "f3", "f4")


def weak_error(samples, f_id, nodes, reference_densities, domain, N_plus=0):
    """
    Relative root-MSE of sample means of f against the reference expectation.

    :param samples: ``{species: [coordinates of repetition m, ...]}``.
    :param reference_densities: ``{species: probability density on nodes}``.
    """
    f = test_function(f_id, domain.outer)
    weights = np.ones_like(nodes) if not domain.is_shell else (
        domain.dimension * unit_ball_volume(domain.dimension) * nodes ** (domain.dimension - 1))
    rmse = {}
    repetitions = 0
    for species, runs in samples.items():
        exact = trapezoid(f(nodes) * reference_densities[species] * weights, nodes)
        if exact == 0:
            raise DegenerateReference(f"reference integral of {f_id} vanishes for species {species:+d}")
        means = np.array([np.mean(f(np.asarray(run))) for run in runs])
        rmse[species] = float(np.sqrt(np.mean(((means - exact) / exact) ** 2)))
        repetitions = len(runs)
    return MSEReport(f_id, rmse, repetitions, N_plus)


def loglog_slope(x, y):
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _plane_coordinates(points, plane):
    if plane == "xOy":
        return points[:, 0], points[:, 1]
    if plane == "yOz":
        return points[:, 1], points[:, 2]
    if plane == "r-phi":
        return np.linalg.norm(points, axis=1), np.arctan2(points[:, 1], points[:, 0])
    raise ValueError(f"unknown plane {plane!r}; use xOy, yOz or r-phi")


def planar_kde(frames, species, plane, grid_u, grid_v, bandwidth="scott", max_samples=KDE_MAX_SAMPLES):
    """
    Gaussian kernel density of the samples projected onto ``plane``.

    Returns the field on ``grid_u x grid_v`` (indexing ``ij``). Pooled samples
    beyond ``max_samples`` are thinned by even striding, which keeps the
    estimate deterministic.
    """
    points = np.concatenate([frame.species(species) for frame in frames])
    if points.shape[1] != 3:
        raise ValueError("planar densities need 3D frames")
    if points.shape[0] > max_samples:
        points = points[np.linspace(0, points.shape[0] - 1, max_samples).astype(int)]
    u, v = _plane_coordinates(points, plane)
    kde = gaussian_kde(np.vstack([u, v]), bw_method=bandwidth)
    U, V = np.meshgrid(grid_u, grid_v, indexing="ij")
    return kde(np.vstack([U.ravel(), V.ravel()])).reshape(U.shape)


def angular_profile(frames, species, r_max, n_bins=36):
    """Azimuthal probability density of the particles with |x| <= r_max."""
    points = np.concatenate([frame.species(species) for frame in frames])
    near = points[np.linalg.norm(points, axis=1) <= r_max]
    phi = np.arctan2(near[:, 1], near[:, 0])
    density, edges = np.histogram(phi, bins=n_bins, range=(-np.pi, np.pi), density=True)
    return 0.5 * (edges[1:] + edges[:-1]), density


def angular_extrema(centers, density, window=3):
    """Azimuths of the maximum and minimum of a periodic profile after a moving average over ``window`` bins."""
    smoothed = uniform_filter1d(np.asarray(density, dtype=float), window, mode="wrap")
    return float(centers[np.argmax(smoothed)]), float(centers[np.argmin(smoothed)])


def mirror_symmetry_pvalue(frames, species, axis):
    """KS p-value between the positive half-axis and the mirrored negative half-axis samples."""
    coordinate = np.concatenate([frame.species(species)[:, axis] for frame in frames])
    return float(ks_2samp(coordinate[coordinate > 0], -coordinate[coordinate < 0]).pvalue)


def boundary_layer_width(x, phi, fraction=0.1):
    """Distance from the first finite node to where phi first falls to ``fraction`` of its wall value."""
    x = np.asarray(x, dtype=float)
    phi = np.asarray(phi, dtype=float)
    finite = np.isfinite(phi)
    x, phi = x[finite], phi[finite]
    target = fraction * phi[0]
    below = np.flatnonzero(np.abs(phi) <= abs(target))
    if below.size == 0:
        return np.inf
    i = below[0]
    if i == 0:
        return 0.0
    crossing = np.interp(abs(target), [abs(phi[i]), abs(phi[i - 1])], [x[i], x[i - 1]])
    return float(crossing - x[0])


def voltage(x, phi):
    """V = phi(membrane) - phi(wall) from the outermost finite values."""
    phi = np.asarray(phi, dtype=float)
    finite = np.flatnonzero(np.isfinite(phi))
    if finite.size < 2:
        raise ValueError("need at least two finite potential values")
    return float(phi[finite[0]] - phi[finite[-1]])


def capacitance_curve(Q_f_grid, runner):
    """
    Differential capacitance C = dQ_f/dV over a grid of free charges.

    ``runner(Q_f)`` returns the voltage V for one free charge. C is taken by
    finite differences of Q_f against V, which must be strictly monotone.
    Returns rows ``(Q_f, V, C)`` sorted by Q_f.
    """
    Q_f = np.sort(np.asarray(Q_f_grid, dtype=float))
    if Q_f.size < 3:
        raise ValueError("need at least three free charges")
    if np.any(np.diff(Q_f) == 0):
        raise NonMonotoneVoltage("repeated free charge in the grid")

    V = np.array([runner(value) for value in Q_f])
    steps = np.diff(V)
    if np.any(steps == 0) or not (np.all(steps > 0) or np.all(steps < 0)):
        bad = int(np.flatnonzero((steps == 0) | (np.sign(steps) != np.sign(steps[0])))[0])
        raise NonMonotoneVoltage(f"voltage not monotone between Q_f={Q_f[bad]} and Q_f={Q_f[bad + 1]}")
    C = np.gradient(Q_f, V)
    return [(float(a), float(b), float(c)) for a, b, c in zip(Q_f, V, C)]
