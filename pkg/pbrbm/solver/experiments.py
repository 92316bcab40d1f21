"""
Experiment pipelines behind the ``experiment`` management command.

A configuration is loaded and validated into plain dicts, turned into an
:class:`Experiment` (domain, parameters, scheme, seed), and handed to one of
the pipelines in :data:`PIPELINES`. Pipelines write their tables through a
:class:`~solver.outputs.RunOutput`, which only publishes the output
directory when the pipeline returns normally.
"""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path

import numpy as np
from django.conf import settings

from . import charge_iteration, observables, rbm, reference
from .exceptions import ConfigError
from .geometry import SimDomain
from .kernels import PhysicalParams
from .outputs import RunOutput, build_manifest, canonical_json, write_grid_csv
from .presets import PRESETS, get_preset, merge
from .sde import ReflectionScheme, RngSpec
from .serializers import PIPELINES as PIPELINE_NAMES, ExperimentConfigSerializer

logger = logging.getLogger(__name__)

DEFAULTS = {
    'OUTPUT_DIR': Path('runs'),
    'THREADS': 1,
    'BINS_1D': 100,
    'BINS_RADIAL': 60,
    'FRAME_WINDOW': 100,
    'NEWTON_TOL': 1e-10,
    'NEWTON_MAX_ITER': 50,
    'BOUNDARY_CAP': 8,
    'CODE_VERSION': '0',
}

DEFAULT_GRID_SPACING = 0.01


def solver_settings():
    return {**DEFAULTS, **getattr(settings, 'PB_SOLVER', {})}


# ---------------------- CONFIGURATION ----------------------- #

def validate_config(data):
    """
    Expand a preset reference and validate the block.

    ``{"preset": "fig2", "params": {"tau": 0.02}}`` merges the overrides onto
    the preset recursively. Returns plain dicts and lists.
    """
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    name = data.get("preset")
    if name is not None:
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; known presets: {', '.join(sorted(PRESETS))}",
                              {"preset": [f"Unknown preset. Known presets: {', '.join(sorted(PRESETS))}."]})
        data = merge(get_preset(name), data)

    serializer = ExperimentConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigError(f"invalid configuration: {json.dumps(serializer.errors)}", serializer.errors)
    return json.loads(canonical_json(serializer.validated_data))


def read_config_file(path):
    try:
        with open(path) as handle:
            data = json.load(handle)
    except OSError as error:
        raise ConfigError(f"cannot read {path}: {error.strerror}") from error
    except json.JSONDecodeError as error:
        raise ConfigError(f"{path} is not valid JSON: {error}") from error
    return data


def load_config(path):
    """Read and validate a JSON configuration file."""
    return validate_config(read_config_file(path))


def config_from_preset(name, **overrides):
    return validate_config({"preset": name, **overrides})


@dataclass
class Experiment:
    """Typed view of a validated configuration."""
    config: dict
    domain: SimDomain
    params: PhysicalParams
    scheme: ReflectionScheme
    seed: int
    options: dict = field(default_factory=solver_settings)

    @classmethod
    def from_config(cls, config, options=None):
        block, physics = config["domain"], config["params"]
        domain = SimDomain(block["dimension"], block["kind"], block["inner"], block["outer"])
        x_c = tuple(physics.get("x_c", [0.0] * domain.dimension))
        params = PhysicalParams(physics["nu"], physics["Q_f"], physics.get("q", 1e-4), physics.get("rho_inf"), x_c)
        scheme = ReflectionScheme(config["scheme"]["variant"], config["scheme"]["lam"])
        return cls(config, domain, params, scheme, config["seed"], options or solver_settings())

    @property
    def physics(self):
        return self.config["params"]

    def require(self, *keys):
        missing = [key for key in keys if key not in self.config and key not in self.physics]
        if missing:
            raise ConfigError(f"this pipeline needs {', '.join(missing)}",
                              {key: ["Required by this pipeline."] for key in missing})

    def rng(self, stream=0):
        return RngSpec(self.seed, stream)

    @property
    def tau(self):
        return self.physics["tau"]

    @property
    def p(self):
        return self.physics["p"]

    @property
    def n_steps(self):
        if "n_steps" in self.physics:
            return self.physics["n_steps"]
        if "T" not in self.physics:
            raise ConfigError("give T or n_steps", {"params": {"T": ["Required by this pipeline."]}})
        return max(1, int(round(self.physics["T"] / self.tau)))

    @property
    def init(self):
        return tuple(self.physics.get("init", (self.domain.inner, self.domain.outer)))

    @property
    def Q_plus(self):
        return self.physics["Q_plus"]

    @property
    def Q_minus(self):
        return self.Q_plus + rbm.net_negative_charge(self.params.Q_f, self.domain)

    @property
    def sigma_f(self):
        return reference.surface_charge(self.params.nu, self.params.Q_f, self.domain)

    @property
    def bin_edges(self):
        default = self.options['BINS_RADIAL'] if self.domain.is_shell else self.options['BINS_1D']
        return self.domain.default_edges(self.config.get("bins", default))

    @property
    def frame_steps(self):
        return rbm.trailing_frames(self.n_steps, self.config.get("frames", self.options['FRAME_WINDOW']))

    @property
    def cap(self):
        return self.options['BOUNDARY_CAP']

    def n_nodes(self, outer=None):
        if "reference" in self.config:
            return self.config["reference"]["n_nodes"]
        width = (self.domain.outer if outer is None else outer) - self.domain.inner
        return int(round(width / DEFAULT_GRID_SPACING)) + 1

    def solve_reference(self, rho_inf=None, Q_f=None):
        sigma_f = self.sigma_f if Q_f is None else reference.surface_charge(self.params.nu, Q_f, self.domain)
        return reference.solve_pb(self.domain, self.params.nu, rho_inf or self.params.rho_inf, sigma_f,
                                  self.n_nodes(), self.options['NEWTON_TOL'], self.options['NEWTON_MAX_ITER'])

    def fit_reference(self):
        return reference.fit_rho_inf(self.domain, self.params.nu, self.Q_plus, self.sigma_f, self.n_nodes(),
                                     self.options['NEWTON_TOL'])

    def build_ensemble(self, rng, N_plus=None):
        return rbm.build_ensemble(self.domain, self.Q_plus, self.Q_minus, N_plus or self.physics["N_plus"],
                                  self.init, rng, self.p)


def _map(executor, fn, jobs):
    if executor is None:
        return [fn(job) for job in jobs]
    return list(executor.map(fn, jobs))


# ---------------------- SHARED TABLES ----------------------- #

def _write_densities(output, plus, minus, sol=None):
    for estimate, name in ((plus, "density_plus.csv"), (minus, "density_minus.csv")):
        output.write_table(name, ("bin_center", "pdf", "charge_density"),
                           zip(estimate.centers, estimate.pdf, observables.charge_density(estimate)),
                           title=f"species {estimate.species:+d}, {estimate.frame_count} frame(s)")
    centers, phi = observables.potential_from_densities(plus, minus)
    columns, rows = ("x", "phi"), list(zip(centers, phi))
    if sol is not None:
        columns = ("x", "phi", "phi_reference")
        rows = list(zip(centers, phi, np.interp(centers, sol.nodes, sol.phi)))
    output.write_table("potential.csv", columns, rows, title="potential from particle densities")
    return centers, phi


def _oracle_rows(plus, minus, sol, domain):
    rho_plus, rho_minus = reference.densities_from_phi(sol)
    return [
        ("l1_plus", observables.l1_distance(plus, sol.nodes, rho_plus, domain)),
        ("l1_minus", observables.l1_distance(minus, sol.nodes, rho_minus, domain)),
        ("last_bin_ratio_plus", observables.last_bin_ratio(plus, sol.nodes, rho_plus, domain)),
        ("last_bin_ratio_minus", observables.last_bin_ratio(minus, sol.nodes, rho_minus, domain)),
        ("exterior_fraction_plus", plus.exterior_fraction),
        ("exterior_fraction_minus", minus.exterior_fraction),
    ]


def _write_summary(output, rows):
    output.write_table("summary.csv", ("quantity", "value"), rows, title="summary")


# ---------------------- PIPELINES ----------------------- #

def _simulate_frames(experiment, stream):
    rng = experiment.rng(stream)
    ensemble = experiment.build_ensemble(rng)
    result = rbm.simulate(ensemble, experiment.params, experiment.domain, experiment.scheme, experiment.tau,
                          experiment.n_steps, rng, experiment.frame_steps, p=experiment.p, cap=experiment.cap)
    return ensemble, result.frames


def run_simulate(experiment, output, executor=None):
    """Direct simulation at fixed Q_plus, compared with the fitted finite-difference reference.

    With ``repetitions`` > 1 the frames of independent runs (streams 0, 1, ...)
    are pooled into one histogram.
    """
    experiment.require("N_plus", "Q_plus")
    domain = experiment.domain
    repetitions = experiment.config.get("repetitions", 1)
    runs = _map(executor, partial(_simulate_frames, experiment), list(range(repetitions)))
    ensemble = runs[0][0]
    frames = [frame for _, run_frames in runs for frame in run_frames]

    exterior = not experiment.scheme.keeps_inside
    plus = observables.histogram_density(frames, 1, experiment.bin_edges, domain, exterior)
    minus = observables.histogram_density(frames, -1, experiment.bin_edges, domain, exterior)
    rho_inf, sol = experiment.fit_reference()
    centers, phi = _write_densities(output, plus, minus, sol)
    write_grid_csv(sol, output)

    rows = [("N_plus", ensemble.N_plus), ("N_minus", ensemble.N_minus), ("q", ensemble.q),
            ("repetitions", repetitions), ("rho_inf_fitted", rho_inf), *_oracle_rows(plus, minus, sol, domain),
            ("layer_width_particles", observables.boundary_layer_width(centers, phi)),
            ("layer_width_reference", observables.boundary_layer_width(sol.nodes, sol.phi))]
    _write_summary(output, rows)
    return f"simulated {experiment.n_steps} steps of N={ensemble.N} ({repetitions} run(s))"


def run_fd_solve(experiment, output, executor=None):
    """Finite-difference reference alone, at the given rho_inf or fitted to Q_plus."""
    if experiment.params.rho_inf is not None:
        sol = experiment.solve_reference()
    else:
        _, sol = experiment.fit_reference()
    write_grid_csv(sol, output)
    rho_plus, rho_minus = reference.densities_from_phi(sol)
    rows = [("rho_inf", sol.rho_inf), ("sigma_f", sol.sigma_f), ("residual_norm", sol.residual_norm),
            ("newton_iterations", sol.iterations), ("net_charge_defect", reference.net_charge_defect(sol)),
            ("Q_plus", sol.integrate(rho_plus)), ("Q_minus", sol.integrate(rho_minus)),
            ("voltage", float(sol.phi[0] - sol.phi[-1]))]
    if not experiment.domain.is_shell and sol.sigma_f != 0:
        report = reference.decay_bound_check(sol)
        rows += [("decay_bound_holds", int(report.holds)), ("decay_max_violation", report.max_violation)]
    _write_summary(output, rows)
    return f"Newton converged in {sol.iterations} iteration(s), residual {sol.residual_norm:.2e}"


def _iterate(experiment, params, stream=0):
    block = experiment.config["iteration"]
    return charge_iteration.iterate_q_plus(
        params, experiment.domain, experiment.scheme, experiment.tau, block["T_c"], params.q, block["h"],
        block["epsilon"], block["max_iters"], experiment.rng(stream), experiment.init, block["Q_plus0"],
        p=experiment.p, cap=experiment.cap,
    )


def run_iterate_q(experiment, output, executor=None):
    """Charge iteration at fixed rho_inf, then densities of the last round against the reference."""
    experiment.require("iteration", "rho_inf", "q")
    state, ensemble = _iterate(experiment, experiment.params)
    output.write_table("trace.csv", charge_iteration.TRACE_COLUMNS, charge_iteration.trace_rows(state),
                       title="charge iteration trace")

    exterior = not experiment.scheme.keeps_inside
    plus = observables.histogram_density(state.last_frames, 1, experiment.bin_edges, experiment.domain, exterior)
    minus = observables.histogram_density(state.last_frames, -1, experiment.bin_edges, experiment.domain, exterior)
    sol = experiment.solve_reference()
    _write_densities(output, plus, minus, sol)
    write_grid_csv(sol, output)
    rows = [("converged", int(state.converged)), ("iterations", state.iteration), ("Q_plus", state.Q_plus),
            ("Q_plus_reference", sol.integrate(reference.densities_from_phi(sol)[0])), ("Err", state.err),
            ("floor_hit", int(state.floor_hit)), *_oracle_rows(plus, minus, sol, experiment.domain)]
    _write_summary(output, rows)
    status = "converged" if state.converged else "did not converge"
    return f"charge iteration {status} after {state.iteration} round(s), Q+={state.Q_plus:.6g}"


def _particle_voltage(experiment, job):
    index, Q_f = job
    params = replace(experiment.params, Q_f=Q_f)
    state, _ = _iterate(experiment, params, stream=index + 1)
    exterior = not experiment.scheme.keeps_inside
    plus = observables.histogram_density(state.last_frames, 1, experiment.bin_edges, experiment.domain, exterior)
    minus = observables.histogram_density(state.last_frames, -1, experiment.bin_edges, experiment.domain, exterior)
    centers, phi = observables.potential_from_densities(plus, minus)
    if not state.converged:
        logger.warning("Q_f=%g: charge iteration did not converge; voltage taken from the last round", Q_f)
    return observables.voltage(centers, phi)


def run_capacitance(experiment, output, executor=None):
    """Differential capacitance over a grid of free charges, by particles and by finite differences."""
    experiment.require("iteration", "capacitance", "rho_inf", "q")
    grid = sorted(experiment.config["capacitance"]["Q_f_grid"])

    def fd_voltage(Q_f):
        sol = experiment.solve_reference(Q_f=Q_f)
        return float(sol.phi[0] - sol.phi[-1])

    fd = observables.capacitance_curve(grid, fd_voltage)
    voltages = dict(zip(grid, _map(executor, partial(_particle_voltage, experiment), list(enumerate(grid)))))
    particles = observables.capacitance_curve(grid, voltages.__getitem__)

    columns = ("Q_f", "V", "C")
    output.write_table("capacitance_reference.csv", columns, fd, title="finite-difference capacitance")
    output.write_table("capacitance_particles.csv", columns, particles, title="particle capacitance")
    deviation = max(abs(p[2] - f[2]) / abs(f[2]) for p, f in zip(particles, fd))
    _write_summary(output, [("max_relative_capacitance_deviation", deviation)])
    return f"capacitance over {len(grid)} free charges, max relative deviation {deviation:.3f}"


def _final_coordinates(experiment, job):
    N_plus, stream = job
    rng = experiment.rng(stream)
    ensemble = experiment.build_ensemble(rng, N_plus)
    n_steps = experiment.n_steps
    result = rbm.simulate(ensemble, experiment.params, experiment.domain, experiment.scheme, experiment.tau,
                          n_steps, rng, [n_steps], p=experiment.p, cap=experiment.cap)
    final = result.frames[-1]
    return {sign: experiment.domain.radial(final.species(sign)) for sign in (1, -1)}


def run_convergence(experiment, output, executor=None):
    """Relative root-MSE of test-function averages against the reference, as N_plus grows."""
    experiment.require("convergence", "N_plus", "Q_plus")
    block = experiment.config["convergence"]
    grid, repetitions = block["N_plus_grid"], block["repetitions"]
    _, sol = experiment.fit_reference()
    rho_plus, rho_minus = reference.densities_from_phi(sol)
    densities = {1: rho_plus / sol.integrate(rho_plus), -1: rho_minus / sol.integrate(rho_minus)}

    jobs = [(N_plus, 1 + i * repetitions + m) for i, N_plus in enumerate(grid) for m in range(repetitions)]
    finals = _map(executor, partial(_final_coordinates, experiment), jobs)

    rows, errors = [], {}
    for i, N_plus in enumerate(grid):
        runs = finals[i * repetitions:(i + 1) * repetitions]
        samples = {sign: [run[sign] for run in runs] for sign in (1, -1)}
        for f_id in block["test_functions"]:
            report = observables.weak_error(samples, f_id, sol.nodes, densities, experiment.domain, N_plus)
            for sign in (1, -1):
                rows.append((N_plus, sign, f_id, report.rmse[sign]))
                errors.setdefault((sign, f_id), []).append(report.rmse[sign])
    output.write_table("convergence.csv", ("N_plus", "species", "f_id", "rmse"), rows, title="weak error")

    slopes = [(sign, f_id, observables.loglog_slope(grid, values)) for (sign, f_id), values in errors.items()]
    output.write_table("slopes.csv", ("species", "f_id", "slope"), slopes, title="log-log slope against N_plus")
    return f"weak error over N_plus={grid} with {repetitions} repetition(s)"


def run_truncation_study(experiment, output, executor=None):
    """Truncation error against a long-domain reference, plus the decay-bound checks."""
    experiment.require("truncation", "rho_inf")
    block = experiment.config["truncation"]
    nu, rho_inf, inner = experiment.params.nu, experiment.params.rho_inf, experiment.domain.inner
    table = reference.truncation_study(nu, rho_inf, experiment.sigma_f, block["L_list"], block["L_ref"],
                                       inner, block["h"], executor)
    output.write_table("truncation.csv", ("L", "l1_error", "log_error"),
                       [(L, error, math.log(error)) for L, error in table], title="truncation error")

    lengths, errors = np.array(table).T
    correlation = float(np.corrcoef(lengths, np.log(errors))[0, 1])
    decreasing = bool(np.all(np.diff(errors) < 0))

    outer = block.get("decay_outer", experiment.domain.outer)
    decay = []
    for sigma_f in block["decay_sigmas"]:
        n_nodes = int(round((outer - inner) / block["h"])) + 1
        report = reference.decay_bound_check(reference.solve_pb_1d(nu, rho_inf, sigma_f, inner, outer, n_nodes))
        decay.append((sigma_f, int(report.holds), report.max_violation, report.worst_node))
    if decay:
        output.write_table("decay.csv", ("sigma_f", "holds", "max_violation", "worst_node"), decay,
                           title="decay bounds")
    _write_summary(output, [("log_error_correlation", correlation), ("strictly_decreasing", int(decreasing))])
    return f"truncation errors for L={block['L_list']}, log-linear correlation {correlation:.4f}"


def run_kde_planes(experiment, output, executor=None):
    """Planar kernel densities, azimuthal profiles and mirror-symmetry tests of a 3D run.

    With ``repetitions`` > 1 the frames of independent runs are pooled, and the
    symmetry tests use the last frame of every run.
    """
    experiment.require("N_plus", "Q_plus")
    domain = experiment.domain
    if domain.dimension != 3:
        raise ConfigError("kde-planes needs a 3D shell", {"domain": {"dimension": ["Must be 3."]}})
    block = experiment.config.get("kde", {"planes": ["xOy", "yOz", "r-phi"], "grid_points": 81})
    repetitions = experiment.config.get("repetitions", 1)
    runs = [run_frames for _, run_frames in _map(executor, partial(_simulate_frames, experiment),
                                                 list(range(repetitions)))]
    frames = [frame for run_frames in runs for frame in run_frames]
    n = block["grid_points"]
    r_max = block.get("r_max", domain.outer)
    bandwidth = block.get("bandwidth", "scott")

    for plane in block["planes"]:
        if plane == "r-phi":
            u, v = np.linspace(domain.inner, r_max, n), np.linspace(-np.pi, np.pi, n)
        else:
            u = v = np.linspace(-domain.outer, domain.outer, n)
        for sign, tag in ((1, "plus"), (-1, "minus")):
            density = observables.planar_kde(frames, sign, plane, u, v, bandwidth)
            output.write_grid(f"kde_{plane}_{tag}.csv", u, v, density, title=f"{plane} density, species {sign:+d}")

    centers, plus = observables.angular_profile(frames, 1, r_max)
    _, minus = observables.angular_profile(frames, -1, r_max)
    output.write_table("angular.csv", ("phi", "density_plus", "density_minus"), zip(centers, plus, minus),
                       title=f"azimuthal density for |x| <= {r_max}")

    last = [run_frames[-1] for run_frames in runs]
    phi_max_minus, _ = observables.angular_extrema(centers, minus)
    _, phi_min_plus = observables.angular_extrema(centers, plus)
    rows = [("repetitions", repetitions), ("phi_max_minus", phi_max_minus), ("phi_min_plus", phi_min_plus)]
    for sign, tag in ((1, "plus"), (-1, "minus")):
        for axis, name in ((0, "x"), (2, "z")):
            rows.append((f"symmetry_p_{name}_{tag}", observables.mirror_symmetry_pvalue(last, sign, axis)))
    _write_summary(output, rows)
    return f"kernel densities on {', '.join(block['planes'])}"


# Keyed by the names the config serializer accepts, in the same order.
PIPELINES = dict(zip(PIPELINE_NAMES, (run_simulate, run_fd_solve, run_iterate_q, run_capacitance, run_convergence,
                                      run_truncation_study, run_kde_planes)))


# ---------------------- RUNNING ----------------------- #

@dataclass
class RunPlan:
    pipeline: str
    config: dict
    manifest: dict
    target: Path

    @property
    def manifest_hash(self):
        return self.manifest["manifest_hash"]


def plan_run(config, pipeline=None, seed=None, out=None):
    """Fix pipeline, seed and output directory of a validated config and compute its manifest."""
    options = solver_settings()
    pipeline = pipeline or config.get("pipeline")
    if pipeline not in PIPELINES:
        raise ConfigError(f"unknown pipeline {pipeline!r}; choose one of {', '.join(PIPELINES)}",
                          {"pipeline": ["Unknown or missing pipeline."]})
    config = {**config, "pipeline": pipeline}
    if seed is not None:
        config["seed"] = seed
    manifest = build_manifest(pipeline, config, config["seed"], options['CODE_VERSION'])
    name = f"{config.get('preset', pipeline)}-seed{config['seed']}"
    target = Path(out) if out else Path(options['OUTPUT_DIR']) / name
    return RunPlan(pipeline, config, manifest, target)


def execute(plan, threads=None):
    """Run a planned experiment; returns a one-line summary. Outputs appear only on success."""
    options = solver_settings()
    threads = threads or options['THREADS']
    experiment = Experiment.from_config(plan.config, options)
    logger.info("Starting %s (seed %d, manifest %s)", plan.pipeline, experiment.seed, plan.manifest_hash)
    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        with RunOutput(plan.target, plan.manifest) as output:
            message = PIPELINES[plan.pipeline](experiment, output, executor)
    finally:
        if executor is not None:
            executor.shutdown()
    logger.info("Finished %s: %s", plan.pipeline, message)
    return message


def run_experiment(config, pipeline=None, seed=None, out=None, threads=None):
    plan = plan_run(config, pipeline, seed, out)
    return plan, execute(plan, threads)
