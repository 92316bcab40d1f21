"""
Named experiment blocks.

Each preset is a complete configuration in the JSON shape accepted by
:class:`solver.serializers.ExperimentConfigSerializer`. The ``-desk`` variants
shrink particle counts and repetitions to laptop scale.
"""
import copy

INTERVAL_15 = {"dimension": 1, "kind": "interval", "inner": 1.0, "outer": 15.0}
INTERVAL_30 = {"dimension": 1, "kind": "interval", "inner": 1.0, "outer": 30.0}
SHELL_1_10 = {"dimension": 3, "kind": "shell", "inner": 1.0, "outer": 10.0}


def _fig2(N_plus):
    return {
        "pipeline": "simulate",
        "domain": INTERVAL_15,
        "params": {"nu": 1.0, "Q_f": 2.0, "Q_plus": 1.0, "N_plus": N_plus, "tau": 0.01, "T": 50.0,
                   "init": [7.0, 8.0]},
        "scheme": {"variant": "reflection"},
    }


def _fig3(N_plus, tau, T):
    return {
        "pipeline": "simulate",
        "domain": INTERVAL_15,
        "params": {"nu": 0.01, "Q_f": 0.04, "Q_plus": 0.4, "N_plus": N_plus, "tau": tau, "T": T,
                   "init": [7.0, 8.0]},
        "scheme": {"variant": "reflection"},
        "reference": {"n_nodes": 2801},
    }


def _fig4(grid, repetitions):
    block = _fig2(max(grid))
    block["pipeline"] = "convergence"
    block["convergence"] = {"N_plus_grid": grid, "repetitions": repetitions,
                            "test_functions": ["f1", "f2", "f3", "f4"]}
    return block


def _fig7(nu, Q_f, tau, T=20.0):
    return {
        "pipeline": "simulate",
        "domain": SHELL_1_10,
        "params": {"nu": nu, "Q_f": Q_f, "Q_plus": 20.0, "N_plus": 10000, "tau": tau, "T": T,
                   "init": [1.0, 10.0]},
        "scheme": {"variant": "reflection"},
        "bins": 60,
    }


PRESETS = {
    "fig2": _fig2(100000),
    "fig2-desk": _fig2(10000),
    "fig3": _fig3(100000, 0.0002, 50.0),
    "fig3-desk": _fig3(10000, 0.001, 30.0),
    "fig4": _fig4([100, 1000, 10000, 100000], 100),
    "fig4-desk": _fig4([100, 1000, 10000], 50),
    "fig5": {
        "pipeline": "iterate-q",
        "domain": INTERVAL_30,
        "params": {"nu": 1.0, "Q_f": 2.0, "rho_inf": 0.0218, "q": 1e-4, "tau": 0.1, "init": [7.0, 8.0]},
        "scheme": {"variant": "reflection"},
        "iteration": {"T_c": 50.0, "epsilon": 1e-5, "max_iters": 20, "h": 0.5, "Q_plus0": 1.0},
    },
    "fig6": {
        "pipeline": "capacitance",
        "domain": INTERVAL_30,
        "params": {"nu": 1.0, "Q_f": 2.0, "rho_inf": 0.0218, "q": 1e-4, "tau": 0.1, "init": [7.0, 8.0]},
        "scheme": {"variant": "reflection"},
        "iteration": {"T_c": 50.0, "epsilon": 1e-5, "max_iters": 20, "h": 0.5, "Q_plus0": 1.0},
        "capacitance": {"Q_f_grid": [1.0, 1.5, 2.0, 2.5, 3.0]},
    },
    "fig7-nu1": _fig7(1.0, 10.0, 0.01),
    "fig7-nu0.1": _fig7(0.1, 1.0, 0.001),
    "fig7-nu0.01": _fig7(0.01, 0.1, 0.0001),
    "fig7-desk": _fig7(1.0, 10.0, 0.01),
    "fig8": {
        "pipeline": "capacitance",
        "domain": SHELL_1_10,
        "params": {"nu": 1.0, "Q_f": 10.0, "rho_inf": 0.005, "q": 1e-3, "tau": 0.01, "init": [1.0, 10.0]},
        "scheme": {"variant": "reflection"},
        "iteration": {"T_c": 40.0, "epsilon": 1e-5, "max_iters": 20, "h": 1.0, "Q_plus0": 10.0},
        "capacitance": {"Q_f_grid": [4.0, 6.0, 8.0, 10.0, 12.0]},
        "bins": 60,
    },
    "fig9": {
        "pipeline": "kde-planes",
        "domain": {"dimension": 3, "kind": "shell", "inner": 2.0, "outer": 10.0},
        "params": {"nu": 1.0, "Q_f": 15.0, "Q_plus": 10.0, "N_plus": 10000, "tau": 0.01, "T": 20.0,
                   "init": [2.0, 10.0], "x_c": [0.0, 1.5, 0.0]},
        "scheme": {"variant": "reflection"},
        "kde": {"planes": ["xOy", "yOz", "r-phi"], "grid_points": 81, "r_max": 3.0},
        "bins": 60,
    },
    "truncation": {
        "pipeline": "truncation-study",
        "domain": {"dimension": 1, "kind": "interval", "inner": 1.0, "outer": 40.0},
        "params": {"nu": 1.0, "Q_f": 2.0, "rho_inf": 0.0218, "tau": 0.01},
        "truncation": {"L_list": [5.0, 10.0, 15.0, 20.0], "L_ref": 40.0, "h": 0.01,
                       "decay_sigmas": [0.1, 0.5, 1.0], "decay_outer": 30.0},
    },
}


def preset_ids():
    return sorted(PRESETS)


def get_preset(name):
    """Deep copy of a preset block; ``KeyError`` for unknown ids."""
    return copy.deepcopy(PRESETS[name])


def merge(base, overrides):
    """Recursive dict merge; values of ``overrides`` win, nested dicts merge key by key."""
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged
