"""Named experiment configurations and the configuration schema."""

from __future__ import annotations

import copy

FLOW = {"dt_init": 1e-3, "dt_policy": "fixed"}

PRESETS = {
    "example-5-1": {
        "pipeline": "example-5-1",
        "geometry": {"V": 2.0, "grid": {"s_min": -14.0, "s_max": 10.0, "n_points": 2049}},
        "class_path": {"eta": "zero"},
        "initial_data": {"kind": "example", "j_values": [1, 10, 100]},
        "flow": FLOW,
        "params": {"times": [0.25, 0.5, 0.75], "error_tol": 5e-3, "halving_band": 0.25,
                   "divergence": {"j_values": [10, 100, 1000], "t": 0.5, "probe_s": 0.0,
                                  "variation_tol": 0.1}},
        "checks": ["exact_regression", "tmax_obstruction"],
    },
    "lelong-decay": {
        "pipeline": "lelong-decay",
        "geometry": {"V": 2.0, "grid": {"s_min": -140.0, "s_max": 10.0, "n_points": 3001}},
        "class_path": {"eta": "zero"},
        "initial_data": {"kind": "pole", "a": 0.2, "offset": "linear"},
        "flow": FLOW,
        "params": {"j_values": [40, 80, 120],
                   "times": [0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
                   "window": [-9.0, -5.0], "region": [-12.0, 10.0], "beta": 2.0,
                   "second_family_power": 2.0, "independence_times": [0.1, 0.3],
                   "independence_tol": 1e-4},
        "checks": ["lelong_decay", "lower_5_3", "sequence_independence"],
    },
    "comparison-sweep": {
        "pipeline": "comparison-sweep",
        "geometry": {"V": 2.0, "grid": {"s_min": -14.0, "s_max": 10.0, "n_points": 481}},
        "class_path": {"eta": "zero"},
        "initial_data": {"kind": "random"},
        "flow": FLOW,
        "params": {"pairs": 20, "times": [0.05, 0.1, 0.25, 0.5], "example_j": [1, 10],
                   "example_times": [0.1, 0.3, 0.6, 0.9]},
        "checks": ["comparison", "upper_bound", "derivative_upper"],
    },
    "c0-c2-suite": {
        "pipeline": "c0-c2-suite",
        "geometry": {"V": 2.0, "grid": {"s_min": -95.0, "s_max": 10.0, "n_points": 2101}},
        "class_path": {"eta": "zero"},
        "initial_data": {"kind": "pole", "a": 0.2, "offset": "linear"},
        "flow": FLOW,
        "params": {"j_values": [20, 40, 80], "region": [-12.0, 10.0],
                   "times": [0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
                   "T": 0.25, "S": 0.3, "eps0": 0.04, "eps": 0.05, "beta": 2.0,
                   "alpha": 0.5, "delta": 0.25},
        "checks": ["c0_lower", "dot_lower", "c2", "more_estimates", "hypothesis_guard"],
    },
    "capacity-decay": {
        "pipeline": "capacity-decay",
        "geometry": {"V": 2.0, "grid": {"s_min": -14.0, "s_max": 10.0, "n_points": 241}},
        "class_path": {"eta": "zero"},
        "initial_data": {"kind": "pole", "a": 0.2},
        "flow": FLOW,
        "params": {"nested_pairs": 20, "psi_delta": 0.5,
                   "probe_nodes": [0.0, -2.0, -4.0, -6.0, -8.0, -10.0, -12.0],
                   "kolodziej_C": 1.0, "kolodziej_t0": 0.5, "witness_C": 0.1,
                   "decay_pole": 0.2, "decay_t_max": 6.0, "decay_samples": 121},
        "checks": ["capacity_exactness", "capacity_monotone", "kolodziej_synthetic",
                   "kolodziej_witness", "capacity_extinction"],
    },
    "stability-sweep": {
        "pipeline": "stability-sweep",
        "geometry": {"V": 2.0, "grid": {"s_min": -14.0, "s_max": 10.0, "n_points": 481}},
        "class_path": {"eta": "zero"},
        "initial_data": {"kind": "smooth"},
        "flow": FLOW,
        "params": {"base_weight": 0.8, "base_shift": -1.0, "bump_amplitude": 0.08,
                   "j_values": [1, 2, 4, 8, 16, 32, 64], "t": 0.5, "tol": 1e-3},
        "checks": ["stability"],
    },
    "zero-convergence": {
        "pipeline": "zero-convergence",
        "geometry": {"V": 2.0, "grid": {"s_min": -140.0, "s_max": 10.0, "n_points": 3001}},
        "class_path": {"eta": "zero"},
        "initial_data": {"kind": "pole", "a": 0.2, "offset": "linear"},
        "flow": FLOW,
        "params": {"t0": 0.4, "kmax": 6, "kink_weight": 0.15, "kink_offset": 2.0,
                   "continuous_geometry": {"V": 2.0, "grid": {"s_min": -14.0, "s_max": 10.0,
                                                              "n_points": 481}},
                   "j_values": [40, 80, 120], "limit_region": [-12.0, 10.0],
                   "region": [-3.0, 8.0]},
        "checks": ["zero_convergence_continuous", "zero_convergence_singular"],
    },
    "h-f-convergence": {
        "pipeline": "h-f-convergence",
        "geometry": {"V": 2.0, "grid": {"s_min": -30.0, "s_max": 10.0, "n_points": 801}},
        "class_path": {"eta": "zero"},
        "initial_data": {"kind": "density", "b": 0.5},
        "flow": FLOW,
        "params": {"t0": 0.4, "kmax": 6, "j_values": [10, 100, 1000], "region": [-3.0, 8.0]},
        "checks": ["h_f_convergence"],
    },
}

_GRID = {
    "type": "object",
    "required": ["s_min", "s_max", "n_points"],
    "properties": {"s_min": {"type": "number"}, "s_max": {"type": "number"},
                   "n_points": {"type": "integer", "minimum": 5}},
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["geometry", "initial_data"],
    "properties": {
        "pipeline": {"type": "string"},
        "seed": {"type": "integer"},
        "geometry": {
            "type": "object",
            "required": ["grid"],
            "properties": {"V": {"type": "number", "exclusiveMinimum": 0}, "grid": _GRID},
            "additionalProperties": False,
        },
        "class_path": {
            "type": "object",
            "properties": {"eta": {"enum": ["zero", "ricci"]}},
            "additionalProperties": False,
        },
        "initial_data": {"type": "object", "required": ["kind"],
                         "properties": {"kind": {"type": "string"}}},
        "flow": {
            "type": "object",
            "properties": {
                "dt_init": {"type": "number", "exclusiveMinimum": 0},
                "dt_policy": {"enum": ["fixed", "adaptive"]},
                "newton_tol": {"type": "number", "exclusiveMinimum": 0},
                "newton_max_iter": {"type": "integer", "minimum": 1},
                "positivity_floor": {"type": "number", "minimum": 0},
                "t_end": {"type": ["number", "null"]},
                "target_newton_iters": {"type": "integer", "minimum": 1},
                "dt_min": {"type": "number", "exclusiveMinimum": 0},
                "dt_max": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "params": {"type": "object"},
        "output": {
            "type": "object",
            "properties": {"directory": {"type": "string"},
                           "figures": {"type": "boolean"},
                           "trajectories": {"type": "boolean"}},
            "additionalProperties": False,
        },
        "checks": {"type": "array", "items": {"type": "string"}},
    },
    "additionalProperties": False,
}


def get_preset(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name])


DESCRIPTIONS = {
    "example-5-1": "closed-form regression with dt halving, and divergence when the pole is too strong",
    "lelong-decay": "Lelong number decay of the maximal flow, lower bound, sequence independence",
    "comparison-sweep": "ordering, upper bound and derivative bound on seeded smooth pairs",
    "c0-c2-suite": "fitted C0, time-derivative and C2 estimates under one refinement",
    "capacity-decay": "capacity LP exactness and monotonicity, plus the extinction test",
    "stability-sweep": "stability of the flow under shrinking perturbations of the data",
    "zero-convergence": "dyadic monotone sequence and convergence as t -> 0",
    "h-f-convergence": "convergence as t -> 0 for data with prescribed density",
}


def list_presets() -> dict:
    return dict(DESCRIPTIONS)
