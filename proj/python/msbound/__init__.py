"""Python front end for the msbound C++ core.

Configs are plain dicts with the same schema as the JSON files read by the
command-line tool.
"""

import json

from . import _msbound
from ._msbound import (
    Error,
    Policy,
    PolicyState,
    classify_stability,
    min_singular_value,
    pseudoinverse,
    reachability_index,
    rotation,
    saturate,
    synth_general,
    synth_orthogonal_stationary,
    synth_random_walk,
    synth_subsampled,
    synth_zero,
    zero_control_moment_oracle,
)

__all__ = [
    "Error", "Policy", "PolicyState", "classify_stability", "min_singular_value",
    "pseudoinverse", "reachability_index", "rotation", "saturate", "synth_general",
    "synth_orthogonal_stationary", "synth_random_walk", "synth_subsampled", "synth_zero",
    "zero_control_moment_oracle", "paper_example_config", "validate_config", "synthesize",
    "monte_carlo", "noiseless_convergence", "run_cli",
]


def paper_example_config():
    return json.loads(_msbound.paper_example_config())


def validate_config(config):
    """Returns the config with every default filled in; raises Error if invalid."""
    return json.loads(_msbound.normalize_config(json.dumps(config)))


def synthesize(config, authority_scale=1.0):
    """Returns (policy, report dict)."""
    policy, report = _msbound.synthesize(json.dumps(config), authority_scale)
    return policy, json.loads(report)


def monte_carlo(config, authority_scale=1.0, threads=0):
    import numpy as np

    raw = _msbound.monte_carlo(json.dumps(config), authority_scale, threads)
    out = {k: np.asarray(raw[k]) for k in ("mean_sq", "stderr_sq", "mean_norm", "max_u_norm", "count")}
    out["summary"] = json.loads(raw["summary"])
    out["boundedness"] = json.loads(raw["boundedness"])
    return out


def noiseless_convergence(config):
    return dict(_msbound.noiseless_convergence(json.dumps(config)))


def run_cli(*args):
    """Runs the msbound command line in-process; returns (exit_code, stdout, stderr)."""
    return _msbound.run_cli([str(a) for a in args])
