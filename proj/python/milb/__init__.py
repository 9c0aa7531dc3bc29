"""Python front end for the milb C++ core.

Numerical types and kernels are re-exported from the compiled ``_milb``
extension. Experiment configs and run records are plain dicts.
"""

import json

from ._milb import *  # noqa: F401,F403
from ._milb import (
    __version__,
    _aggregate,
    _config_hash,
    _default_config,
    _run_experiment,
)

CURVE_COLUMNS = ("round", "n_labeled", "nll_mean", "nll_min", "nll_max", "nll_std")


def default_config(benchmark="double_well"):
    """Full-scale defaults for ``multimodal``, ``double_well`` or ``ternary``."""
    return json.loads(_default_config(benchmark))


def config_hash(config):
    return _config_hash(json.dumps(config))


def run_experiment(config, seed):
    """Run one active-learning experiment; returns the RunRecord as a dict."""
    return json.loads(_run_experiment(json.dumps(config), int(seed)))


def aggregate(records):
    """Per-round test-NLL statistics across records, as dicts keyed by CURVE_COLUMNS."""
    rows = _aggregate([json.dumps(r) for r in records])
    return [dict(zip(CURVE_COLUMNS, row)) for row in rows]
