"""Rough differential forms on simplices."""

import json

from ._core import (
    RoughformsError,
    boundary,
    catalog,
    commands,
    delta_q_sobolev,
    diameter,
    differentiate,
    eccentricity,
    evaluate,
    gaussian_exponents,
    integrate,
    integrate_product,
    mass,
    point_variance,
    pullback_integrate,
    stokes_residual,
    subdivide,
    subdivision_stats,
    version,
    volume,
)
from ._core import run as _run

__version__ = version()


def run(command, config, seed=None, threads=1, assert_mode=False, out_dir=None, base_dir="."):
    """Run a batch command. `config` is a dict or JSON text; the result and error are parsed."""
    text = config if isinstance(config, str) else json.dumps(config)
    r = _run(command, text, seed, threads, assert_mode, out_dir, base_dir)
    r["result"] = json.loads(r["result"]) if r["result"] else None
    r["error"] = json.loads(r["error"]) if r["error"] else None
    return r
