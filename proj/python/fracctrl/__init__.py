"""Synthesis of minimum-energy terminal controls for Caputo fractional systems.

The heavy lifting lives in the compiled extension ``fracctrl._core``; this
package re-exports it and adds a small convenience wrapper that accepts
problem dictionaries.
"""

import json as _json

from ._core import (  # noqa: F401
    InputError,
    IoError,
    NonConvergenceError,
    NotControllableError,
    beta,
    frac_derivative,
    frac_integral,
    gamma,
    gauss_jacobi,
    log_gamma,
    ml,
    rgamma,
    run_linear,
    run_nonlinear,
)

__version__ = "0.1.0"

__all__ = [
    "InputError",
    "IoError",
    "NonConvergenceError",
    "NotControllableError",
    "beta",
    "frac_derivative",
    "frac_integral",
    "gamma",
    "gauss_jacobi",
    "log_gamma",
    "ml",
    "rgamma",
    "run",
    "run_linear",
    "run_nonlinear",
]


def run(problem, model="nonlinear"):
    """Synthesize a terminal control for ``problem`` (dict or JSON text).

    Returns a dict with ``t``, ``y``, ``u`` arrays and the parsed ``report``.
    """
    text = problem if isinstance(problem, str) else _json.dumps(problem)
    if model == "nonlinear":
        raw = run_nonlinear(text)
    elif model == "linear":
        raw = run_linear(text)
    else:
        raise ValueError('model must be "linear" or "nonlinear"')
    out = dict(raw)
    out["report"] = _json.loads(out.pop("report_json"))
    return out
