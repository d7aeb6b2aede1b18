"""Normal forms of quasi-periodic tori for dissipative vector fields."""

import json as _json

from . import _core
from ._core import FourierSeries, NumericalError, SpinOrbitProblem, integrate_spin_orbit, rotation_number

__all__ = [
    "FourierSeries",
    "NumericalError",
    "SpinOrbitProblem",
    "check_diophantine",
    "eliminate_nu",
    "integrate_spin_orbit",
    "newton_solve",
    "rotation_number",
    "spin_orbit_field",
    "sweep",
    "translated_torus",
]

GOLDEN_MEAN = (5**0.5 - 1) / 2


def check_diophantine(alpha, gamma=1e-2, tau=2.0, kmax=200, eigs=()):
    """Scan the Diophantine conditions up to |k|_1 <= kmax; returns the report as a dict."""
    return _json.loads(_core.check_diophantine(list(alpha), gamma, tau, kmax, list(eigs)))


def translated_torus(problem):
    """Translated-torus normal form at the problem's nu: b, b_time and the residual history."""
    return _json.loads(_core.translated_torus(problem))


def eliminate_nu(problem, b_tol=1e-11):
    """Drive frequency nu* at which the translation b vanishes."""
    return _json.loads(_core.eliminate_nu(problem, b_tol))


def sweep(problem, epsilon_grid, eta_grid, jobs=1):
    """One record per (epsilon, eta), row-major in epsilon; failures carry an 'error' kind."""
    return _json.loads(_core.sweep(problem, list(epsilon_grid), list(eta_grid), jobs))


def spin_orbit_field(problem):
    """The extended spin-orbit field as a JSON-compatible dict."""
    return _json.loads(_core.spin_orbit_field(problem))


def newton_solve(variant, v, u0, max_iters=30):
    """Newton scheme on fields given as dicts; the result includes the conjugacy residual."""
    return _json.loads(_core.newton_solve(variant, _json.dumps(v), _json.dumps(u0), max_iters))
