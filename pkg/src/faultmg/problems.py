"""Built-in Poisson problems on the unit cube.

A problem is a pair of callables over coordinate arrays: Dirichlet data
``g`` and source ``f``.  Both are evaluated elementwise, so re-evaluating
them on any index subset reproduces the original values bitwise; fault
injection relies on that to regenerate lost right-hand-side data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError
from .fields import FieldVector, sync_ghosts
from .hierarchy import BOUNDARY, GridHierarchy


@dataclass(frozen=True)
class PoissonProblem:
    name: str
    g: Callable          # Dirichlet boundary data g(x, y, z)
    f: Callable          # source term f(x, y, z)


def _zero(x, y, z):
    return np.zeros_like(x)


def _harmonic_poly_g(x, y, z):
    # harmonic: Laplacian of x^3 - 3 x y^2 vanishes, as does 2z^2 - x^2 - y^2
    return x ** 3 - 3.0 * x * y ** 2 + 2.0 * z ** 2 - x ** 2 - y ** 2 + 0.5


def _sine_f(x, y, z):
    return (3.0 * np.pi ** 2 * np.sin(np.pi * x) * np.sin(np.pi * y)
            * np.sin(np.pi * z))


BUILTIN_PROBLEMS = {
    # zero source, harmonic polynomial boundary data (residual driven
    # purely by the boundary, like the Laplace model setup)
    "harmonic_poly": PoissonProblem("harmonic_poly", _harmonic_poly_g, _zero),
    # manufactured solution sin(pi x) sin(pi y) sin(pi z) with g = 0
    "manufactured_sine": PoissonProblem("manufactured_sine", _zero, _sine_f),
    # linear solution, reproduced exactly by the stencil; handy in tests
    "linear": PoissonProblem("linear", lambda x, y, z: x + 2.0 * y - 0.5 * z,
                             _zero),
}


def get_problem(name: str) -> PoissonProblem:
    try:
        return BUILTIN_PROBLEMS[name]
    except KeyError:
        raise ConfigError(
            f"problem: unknown problem {name!r}; choose from "
            f"{sorted(BUILTIN_PROBLEMS)}") from None


def initial_field(h: GridHierarchy, problem: PoissonProblem,
                  initial: str = "zero", seed: int = 0) -> FieldVector:
    """Fresh iterate: zeros (or seeded noise) inside, g on the boundary."""
    u = FieldVector(h)
    fine = h.finest
    lv = h.levels[fine]
    arr = u.levels[fine]
    if initial == "random":
        rng = np.random.default_rng(seed)
        arr[:] = rng.standard_normal(lv.n_nodes)
    elif initial != "zero":
        raise ConfigError(f"initial_guess: unknown kind {initial!r}")
    bnd = np.flatnonzero(lv.cls == BOUNDARY)
    x, y, z = lv.coords(bnd)
    arr[bnd] = problem.g(x, y, z)
    if initial == "random":
        # noise only on unknowns; boundary keeps exact data
        pass
    sync_ghosts(h, u, fine)
    return u


def rhs_field(h: GridHierarchy, problem: PoissonProblem) -> np.ndarray:
    """Finest-level source values on the masters (zero on Dirichlet slots)."""
    lv = h.levels[h.finest]
    f = np.zeros(lv.n_nodes)
    idx = lv.non_dirichlet_idx
    x, y, z = lv.coords(idx)
    f[idx] = problem.f(x, y, z)
    return f
