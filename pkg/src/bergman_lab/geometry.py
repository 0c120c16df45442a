"""Radial Kahler potentials on C and torus-invariant model geometries.

A rotation-invariant potential is a function of x = |z|^2 with Kahler form
omega = f * i dz ^ dzbar, where f = phi_x + x*phi_xx.  The moment map of the
circle action, normalized to vanish at the origin, is

    mu(x) = integral_0^x f = x * phi_x(x),

and in the logarithmic variable t = -log x one has phi_t = -mu and
phi_tt = x*f.  Model geometries are built from one or several such factors;
nu is the moment map of the diagonal circle action, the sum of the factor
moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import brentq

from .errors import ConfigError, DomainExceeded, NonPositiveCurvature

#: Stand-in for an unbounded domain; built-in potentials are valid everywhere.
UNBOUNDED_X_MAX = 1.0e6

#: Grid resolution for the construction-time positivity check of f.
_POSITIVITY_GRID_SIZE = 4096


@dataclass(frozen=True)
class RadialPotential:
    """A radial potential phi(x), x = |z|^2, with closed-form derivatives.

    All evaluators are vectorized over numpy arrays.  ``f`` is the Laplacian
    density phi_x + x*phi_xx; ``f_x`` and ``f_xx`` are its x-derivatives,
    needed when f itself serves as the integration weight.
    """

    name: str
    phi: Callable
    phi_x: Callable
    phi_xx: Callable
    f: Callable
    f_x: Callable
    f_xx: Callable
    x_max: float = UNBOUNDED_X_MAX
    unbounded: bool = True

    def mu(self, x):
        """Moment map mu = x * phi_x, without domain checks."""
        x = np.asarray(x, dtype=float)
        return x * self.phi_x(x)

    def phi_from_t(self, t):
        """phi as a function of t = -log x."""
        return self.phi(np.exp(-np.asarray(t, dtype=float)))

    def __repr__(self):
        return f"RadialPotential({self.name!r}, x_max={self.x_max:g})"


@dataclass(frozen=True)
class RadialWeight:
    """Positive radial weight f1(x) with first and second derivative."""

    name: str
    value: Callable
    dx: Callable
    dxx: Callable

    def __repr__(self):
        return f"RadialWeight({self.name!r})"


def unit_weight() -> RadialWeight:
    """The constant weight f1 = 1."""
    one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return RadialWeight("unit", one, zero, zero)


def volume_weight(potential: RadialPotential) -> RadialWeight:
    """The weight induced by the Kahler form itself, f1 = f."""
    return RadialWeight(f"f[{potential.name}]", potential.f, potential.f_x, potential.f_xx)


def _chebyshev_grid(x_max: float, n: int = _POSITIVITY_GRID_SIZE) -> np.ndarray:
    # Chebyshev-Lobatto points mapped to [0, x_max]; clusters at both ends.
    j = np.arange(n)
    return 0.5 * x_max * (1.0 - np.cos(np.pi * j / (n - 1)))


def _check_positive_f(pot: RadialPotential) -> None:
    grid = _chebyshev_grid(pot.x_max)
    vals = pot.f(grid)
    bad = np.nonzero(vals <= 0.0)[0]
    if bad.size:
        raise NonPositiveCurvature(grid[bad[0]])


def _bargmann_fock() -> RadialPotential:
    one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return RadialPotential(
        name="bargmann-fock",
        phi=lambda x: np.asarray(x, dtype=float),
        phi_x=one,
        phi_xx=zero,
        f=one,
        f_x=zero,
        f_xx=zero,
    )


def _fubini_study() -> RadialPotential:
    def phi(x):
        return np.log1p(np.asarray(x, dtype=float))

    return RadialPotential(
        name="fubini-study",
        phi=phi,
        phi_x=lambda x: 1.0 / (1.0 + np.asarray(x, dtype=float)),
        phi_xx=lambda x: -1.0 / (1.0 + np.asarray(x, dtype=float)) ** 2,
        f=lambda x: 1.0 / (1.0 + np.asarray(x, dtype=float)) ** 2,
        f_x=lambda x: -2.0 / (1.0 + np.asarray(x, dtype=float)) ** 3,
        f_xx=lambda x: 6.0 / (1.0 + np.asarray(x, dtype=float)) ** 4,
    )


def _polynomial(coeffs: Sequence[float], x_max: float) -> RadialPotential:
    # phi = x + sum_{j>=2} c_j x^j; coeffs lists c_2, c_3, ...
    c = np.asarray(coeffs, dtype=float)
    phi_c = np.concatenate(([0.0, 1.0], c))
    phi_x_c = npoly.polyder(phi_c)
    phi_xx_c = npoly.polyder(phi_x_c)
    # f = phi_x + x*phi_xx = 1 + sum_j j^2 c_j x^{j-1}
    j = np.arange(2, 2 + c.size)
    f_c = np.concatenate(([1.0], j * j * c))
    f_x_c = npoly.polyder(f_c)
    f_xx_c = npoly.polyder(f_x_c)

    def ev(cv):
        return lambda x: npoly.polyval(np.asarray(x, dtype=float), cv)

    return RadialPotential(
        name="poly[" + ",".join(f"{v:g}" for v in c) + "]",
        phi=ev(phi_c),
        phi_x=ev(phi_x_c),
        phi_xx=ev(phi_xx_c),
        f=ev(f_c),
        f_x=ev(f_x_c),
        f_xx=ev(f_xx_c),
        x_max=float(x_max),
        unbounded=False,
    )


def make_potential(spec, x_max: float | None = None) -> RadialPotential:
    """Build a radial potential from a built-in name or polynomial coefficients.

    Parameters
    ----------
    spec : str or sequence of float
        ``"bargmann-fock"`` (phi = x), ``"fubini-study"`` (phi = log(1+x)),
        or coefficients (c_2, c_3, ...) for phi = x + sum c_j x^j.
    x_max : float, optional
        Domain of validity.  Mandatory for polynomial specs; ignored for the
        built-ins, which are valid everywhere.

    Raises
    ------
    NonPositiveCurvature
        If f = phi_x + x*phi_xx fails to stay positive on [0, x_max]; the
        error names the first offending grid point.  The check runs on a
        4096-point Chebyshev-spaced grid, a validation heuristic rather than
        a proof of positivity.
    """
    if isinstance(spec, str):
        key = spec.strip().lower()
        if key == "bargmann-fock":
            pot = _bargmann_fock()
        elif key == "fubini-study":
            pot = _fubini_study()
        else:
            raise ConfigError(f"unknown potential {spec!r}")
    else:
        if x_max is None:
            raise ConfigError("polynomial potentials require x_max")
        if x_max <= 0:
            raise ConfigError("x_max must be positive")
        pot = _polynomial(spec, x_max)
    _check_positive_f(pot)
    return pot


def moment_map(potential: RadialPotential, x):
    """Moment map mu(x) = x * phi_x(x) = integral_0^x f, with domain check."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainExceeded("x must be nonnegative")
    if np.any(x > potential.x_max):
        raise DomainExceeded(
            f"x = {float(np.max(x)):g} exceeds x_max = {potential.x_max:g}"
        )
    out = potential.mu(x)
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def x_of_mu(potential: RadialPotential, target: float, x_hi: float | None = None) -> float:
    """Invert the (strictly increasing) moment map, mu(x) = target.

    Returns +inf when the target is never attained on the potential's domain
    (possible for bounded moment maps such as Fubini-Study, where mu < 1).
    """
    if target < 0:
        raise DomainExceeded("mu targets must be nonnegative")
    if target == 0.0:
        return 0.0
    hi = 1.0 if x_hi is None else x_hi
    cap = potential.x_max if not potential.unbounded else 1.0e280
    while potential.mu(hi) < target:
        hi *= 2.0
        if hi > cap:
            if not potential.unbounded:
                return math.inf
            return math.inf
    return brentq(lambda x: potential.mu(x) - target, 0.0, hi, xtol=1e-300, rtol=4e-16, maxiter=300)


@dataclass(frozen=True)
class ModelGeometry:
    """A model geometry: a single C fiber, a product C^r, or CP^1.

    ``factors`` holds one radial potential per torus factor and ``weights``
    the per-factor integration weight f1 (the volume density f by default).
    ``nu`` is the diagonal moment map, the sum of the factor moments.
    """

    kind: str  # "fiber-C" | "product-C^r" | "CP1"
    factors: tuple
    weights: tuple

    def __post_init__(self):
        if self.kind not in ("fiber-C", "product-C^r", "CP1"):
            raise ConfigError(f"unknown geometry kind {self.kind!r}")
        if len(self.factors) < 1:
            raise ConfigError("a geometry needs at least one factor")
        if self.kind in ("fiber-C", "CP1") and len(self.factors) != 1:
            raise ConfigError(f"{self.kind} has exactly one factor")
        if self.kind == "CP1" and self.factors[0].name != "fubini-study":
            raise ConfigError("CP1 carries the Fubini-Study potential")
        if len(self.weights) != len(self.factors):
            raise ConfigError("one weight per factor required")

    @property
    def r(self) -> int:
        """Number of torus factors (the codimension m - n)."""
        return len(self.factors)

    @staticmethod
    def fiber(potential: RadialPotential, weight: RadialWeight | None = None) -> "ModelGeometry":
        w = volume_weight(potential) if weight is None else weight
        return ModelGeometry("fiber-C", (potential,), (w,))

    @staticmethod
    def product(potentials: Sequence[RadialPotential], weights=None) -> "ModelGeometry":
        pots = tuple(potentials)
        if weights is None:
            ws = tuple(volume_weight(p) for p in pots)
        else:
            ws = tuple(weights)
        return ModelGeometry("product-C^r", pots, ws)

    @staticmethod
    def cp1() -> "ModelGeometry":
        pot = make_potential("fubini-study")
        return ModelGeometry("CP1", (pot,), (volume_weight(pot),))


def diagonal_moment(geometry: ModelGeometry, x_vec):
    """Diagonal moment nu = sum_i mu_i(x_i); vanishes exactly at x_vec = 0.

    ``x_vec`` is a scalar for one-factor geometries, otherwise a length-r
    sequence (or an (n, r) array of points).
    """
    x = np.atleast_1d(np.asarray(x_vec, dtype=float))
    if geometry.r == 1:
        return moment_map(geometry.factors[0], x_vec)
    if x.ndim == 1:
        if x.size != geometry.r:
            raise ConfigError(f"expected {geometry.r} coordinates, got {x.size}")
        return float(sum(moment_map(p, xi) for p, xi in zip(geometry.factors, x)))
    if x.shape[1] != geometry.r:
        raise ConfigError(f"expected points with {geometry.r} coordinates")
    cols = [np.asarray(moment_map(p, x[:, i])) for i, p in enumerate(geometry.factors)]
    return np.sum(cols, axis=0)
