"""Explicit first integrals of the cohomogeneity-one reductions.

``G`` solves the SO(3)xSO(2) system, ``F`` the SU(2) system.  ``g_C`` and
``f_C`` are the graph functions with ``G = C <=> 2 x1^2 - 1 = g_C(a1)`` and
``F = C <=> 1 - 3 x5 = f_C(r)``.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError, NoRootError

QUAD_EPS = 1e-13
ROOT_XTOL = 1e-15


@contextmanager
def quad_tolerance(eps: float):
    """Temporarily change the absolute and relative quadrature tolerance."""
    global QUAD_EPS
    if not eps > 0:
        raise ValueError("quadrature tolerance must be positive")
    old, QUAD_EPS = QUAD_EPS, eps
    try:
        yield
    finally:
        QUAD_EPS = old


def _check_lam(lam: float) -> None:
    if not lam >= 0:
        raise DomainError("lambda must be non-negative")


def _quad(f, b: float) -> float:
    if b == 0:
        return 0.0
    if abs(b) < 1e-8:
        # midpoint rule, exact to rounding on such short intervals
        return f(0.5 * b) * b
    val, _ = quad(f, 0.0, b, epsabs=QUAD_EPS, epsrel=QUAD_EPS, limit=200)
    return val


def g_integrand(x, lam):
    return (x * x + 2.0 * lam) / (lam + x * x) ** 0.75


def f_integrand(x, lam):
    return 2.0 * lam / (lam + x**4) ** 0.875


def G_integral(a1: float, lam: float) -> float:
    """``(1/2) int_0^a1 (x^2 + 2 lam) / (lam + x^2)^(3/4) dx``."""
    _check_lam(lam)
    return 0.5 * _quad(lambda x: g_integrand(x, lam), a1)


def F_integral(r: float, lam: float) -> float:
    """``int_0^sqrt(r) 2 lam / (lam + x^4)^(7/8) dx``."""
    _check_lam(lam)
    if r < 0:
        raise DomainError("r must be non-negative")
    return _quad(lambda x: f_integrand(x, lam), np.sqrt(r))


def G_raw(a1: float, x1: float, lam: float) -> float:
    # no domain check; continuation steps may probe x1 > 1
    return a1 * (lam + a1 * a1) ** 0.25 * (2.0 * x1 * x1 - 1.0) + G_integral(a1, lam)


def F_raw(r: float, x5: float, lam: float) -> float:
    return (1.0 - 3.0 * x5) * (lam + r * r) ** 0.125 * np.sqrt(r) + F_integral(r, lam)


def G_eval(a1: float, x1: float, lam: float) -> float:
    """First integral of the SO(3)xSO(2) system on ``R x (0, 1]``."""
    if not 0.0 < x1 <= 1.0:
        raise DomainError("G is defined for 0 < x1 <= 1")
    return G_raw(a1, x1, lam)


def F_eval(r: float, x5: float, lam: float) -> float:
    """First integral of the SU(2) system on ``[0, inf) x [-1, 1]``."""
    if r < 0:
        raise DomainError("F is defined for r >= 0")
    if not -1.0 <= x5 <= 1.0:
        raise DomainError("F is defined for -1 <= x5 <= 1")
    return F_raw(r, x5, lam)


def G_gradient(a1: float, x1: float, lam: float) -> np.ndarray:
    """``(dG/da1, dG/dx1)``."""
    q = lam + a1 * a1
    da = (-(a1 * a1) + (2.0 * lam + 3.0 * a1 * a1) * x1 * x1) / q**0.75
    dx = 4.0 * a1 * q**0.25 * x1
    return np.array([da, dx])


def F_gradient(r: float, x5: float, lam: float) -> np.ndarray:
    """``(dF/dr, dF/dx5)``; ``dF/dr`` is infinite at ``r = 0``."""
    q = lam + r * r
    dx5 = -3.0 * q**0.125 * np.sqrt(r)
    dr = 0.25 / np.sqrt(r) / q**0.875 * ((1.0 - 3.0 * x5) * (3.0 * r * r + 2.0 * lam) + 4.0 * lam)
    return np.array([dr, dx5])


def g_C(a1: float, C: float, lam: float) -> float:
    if a1 == 0:
        raise DomainError("g_C is defined for a1 != 0")
    return (C - G_integral(a1, lam)) / (a1 * (lam + a1 * a1) ** 0.25)


def f_C(r: float, C: float, lam: float) -> float:
    if not r > 0:
        raise DomainError("f_C is defined for r > 0")
    return (C - F_integral(r, lam)) / (np.sqrt(r) * (lam + r * r) ** 0.125)


def G_at_origin_limit(a1: float, lam: float) -> float:
    """``lim_{x1 -> 0} G(a1, x1)``."""
    return G_raw(a1, 0.0, lam)


def _bracket_root(fun, start: float, direction: float):
    # expand [0, b] geometrically until fun changes sign
    lo, hi = 0.0, start * direction
    flo = fun(lo)
    for _ in range(200):
        fhi = fun(hi)
        if np.sign(fhi) != np.sign(flo) or fhi == 0:
            return (lo, hi) if lo < hi else (hi, lo)
        lo, flo, hi = hi, fhi, 2.0 * hi
    raise NoRootError("no sign change found")


def _solve(fun, start: float, direction: float) -> float:
    a, b = _bracket_root(fun, start, direction)
    return brentq(fun, a, b, xtol=ROOT_XTOL, rtol=1e-15, maxiter=500)


def alpha_C(case: str, C: float, lam: float) -> float:
    """Boundary root: ``G(alpha, 1) = C`` (SO3xSO2) or ``F(alpha, -1) = C`` with ``C > 0`` (SU2)."""
    case = case.upper()
    if case == "SO3XSO2":
        if C == 0:
            return 0.0
        return _solve(lambda a: G_raw(a, 1.0, lam) - C, 1.0, np.sign(C))
    if case == "SU2":
        if not C > 0:
            raise NoRootError("alpha_C needs C > 0")
        return _solve(lambda r: F_raw(r, -1.0, lam) - C, 1.0, 1.0)
    raise ValueError(f"no alpha_C for {case}")


def beta_C(case: str, C: float, lam: float) -> float:
    """Boundary root: ``lim_{x1->0} G(beta, x1) = C`` (SO3xSO2) or ``F(beta, 1) = C`` with ``C < 0`` (SU2)."""
    case = case.upper()
    if case == "SO3XSO2":
        if C == 0:
            return 0.0
        return _solve(lambda a: G_raw(a, 0.0, lam) - C, 1.0, -np.sign(C))
    if case == "SU2":
        if not C < 0:
            raise NoRootError("beta_C needs C < 0")
        return _solve(lambda r: F_raw(r, 1.0, lam) - C, 1.0, 1.0)
    raise ValueError(f"no beta_C for {case}")


def roots_alpha_beta(case: str, C: float, lam: float) -> float:
    """The single boundary root the case and sign of ``C`` call for.

    SO3xSO2 returns ``alpha_C`` (any ``C``).  SU2 returns ``alpha_C`` for
    ``C > 0`` and ``beta_C`` for ``C < 0``; ``C = 0`` has no root.
    """
    if case.upper() == "SU2":
        if C > 0:
            return alpha_C(case, C, lam)
        if C < 0:
            return beta_C(case, C, lam)
        raise NoRootError("the SU(2) level set with C = 0 meets r = 0 and needs no root")
    return alpha_C(case, C, lam)


# -- lambda = 0 asymptotes -------------------------------------------------------------


def G_cone(a1: float, x1: float) -> float:
    return a1 * np.sqrt(abs(a1)) * (2.0 * x1 * x1 - 2.0 / 3.0)


def F_cone(r: float, x5: float) -> float:
    return (1.0 - 3.0 * x5) * r**0.75
