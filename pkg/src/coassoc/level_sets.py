"""Level sets of the first integrals, their components and topology labels,
the lambda -> 0 asymptotes and the conical-singularity rate.

Curves live in the reduced parameter planes ``(a1, x1)`` (SO3xSO2) and
``(x5, r)`` (SU2).  The SO(3) level sets ``x4^4 (lam + r^2) = C``,
``x5^4 (lam + r^2) = D``, ``a1 x1 = E`` are parametrised by the fiber radius.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .cohomogeneity import PathState, reduce_so3_system
from .errors import DomainError, NoRootError
from .g2 import G2Params
from .groups import Case
from .solutions import F_cone, F_raw, G_cone, G_raw, alpha_C, beta_C, f_C, g_C

EPS_TRACE = 1e-6
R_MIN = 1e-6
LEVEL_TOL = 1e-9

COLUMNS = {
    Case.SO3xSO2: ("a1", "x1"),
    Case.SU2: ("x5", "r"),
    Case.SO3_STD: ("x1", "x4", "x5", "a1", "a2"),
}


@dataclass(frozen=True, eq=False)
class LevelCurve:
    """One connected piece of a level set, sampled in order."""

    case: Case
    constants: tuple
    lam: float
    stratum: str
    polyline: np.ndarray
    endpoints: tuple[str, str]
    topology: str = ""

    @property
    def columns(self) -> tuple[str, ...]:
        return COLUMNS[self.case]

    def __len__(self) -> int:
        return self.polyline.shape[0]

    def arclength(self) -> np.ndarray:
        steps = np.linalg.norm(np.diff(self.polyline, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(steps)])

    def residuals(self) -> np.ndarray:
        return np.array([level_residual(self.case, self.constants, self.lam, row) for row in self.polyline])

    def states(self, v=(1.0, 0.0, 0.0)) -> list[PathState]:
        """Path states for the cohomogeneity-one solver."""
        if self.case is Case.SO3xSO2:
            return [PathState(Case.SO3xSO2, [x1, a1]) for a1, x1 in self.polyline]
        if self.case is Case.SU2:
            return [PathState(Case.SU2, [x5, r], v) for x5, r in self.polyline]
        return [PathState(Case.SO3_STD, row) for row in self.polyline]


def level_residual(case: Case, constants, lam: float, row) -> float:
    if case is Case.SO3xSO2:
        a1, x1 = row
        return abs(G_raw(a1, x1, lam) - constants[0])
    if case is Case.SU2:
        x5, r = row
        return abs(F_raw(r, x5, lam) - constants[0])
    triple = reduce_so3_system(PathState(Case.SO3_STD, row), G2Params(lam))
    return float(np.max(np.abs(np.array(triple) - np.asarray(constants, dtype=float))))


# -- plane continuation ---------------------------------------------------------------------


def fd_gradient(fun, y: np.ndarray) -> np.ndarray:
    out = np.empty(y.size)
    for i in range(y.size):
        h = 1e-6 * max(abs(y[i]), 1e-3)
        e = np.zeros(y.size)
        e[i] = h
        out[i] = (fun(y + e) - fun(y - e)) / (2 * h)
    return out


@dataclass(frozen=True)
class _Wall:
    index: int
    value: float
    side: int  # +1: domain is y[index] <= value
    label: str
    closed: bool

    def margin(self, y) -> float:
        return self.side * (self.value - y[self.index])


def _correct(fun, y, level, scale, tol):
    for _ in range(30):
        val = fun(y) - level
        if abs(val) <= tol * scale:
            return y
        g = fd_gradient(fun, y)
        gg = g @ g
        if not np.isfinite(gg) or gg == 0:
            return None
        y = y - val * g / gg
        if not np.all(np.isfinite(y)):
            return None
    return y if abs(fun(y) - level) <= 1e3 * tol * scale else None


def _land(fun, level, wall: _Wall, y_in, y_out):
    # solve on the wall for the free coordinate between the two predictions
    free = 1 - wall.index

    def on_wall(t):
        y = np.empty(2)
        y[wall.index] = wall.value
        y[free] = t
        return fun(y) - level

    lo, hi = sorted((y_in[free], y_out[free]))
    width = max(hi - lo, 1e-8)
    for _ in range(40):
        flo, fhi = on_wall(lo), on_wall(hi)
        if not (np.isfinite(flo) and np.isfinite(fhi)):
            return None
        if np.sign(flo) != np.sign(fhi):
            t = brentq(on_wall, lo, hi, xtol=1e-15, rtol=1e-15)
            y = np.empty(2)
            y[wall.index] = wall.value
            y[free] = t
            return y
        lo, hi = lo - width, hi + width
        width *= 2
    return None


def _march(fun, y0, level, direction, walls, step, max_points, tol):
    """Pseudo-arclength continuation from ``y0`` until a wall stops the curve."""
    scale = max(1.0, abs(level))
    pts = [np.asarray(y0, dtype=float)]
    g = fd_gradient(fun, pts[0])
    tangent = direction * np.array([-g[1], g[0]]) / np.linalg.norm(g)
    h = step
    while len(pts) < max_points:
        y = pts[-1]
        g = fd_gradient(fun, y)
        t = np.array([-g[1], g[0]])
        norm = np.linalg.norm(t)
        if not np.isfinite(norm) or norm == 0:
            return pts, "singular point"
        t = t / norm
        if t @ tangent < 0:
            t = -t
        pred = y + h * t
        new = _correct(fun, pred, level, scale, tol)
        if new is None or np.linalg.norm(new - y) > 3 * h:
            h *= 0.5
            if h < 1e-9 * step:
                return pts, "singular point"
            continue
        crossed = [w for w in walls if w.margin(new) < 0]
        if crossed:
            wall = min(crossed, key=lambda w: w.margin(new))
            if wall.closed:
                landed = _land(fun, level, wall, y, new)
                if landed is not None:
                    pts.append(landed)
                    return pts, wall.label
            h *= 0.5
            if h < 1e-6 * step:
                return pts, wall.label
            continue
        tangent = t
        pts.append(new)
        h = min(step, 2 * h)
    return pts, "max points"


def _trace_plane(fun, seed, level, walls, step, max_points, tol=1e-13):
    fwd, end_f = _march(fun, seed, level, 1, walls, step, max_points, tol)
    bwd, end_b = _march(fun, seed, level, -1, walls, step, max_points, tol)
    poly = np.array(bwd[::-1] + fwd[1:])
    return poly, (end_b, end_f)


# -- SO(3) x SO(2) --------------------------------------------------------------------------


def _so3so2_curves(C, lam, resolution, a_max):
    fun = lambda y: G_raw(y[0], y[1], lam)  # noqa: E731
    walls = [
        _Wall(1, 1.0, 1, "x₁ = 1", True),
        _Wall(1, EPS_TRACE, -1, "x₁ → 0", False),
        _Wall(0, a_max, 1, "open end a₁ → ∞", False),
        _Wall(0, -a_max, -1, "open end a₁ → -∞", False),
    ]
    step = np.hypot(a_max, 1.0) / resolution
    curves = []
    for sign, name in ((1, "+a₁"), (-1, "-a₁")):
        seed = _so3so2_seed(C, lam, sign, a_max)
        if seed is None:
            continue
        # G vanishes on a1 = 0 too; keep the branch off that line
        stratum = walls + [_Wall(0, sign * EPS_TRACE, -sign, "a₁ → 0", False)]
        poly, ends = _trace_plane(fun, seed, C, stratum, step, 50 * resolution)
        if "x₁ = 1" in ends and ends[0] != "x₁ = 1":
            poly, ends = poly[::-1], ends[::-1]
        elif "x₁ = 1" not in ends and abs(poly[0, 0]) > abs(poly[-1, 0]):
            poly, ends = poly[::-1], ends[::-1]
        topo = "S²×ℝ²" if "x₁ = 1" in ends else "S²×S¹×ℝ>0"
        curves.append(LevelCurve(Case.SO3xSO2, (C,), lam, name, poly, tuple(ends), topo))
    if C == 0:
        xs = np.linspace(EPS_TRACE, 1.0, resolution)
        poly = np.column_stack([np.zeros_like(xs), xs])
        curves.append(LevelCurve(Case.SO3xSO2, (C,), lam, "a₁ = 0", poly, ("x₁ → 0", "x₁ = 1"), "S⁴"))
    return curves


def _so3so2_seed(C, lam, sign, a_max):
    # scan a1 in the stratum for a root of G(a1, .) = C on (0, 1]
    for a in sign * np.linspace(0.5 * a_max, 0.02 * a_max, 25):
        lo, hi = G_raw(a, EPS_TRACE, lam) - C, G_raw(a, 1.0, lam) - C
        if np.sign(lo) != np.sign(hi):
            x1 = brentq(lambda x: G_raw(a, x, lam) - C, EPS_TRACE, 1.0, xtol=1e-15, rtol=1e-15)
            return np.array([a, x1])
    return None


# -- SU(2) ------------------------------------------------------------------------------------


def _su2_curves(C, lam, resolution, r_max):
    fun = lambda y: F_raw(y[1], y[0], lam) if y[1] >= 0 else np.nan  # noqa: E731
    walls = [
        _Wall(0, 1.0, 1, "x₅ = 1", True),
        _Wall(0, -1.0, -1, "x₅ = -1", True),
        _Wall(1, R_MIN, -1, "r → 0", False),
        _Wall(1, r_max, 1, "open end r → ∞", False),
    ]
    step = np.hypot(2.0, r_max) / resolution
    curves = []
    seed = None
    for r in np.linspace(0.5 * r_max, 0.02 * r_max, 25):
        lo, hi = F_raw(r, 1.0, lam) - C, F_raw(r, -1.0, lam) - C
        if np.sign(lo) != np.sign(hi):
            x5 = brentq(lambda x: F_raw(r, x, lam) - C, -1.0, 1.0, xtol=1e-15, rtol=1e-15)
            seed = np.array([x5, r])
            break
    if seed is not None:
        poly, ends = _trace_plane(fun, seed, C, walls, step, 50 * resolution)
        closed = [e for e in ends if e in ("x₅ = 1", "x₅ = -1")]
        if closed and ends[0] not in closed or not closed and poly[0, 1] > poly[-1, 1]:
            poly, ends = poly[::-1], ends[::-1]
        if C == 0:
            # the curve runs into the corner x5 = 1, r = 0 of the closed stratum
            ends = tuple("(x₅, r) → (1, 0)" if e == "x₅ = 1" else e for e in ends)
            topo = "S³×ℝ>0"
        else:
            topo = {"x₅ = -1": "ℝ⁴", "x₅ = 1": "O(-1)"}.get(ends[0], "S³×ℝ>0")
        curves.append(LevelCurve(Case.SU2, (C,), lam, "r > 0", poly, tuple(ends), topo))
    if C == 0:
        xs = np.linspace(-1.0, 1.0, resolution)
        poly = np.column_stack([xs, np.zeros_like(xs)])
        curves.append(LevelCurve(Case.SU2, (C,), lam, "r = 0", poly, ("x₅ = -1", "x₅ = 1"), "S⁴"))
    return curves


# -- SO(3) -------------------------------------------------------------------------------------


def so3_radius_profile(k: float, lam: float, sigma):
    """``|v| = sqrt(1 - k / sqrt(lam + sigma^2))`` on ``N_{C,D,E}`` with ``k = sqrt C + sqrt D``."""
    sigma = np.asarray(sigma, dtype=float)
    return np.sqrt(np.maximum(0.0, 1.0 - k / np.sqrt(lam + sigma**2)))


def _so3_start(k, E, lam):
    c0 = np.sqrt(max(0.0, k * k - lam))
    if E == 0:
        if k == 0:
            return 0.0, "r = 0"
        if np.isclose(k, np.sqrt(lam), rtol=1e-12, atol=0):
            return 0.0, "apex"
        return (c0, "x₁ = 0") if k * k > lam else (0.0, "r = 0")
    # a2 = 0 where sigma |v(sigma)| = |E|
    fun = lambda s: s * so3_radius_profile(k, lam, s) - abs(E)  # noqa: E731
    hi = max(c0, 1.0)
    while fun(hi) < 0:
        hi *= 2
    return brentq(fun, c0, hi, xtol=1e-15, rtol=1e-15), "a₂ = 0"


def is_conical(C, D, E, lam) -> bool:
    k = np.sqrt(C) + np.sqrt(D)
    return E == 0 and k > 0 and np.isclose(k, np.sqrt(lam), rtol=1e-12, atol=0)


def _so3_curves(C, D, E, lam, resolution, r_max):
    if C < 0 or D < 0:
        raise DomainError("the SO(3) level sets need C, D >= 0")
    k = np.sqrt(C) + np.sqrt(D)
    start, start_label = _so3_start(k, E, lam)
    r_max = max(r_max, 2 * start + 1)
    sig = np.linspace(start, r_max, resolution)
    q = lam + sig**2
    x1 = so3_radius_profile(k, lam, sig)
    if start_label == "x₁ = 0" or start_label == "apex":
        x1[0] = 0.0
    a1 = np.zeros_like(sig) if E == 0 else E / x1
    a2 = np.sqrt(np.maximum(0.0, sig**2 - a1**2))
    topo = "N" if is_conical(C, D, E, lam) else "TS²"
    curves = []
    for s4 in ([1, -1] if C > 0 else [0]):
        for s5 in ([1, -1] if D > 0 else [0]):
            x4 = s4 * (C / q) ** 0.25
            x5 = s5 * (D / q) ** 0.25
            poly = np.column_stack([x1, x4, x5, a1, a2])
            name = ",".join(f"{'+' if sg > 0 else '-'}{lab}" for sg, lab in ((s4, "x₄"), (s5, "x₅")) if sg)
            curves.append(
                LevelCurve(Case.SO3_STD, (C, D, E), lam, name or "x₄ = x₅ = 0", poly, (start_label, "open end r → ∞"), topo)
            )
    return curves


# -- public API ---------------------------------------------------------------------------------


def _case(case) -> Case:
    return Case.parse(case) if isinstance(case, str) else case


def trace_level(case, constants, lam: float, resolution: int = 200, box: float | None = None) -> list[LevelCurve]:
    """Connected pieces of the level set, split at the strata of the topology lemmas."""
    case = _case(case)
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    constants = tuple(float(c) for c in np.atleast_1d(constants))
    if case is Case.SO3xSO2:
        curves = _so3so2_curves(constants[0], lam, resolution, box or 6.0)
    elif case is Case.SU2:
        curves = _su2_curves(constants[0], lam, resolution, box or 10.0)
    elif case is Case.SO3_STD:
        if len(constants) != 3:
            raise ValueError("the SO(3) level set needs (C, D, E)")
        curves = _so3_curves(*constants, lam, resolution, box or 6.0)
    else:
        raise ValueError(f"no level sets for {case.value}")
    if not curves:
        raise NoRootError("the level set is empty in the admissible box")
    return curves


def component_report(case, constants, lam: float, resolution: int = 64) -> tuple[int, list[str]]:
    """Number of components and their ``topology[stratum]`` labels."""
    curves = trace_level(case, constants, lam, resolution)
    return len(curves), [f"{c.topology}[{c.stratum}]" for c in curves]


def topology_labels(curves) -> list[str]:
    return [c.topology for c in curves]


# -- lemma bounds -------------------------------------------------------------------------------


def gc_lemma_violations(C: float, lam: float, a_grid) -> int:
    """Grid points violating the bounds on ``g_C`` (``C > 0`` as stated, ``C < 0`` by oddness)."""
    bad = 0
    if C == 0:
        return sum(not abs(g_C(a, 0.0, lam)) < 1 for a in a_grid if a != 0)
    sgn = np.sign(C)
    al, be = alpha_C("SO3xSO2", abs(C), lam), beta_C("SO3xSO2", abs(C), lam)
    for a in a_grid:
        if a == 0:
            continue
        b = sgn * a  # g_C(a) = g_|C|(sgn a)
        g = g_C(b, abs(C), lam)
        if b > 0:
            bad += not (g > -1) or ((g <= 1) != (b >= al))
        else:
            bad += not (g < 1) or ((g > -1) != (b < be))
    return int(bad)


def fc_lemma_violations(C: float, lam: float, r_grid) -> int:
    """Grid points violating the bounds on ``f_C``."""
    bad = 0
    root = alpha_C("SU2", C, lam) if C > 0 else beta_C("SU2", C, lam) if C < 0 else None
    for r in r_grid:
        f = f_C(r, C, lam)
        if C > 0:
            bad += not (f > -2) or ((f <= 4) != (r >= root))
        elif C < 0:
            bad += not (f < 4) or ((f >= -2) != (r >= root))
        else:
            bad += not (-2 < f < 4)
    return int(bad)


# -- asymptotics ---------------------------------------------------------------------------------


def _cone_x1(a1, C):
    val = (C / (a1 * np.sqrt(abs(a1))) + 2.0 / 3.0) / 2.0
    return np.sqrt(val) if 0 < val <= 1 else np.nan


def _cone_x5(r, C):
    val = (1.0 - C / r**0.75) / 3.0
    return val if -1 <= val <= 1 else np.nan


def asymptotic_curve(case, C: float, window=None, resolution: int = 200) -> LevelCurve:
    """The ``lam = 0`` level curve sampled on a grid of the graph variable."""
    case = _case(case)
    if case is Case.SO3xSO2:
        lo, hi = window or (0.05, 6.0)
        grid = np.linspace(lo, hi, resolution)
        pts = [(a, _cone_x1(a, C)) for a in grid if a != 0]
        poly = np.array([p for p in pts if np.isfinite(p[1])])
        check = lambda row: abs(G_cone(*row) - C)  # noqa: E731
    elif case is Case.SU2:
        lo, hi = window or (0.05, 10.0)
        grid = np.linspace(lo, hi, resolution)
        pts = [(_cone_x5(r, C), r) for r in grid]
        poly = np.array([p for p in pts if np.isfinite(p[0])])
        check = lambda row: abs(F_cone(row[1], row[0]) - C)  # noqa: E731
    else:
        raise ValueError("asymptotic curves exist for SO3xSO2 and SU2")
    if poly.size == 0:
        raise NoRootError("asymptotic curve is empty on the window")
    assert max(check(row) for row in poly) < 1e-9
    return LevelCurve(case, (C,), 0.0, "cone", poly, ("window", "window"), "cone")


def asymptotic_distance(case, C: float, lam: float, window, resolution: int = 400) -> float:
    """Sup over traced samples in the window of the graph distance to the cone curve."""
    case = _case(case)
    curves = [c for c in trace_level(case, C, lam, resolution) if c.stratum in ("+a₁", "r > 0")]
    lo, hi = window
    worst = 0.0
    for curve in curves:
        for row in curve.polyline:
            if case is Case.SO3xSO2:
                a1, x1 = row
                if lo <= a1 <= hi:
                    ref = _cone_x1(a1, C)
                    if np.isfinite(ref):
                        worst = max(worst, abs(x1 - ref))
            else:
                x5, r = row
                if lo <= r <= hi:
                    ref = _cone_x5(r, C)
                    if np.isfinite(ref):
                        worst = max(worst, abs(x5 - ref))
    return worst


def current_convergence(ks, k_limit: float, lam: float, sigma_window=(0.05, 5.0), n: int = 400) -> np.ndarray:
    """Sup distances between ``|v|`` profiles of ``N_{C_j,D_j,0}`` and the limit, one per ``k_j``."""
    sig = np.linspace(*sigma_window, n)
    ref = so3_radius_profile(k_limit, lam, sig)
    out = []
    for k in ks:
        prof = so3_radius_profile(k, lam, sig)
        valid = 1.0 - k / np.sqrt(lam + sig**2) >= 0
        out.append(float(np.max(np.abs(prof - ref)[valid])) if np.any(valid) else np.inf)
    return np.array(out)


# -- conical singularity rate ------------------------------------------------------------------


def conical_profile(r, lam: float):
    """``2 lam^(1/4) sqrt(1 - sqrt(2 / (2 + r^2)))`` without cancellation at small ``r``."""
    r = np.asarray(r, dtype=float)
    q = 0.5 * r * r
    root = np.sqrt(1.0 + q)
    return 2.0 * lam**0.25 * np.sqrt(q / (root * (1.0 + root)))


def singular_rate_check(lam: float, r_samples) -> float:
    """Log-log slope of ``|f(r) - lam^(1/4) r|`` over the samples."""
    r = np.asarray(r_samples, dtype=float)
    dev = np.abs(conical_profile(r, lam) - lam**0.25 * r)
    slope, _ = np.polyfit(np.log(r), np.log(dev), 1)
    return float(slope)
