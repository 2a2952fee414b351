"""Cohomogeneity-one reduction: a path ``c`` in a slice sweeps out a
coassociative 4-fold ``G . c`` exactly when ``phi_lam`` vanishes on
``(E_i*, E_j*, c')``.  This module evaluates those residuals, solves the
resulting linear relations for ``c'``, integrates them and certifies the
swept 4-folds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .charts import ChartId, Tangent, TotalPoint, frame_vectors
from .errors import ChartDomainError, DegenerateSpanError, SingularLocusError, SliceError
from .g2 import G2Params, coassoc_residual, g_lambda_matrix, phi_lambda
from .groups import Case, act_total, all_fields, on_slice, pushforward, random_element
from .solutions import F_raw, G_raw

SQRT3 = np.sqrt(3.0)
KERNEL_TOL = 1e-9
FIELD_TOL = 1e-7

PARAM_NAMES = {
    Case.SO4: ("x5",),
    Case.SO3xSO2: ("x1", "a1"),
    Case.SU2: ("x5", "r"),
    Case.SO3_STD: ("x1", "x4", "x5", "a1", "a2"),
    Case.SO3_IRR: ("x1", "x5", "a1", "a2", "a3"),
}


@dataclass(frozen=True, eq=False)
class PathState:
    """A point of the case's slice in its reduced coordinates.

    SO4 is the zero section ``((sqrt(1 - x5^2), 0, 0, 0, x5), 0)``; SU2 keeps
    the fixed fiber direction ``v`` apart from ``(x5, r)``.
    """

    case: Case
    params: np.ndarray
    v: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))

    def __post_init__(self):
        params = np.array(self.params, dtype=float).reshape(-1)
        if self.case not in PARAM_NAMES:
            raise ValueError(f"no reduced system for {self.case.value}")
        if params.size != len(PARAM_NAMES[self.case]):
            raise ValueError(f"{self.case.value} state needs {PARAM_NAMES[self.case]}")
        v = np.array(self.v, dtype=float)
        norm = np.linalg.norm(v)
        if self.case is Case.SU2 and abs(norm - 1.0) > 1e-10:
            raise ValueError("SU(2) fiber direction must be a unit vector")
        params.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "v", v)

    def __getitem__(self, name: str) -> float:
        return float(self.params[PARAM_NAMES[self.case].index(name)])

    def replace(self, params) -> "PathState":
        return PathState(self.case, params, self.v)

    def base_and_fiber(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.params
        if self.case is Case.SO4:
            return np.array([np.sqrt(max(0.0, 1 - p[0] ** 2)), 0, 0, 0, p[0]]), np.zeros(3)
        if self.case is Case.SO3xSO2:
            return np.array([p[0], 0, 0, np.sqrt(max(0.0, 1 - p[0] ** 2)), 0]), np.array([p[1], 0, 0])
        if self.case is Case.SU2:
            return np.array([np.sqrt(max(0.0, 1 - p[0] ** 2)), 0, 0, 0, p[0]]), p[1] * self.v
        if self.case is Case.SO3_STD:
            return np.array([p[0], 0, 0, p[1], p[2]]), np.array([p[3], p[4], 0.0])
        return np.array([p[0], 0, 0, 0, p[1]]), p[2:].copy()

    def sphere_error(self) -> float:
        x, _ = self.base_and_fiber()
        return abs(x @ x - 1.0)


def project(s: PathState) -> PathState:
    """Restore ``|x| = 1`` for cases whose parameters carry the whole base point."""
    p = np.array(s.params)
    if s.case is Case.SO3_STD:
        p[:3] /= np.linalg.norm(p[:3])
    elif s.case is Case.SO3_IRR:
        p[:2] /= np.linalg.norm(p[:2])
    return s.replace(p)


def slice_point(s: PathState) -> TotalPoint:
    x, a = s.base_and_fiber()
    return TotalPoint(ChartId.FRAME, x, a)


def _velocity_parts(s: PathState, dp):
    p = s.params
    dp = np.asarray(dp, dtype=float)
    x, _ = s.base_and_fiber()
    if (s.case in (Case.SO4, Case.SU2) and x[0] == 0) or (s.case is Case.SO3xSO2 and x[3] == 0):
        raise SingularLocusError("the reduced coordinates are singular here")
    if s.case in (Case.SO4, Case.SU2):
        xdot = np.array([-p[0] * dp[0] / x[0], 0, 0, 0, dp[0]])
        adot = dp[1] * s.v if s.case is Case.SU2 else np.zeros(3)
    elif s.case is Case.SO3xSO2:
        xdot = np.array([dp[0], 0, 0, -p[0] * dp[0] / x[3], 0])
        adot = np.array([dp[1], 0, 0])
    elif s.case is Case.SO3_STD:
        xdot = np.array([dp[0], 0, 0, dp[1], dp[2]])
        adot = np.array([dp[3], dp[4], 0.0])
    else:
        xdot = np.array([dp[0], 0, 0, 0, dp[1]])
        adot = np.asarray(dp[2:], dtype=float)
    return xdot, adot


def slice_velocity(s: PathState, dp) -> Tangent:
    """Tangent vector of the slice point for the parameter velocity ``dp``."""
    p = slice_point(s)
    xdot, adot = _velocity_parts(s, dp)
    return Tangent(p, frame_vectors(ChartId.FRAME, p.base) @ xdot, adot)


# -- residuals --------------------------------------------------------------------------


def residual_vector(case: Case, p: TotalPoint, cdot: Tangent, params: G2Params) -> np.ndarray:
    """``phi(E_i*, E_j*, c')`` for ``i < j`` followed by ``phi(E_i*, E_j*, E_k*)`` for ``i < j < k``."""
    if not on_slice(case, p):
        raise SliceError(f"{p} is not on the canonical {case.value} slice")
    phi = phi_lambda(p, params)
    fields = [f.vector for f in all_fields(case, p, "closed")]
    n = len(fields)
    out = [phi(fields[i], fields[j], cdot.vector) for i, j in combinations(range(n), 2)]
    out += [phi(fields[i], fields[j], fields[k]) for i, j, k in combinations(range(n), 3)]
    return np.array(out)


def ode_matrix(s: PathState, params: G2Params) -> np.ndarray:
    """Rows of the linear relations ``M p' = 0`` among parameter velocities.

    The rows are the reduced equations together with the tangency to the
    base sphere where the parameters carry the whole base point.
    """
    lam = params.lam
    p = s.params
    case = s.case
    if case is Case.SO4:
        return np.zeros((0, 1))
    if case is Case.SO3xSO2:
        x1, a1 = p
        return np.array([[4 * a1 * x1, (-(a1**2) + (2 * lam + 3 * a1**2) * x1**2) / (lam + a1**2)]])
    if case is Case.SU2:
        x5, r = p
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.array([[-8 * r / (1 + x5), 4 * (1 - x5) / (1 + x5) - 2 * r * r / (lam + r * r)]])
    if case is Case.SO3_STD:
        x1, x4, x5, a1, a2 = p
        q = 1.0 - x5
        lc = np.array([0, 0, 0, 2 * a1, 2 * a2]) / (lam + a1**2 + a2**2)
        eq1 = np.array([8 * x1 * a1, 0, 0, 4 * x1**2, 0]) - (1 - x1**2) * a1 * lc
        eq2 = np.array([4 * x1, 0, 4 * x1**2 / q, 0, 0]) + (-1 + x1**2 / q) * lc
        eq3 = np.array([0, 4, 4 * x4 / q, 0, 0]) + (x4 / q) * lc
        return np.array([eq1, eq2, eq3, [x1, x4, x5, 0, 0]])
    x1, x5, a1, a2, a3 = p
    r2 = a1**2 + a2**2 + a3**2
    lc = np.array([0, 0, 2 * a1, 2 * a2, 2 * a3]) / (lam + r2)
    eq1 = np.array(
        [4 * SQRT3 * (2 * x5 - 1) * a1, 4 * (2 * SQRT3 * x1 + 4 * x5 + 1) * a1, 8 * x1 * (-x1 + SQRT3 * x5), 0, 0]
    ) - (SQRT3 * x1 + x5 + 1) * (1 - 2 * x5) * a1 * lc
    eq2 = np.array(
        [4 * SQRT3 * (2 * x5 - 1) * a2, 4 * (2 * SQRT3 * x1 - 4 * x5 - 1) * a2, 0, 8 * x1 * (x1 + SQRT3 * x5), 0]
    ) + (-SQRT3 * x1 + x5 + 1) * (1 - 2 * x5) * a2 * lc
    eq3 = np.array([12 * x1 * a3, -4 * (x5 + 1) * a3, 0, 0, 2 * (x1**2 - 3 * x5**2)]) + (1 + x5) * (
        1 - 2 * x5
    ) * a3 * lc
    return np.array([eq1, eq2, eq3, [x1, x5, 0, 0, 0]])


def phi_matrix(s: PathState, params: G2Params) -> np.ndarray:
    """The same relations read directly off ``phi_lam(E_i*, E_j*, .)`` on the slice."""
    p = slice_point(s)
    phi = phi_lambda(p, params)
    fields = [f.vector for f in all_fields(s.case, p)]
    n = s.params.size
    cols = [slice_velocity(s, np.eye(n)[k]).vector for k in range(n)]
    rows = [[phi(fields[i], fields[j], c) for c in cols] for i, j in combinations(range(len(fields)), 2)]
    rows = np.array(rows).reshape(-1, n)
    if s.case in (Case.SO3_STD, Case.SO3_IRR):
        x, _ = s.base_and_fiber()
        sphere = [x[0], x[3], x[4], 0, 0] if s.case is Case.SO3_STD else [x[0], x[4], 0, 0, 0]
        rows = np.vstack([rows, sphere])
    return rows


def _kernel(mat: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        if mat.size and np.any(mat):
            raise SingularLocusError("the velocity relations only admit the zero solution")
        return np.ones(1)
    if not np.all(np.isfinite(mat)):
        raise SingularLocusError("the velocity relations blow up here")
    scale = np.max(np.abs(mat), axis=1, keepdims=True)
    rows = mat[scale[:, 0] > 0] / scale[scale[:, 0] > 0]
    if rows.shape[0] == 0:
        raise SingularLocusError("the velocity relations vanish identically")
    _, sv, vt = np.linalg.svd(rows)
    rank = int(np.sum(sv > KERNEL_TOL * sv[0]))
    if rank != n - 1:
        raise SingularLocusError(f"the velocity relations have rank {rank}, expected {n - 1}")
    return vt[-1]


def ode_rhs(s: PathState, params: G2Params, orient=None, source: str = "reduced") -> np.ndarray:
    """Unit parameter velocity solving the case's relations.

    With ``orient`` the sign follows that vector; otherwise it is fixed by
    ``det [M; k] > 0`` for the reduced equations ``M``, a continuous choice
    wherever the kernel is a line.
    """
    mat = ode_matrix(s, params) if source == "reduced" else phi_matrix(s, params)
    n = s.params.size
    k = _kernel(mat, n)
    if orient is None:
        ref = ode_matrix(s, params)
        if ref.shape[0] == n - 1 and n > 1:
            sign = np.sign(np.linalg.det(np.vstack([ref, k])))
        else:
            sign = np.sign(k @ _kernel(ref, n)) if n > 1 else np.sign(k[0])
        if sign == 0:
            sign = 1.0
        k = sign * k
    elif k @ np.asarray(orient) < 0:
        k = -k
    return k / np.linalg.norm(k)


# -- conserved quantities -------------------------------------------------------------


def reduce_so3_system(s: PathState, params: G2Params) -> tuple[float, float, float]:
    """``(C, D, E) = (x4^4 (lam + r^2), x5^4 (lam + r^2), a1 x1)``."""
    x1, x4, x5, a1, a2 = s.params
    q = params.lam + a1 * a1 + a2 * a2
    return x4**4 * q, x5**4 * q, a1 * x1


def conserved(s: PathState, params: G2Params) -> tuple:
    if s.case is Case.SO3xSO2:
        return (G_raw(s["a1"], s["x1"], params.lam),)
    if s.case is Case.SU2:
        return (F_raw(s["r"], s["x5"], params.lam),)
    if s.case is Case.SO3_STD:
        return reduce_so3_system(s, params)
    return ()


# -- domain ----------------------------------------------------------------------------


def domain_margins(s: PathState) -> dict[str, float]:
    """Signed distances to the boundary strata; all positive inside."""
    p = s.params
    if s.case is Case.SO4:
        return {"x₅ = 1": 1 - p[0], "x₅ = -1": 1 + p[0]}
    if s.case is Case.SO3xSO2:
        return {"x₁ = 0": p[0], "x₁ = 1": 1 - p[0]}
    if s.case is Case.SU2:
        return {"x₅ = -1": 1 + p[0], "x₅ = 1": 1 - p[0], "r = 0": p[1]}
    if s.case is Case.SO3_STD:
        return {"x₁ = 0": p[0], "a₂ = 0": p[4], "x₅ = 1": 1 - p[2]}
    return {"x₁ = 0": p[0], "x₅ = 1/2": 0.5 - p[1], "x₅ = -1/2": 0.5 + p[1]}


def _margin(s: PathState) -> tuple[float, str]:
    m = domain_margins(s)
    key = min(m, key=m.get)
    return m[key], key


def random_state(case: Case, rng: np.random.Generator, margin: float = 0.1, r_max: float = 3.0) -> PathState:
    """A path state at least ``margin`` inside every boundary stratum."""
    for _ in range(1000):
        if case is Case.SO4:
            params = [rng.uniform(-1, 1)]
        elif case is Case.SO3xSO2:
            params = [rng.uniform(0, 1), rng.uniform(-r_max, r_max)]
        elif case is Case.SU2:
            v = rng.normal(size=3)
            s = PathState(case, [rng.uniform(-1, 1), rng.uniform(0, r_max)], v / np.linalg.norm(v))
            params = None
        elif case is Case.SO3_STD:
            x = rng.normal(size=3)
            x = np.abs(x[0]), x[1], x[2]
            x = np.array(x) / np.linalg.norm(x)
            params = [*x, rng.uniform(-r_max, r_max), rng.uniform(0, r_max)]
        elif case is Case.SO3_IRR:
            x5 = rng.uniform(-0.5, 0.5)
            params = [np.sqrt(1 - x5 * x5), x5, *rng.uniform(-r_max, r_max, size=3)]
        else:
            raise ValueError(f"no reduced system for {case.value}")
        if params is not None:
            s = PathState(case, params)
        if min(domain_margins(s).values()) < margin:
            continue
        return s
    raise RuntimeError("could not sample an interior state")


# -- integration ---------------------------------------------------------------------

_DP_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_DP_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass(frozen=True, eq=False)
class Trajectory:
    case: Case
    lam: float
    ts: np.ndarray
    states: tuple
    stop_reason: str

    @property
    def params(self) -> np.ndarray:
        return np.array([s.params for s in self.states])

    def __len__(self) -> int:
        return len(self.states)


def _dp_step(s: PathState, h: float, params: G2Params, k1: np.ndarray):
    ks = [k1]
    y = s.params
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_DP_A[i], ks))
        ks.append(ode_rhs(s.replace(yi), params, orient=k1))
    ks = np.array(ks)
    y5 = y + h * (_DP_B5 @ ks)
    err = h * ((_DP_B5 - _DP_B4) @ ks)
    return y5, err


def integrate(
    s0: PathState,
    params: G2Params,
    tmax: float,
    tol: float = 1e-10,
    direction: int = 1,
    h0: float = 1e-3,
    hmax: float = 0.25,
    max_steps: int = 100000,
) -> Trajectory:
    """Dormand-Prince 5(4) integration of the unit direction field.

    Every accepted step is projected back to the base sphere.  Integration
    stops at ``tmax``, on a boundary stratum (located by bisection), or at the
    singular locus; the reason is recorded.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = project(s0)
    states, ts = [s], [0.0]
    if tmax <= 0:
        return Trajectory(s.case, params.lam, np.array(ts), tuple(states), "tmax")
    orient = direction * ode_rhs(s, params)
    t, h = 0.0, h0
    reason = "max_steps"
    for _ in range(max_steps):
        if t >= tmax:
            reason = "tmax"
            break
        h = min(h, hmax, tmax - t)
        try:
            k1 = ode_rhs(s, params, orient=orient)
            y5, err = _dp_step(s, h, params, k1)
        except SingularLocusError:
            if h < 1e-12:
                reason = "singular"
                break
            h *= 0.25
            continue
        scale = tol + tol * np.maximum(np.abs(s.params), np.abs(y5))
        enorm = float(np.max(np.abs(err) / scale))
        if enorm > 1.0:
            h *= max(0.2, 0.9 * enorm ** -0.2)
            if h < 1e-14:
                reason = "step_underflow"
                break
            continue
        new = project(s.replace(y5))
        margin, label = _margin(new)
        if margin <= 0:
            new, hb = _locate_boundary(s, params, k1, h)
            states.append(new)
            ts.append(t + hb)
            reason = f"boundary: {_margin(new)[1]}"
            break
        t += h
        s, orient = new, k1
        states.append(s)
        ts.append(t)
        h *= min(5.0, 0.9 * max(enorm, 1e-10) ** -0.2)
    return Trajectory(s.case, params.lam, np.array(ts), tuple(states), reason)


def _locate_boundary(s: PathState, params: G2Params, k1, h: float, tol: float = 1e-12):
    lo, hi = 0.0, h
    best = s
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        try:
            y, _ = _dp_step(s, mid, params, k1)
        except SingularLocusError:
            hi = mid
            continue
        cand = project(s.replace(y))
        if _margin(cand)[0] > 0:
            lo, best = mid, cand
        else:
            hi = mid
    return best, lo


# -- sweep verification ---------------------------------------------------------------


@dataclass(frozen=True)
class SweepReport:
    max_residual: float
    n_points: int
    n_checked: int
    n_excluded: int


def _best_triple(fields: list[np.ndarray], cdot: np.ndarray, gram: np.ndarray):
    # fields that are negligible next to the largest one span nothing
    sizes = np.sqrt(np.einsum("ia,ab,ib->i", np.array(fields), gram, np.array(fields)))
    alive = [i for i in range(len(fields)) if sizes[i] > FIELD_TOL * sizes.max()]
    best, best_sv = None, 0.0
    for idx in combinations(alive, 3):
        vecs = np.array([fields[i] for i in idx] + [cdot])
        norms = np.sqrt(np.einsum("ia,ab,ib->i", vecs, gram, vecs))
        if np.any(norms == 0):
            continue
        unit = vecs / norms[:, None]
        sv = np.linalg.eigvalsh(unit @ gram @ unit.T)[0]
        if sv > best_sv:
            best, best_sv = idx, sv
    if best is None or best_sv < 1e-8:
        raise DegenerateSpanError("orbit tangent and velocity do not span a 4-plane")
    return best


def sweep_report(
    states, params: G2Params, n_group_samples: int = 4, rng: np.random.Generator | None = None
) -> SweepReport:
    """Coassociativity residual of ``G . c`` at the given path states and their translates."""
    rng = np.random.default_rng(0) if rng is None else rng
    states = list(states.states if isinstance(states, Trajectory) else states)
    worst, checked, excluded = 0.0, 0, 0
    for s in states:
        p = slice_point(s)
        try:
            cdot = slice_velocity(s, ode_rhs(s, params))
            fields = [f.vector for f in all_fields(s.case, p)]
            triple = _best_triple(fields, cdot.vector, g_lambda_matrix(p, params))
        except (SingularLocusError, DegenerateSpanError, ChartDomainError):
            excluded += 1
            continue
        vecs = [Tangent.from_vector(p, fields[i]) for i in triple] + [cdot]
        worst = max(worst, coassoc_residual(p, params, vecs, invariant=True))
        checked += 1
        done = 0
        for _ in range(50 * max(1, n_group_samples)):
            if done >= n_group_samples:
                break
            g = random_element(s.case, rng)
            try:
                act_total(s.case, g, p, ChartId.FRAME)
            except ChartDomainError:
                continue
            moved = [pushforward(s.case, g, v, ChartId.FRAME) for v in vecs]
            worst = max(worst, coassoc_residual(moved[0].at, params, moved, invariant=True))
            done += 1
    return SweepReport(worst, len(states), checked, excluded)


def sweep_and_verify(states, params: G2Params, n_group_samples: int = 4, rng=None) -> float:
    """Largest coassociativity residual over the swept samples."""
    return sweep_report(states, params, n_group_samples, rng).max_residual


def orbit_residual(case: Case, p: TotalPoint, params: G2Params) -> float:
    """Residual of the tangent space of a 4-dimensional orbit (no path needed)."""
    fields = [f.vector for f in all_fields(case, p)]
    gram = g_lambda_matrix(p, params)
    best, best_sv = None, 0.0
    for idx in combinations(range(len(fields)), 4):
        vecs = np.array([fields[i] for i in idx])
        sv = np.linalg.svd(vecs @ np.linalg.cholesky(gram), compute_uv=False)
        if sv[-1] / sv[0] > best_sv:
            best, best_sv = vecs, sv[-1] / sv[0]
    if best is None or best_sv < 1e-8:
        raise DegenerateSpanError("orbit is not 4-dimensional here")
    return coassoc_residual(p, params, best, invariant=True)


__all__ = [
    "PathState",
    "random_state",
    "Trajectory",
    "SweepReport",
    "slice_point",
    "slice_velocity",
    "residual_vector",
    "ode_matrix",
    "phi_matrix",
    "ode_rhs",
    "integrate",
    "conserved",
    "reduce_so3_system",
    "domain_margins",
    "sweep_report",
    "sweep_and_verify",
    "orbit_residual",
    "project",
]
