"""Charts, orthonormal frames and fiber trivialisations on the bundle of
anti-self-dual 2-forms over the round 4-sphere ``S^4 = {|x| = 1} in R^5``.

A point of the total space is a base point ``x`` together with fiber
coordinates ``a`` relative to the ASD basis belonging to a chart's frame:

* ``FRAME``: the global-looking frame ``e_1..e_4``, valid for ``|x5| < 1``.
* ``STEREO_PSI`` / ``STEREO_PHI``: conformal stereographic frames, removing
  ``x5 = -1`` resp. ``x5 = +1``.
* ``POLE_PLUS`` / ``POLE_MINUS``: the fixed frames at ``(0, 0, 0, 0, +-1)``.

Fibers are compared across charts through their ambient representation, a
5x5 antisymmetric matrix ``W = sum_i a_i W_i(x)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ChartDomainError
from .forms import AltForm

DELTA_CHART = 1e-3
BASE_TOL = 1e-12


class ChartId(enum.Enum):
    FRAME = "frame"
    POLE_PLUS = "pole+"
    POLE_MINUS = "pole-"
    STEREO_PHI = "stereo-phi"
    STEREO_PSI = "stereo-psi"


_BASE_ONLY = {ChartId.POLE_PLUS: 1.0, ChartId.POLE_MINUS: -1.0}


@dataclass(frozen=True, eq=False)
class TotalPoint:
    """A point of the total space: base point in ``S^4`` and chart fiber coordinates."""

    chart: ChartId
    base: np.ndarray
    fiber: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        base = np.array(self.base, dtype=float).reshape(5)
        fiber = np.array(self.fiber, dtype=float).reshape(3)
        if abs(base @ base - 1.0) > BASE_TOL:
            raise ValueError(f"base point {base} is not on the unit sphere")
        if self.chart in _BASE_ONLY:
            pole = np.array([0, 0, 0, 0, _BASE_ONLY[self.chart]])
            if np.max(np.abs(base - pole)) > 1e-10:
                raise ChartDomainError(f"{self.chart.value} chart only contains its pole")
        base.flags.writeable = False
        fiber.flags.writeable = False
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "fiber", fiber)

    @property
    def r(self) -> float:
        return float(np.linalg.norm(self.fiber))

    def __repr__(self) -> str:
        return f"TotalPoint({self.chart.value}, base={self.base.tolist()}, fiber={self.fiber.tolist()})"


def make_point(base, fiber=(0.0, 0.0, 0.0), chart: ChartId = ChartId.FRAME) -> TotalPoint:
    """Build a point, renormalising a base that is within 1e-9 of the sphere."""
    base = np.asarray(base, dtype=float)
    n = np.linalg.norm(base)
    if abs(n - 1.0) > 1e-9:
        raise ValueError(f"base point {base} is not on the unit sphere")
    return TotalPoint(chart, base / n, fiber)


def check_domain(chart: ChartId, x, delta: float = DELTA_CHART) -> None:
    x5 = float(x[4])
    if chart is ChartId.FRAME and abs(x5) > 1.0 - delta:
        raise ChartDomainError(f"FRAME chart needs |x5| <= 1 - {delta}, got x5 = {x5}")
    if chart is ChartId.STEREO_PSI and x5 < -1.0 + delta:
        raise ChartDomainError(f"STEREO_PSI chart excludes x5 = -1, got x5 = {x5}")
    if chart is ChartId.STEREO_PHI and x5 > 1.0 - delta:
        raise ChartDomainError(f"STEREO_PHI chart excludes x5 = +1, got x5 = {x5}")
    if chart in _BASE_ONLY and np.max(np.abs(np.asarray(x) - [0, 0, 0, 0, _BASE_ONLY[chart]])) > 1e-10:
        raise ChartDomainError(f"{chart.value} chart only contains its pole")


def best_chart(x, delta: float = DELTA_CHART) -> ChartId:
    """FRAME when possible, otherwise the stereographic chart centred at the nearer pole."""
    if abs(x[4]) <= 1.0 - delta:
        return ChartId.FRAME
    return ChartId.STEREO_PSI if x[4] > 0 else ChartId.STEREO_PHI


# -- stereographic coordinates ------------------------------------------------

_FLIP4 = np.array([1.0, 1.0, 1.0, -1.0])


def psi(x) -> np.ndarray:
    """Chart ``STEREO_PSI``: ``u = x[:4] / (1 + x5)``."""
    x = np.asarray(x, dtype=float)
    if x[4] <= -1.0:
        raise ChartDomainError("STEREO_PSI chart excludes x5 = -1")
    return x[:4] / (1.0 + x[4])


def psi_inv(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    q = u @ u
    return np.concatenate([2.0 * u, [1.0 - q]]) / (1.0 + q)


def phi(x) -> np.ndarray:
    """Chart ``STEREO_PHI``: ``y = (x1, x2, x3, -x4) / (1 - x5)``."""
    x = np.asarray(x, dtype=float)
    if x[4] >= 1.0:
        raise ChartDomainError("STEREO_PHI chart excludes x5 = +1")
    return _FLIP4 * x[:4] / (1.0 - x[4])


def phi_inv(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    q = y @ y
    return np.concatenate([2.0 * _FLIP4 * y, [q - 1.0]]) / (1.0 + q)


def stereo_coords(chart: ChartId, x) -> np.ndarray:
    if chart is ChartId.STEREO_PSI:
        return psi(x)
    if chart is ChartId.STEREO_PHI:
        return phi(x)
    raise ValueError(f"{chart} is not a stereographic chart")


def stereo_inverse(chart: ChartId, u) -> np.ndarray:
    if chart is ChartId.STEREO_PSI:
        return psi_inv(u)
    if chart is ChartId.STEREO_PHI:
        return phi_inv(u)
    raise ValueError(f"{chart} is not a stereographic chart")


def stereo_jacobian(chart: ChartId, u) -> np.ndarray:
    """``d x / d u`` as a 5x4 matrix for the inverse stereographic map."""
    u = np.asarray(u, dtype=float)
    q = u @ u
    s = 1.0 + q
    top = 2.0 * np.eye(4) / s - 4.0 * np.outer(u, u) / s**2
    if chart is ChartId.STEREO_PSI:
        return np.vstack([top, -4.0 * u / s**2])
    if chart is ChartId.STEREO_PHI:
        return np.vstack([_FLIP4[:, None] * top, 4.0 * u / s**2])
    raise ValueError(f"{chart} is not a stereographic chart")


# -- frames ---------------------------------------------------------------------


def frame_vectors(chart: ChartId, x) -> np.ndarray:
    """Oriented orthonormal frame of ``T_x S^4`` as rows of a 4x5 matrix."""
    x = np.asarray(x, dtype=float)
    check_domain(chart, x, delta=0.0 if chart is not ChartId.FRAME else 1e-15)
    if chart is ChartId.FRAME:
        x1, x2, x3, x4, x5 = x
        w = 1.0 - x5 * x5
        frame = np.array(
            [
                [-x2, x1, -x4, x3, 0.0],
                [-x3, x4, x1, -x2, 0.0],
                [-x4, -x3, x2, x1, 0.0],
                [-x1 * x5, -x2 * x5, -x3 * x5, -x4 * x5, w],
            ]
        )
        return frame / np.sqrt(w)
    if chart in _BASE_ONLY:
        return pole_frame_vectors(int(_BASE_ONLY[chart]))
    u = stereo_coords(chart, x)
    return 0.5 * (1.0 + u @ u) * stereo_jacobian(chart, u).T


def pole_frame_vectors(sign: int) -> np.ndarray:
    frame = np.zeros((4, 5))
    frame[0, 0] = frame[1, 1] = frame[2, 2] = 1.0
    frame[3, 3] = float(sign)
    return frame


def wedge_matrix(u, v) -> np.ndarray:
    return np.outer(u, v) - np.outer(v, u)


def asd_basis(frame: np.ndarray) -> np.ndarray:
    """The three ASD 2-forms ``f12 - f34, f13 - f42, f14 - f23`` as 5x5 matrices."""
    f1, f2, f3, f4 = frame
    return np.array(
        [
            wedge_matrix(f1, f2) - wedge_matrix(f3, f4),
            wedge_matrix(f1, f3) - wedge_matrix(f4, f2),
            wedge_matrix(f1, f4) - wedge_matrix(f2, f3),
        ]
    )


_OMEGA_TERMS = (((0, 1), (2, 3)), ((0, 2), (3, 1)), ((0, 3), (1, 2)))


def tautological_two_form(p: TotalPoint) -> AltForm:
    """``sum_i a_i omega_i`` on the adapted 7-frame; no vertical components."""
    if p.chart not in (ChartId.FRAME, ChartId.POLE_PLUS, ChartId.POLE_MINUS):
        raise ChartDomainError("the tautological form is written in the FRAME or pole charts")
    if p.chart is ChartId.FRAME:
        check_domain(p.chart, p.base)
    terms = {}
    for a, (plus, minus) in zip(p.fiber, _OMEGA_TERMS):
        terms[plus] = terms.get(plus, 0.0) + a
        terms[minus] = terms.get(minus, 0.0) - a
    return AltForm.from_terms(2, terms, dim=7)


def ambient_fiber(p: TotalPoint) -> np.ndarray:
    """The fiber element of ``p`` as an antisymmetric 5x5 matrix."""
    basis = asd_basis(frame_vectors(p.chart, p.base))
    return np.tensordot(p.fiber, basis, axes=(0, 0))


def fiber_coords(chart: ChartId, x, w: np.ndarray) -> np.ndarray:
    basis = asd_basis(frame_vectors(chart, x))
    return np.tensordot(basis, w, axes=([1, 2], [0, 1])) / 4.0


def transition_matrix(src: ChartId, dst: ChartId, x) -> np.ndarray:
    """Matrix ``R`` with ``a_dst = R a_src`` over the base point ``x``.

    ``R`` is orthogonal up to rounding; when the residual is below 1e-8 it is
    snapped to the nearest orthogonal matrix by polar decomposition.
    """
    bs = asd_basis(frame_vectors(src, x))
    bd = asd_basis(frame_vectors(dst, x))
    rot = np.einsum("jab,iab->ji", bd, bs) / 4.0
    err = np.max(np.abs(rot @ rot.T - np.eye(3)))
    if err < 1e-8:
        uu, _, vt = np.linalg.svd(rot)
        rot = uu @ vt
    return rot


def chart_transition(p: TotalPoint, dst: ChartId) -> TotalPoint:
    """Re-express ``p`` in chart ``dst``; raises ChartDomainError outside its domain."""
    check_domain(dst, p.base)
    if dst is p.chart:
        return p
    fiber = transition_matrix(p.chart, dst, p.base) @ p.fiber
    return TotalPoint(dst, p.base, fiber)


def chart_coordinates(p: TotalPoint) -> np.ndarray:
    """Seven chart coordinates: four stereographic (or the base itself for FRAME) and three fiber."""
    if p.chart in (ChartId.STEREO_PHI, ChartId.STEREO_PSI):
        return np.concatenate([stereo_coords(p.chart, p.base), p.fiber])
    raise ValueError("only stereographic charts have 7 coordinates")


# -- coframe data -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoframeData:
    """Frame, connection forms and vertical coframe at a point.

    ``gamma[i, j, k] = gamma_ij(e_k)`` are the Levi-Civita connection forms of
    the ASD basis, ``nabla omega_i = sum_j gamma_ij omega_j``.  ``bforms[i]``
    holds ``b_i`` on the adapted frame ``(e_1..e_4, d/da_1..d/da_3)``.
    """

    chart: ChartId
    frame: np.ndarray
    gamma: np.ndarray | None
    bforms: np.ndarray | None


def connection_forms(x) -> np.ndarray:
    """``gamma[i, j, k] = gamma_ij(e_k)`` for the FRAME trivialisation."""
    x5 = float(x[4])
    check_domain(ChartId.FRAME, x, delta=1e-15)
    c = (1.0 + x5) / np.sqrt(1.0 - x5 * x5)
    g = np.zeros((3, 3, 4))
    g[0, 1, 0] = -c
    g[0, 2, 1] = c
    g[1, 2, 2] = c
    g[1, 0] = -g[0, 1]
    g[2, 0] = -g[0, 2]
    g[2, 1] = -g[1, 2]
    return g


def vertical_coframe(x, a) -> np.ndarray:
    """3x7 matrix of ``b_i = da_i + sum_j a_j gamma_ji`` on the adapted frame."""
    gamma = connection_forms(x)
    b = np.zeros((3, 7))
    b[:, :4] = np.einsum("j,jik->ik", np.asarray(a, dtype=float), gamma)
    b[:, 4:] = np.eye(3)
    return b


def frame_at(p: TotalPoint) -> CoframeData:
    """Coframe data at ``p``; connection forms are only available in FRAME."""
    frame = frame_vectors(p.chart, p.base)
    if p.chart is ChartId.FRAME:
        check_domain(ChartId.FRAME, p.base)
        return CoframeData(p.chart, frame, connection_forms(p.base), vertical_coframe(p.base, p.fiber))
    return CoframeData(p.chart, frame, None, None)


def pole_frame(sign: int) -> CoframeData:
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    chart = ChartId.POLE_PLUS if sign > 0 else ChartId.POLE_MINUS
    return CoframeData(chart, pole_frame_vectors(sign), None, None)


def levi_civita_table(x) -> np.ndarray:
    """``T[i, j, k]``: the ``e^k`` component of ``nabla_{e_i} e^j`` for the FRAME coframe."""
    x5 = float(x[4])
    check_domain(ChartId.FRAME, x, delta=1e-15)
    t = np.zeros((4, 4, 4))
    # rows i = 1..3, e^4 column: -x5 e^i ; diagonal: x5 e^4
    for i in range(3):
        t[i, i, 3] = x5
        t[i, 3, i] = -x5
    t[0, 1, 2], t[0, 2, 1] = -1.0, 1.0
    t[1, 0, 2], t[1, 2, 0] = 1.0, -1.0
    t[2, 0, 1], t[2, 1, 0] = -1.0, 1.0
    return t / np.sqrt(1.0 - x5 * x5)


@dataclass(frozen=True, eq=False)
class Tangent:
    """Tangent vector at ``at``: components on ``(e_1..e_4, d/da_1..d/da_3)``.

    ``e_i`` here is the frame vector lifted with fiber coordinates held fixed.
    """

    at: TotalPoint
    horizontal: np.ndarray
    vertical: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "horizontal", np.array(self.horizontal, dtype=float).reshape(4))
        object.__setattr__(self, "vertical", np.array(self.vertical, dtype=float).reshape(3))

    @classmethod
    def from_vector(cls, at: TotalPoint, vec) -> "Tangent":
        vec = np.asarray(vec, dtype=float)
        return cls(at, vec[:4], vec[4:])

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.horizontal, self.vertical])

    def base_velocity(self) -> np.ndarray:
        """The projection to ``T S^4`` as an ambient 5-vector."""
        return self.horizontal @ frame_vectors(self.at.chart, self.at.base)
