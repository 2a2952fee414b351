"""The six subgroups of SO(5) with 3- or 4-dimensional orbits, their lifted
actions on the ASD bundle, fundamental vector fields and orbit types.

Every group element is a 5x5 rotation.  The lift to the bundle is the
push-forward of 2-forms, ``W -> g W g^T`` on ambient antisymmetric matrices,
which is the action by bundle automorphisms preserving ``phi_lam``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.linalg import expm

from .charts import (
    ChartId,
    Tangent,
    TotalPoint,
    ambient_fiber,
    asd_basis,
    best_chart,
    chart_transition,
    check_domain,
    fiber_coords,
    frame_vectors,
    vertical_coframe,
)
from .errors import ChartDomainError, NotInSubgroupError, SliceError

SQRT3 = np.sqrt(3.0)
MEMBERSHIP_TOL = 1e-8
SLICE_TOL = 1e-10
RANK_TOL = 1e-8
RANK_FLOOR = 1e-9
FD_STEP = 1e-3


class Case(enum.Enum):
    SO4 = "SO4"
    SO3xSO2 = "SO3xSO2"
    U2 = "U2"
    SU2 = "SU2"
    SO3_STD = "SO3_STD"
    SO3_IRR = "SO3_IRR"

    @classmethod
    def parse(cls, text: str) -> "Case":
        key = text.replace("_", "").replace("x", "X").upper()
        for case in cls:
            if case.value.replace("_", "").replace("x", "X").upper() == key:
                return case
        aliases = {"SO3": cls.SO3_STD, "SO3STD": cls.SO3_STD, "SO3IRR": cls.SO3_IRR}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown symmetry case {text!r}")


def rotation_generator(i: int, j: int, n: int = 5) -> np.ndarray:
    """``E`` with ``E e_j = e_i`` and ``E e_i = -e_j`` (0-based indices)."""
    m = np.zeros((n, n))
    m[i, j] = -1.0
    m[j, i] = 1.0
    return m


_J = np.array([[0.0, -1.0], [1.0, 0.0]])
_I2 = np.eye(2)


def _embed4(block: np.ndarray) -> np.ndarray:
    m = np.zeros((5, 5), dtype=block.dtype)
    m[:4, :4] = block
    return m


def _block4(a, b, c, d) -> np.ndarray:
    return np.block([[a, b], [c, d]])


_Z2 = np.zeros((2, 2))

# su(2) inside so(4) via z1 = x1 + i x2, z2 = x3 + i x4
_SU2_REAL = [
    _embed4(_block4(_Z2, _I2, -_I2, _Z2)),
    _embed4(_block4(_Z2, _J, _J, _Z2)),
    _embed4(_block4(_J, _Z2, _Z2, -_J)),
]
_U1_REAL = _embed4(_block4(_J, _Z2, _Z2, _J))

_SO3_BASIS = [rotation_generator(0, 1, 3), rotation_generator(0, 2, 3), rotation_generator(1, 2, 3)]


# -- the irreducible representation on traceless symmetric matrices ---------------


def iota(mat: np.ndarray) -> np.ndarray:
    """Traceless symmetric 3x3 matrix to ``R^5``."""
    l1, l2 = mat[0, 0], mat[1, 1]
    m1, m2, m3 = mat[0, 1], mat[0, 2], mat[1, 2]
    return np.array([l1 + 0.5 * l2, -m2, m3, m1, -0.5 * SQRT3 * l2])


def iota_inv(x) -> np.ndarray:
    x1, x2, x3, x4, x5 = x
    l2 = -2.0 * x5 / SQRT3
    l1 = x1 - 0.5 * l2
    return np.array([[l1, x4, -x2], [x4, l2, x3], [-x2, x3, -l1 - l2]])


def irr_rep(rot: np.ndarray) -> np.ndarray:
    """Image of ``rot`` in SO(5) under ``X -> rot X rot^T``."""
    return np.column_stack([iota(rot @ iota_inv(e) @ rot.T) for e in np.eye(5)])


def irr_rep_algebra(gen: np.ndarray) -> np.ndarray:
    return np.column_stack([iota(gen @ iota_inv(e) - iota_inv(e) @ gen) for e in np.eye(5)])


def _irr_algebra_literal():
    # the basis as printed for the irreducible inclusion (checked in tests)
    e1 = np.zeros((5, 5))
    e1[0:2, 2:4] = _J
    e1[2:4, 0:2] = _J
    e1[3, 4], e1[4, 3] = SQRT3, -SQRT3
    e2 = np.zeros((5, 5))
    e2[0:2, 0:2] = -2 * _J
    e2[2:4, 2:4] = -_J
    e3 = np.zeros((5, 5))
    e3[0:2, 2:4] = -_I2
    e3[2:4, 0:2] = _I2
    e3[2, 4], e3[4, 2] = -SQRT3, SQRT3
    return [e1, e2, e3]


IRR_ALGEBRA_LITERAL = _irr_algebra_literal()


def _so3_block(gen3: np.ndarray) -> np.ndarray:
    m = np.zeros((5, 5))
    m[:3, :3] = gen3
    return m


@dataclass(frozen=True, eq=False)
class SymmetryCase:
    tag: Case
    algebra: tuple
    dim: int


def _build_cases() -> dict:
    cases = {
        Case.SO4: [rotation_generator(i, j) for i in range(4) for j in range(i + 1, 4)],
        Case.SO3xSO2: [_so3_block(g) for g in _SO3_BASIS] + [rotation_generator(3, 4)],
        Case.U2: _SU2_REAL + [_U1_REAL],
        Case.SU2: list(_SU2_REAL),
        Case.SO3_STD: [_so3_block(g) for g in _SO3_BASIS],
        Case.SO3_IRR: [irr_rep_algebra(g) for g in _SO3_BASIS],
    }
    out = {}
    for tag, basis in cases.items():
        basis = tuple(np.array(b, dtype=float) for b in basis)
        for b in basis:
            b.flags.writeable = False
        out[tag] = SymmetryCase(tag, basis, len(basis))
    return out


CASES = _build_cases()


def symmetry_case(case: Case | str) -> SymmetryCase:
    if isinstance(case, str):
        case = Case.parse(case)
    return CASES[case]


# -- complex 2x2 matrices and the double cover ------------------------------------


def complex_to_real4(q: np.ndarray) -> np.ndarray:
    """Real 4x4 matrix of ``q`` acting on ``(z1, z2) = (x1 + i x2, x3 + i x4)``."""
    out = np.empty((4, 4))
    for r in range(2):
        for c in range(2):
            z = q[r, c]
            out[2 * r : 2 * r + 2, 2 * c : 2 * c + 2] = [[z.real, -z.imag], [z.imag, z.real]]
    return out


def unitary_to_so5(q: np.ndarray) -> np.ndarray:
    m = np.eye(5)
    m[:4, :4] = complex_to_real4(np.asarray(q, dtype=complex))
    return m


def varpi(q: np.ndarray) -> np.ndarray:
    """Double cover ``SU(2) -> SO(3)`` in the form used for the stereographic fiber."""
    a, b = complex(q[0, 0]), complex(q[1, 0])
    ab = a * b
    ca_b = a.conjugate() * b
    s, d = a * a + b * b, a * a - b * b
    return np.array(
        [
            [abs(a) ** 2 - abs(b) ** 2, 2 * ab.imag, -2 * ab.real],
            [-2 * ca_b.imag, s.real, s.imag],
            [2 * ca_b.real, (-(a * a) + b * b).imag, d.real],
        ]
    )


# -- group elements ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroupElement:
    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float).reshape(5, 5)
        if np.max(np.abs(m.T @ m - np.eye(5))) > 1e-10 or abs(np.linalg.det(m) - 1.0) > 1e-10:
            raise NotInSubgroupError("matrix is not in SO(5)")
        m.flags.writeable = False
        object.__setattr__(self, "m", m)


_K_QUAT = np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], dtype=float)
_I_COMPLEX = complex_to_real4(np.diag([1j, 1j]))


def subgroup_residual(case: Case, m: np.ndarray) -> float:
    """Zero (up to rounding) exactly when the rotation ``m`` lies in the case's group."""
    m = np.asarray(m, dtype=float)
    e5 = np.eye(5)[4]
    fix5 = np.max(np.abs(m @ e5 - e5)) + np.max(np.abs(m[4] - e5))
    m4 = m[:4, :4]
    if case is Case.SO4:
        return fix5
    if case is Case.SO3xSO2:
        return np.max(np.abs(m[:3, 3:])) + np.max(np.abs(m[3:, :3])) + abs(np.linalg.det(m[:3, :3]) - 1.0)
    if case is Case.U2:
        return fix5 + np.max(np.abs(m4 @ _I_COMPLEX - _I_COMPLEX @ m4))
    if case is Case.SU2:
        return subgroup_residual(Case.U2, m) + np.max(np.abs(m4 @ _K_QUAT - _K_QUAT @ m4))
    if case is Case.SO3_STD:
        return np.max(np.abs(m[:3, 3:])) + np.max(np.abs(m[3:, :3])) + np.max(np.abs(m[3:, 3:] - np.eye(2)))
    if case is Case.SO3_IRR:
        # the image of SO(3) is its own normaliser in SO(5)
        basis = np.array([b.reshape(-1) for b in CASES[Case.SO3_IRR].algebra]).T
        proj = basis @ np.linalg.pinv(basis)
        res = 0.0
        for b in CASES[Case.SO3_IRR].algebra:
            v = (m @ b @ m.T).reshape(-1)
            res = max(res, np.max(np.abs(v - proj @ v)))
        return res
    raise ValueError(case)


def group_element(case: Case, m, tol: float = MEMBERSHIP_TOL) -> GroupElement:
    g = m if isinstance(m, GroupElement) else GroupElement(m)
    res = subgroup_residual(case, g.m)
    if res > tol:
        raise NotInSubgroupError(f"matrix is not in the {case.value} subgroup (residual {res:.3e})")
    return g


def exp_algebra(case: Case, coeffs) -> GroupElement:
    basis = CASES[case].algebra
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (len(basis),):
        raise ValueError(f"{case.value} needs {len(basis)} coefficients")
    return GroupElement(expm(np.tensordot(coeffs, np.array(basis), axes=(0, 0))))


def random_element(case: Case, rng: np.random.Generator, scale: float = np.pi) -> GroupElement:
    return exp_algebra(case, rng.uniform(-scale, scale, size=CASES[case].dim))


# -- lifted action -----------------------------------------------------------------

_POLE_TWIN = {ChartId.POLE_PLUS: ChartId.STEREO_PSI, ChartId.POLE_MINUS: ChartId.STEREO_PHI}


def _valid(chart: ChartId, x) -> bool:
    try:
        check_domain(chart, x)
    except ChartDomainError:
        return False
    return True


def _lift(m: np.ndarray, p: TotalPoint):
    x = m @ p.base
    return x / np.linalg.norm(x), m @ ambient_fiber(p) @ m.T


def act_total(case: Case, g, p: TotalPoint, chart: ChartId | None = None) -> TotalPoint:
    """``g . p``, expressed in ``chart``, else in ``p``'s chart when valid, else the best chart."""
    m = group_element(case, g).m
    x, w = _lift(m, p)
    if chart is None:
        chart = p.chart if _valid(p.chart, x) else best_chart(x)
    check_domain(chart, x)
    return TotalPoint(chart, x, fiber_coords(chart, x, w))


def _coords_along(m: np.ndarray, p: TotalPoint, chart: ChartId) -> np.ndarray:
    # fiber coordinates of m.p in ``chart`` without the conditioning margin
    x, w = _lift(m, p)
    return fiber_coords(chart, x, w)


def _stencil(f, h: float) -> np.ndarray:
    return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)


def _working_point(p: TotalPoint) -> TotalPoint:
    if p.chart in _POLE_TWIN:
        return chart_transition(p, _POLE_TWIN[p.chart])
    return p


def algebra_element(case: Case, index_or_coeffs) -> np.ndarray:
    basis = CASES[case].algebra
    if np.isscalar(index_or_coeffs):
        return np.array(basis[int(index_or_coeffs)])
    coeffs = np.asarray(index_or_coeffs, dtype=float)
    return np.tensordot(coeffs, np.array(basis), axes=(0, 0))


def fundamental_field_fd(case: Case, index_or_coeffs, p: TotalPoint, h: float = FD_STEP) -> Tangent:
    """``d/dt exp(t E) . p`` at ``t = 0`` by a fourth-order central difference."""
    gen = algebra_element(case, index_or_coeffs)
    work = _working_point(p)
    horiz = frame_vectors(work.chart, work.base) @ (gen @ work.base)
    if not gen.any():
        return Tangent(p, horiz, np.zeros(3))
    vert = _stencil(lambda t: _coords_along(expm(t * gen), work, work.chart), h)
    return Tangent(p, horiz, vert)


def pushforward(case: Case, g, v: Tangent, chart: ChartId | None = None, h: float = FD_STEP) -> Tangent:
    """Differential of the lifted action applied to ``v``."""
    m = group_element(case, g).m
    p = _working_point(v.at)
    target = act_total(case, g, v.at, chart)
    xdot = v.horizontal @ frame_vectors(p.chart, p.base)

    def image(t):
        base = p.base + t * xdot
        q = TotalPoint(p.chart, base / np.linalg.norm(base), p.fiber + t * v.vertical)
        return _coords_along(m, q, _working_point(target).chart)

    work_target = _working_point(target)
    horiz = frame_vectors(work_target.chart, work_target.base) @ (m @ xdot)
    # keep the displacement h h regardless of the size of v
    vert = _stencil(image, h / max(1.0, float(np.linalg.norm(v.vector))))
    return Tangent(target, horiz, vert)


# -- closed forms on the canonical slices -----------------------------------------------

_SLICE_ZEROS = {
    Case.SO3xSO2: (1, 2, 4),
    Case.U2: (1, 2, 3),
    Case.SU2: (1, 2, 3),
    Case.SO3_STD: (1, 2),
    Case.SO3_IRR: (1, 2, 3),
}


def on_slice(case: Case, p: TotalPoint, tol: float = SLICE_TOL) -> bool:
    if case not in _SLICE_ZEROS or p.chart is not ChartId.FRAME:
        return False
    if np.any(np.abs(p.base[list(_SLICE_ZEROS[case])]) > tol):
        return False
    if case is Case.SO3_STD and abs(p.fiber[2]) > tol:
        return False
    if case is Case.SO3_IRR and p.base[0] <= tol:
        return False
    return True


def require_slice(case: Case, p: TotalPoint) -> None:
    if not on_slice(case, p):
        raise SliceError(f"{p} is not on the canonical {case.value} slice")


def fundamental_field_closed(case: Case, index: int, p: TotalPoint) -> Tangent:
    """Closed-form fundamental field on the case's canonical slice."""
    require_slice(case, p)
    x1, _, _, x4, x5 = p.base
    a1, a2, a3 = p.fiber
    zero4, zero3 = np.zeros(4), np.zeros(3)
    if case is Case.SO3xSO2:
        table = [
            (x1 * np.array([x1, x4, 0, 0]), [-a2, a1, 0]),
            (x1 * np.array([-x4, x1, 0, 0]), [a3, 0, -a1]),
            (zero4, [0, a3, -a2]),
            (np.array([0, 0, 0, x4]), x1 * np.array([0, -a3, a2])),
        ]
    elif case in (Case.U2, Case.SU2):
        table = [
            (np.array([0, -x1, 0, 0]), zero3),
            (np.array([0, 0, x1, 0]), zero3),
            (np.array([x1, 0, 0, 0]), zero3),
            (np.array([x1, 0, 0, 0]), [-2 * a2, 2 * a1, 0]),
        ][: CASES[case].dim]
    elif case is Case.SO3_STD:
        w = x1 / np.sqrt(1.0 - x5 * x5)
        table = [
            (w * np.array([x1, x4, 0, 0]), [-a2, a1, 0]),
            (w * np.array([-x4, x1, 0, 0]), [0, 0, -a1]),
            (zero4, [0, 0, -a2]),
        ]
    elif case is Case.SO3_IRR:
        k = SQRT3 * (1.0 + x5) / x1
        table = [
            (np.array([0, 0, x1 + SQRT3 * x5, 0]), k * np.array([0, a3, -a2])),
            (np.array([-2 * x1, 0, 0, 0]), 3 * np.array([a2, -a1, 0])),
            (np.array([0, x1 - SQRT3 * x5, 0, 0]), k * np.array([-a3, 0, a1])),
        ]
    else:
        raise SliceError(f"no closed form for {case.value}")
    horiz, vert = table[index]
    return Tangent(p, horiz, vert)


def fundamental_field(case: Case, index_or_coeffs, p: TotalPoint, method: str = "auto") -> Tangent:
    """Fundamental field of ``E_{index}`` (0-based) or of a coefficient combination.

    ``method``: ``"closed"`` (slice formulas), ``"fd"``, or ``"auto"`` (closed
    on the slice when available, FD elsewhere).
    """
    if method not in ("auto", "closed", "fd"):
        raise ValueError(f"unknown method {method!r}")
    use_closed = method == "closed" or (method == "auto" and on_slice(case, p))
    if not use_closed:
        return fundamental_field_fd(case, index_or_coeffs, p)
    if np.isscalar(index_or_coeffs):
        return fundamental_field_closed(case, int(index_or_coeffs), p)
    coeffs = np.asarray(index_or_coeffs, dtype=float)
    vec = sum(c * fundamental_field_closed(case, i, p).vector for i, c in enumerate(coeffs))
    return Tangent.from_vector(p, vec)


def all_fields(case: Case, p: TotalPoint, method: str = "auto") -> list[Tangent]:
    return [fundamental_field(case, i, p, method) for i in range(CASES[case].dim)]


# -- data tables -------------------------------------------------------------------------

_OMEGA4 = asd_basis(np.eye(4))


def _pairs(n: int):
    first = [(0, 1), (0, 2), (1, 2)]
    return first + [(0, 3), (1, 3), (2, 3)] if n == 4 else first


@dataclass(frozen=True, eq=False)
class DataTables:
    """``omega[row, j] = omega_j(E_a*, E_b*)`` for ``rows = pairs`` and ``b[i, j] = b_i(E_j*)``."""

    pairs: tuple
    omega_closed: np.ndarray
    omega_frame: np.ndarray
    b_closed: np.ndarray
    b_frame: np.ndarray

    def max_discrepancy(self) -> float:
        return max(
            float(np.max(np.abs(self.omega_closed - self.omega_frame))),
            float(np.max(np.abs(self.b_closed - self.b_frame))),
        )


def _closed_tables(case: Case, p: TotalPoint):
    x1, _, _, x4, x5 = p.base
    a1, a2, a3 = p.fiber
    if case is Case.SO3xSO2:
        om = np.array(
            [
                [x1**2, 0, 0],
                [0, 0, 0],
                [0, 0, 0],
                [0, x1 * x4**2, x1**2 * x4],
                [0, x1**2 * x4, -x1 * x4**2],
                [0, 0, 0],
            ]
        )
        b = np.array(
            [
                [-x4 * (a2 * x4 + a3 * x1), x4 * (-a2 * x1 + a3 * x4), 0, 0],
                [a1 * x4**2, a1 * x1 * x4, a3, -a3 * x1],
                [a1 * x1 * x4, -a1 * x4**2, -a2, a2 * x1],
            ]
        )
    elif case in (Case.U2, Case.SU2):
        om = np.array(
            [
                [0, 0, x1**2],
                [x1**2, 0, 0],
                [0, -x1**2, 0],
                [x1**2, 0, 0],
                [0, -(x1**2), 0],
                [0, 0, 0],
            ]
        )
        b = np.column_stack(
            [
                (1 + x5) * np.array([[a3, 0, a2], [0, -a3, -a1], [-a1, a2, 0]]),
                [(-1 + x5) * a2, (1 - x5) * a1, 0],
            ]
        )
        if case is Case.SU2:
            om, b = om[:3], b[:, :3]
    elif case is Case.SO3_STD:
        q = 1.0 - x5
        om = np.array([[x1**2, 0, 0], [0, 0, 0], [0, 0, 0]])
        b = np.array(
            [
                [(-1 + x1**2 / q) * a2, -x1 * x4 / q * a2, 0],
                [(1 - x1**2 / q) * a1, x1 * x4 / q * a1, 0],
                [x1 * x4 / q * a1, (-1 + x1**2 / q) * a1, -a2],
            ]
        )
    elif case is Case.SO3_IRR:
        om = np.array(
            [
                [0, 2 * x1 * (x1 + SQRT3 * x5), 0],
                [0, 0, x1**2 - 3 * x5**2],
                [2 * x1 * (-x1 + SQRT3 * x5), 0, 0],
            ]
        )
        c = SQRT3 * x1
        b = np.array(
            [
                [0, (1 - 2 * x5) * a2, -(c + x5 + 1) * a3],
                [(c - x5 - 1) * a3, (-1 + 2 * x5) * a1, 0],
                [(-c + x5 + 1) * a2, 0, (c + x5 + 1) * a1],
            ]
        )
    else:
        raise SliceError(f"no data lemma for {case.value}")
    return om.astype(float), b.astype(float)


def data_tables(case: Case, p: TotalPoint) -> DataTables:
    """Closed-form data lemma tables next to a recomputation from FD fields and frames."""
    require_slice(case, p)
    om_c, b_c = _closed_tables(case, p)
    fields = [fundamental_field_fd(case, i, p) for i in range(CASES[case].dim)]
    pairs = _pairs(CASES[case].dim)
    om_f = np.array([[fields[i].horizontal @ w @ fields[j].horizontal for w in _OMEGA4] for i, j in pairs])
    bco = vertical_coframe(p.base, p.fiber)
    b_f = np.column_stack([bco @ f.vector for f in fields])
    return DataTables(tuple(pairs), om_c, om_f, b_c, b_f)


# -- normal forms and orbit types --------------------------------------------------------------


def _rotation_to_first_axis(v: np.ndarray) -> np.ndarray:
    """Rotation (det 1) of ``R^n`` sending ``v`` to ``|v| e_1``; identity for ``v = 0``."""
    n = v.size
    norm = np.linalg.norm(v)
    if norm < 1e-300:
        return np.eye(n)
    basis = np.column_stack([v / norm, np.eye(n)])
    q, _ = np.linalg.qr(basis)
    q = q[:, :n]
    if q[:, 0] @ v < 0:
        q[:, 0] = -q[:, 0]
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return q.T


def slice_element(case: Case, x) -> np.ndarray:
    """An element of the case's group moving the base point ``x`` onto the slice."""
    x = np.asarray(x, dtype=float)
    m = np.eye(5)
    if case is Case.SO4:
        m[:4, :4] = _rotation_to_first_axis(x[:4])
    elif case in (Case.SO3xSO2, Case.SO3_STD):
        m[:3, :3] = _rotation_to_first_axis(x[:3])
        if case is Case.SO3xSO2:
            r2 = _rotation_to_first_axis(x[3:])
            m[3:, 3:] = r2 if np.linalg.norm(x[3:]) > 0 else np.eye(2)
    elif case in (Case.U2, Case.SU2):
        z1, z2 = complex(x[0], x[1]), complex(x[2], x[3])
        n = np.hypot(abs(z1), abs(z2))
        if n > 0:
            q = np.array([[z1.conjugate(), z2.conjugate()], [-z2, z1]]) / n
            m = unitary_to_so5(q)
    elif case is Case.SO3_IRR:
        w, v = np.linalg.eigh(iota_inv(x))
        v = v[:, ::-1]
        if np.linalg.det(v) < 0:
            v[:, 2] = -v[:, 2]
        m = irr_rep(v.T)
    return m


def _plane_rotation(theta: float) -> np.ndarray:
    m = np.eye(5)
    c, s = np.cos(theta), np.sin(theta)
    m[1:3, 1:3] = [[c, -s], [s, c]]
    return m


def _kill_a3(m: np.ndarray, p: TotalPoint) -> np.ndarray:
    # the stabiliser of e_1 in SO(3) rotates the fiber; pick the angle with a3 = 0, a2 >= 0
    def fiber(theta):
        x, w = _lift(_plane_rotation(theta) @ m, p)
        return fiber_coords(ChartId.FRAME, x, w)

    if abs(p.base[4]) >= 1.0 - 1e-12:
        return np.eye(5)
    grid = np.linspace(0.0, 2.0 * np.pi, 65)
    vals = [fiber(t)[2] for t in grid]
    best = 0.0
    for lo, hi, flo, fhi in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if flo == 0 or np.sign(flo) != np.sign(fhi):
            t = lo if flo == 0 else brentq(lambda u: fiber(u)[2], lo, hi, xtol=1e-15)
            if fiber(t)[1] >= 0:
                best = t
                break
    return _plane_rotation(best)


def to_slice(case: Case, p: TotalPoint) -> tuple[GroupElement, TotalPoint]:
    """Explicit group element and the image of ``p`` on the canonical slice.

    The image is in FRAME when possible and in a pole chart at the poles.
    """
    g = group_element(case, slice_element(case, p.base))
    if case is Case.SO3_STD:
        g = group_element(case, _kill_a3(g.m, p) @ g.m)
    x, w = _lift(g.m, p)
    if abs(x[4]) < 1.0 - 1e-12:
        chart = ChartId.FRAME
    else:
        chart = ChartId.POLE_PLUS if x[4] > 0 else ChartId.POLE_MINUS
        x = np.array([0, 0, 0, 0, np.sign(x[4])], dtype=float)
    return g, TotalPoint(chart, x, fiber_coords(chart, x, w))


@dataclass(frozen=True)
class OrbitInfo:
    dimension: int
    label: str


def orbit_dimension(case: Case, p: TotalPoint, tol: float = RANK_TOL) -> int:
    vecs = np.array([fundamental_field_fd(case, i, p).vector for i in range(CASES[case].dim)])
    sv = np.linalg.svd(vecs, compute_uv=False)
    # absolute floor: FD noise alone must not count as a direction
    floor = RANK_FLOOR * max(1.0, float(np.linalg.norm(p.fiber)))
    return int(np.sum(sv > max(tol * sv[0], floor)))


def _frame_fiber(x, w) -> np.ndarray:
    # FRAME fiber coordinates even in the conditioning margin near a pole
    return fiber_coords(ChartId.FRAME, x, w)


def orbit_label(case: Case, p: TotalPoint, tol: float = 1e-9) -> str:
    """Orbit type read off from the lemma case splits at the slice normal form."""
    g, s = to_slice(case, p)
    x = s.base
    scale = max(1.0, p.r)
    zero = lambda *vals: all(abs(v) <= tol * scale for v in vals)  # noqa: E731
    at_pole = s.chart in (ChartId.POLE_PLUS, ChartId.POLE_MINUS)
    a = s.fiber
    if case is Case.SO4:
        if not at_pole:
            return "S³" if zero(*a) else "SO(4)/SO(2)"
        return "*" if zero(*a) else "S²"
    if case is Case.SO3xSO2:
        x1 = x[0]
        if abs(x1) <= tol:
            return "S¹" if zero(*a) else "S²×S¹"
        if abs(x1 - 1.0) <= tol:
            return "S²" if zero(a[1], a[2]) else "SO(3)×SO(2)/SO(2)"
        return "S²×S¹" if zero(a[1], a[2]) else "SO(3)×SO(2)"
    if case in (Case.U2, Case.SU2):
        if at_pole:
            if s.chart is ChartId.POLE_PLUS:
                return "*" if zero(*a) else "S²"
            if case is Case.SU2:
                return "*"
            return "*" if zero(a[1], a[2]) else "S¹"
        if case is Case.SU2:
            return "S³"
        return "S³" if zero(a[0], a[1]) else "U(2)"
    if case is Case.SO3_STD:
        if abs(x[0]) <= tol:
            return "*" if zero(*a) else "S²"
        return "S²" if zero(a[1], a[2]) else "SO(3)"
    if case is Case.SO3_IRR:
        x5 = x[4]
        if abs(abs(x5) - 0.5) <= tol:
            main, rest = (a[1], (a[0], a[2])) if x5 > 0 else (a[0], (a[1], a[2]))
            if zero(main):
                return "ℝP²" if zero(*rest) else "SO(3)/ℤ₂"
            return "S²" if zero(*rest) else "SO(3)"
        nzeros = sum(zero(v) for v in a)
        if nzeros <= 1:
            return "SO(3)"
        return "SO(3)/ℤ₂" if nzeros == 2 else "SO(3)/(ℤ₂×ℤ₂)"
    raise ValueError(case)


def orbit_info(case: Case, p: TotalPoint) -> OrbitInfo:
    return OrbitInfo(orbit_dimension(case, p), orbit_label(case, p))
