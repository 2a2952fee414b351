"""G2 structures: the flat model, metric recovery and the Bryant-Salamon
torsion-free structure on the bundle of ASD 2-forms over ``S^4``.

On a FRAME chart point with fiber radius ``r`` put ``s = (lam + r^2)^(1/4)``.
With ``omega_i`` the horizontal ASD forms and ``b_i`` the vertical coframe,

    phi_lam = 2 s sum_i b_i ^ omega_i + s^-3 b_1 ^ b_2 ^ b_3,
    g_lam   = 2 s^2 g_S4 + s^-2 sum_i b_i^2.

All forms returned here live on the adapted frame ``(e_1..e_4, d/da_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import (
    ChartId,
    Tangent,
    TotalPoint,
    check_domain,
    frame_vectors,
    stereo_inverse,
    stereo_coords,
    stereo_jacobian,
    vertical_coframe,
)
from .errors import ChartDomainError, DegenerateFormError, DegenerateSpanError
from .forms import AltForm, hodge_star as _hodge_star

CONE_R_MIN = 1e-6


def _one_based(degree, terms):
    return AltForm.from_terms(degree, {tuple(i - 1 for i in k): v for k, v in terms.items()})


PHI0 = _one_based(
    3,
    {(1, 2, 3): 1, (1, 4, 5): 1, (1, 6, 7): -1, (2, 4, 6): 1, (2, 5, 7): 1, (3, 4, 7): 1, (3, 5, 6): -1},
)
STAR_PHI0 = _one_based(
    4,
    {
        (4, 5, 6, 7): 1,
        (2, 3, 6, 7): 1,
        (2, 3, 4, 5): -1,
        (1, 3, 5, 7): 1,
        (1, 3, 4, 6): 1,
        (1, 2, 5, 6): 1,
        (1, 2, 4, 7): -1,
    },
)

# Orthonormal coframe order used below: horizontal 0..3, vertical 4..6.  The
# flat model's slots 1,2,3 are vertical and 4..7 horizontal.
_MODEL_TO_FRAME = np.zeros((7, 7))
for _src, _dst in enumerate([4, 5, 6, 0, 1, 2, 3]):
    _MODEL_TO_FRAME[_src, _dst] = 1.0
PHI_STD = PHI0.pullback(_MODEL_TO_FRAME)
STAR_PHI_STD = STAR_PHI0.pullback(_MODEL_TO_FRAME)


def phi0_eval(v1, v2, v3) -> float:
    return PHI0(v1, v2, v3)


def metric_from_phi(phi: AltForm, v1=None, v2=None, vol: float | None = None):
    """Metric determined by a definite 3-form via ``-6 g(v, w) vol = i_v phi ^ i_w phi ^ phi``.

    ``vol`` is the value of the volume form on the frame.  When omitted it is
    fixed by homogeneity (``vol^2 = det g``), frame orientation assumed.
    Returns the Gram matrix, or ``g(v1, v2)`` when both vectors are given.
    """
    n = phi.dim
    basis = np.eye(n)
    contractions = [phi.interior(basis[i]) for i in range(n)]
    bmat = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            wij = contractions[i].wedge(contractions[j]).wedge(phi)
            bmat[i, j] = bmat[j, i] = -wij.comps[0] / 6.0
    eig = np.linalg.eigvalsh(bmat)
    scale = np.max(np.abs(eig))
    if scale == 0 or not (np.all(eig > 1e-12 * scale) or np.all(eig < -1e-12 * scale)):
        raise DegenerateFormError("3-form is not definite")
    if vol is None:
        det = np.prod(eig)
        gram = bmat / (np.sign(det) * abs(det) ** (1.0 / 9.0))
    else:
        gram = bmat / vol
    if v1 is None and v2 is None:
        return gram
    return float(np.asarray(v1) @ gram @ np.asarray(v2))


@dataclass(frozen=True)
class G2Params:
    """``lam > 0`` smooth structure; ``lam = 0`` is the cone, allowed with ``cone=True``."""

    lam: float
    cone: bool = False

    def __post_init__(self):
        if self.lam < 0 or (self.lam == 0 and not self.cone):
            raise ValueError("lambda must be positive (lambda = 0 needs cone=True)")


def s_lambda(params: G2Params, r2: float) -> float:
    return (params.lam + r2) ** 0.25


def _check_point(p: TotalPoint, params: G2Params) -> None:
    if p.chart is not ChartId.FRAME:
        raise ChartDomainError("the G2 structure is evaluated in the FRAME chart")
    check_domain(ChartId.FRAME, p.base)
    if params.lam == 0 and p.r <= CONE_R_MIN:
        raise ChartDomainError("cone structure needs r > 1e-6")


def orthonormal_coframe(p: TotalPoint, params: G2Params) -> np.ndarray:
    """7x7 matrix sending adapted-frame components to a ``g_lam``-orthonormal coframe."""
    _check_point(p, params)
    s = s_lambda(params, p.fiber @ p.fiber)
    mat = np.zeros((7, 7))
    mat[:4, :4] = np.sqrt(2.0) * s * np.eye(4)
    mat[4:] = vertical_coframe(p.base, p.fiber) / s
    return mat


def phi_lambda(p: TotalPoint, params: G2Params) -> AltForm:
    return PHI_STD.pullback(orthonormal_coframe(p, params))


def star_phi_lambda(p: TotalPoint, params: G2Params) -> AltForm:
    return _hodge_star(phi_lambda(p, params), g_lambda_matrix(p, params))


def g_lambda_matrix(p: TotalPoint, params: G2Params) -> np.ndarray:
    n = orthonormal_coframe(p, params)
    return n.T @ n


def g_lambda(p: TotalPoint, params: G2Params, v: Tangent, w: Tangent) -> float:
    return float(v.vector @ g_lambda_matrix(p, params) @ w.vector)


def hodge_star(p: TotalPoint, params: G2Params, form: AltForm) -> AltForm:
    return _hodge_star(form, g_lambda_matrix(p, params))


# -- finite-difference exterior derivative ---------------------------------------


def exterior_derivative_fd(field, y, h: float = 1e-4, richardson: bool = False) -> AltForm:
    """``d alpha`` at ``y`` for a form field given in coordinate components.

    ``field(y)`` returns an AltForm on ``dy^0..dy^{n-1}``.  Central differences
    with step ``h``; ``richardson`` combines steps ``h`` and ``h/2``.
    """
    y = np.asarray(y, dtype=float)
    n = y.size

    def central(step):
        out = None
        for mu in range(n):
            dy = np.zeros(n)
            dy[mu] = step
            deriv = (field(y + dy) - field(y - dy)) * (0.5 / step)
            term = AltForm.from_terms(1, {(mu,): 1.0}, dim=n).wedge(deriv)
            out = term if out is None else out + term
        return out

    coarse = central(h)
    if not richardson:
        return coarse
    return (central(0.5 * h) * 4.0 - coarse) * (1.0 / 3.0)


def _stereo_chart_for(x) -> ChartId:
    return ChartId.STEREO_PSI if x[4] >= 0 else ChartId.STEREO_PHI


def coordinate_coframe(chart: ChartId, y, params: G2Params) -> tuple[TotalPoint, np.ndarray]:
    """Point and matrix ``M`` with orthonormal coframe ``= M dy``.

    Coordinates are ``y = (u, a)``: stereographic base coordinates of ``chart``
    and FRAME fiber coordinates.
    """
    y = np.asarray(y, dtype=float)
    x = stereo_inverse(chart, y[:4])
    p = TotalPoint(ChartId.FRAME, x / np.linalg.norm(x), y[4:])
    adapted = np.eye(7)
    adapted[:4, :4] = frame_vectors(ChartId.FRAME, p.base) @ stereo_jacobian(chart, y[:4])
    return p, orthonormal_coframe(p, params) @ adapted


def phi_coordinate_field(chart: ChartId, params: G2Params, star: bool = False):
    """``y -> phi_lam`` (or ``*phi_lam`` via the Hodge star) in coordinate components."""

    def field(y):
        coframe = coordinate_coframe(chart, y, params)[1]
        phi = PHI_STD.pullback(coframe)
        return _hodge_star(phi, coframe.T @ coframe) if star else phi

    return field


@dataclass(frozen=True)
class TorsionResidual:
    dphi: float
    dstar_phi: float
    richardson: bool

    @property
    def value(self) -> float:
        return max(self.dphi, self.dstar_phi)


def torsion_residual(
    p: TotalPoint, params: G2Params, h: float = 1e-4, tol: float = 1e-6
) -> TorsionResidual:
    """Sup norms of ``d phi_lam`` and ``d *phi_lam`` in a ``g_lam``-orthonormal coframe.

    Falls back to Richardson extrapolation when the plain central difference
    exceeds ``tol``.
    """
    _check_point(p, params)
    chart = _stereo_chart_for(p.base)
    y = np.concatenate([stereo_coords(chart, p.base), p.fiber])
    to_frame = np.linalg.inv(coordinate_coframe(chart, y, params)[1])

    def measure(richardson):
        out = []
        for star in (False, True):
            d = exterior_derivative_fd(phi_coordinate_field(chart, params, star), y, h, richardson)
            out.append(d.pullback(to_frame).sup_norm())
        return out

    dphi, dstar = measure(False)
    if max(dphi, dstar) <= tol:
        return TorsionResidual(dphi, dstar, False)
    dphi, dstar = measure(True)
    return TorsionResidual(dphi, dstar, True)


# -- coassociativity --------------------------------------------------------------

_TRIPLES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))


def coassoc_residual(p: TotalPoint, params: G2Params, vectors, invariant: bool = False) -> float:
    """How far the span of four tangent vectors is from being coassociative.

    Default: ``max |phi(v_i, v_j, v_k)| / (|v_i| |v_j| |v_k|)`` over the four
    triples, with component norms.  ``invariant=True`` first orthonormalises the
    span for ``g_lam`` and returns the norm of ``phi`` restricted to it, which
    only depends on the plane.
    """
    vecs = np.array([v.vector if isinstance(v, Tangent) else np.asarray(v, float) for v in vectors])
    if vecs.shape != (4, 7):
        raise ValueError("need four 7-component tangent vectors")
    phi = phi_lambda(p, params)
    if invariant:
        gram_full = g_lambda_matrix(p, params)
        norms = np.sqrt(np.einsum("ia,ab,ib->i", vecs, gram_full, vecs))
        if np.any(norms == 0):
            raise DegenerateSpanError("zero vector in span")
        unit = vecs / norms[:, None]
        gram = unit @ gram_full @ unit.T
        w, q = np.linalg.eigh(gram)
        if w[0] < 1e-10:
            raise DegenerateSpanError(f"vectors do not span a 4-plane (min Gram eigenvalue {w[0]:.3e})")
        ortho = (q / np.sqrt(w)).T @ unit
        return float(np.sqrt(sum(phi(*ortho[list(t)]) ** 2 for t in _TRIPLES)))
    norms = np.linalg.norm(vecs, axis=1)
    if np.any(norms == 0) or abs(np.linalg.det(vecs @ vecs.T / np.outer(norms, norms))) < 1e-10:
        raise DegenerateSpanError("vectors do not span a 4-plane")
    return max(abs(phi(*vecs[list(t)])) / np.prod(norms[list(t)]) for t in _TRIPLES)
