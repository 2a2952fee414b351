from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coassoc.charts import ChartId, Tangent, TotalPoint, make_point, vertical_coframe
from coassoc.errors import ChartDomainError, DegenerateFormError, DegenerateSpanError
from coassoc.forms import AltForm, sort_with_sign
from coassoc.g2 import (
    PHI0,
    PHI_STD,
    STAR_PHI0,
    G2Params,
    coassoc_residual,
    g_lambda,
    g_lambda_matrix,
    hodge_star,
    metric_from_phi,
    phi0_eval,
    phi_lambda,
    star_phi_lambda,
    torsion_residual,
)

E = np.eye(7)


def random_point(rng, r_max=3.0, x5_max=0.8):
    x5 = rng.uniform(-x5_max, x5_max)
    u = rng.normal(size=4)
    base = np.concatenate([np.sqrt(1 - x5 * x5) * u / np.linalg.norm(u), [x5]])
    d = rng.normal(size=3)
    return make_point(base, rng.uniform(0, r_max) * d / np.linalg.norm(d))


def _brute_metric_numerator(phi, v, w):
    # (i_v phi ^ i_w phi ^ phi)(e_1..e_7) by summing over all permutations
    a, b = phi.interior(v), phi.interior(w)
    total = 0.0
    for perm in permutations(range(7)):
        sign, _ = sort_with_sign(perm)
        total += sign * a(E[perm[0]], E[perm[1]]) * b(E[perm[2]], E[perm[3]]) * phi(*E[list(perm[4:])])
    return total / (2 * 2 * 6)


def test_phi0_values():
    assert phi0_eval(E[0], E[1], E[2]) == 1
    assert phi0_eval(E[0], E[5], E[6]) == -1
    assert phi0_eval(E[0], E[1], E[3]) == 0


def test_metric_recovery_brute_force():
    assert -_brute_metric_numerator(PHI0, E[0], E[0]) / 6 == pytest.approx(1.0)
    assert _brute_metric_numerator(PHI0, E[0], E[1]) == pytest.approx(0.0)
    assert metric_from_phi(PHI0, E[0], E[0]) == pytest.approx(1.0, abs=1e-14)
    assert metric_from_phi(PHI0, E[0], E[1]) == pytest.approx(0.0, abs=1e-14)


def test_metric_recovery_bilinear():
    assert metric_from_phi(PHI0, 2 * E[0], 2 * E[0]) == pytest.approx(4 * metric_from_phi(PHI0, E[0], E[0]))


def test_flat_metric_exact():
    assert np.max(np.abs(metric_from_phi(PHI0) - np.eye(7))) < 1e-12


def test_star_phi0_is_hodge_dual():
    star = hodge_star(make_point([1, 0, 0, 0, 0]), G2Params(1.0), PHI0)  # metric irrelevant check below
    assert star.degree == 4
    from coassoc.forms import hodge_star as raw_star

    assert np.allclose(raw_star(PHI0, np.eye(7)).comps, STAR_PHI0.comps)


def test_degenerate_form_rejected():
    with pytest.raises(DegenerateFormError):
        metric_from_phi(AltForm.from_terms(3, {(0, 1, 2): 1.0}))


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_metric_recovery_reproduces_g_lambda(lam, rng):
    params = G2Params(lam)
    for _ in range(10):
        p = random_point(rng)
        gram = g_lambda_matrix(p, params)
        assert np.allclose(metric_from_phi(phi_lambda(p, params)), gram, rtol=1e-12, atol=1e-12)


def test_phi_lambda_at_zero_fiber():
    phi = phi_lambda(make_point([1, 0, 0, 0, 0]), G2Params(1.0))
    assert phi(E[0], E[1], E[4]) == pytest.approx(2.0)
    assert phi(E[4], E[5], E[6]) == pytest.approx(1.0)


def _horizontal_lifts(p):
    b = vertical_coframe(p.base, p.fiber)
    return [E[k] - np.concatenate([np.zeros(4), b[:, k]]) for k in range(4)]


def test_phi_lambda_has_no_horizontal_part(rng):
    for _ in range(10):
        p = random_point(rng)
        phi = phi_lambda(p, G2Params(1.3))
        lift = _horizontal_lifts(p)
        for idx in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]:
            assert abs(phi(*[lift[i] for i in idx])) < 1e-14


def test_coordinate_lifts_horizontal_at_zero_fiber(rng):
    p = random_point(rng, r_max=0.0)
    assert phi_lambda(p, G2Params(1.0))(E[0], E[1], E[2]) == 0.0


@pytest.mark.parametrize("lam,a1", [(1.0, 0.5), (0.3, 2.0), (2.0, -1.2)])
def test_b1_omega1_coefficient(lam, a1):
    x = np.array([0.6, 0, 0, 0.8, 0])
    p = make_point(x, [a1, 0, 0])
    lift = _horizontal_lifts(p)
    value = phi_lambda(p, G2Params(lam))(lift[0], lift[1], E[4])
    assert value == pytest.approx(2 * (lam + a1 * a1) ** 0.25, rel=1e-12)


def test_g_lambda_at_zero_fiber():
    p = make_point([1, 0, 0, 0, 0])
    params = G2Params(1.0)
    e1, da1 = Tangent(p, [1, 0, 0, 0], [0, 0, 0]), Tangent(p, [0] * 4, [1, 0, 0])
    assert g_lambda(p, params, e1, e1) == pytest.approx(2.0)
    assert g_lambda(p, params, da1, da1) == pytest.approx(1.0)


def test_star_twice_is_identity(rng):
    p, params = random_point(rng), G2Params(0.7)
    phi = phi_lambda(p, params)
    twice = hodge_star(p, params, star_phi_lambda(p, params))
    assert np.allclose(twice.comps, phi.comps, atol=1e-10)


def _norm_sq_brute(phi, gram):
    inv = np.linalg.inv(gram)
    t = phi.dense()
    return np.einsum("ijk,abc,ia,jb,kc->", t, t, inv, inv, inv) / 6.0


def test_phi_norm_is_seven(rng):
    for lam in (0.2, 1.0, 3.0):
        p = random_point(rng)
        params = G2Params(lam)
        assert _norm_sq_brute(phi_lambda(p, params), g_lambda_matrix(p, params)) == pytest.approx(7.0, rel=1e-11)


def test_phi_std_norm_seven():
    assert _norm_sq_brute(PHI_STD, np.eye(7)) == pytest.approx(7.0)


def test_torsion_free(rng):
    for lam in (0.5, 1.0, 2.0):
        for _ in range(5):
            assert torsion_residual(random_point(rng), G2Params(lam), h=1e-4).value < 1e-6


def test_coarse_fd_step_is_worse(rng):
    p = random_point(rng)
    fine = torsion_residual(p, G2Params(1.0), h=1e-4, tol=np.inf).value
    coarse = torsion_residual(p, G2Params(1.0), h=1e-2, tol=np.inf).value
    assert coarse > fine


def test_params_guard():
    with pytest.raises(ValueError):
        G2Params(0.0)
    with pytest.raises(ValueError):
        G2Params(-1.0)
    cone = G2Params(0.0, cone=True)
    with pytest.raises(ChartDomainError):
        phi_lambda(make_point([1, 0, 0, 0, 0], [1e-8, 0, 0]), cone)
    assert np.isfinite(phi_lambda(make_point([1, 0, 0, 0, 0], [1, 0, 0]), cone).sup_norm())


def test_frame_chart_required():
    p = TotalPoint(ChartId.STEREO_PSI, [0, 0, 0, 0, 1])
    with pytest.raises(ChartDomainError):
        phi_lambda(p, G2Params(1.0))


def test_zero_section_is_coassociative(rng):
    for _ in range(10):
        p = random_point(rng, r_max=0.0)
        for inv in (False, True):
            assert coassoc_residual(p, G2Params(1.0), E[:4], invariant=inv) < 1e-14


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_fiber_plus_horizontal_residual(lam):
    p = make_point([0.6, 0, 0, 0.8, 0])
    vecs = [E[4], E[5], E[6], E[0]]
    assert coassoc_residual(p, G2Params(lam), vecs) == pytest.approx(lam**-0.75, rel=1e-12)


def test_residual_scale_invariant(rng):
    p = random_point(rng)
    vecs = rng.normal(size=(4, 7))
    params = G2Params(1.0)
    for inv in (False, True):
        assert coassoc_residual(p, params, 2 * vecs, inv) == pytest.approx(coassoc_residual(p, params, vecs, inv))


@given(st.lists(st.floats(-2, 2), min_size=16, max_size=16))
def test_invariant_residual_depends_on_plane_only(mix):
    rng = np.random.default_rng(3)
    p = random_point(rng)
    vecs = rng.normal(size=(4, 7))
    m = np.array(mix).reshape(4, 4) + 3 * np.eye(4)
    if abs(np.linalg.det(m)) < 1e-2:
        return
    params = G2Params(1.0)
    a = coassoc_residual(p, params, vecs, invariant=True)
    b = coassoc_residual(p, params, m @ vecs, invariant=True)
    assert a == pytest.approx(b, abs=1e-9)


def test_degenerate_span():
    p = make_point([1, 0, 0, 0, 0])
    with pytest.raises(DegenerateSpanError):
        coassoc_residual(p, G2Params(1.0), [E[0], E[1], E[2], E[0] + E[1]])
    with pytest.raises(DegenerateSpanError):
        coassoc_residual(p, G2Params(1.0), [E[0], E[1], E[2], E[0]], invariant=True)
