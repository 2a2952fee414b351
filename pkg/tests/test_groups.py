import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from coassoc.charts import ChartId, Tangent, TotalPoint, make_point
from coassoc.errors import NotInSubgroupError, SliceError
from coassoc.g2 import G2Params, g_lambda_matrix, phi_lambda
from coassoc.groups import (
    CASES,
    IRR_ALGEBRA_LITERAL,
    Case,
    GroupElement,
    act_total,
    all_fields,
    data_tables,
    exp_algebra,
    fundamental_field,
    fundamental_field_closed,
    fundamental_field_fd,
    group_element,
    irr_rep,
    irr_rep_algebra,
    on_slice,
    orbit_dimension,
    orbit_info,
    pushforward,
    random_element,
    symmetry_case,
    to_slice,
    unitary_to_so5,
    varpi,
)

ALL = list(Case)
SLICE_CASES = [Case.SO3xSO2, Case.U2, Case.SU2, Case.SO3_STD, Case.SO3_IRR]


def sphere_point(rng, x5_max=0.8):
    x5 = rng.uniform(-x5_max, x5_max)
    u = rng.normal(size=4)
    return np.concatenate([np.sqrt(1 - x5 * x5) * u / np.linalg.norm(u), [x5]])


def random_su2(rng):
    z = rng.normal(size=4)
    z /= np.linalg.norm(z)
    a, b = complex(z[0], z[1]), complex(z[2], z[3])
    return np.array([[a, -b.conjugate()], [b, a.conjugate()]])


def bracket(a, b):
    return a @ b - b @ a


def _in_span(mat, basis):
    flat = np.array([b.ravel() for b in basis]).T
    coeffs, *_ = np.linalg.lstsq(flat, mat.ravel(), rcond=None)
    return np.max(np.abs(flat @ coeffs - mat.ravel()))


@pytest.mark.parametrize("case", ALL)
def test_algebra_antisymmetric_and_closed(case):
    basis = CASES[case].algebra
    assert len(basis) == CASES[case].dim
    for e in basis:
        assert np.allclose(e, -e.T)
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            assert _in_span(bracket(basis[i], basis[j]), basis) < 1e-12


def test_su2_structure_constants():
    e = CASES[Case.SU2].algebra
    for j in range(3):
        assert np.allclose(bracket(e[j], e[(j + 1) % 3]), 2 * e[(j + 2) % 3])


def test_irr_algebra_matches_printed_basis():
    for gen, literal in zip(CASES[Case.SO3_IRR].algebra, IRR_ALGEBRA_LITERAL):
        assert np.allclose(gen, literal)


def test_irr_rep_is_homomorphism(rng):
    from coassoc.groups import rotation_generator

    gens = [rotation_generator(i, j, 3) for i, j in [(0, 1), (0, 2), (1, 2)]]
    a = expm(sum(rng.normal() * g for g in gens))
    b = expm(sum(rng.normal() * g for g in gens))
    assert np.allclose(irr_rep(a @ b), irr_rep(a) @ irr_rep(b), atol=1e-12)
    assert np.allclose(irr_rep_algebra(gens[0]), (expm(1e-6 * irr_rep_algebra(gens[0])) - np.eye(5)) / 1e-6, atol=1e-5)


@pytest.mark.parametrize("case", ALL)
def test_exp_inverse(case, rng):
    coeffs = rng.normal(size=CASES[case].dim)
    g = exp_algebra(case, coeffs)
    h = exp_algebra(case, -coeffs)
    assert np.max(np.abs(g.m @ h.m - np.eye(5))) < 1e-12


@pytest.mark.parametrize("case", ALL)
def test_random_elements_are_members(case, rng):
    for _ in range(5):
        g = random_element(case, rng)
        assert np.allclose(g.m.T @ g.m, np.eye(5), atol=1e-10)
        assert np.linalg.det(g.m) == pytest.approx(1.0, abs=1e-10)
        group_element(case, g.m)


def test_membership_rejections():
    with pytest.raises(NotInSubgroupError):
        GroupElement(2 * np.eye(5))
    flip = np.diag([-1.0, 1, 1, 1, 1])
    with pytest.raises(NotInSubgroupError):
        GroupElement(flip)
    swap = np.eye(5)[[4, 1, 2, 3, 0]] @ np.diag([-1.0, 1, 1, 1, 1])
    with pytest.raises(NotInSubgroupError):
        group_element(Case.SO4, swap)


def test_case_parsing():
    assert Case.parse("so3std") is Case.SO3_STD
    assert Case.parse("so3xso2") is Case.SO3xSO2
    assert Case.parse("SO3") is Case.SO3_STD
    assert symmetry_case("su2").dim == 3
    with pytest.raises(ValueError):
        Case.parse("G2")


def test_varpi_homomorphism_and_double_cover(rng):
    for _ in range(10):
        a, b = random_su2(rng), random_su2(rng)
        assert np.allclose(varpi(a @ b), varpi(a) @ varpi(b), atol=1e-10)
    assert np.allclose(varpi(-np.eye(2)), np.eye(3))


@pytest.mark.parametrize("case", ALL)
def test_identity_action(case, rng):
    p = make_point(sphere_point(rng), rng.normal(size=3))
    q = act_total(case, np.eye(5), p)
    assert np.allclose(q.base, p.base) and np.allclose(q.fiber, p.fiber)


def test_so3_block_action_formula(rng):
    x1, x4, x5 = 0.6, 0.48, 0.64
    a = rng.normal(size=3)
    p = make_point([x1, 0, 0, x4, x5], a)
    gen = CASES[Case.SO3_STD].algebra
    g = exp_algebra(Case.SO3_STD, rng.normal(size=3)).m[:3, :3]
    q = act_total(Case.SO3_STD, exp_algebra(Case.SO3_STD, np.zeros(3)).m, p)
    assert np.allclose(q.fiber, a)
    m = np.eye(5)
    m[:3, :3] = g
    q = act_total(Case.SO3xSO2, m, p)
    sign = np.array([[1, 1, -1], [1, 1, -1], [-1, -1, 1]])
    assert np.allclose(q.base, [g[0, 0] * x1, g[1, 0] * x1, g[2, 0] * x1, x4, x5])
    assert np.allclose(q.fiber, (sign * g) @ a, atol=1e-12)
    assert len(gen) == 3


@pytest.mark.parametrize("alpha", [0.3, -1.1, 2.0])
def test_so2_block_action_formula(alpha, rng):
    x1, x4 = 0.6, 0.8
    a = rng.normal(size=3)
    p = make_point([x1, 0, 0, x4, 0], a)
    c, s = np.cos(alpha), np.sin(alpha)
    m = np.eye(5)
    m[3:, 3:] = [[c, -s], [s, c]]
    q = act_total(Case.SO3xSO2, m, p, ChartId.FRAME)
    d = x4**2 * (1 - c) - x4 * s + c
    off = x1 * x4 * (1 - c) - x1 * s
    amat = np.array([[d, off], [-off, d]]) / (1 - x4 * s)
    assert np.allclose(q.base, [x1, 0, 0, x4 * c, x4 * s])
    assert np.allclose(q.fiber, [a[0], *(amat @ a[1:])], atol=1e-12)


def test_su2_acts_by_varpi_at_north_pole(rng):
    a = rng.normal(size=3)
    for _ in range(5):
        q = random_su2(rng)
        g = unitary_to_so5(q)
        north = act_total(Case.SU2, g, TotalPoint(ChartId.POLE_PLUS, [0, 0, 0, 0, 1], a))
        south = act_total(Case.SU2, g, TotalPoint(ChartId.POLE_MINUS, [0, 0, 0, 0, -1], a))
        assert np.allclose(north.fiber, varpi(q) @ a, atol=1e-12)
        assert np.allclose(south.fiber, a, atol=1e-12)


@pytest.mark.parametrize("case", ALL)
def test_action_is_automorphism(case, rng):
    params = G2Params(1.0)
    for _ in range(3):
        p = make_point(sphere_point(rng, 0.5), rng.normal(size=3))
        vecs = [Tangent.from_vector(p, v) for v in rng.normal(size=(3, 7))]
        for _ in range(20):
            g = random_element(case, rng, scale=0.5)
            try:
                moved = [pushforward(case, g, v, ChartId.FRAME) for v in vecs]
                break
            except Exception:  # image outside the FRAME chart: try another element
                continue
        q = moved[0].at
        g0, g1 = g_lambda_matrix(p, params), g_lambda_matrix(q, params)
        for i in range(3):
            for j in range(3):
                assert moved[i].vector @ g1 @ moved[j].vector == pytest.approx(vecs[i].vector @ g0 @ vecs[j].vector, abs=1e-8)
        before = phi_lambda(p, params)(*[v.vector for v in vecs])
        after = phi_lambda(q, params)(*[v.vector for v in moved])
        assert after == pytest.approx(before, abs=1e-8)


def test_su2_example_fields():
    x1, x5 = 0.8, 0.6
    p = make_point([x1, 0, 0, 0, x5], [0.3, -0.5, 0.7])
    f = fundamental_field(Case.SU2, 0, p, "closed")
    assert np.allclose(f.vector, [0, -x1, 0, 0, 0, 0, 0])


def test_irr_example_field():
    x5 = 0.2
    x1 = np.sqrt(1 - x5 * x5)
    a1, a2 = 0.3, -0.5
    p = make_point([x1, 0, 0, 0, x5], [a1, a2, 0.7])
    f = fundamental_field(Case.SO3_IRR, 1, p, "closed")
    assert np.allclose(f.vector, [-2 * x1, 0, 0, 0, 3 * a2, -3 * a1, 0])


def test_zero_combination_is_zero(rng):
    p = make_point(sphere_point(rng), rng.normal(size=3))
    for case in ALL:
        f = fundamental_field(case, np.zeros(CASES[case].dim), p, "fd")
        assert np.all(f.vector == 0)


@pytest.mark.parametrize("case", SLICE_CASES)
def test_closed_fields_match_fd(case, rng):
    for _ in range(10):
        _, q = to_slice(case, make_point(sphere_point(rng), rng.normal(size=3)))
        if q.chart is not ChartId.FRAME:
            continue
        for i in range(CASES[case].dim):
            closed = fundamental_field_closed(case, i, q).vector
            fd = fundamental_field_fd(case, i, q).vector
            assert np.max(np.abs(closed - fd)) < 1e-6


def test_closed_field_needs_slice():
    p = make_point([0.5, 0.5, 0.5, 0.5, 0])
    with pytest.raises(SliceError):
        fundamental_field_closed(Case.SU2, 0, p)


@pytest.mark.parametrize("case", SLICE_CASES)
def test_to_slice_lands_on_slice(case, rng):
    for _ in range(10):
        p = make_point(sphere_point(rng), rng.normal(size=3))
        g, q = to_slice(case, p)
        assert on_slice(case, q)
        assert q.r == pytest.approx(p.r, abs=1e-10)
        moved = act_total(case, g, p, ChartId.FRAME)
        assert np.allclose(moved.base, q.base) and np.allclose(moved.fiber, q.fiber, atol=1e-10)


def test_data_table_examples():
    x1, x4 = 0.6, 0.8
    t = data_tables(Case.SO3xSO2, make_point([x1, 0, 0, x4, 0], [0.7, 0, 0]))
    assert t.omega_closed[0, 0] == pytest.approx(x1**2)
    assert t.omega_frame[0, 0] == pytest.approx(x1**2, abs=1e-9)
    x5 = 0.6
    a = np.array([0.3, -0.4, 0.9])
    t = data_tables(Case.U2, make_point([0.8, 0, 0, 0, x5], a))
    assert t.b_frame[0, 0] == pytest.approx((1 + x5) * a[2], abs=1e-9)
    x5 = 0.2
    t = data_tables(Case.SO3_IRR, make_point([np.sqrt(1 - x5 * x5), 0, 0, 0, x5], a))
    assert t.b_frame[0, 1] == pytest.approx((1 - 2 * x5) * a[1], abs=1e-9)


@pytest.mark.parametrize("case", [Case.SO3xSO2, Case.U2, Case.SO3_STD, Case.SO3_IRR])
def test_data_tables_agree(case, rng):
    for _ in range(10):
        _, q = to_slice(case, make_point(sphere_point(rng), rng.normal(size=3)))
        assert data_tables(case, q).max_discrepancy() < 1e-8


def test_so3so2_orbit_formula(rng):
    # phi(E1*, E3*, E4*) = 2 s x1 x4 (a2 x1 - a3 x4) on the slice
    for _ in range(10):
        _, q = to_slice(Case.SO3xSO2, make_point(sphere_point(rng), rng.normal(size=3)))
        f = all_fields(Case.SO3xSO2, q, "closed")
        x, a = q.base, q.fiber
        s = (1 + a @ a) ** 0.25
        value = phi_lambda(q, G2Params(1.0))(f[0].vector, f[2].vector, f[3].vector)
        assert value == pytest.approx(2 * s * x[0] * x[3] * (a[1] * x[0] - a[2] * x[3]), abs=1e-12)


def test_orbit_examples():
    p = make_point([0.8, 0, 0, 0, 0.6], [0.3, 0.2, -0.5])
    assert orbit_info(Case.SO4, p).dimension == 5
    assert orbit_info(Case.SO4, p).label == "SO(4)/SO(2)"
    south = TotalPoint(ChartId.POLE_MINUS, [0, 0, 0, 0, -1], [0.2, 0.1, 0.4])
    assert orbit_dimension(Case.SU2, south) == 0
    x5 = 0.5
    irr = make_point([np.sqrt(1 - x5 * x5), 0, 0, 0, x5])
    assert orbit_info(Case.SO3_IRR, irr).label == "ℝP²"
    north = TotalPoint(ChartId.POLE_PLUS, [0, 0, 0, 0, 1], [1, 0, 0])
    assert orbit_info(Case.SO4, north).label == "S²"


@pytest.mark.parametrize("case", ALL)
def test_orbit_dimension_invariant_along_orbit(case, rng):
    p = make_point(sphere_point(rng, 0.5), rng.normal(size=3))
    for _ in range(20):
        g = random_element(case, rng, scale=0.3)
        try:
            q = act_total(case, g, p, ChartId.FRAME)
            break
        except Exception:
            continue
    assert orbit_dimension(case, q) == orbit_dimension(case, p)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_fd_fields_are_linear(c1, c2, c3):
    p = make_point([0.5, 0.1, -0.3, 0.7, 0.4] / np.linalg.norm([0.5, 0.1, -0.3, 0.7, 0.4]), [0.4, -1.0, 0.2])
    coeffs = np.array([c1, c2, c3])
    combo = fundamental_field_fd(Case.SU2, coeffs, p).vector
    parts = sum(c * fundamental_field_fd(Case.SU2, i, p).vector for i, c in enumerate(coeffs))
    assert np.allclose(combo, parts, atol=1e-9)
