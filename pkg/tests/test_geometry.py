"""Extreme points, categories, the decay vector, and the convergence domain."""

import math

import numpy as np
import pytest

import qbd_tails as qt
from qbd_tails.geometry import (
    EQ_TOL,
    GeometryError,
    classify,
    compute_geometry,
    directional_decay,
    domain_contains,
    extreme_max,
    extreme_r,
    gamma_point,
    sample_boundary,
)
from qbd_tails.kernel import gamma, zeta_upper
from qbd_tails.model import UnstableModelError


def test_extreme_r_product(product):
    assert extreme_r(product, 1) == pytest.approx((3.0, 1.0), abs=1e-9)
    assert extreme_r(product, 2) == pytest.approx((1.0, 3.0), abs=1e-9)


def test_extreme_r_network_closed_form(jackson_paper):
    got = extreme_r(jackson_paper, 1)
    want = qt.jackson_u1r_closed_form(1, 5, 0.25, 0.4)
    assert got == pytest.approx(want, abs=1e-8)


def test_extreme_r_network_q0_special_case(jackson_q0_branch):
    # with no routing back, the crossing sits at (mu1/lam, 1)
    assert extreme_r(jackson_q0_branch, 1) == pytest.approx((5.0, 1.0), abs=1e-8)


def test_extreme_r_satisfies_both_equations(corpus20):
    for m in corpus20:
        for axis in (1, 2):
            pt = extreme_r(m, axis)
            face = "boundary1" if axis == 1 else "boundary2"
            assert abs(gamma(m, "interior", *pt) - 1.0) < 1e-9
            assert abs(gamma(m, face, *pt) - 1.0) < 1e-9
            assert pt[axis - 1] > 1.0


def test_extreme_r_is_outermost_crossing(corpus20):
    # probing the face curve beyond the crossing leaves the kernel region
    for m in corpus20[:8]:
        pt = extreme_r(m, 1)
        geo = compute_geometry(m)
        assert pt[0] <= geo.axis1.u_max * (1 + 1e-12)


def test_extreme_max_product(product):
    u1 = extreme_max(product, 1)
    assert u1 == pytest.approx((4.066027, math.sqrt(3.0)), abs=1e-6)
    # ordinate is the double root of the vertical section at the abscissa
    s = qt.section_coefficients(product, 2, u1[0])
    assert u1[1] == pytest.approx((1 - s.p_star0) / (2 * s.p_star1), abs=1e-9)
    u2 = extreme_max(product, 2)
    assert u2[1] == pytest.approx(3.5001625355386197, abs=1e-6)


def test_extreme_max_symmetric_model(x_shaped):
    bp = qt.branch_points(x_shaped, 1)
    assert extreme_max(x_shaped, 1)[0] == pytest.approx(
        max(bp.all_quartic_roots), abs=1e-12)


def test_gamma_point_product(product):
    # the face value exceeds one at the rightmost point, so the crossing wins
    geo = compute_geometry(product)
    assert geo.axis1.gamma_k_at_max > 1
    assert gamma_point(product, 1) == pytest.approx((3.0, 1.0), abs=1e-9)


def test_gamma_point_at_branch(jackson_q0_branch):
    geo = compute_geometry(jackson_q0_branch)
    assert geo.axis1.gamma_k_at_max < 1
    assert geo.axis1.u_gamma == geo.axis1.u_max_pt
    assert geo.axis1.u_max == pytest.approx(5.124905513821857, abs=1e-9)


def test_gamma_point_equality_case(tangent):
    geo = compute_geometry(tangent)
    assert geo.axis1.gamma_k_at_max == pytest.approx(1.0, abs=1e-12)
    assert geo.axis1.u_gamma == geo.axis1.u_max_pt
    assert geo.axis1.u_r == pytest.approx(geo.axis1.u_max_pt, abs=1e-9)


def test_classify_product(product):
    assert compute_geometry(product).category == "I"


def test_classify_double_pole_model(double_pole):
    geo = compute_geometry(double_pole)
    assert geo.category == "II"
    swapped = compute_geometry(qt.swap_coordinates(double_pole))
    assert swapped.category == "III"
    assert swapped.tau == pytest.approx(geo.tau[::-1], rel=1e-9)


def test_classify_rejects_double_tie(product):
    g1 = compute_geometry(product).axis1
    with pytest.raises(GeometryError):
        classify(g1, g1)


def test_tau_product(product):
    assert compute_geometry(product).tau == pytest.approx((3.0, 3.0), abs=1e-9)


def test_tau_category_two_uses_opposite_branch(double_pole):
    geo = compute_geometry(double_pole)
    v = geo.axis2.u_r[1]
    assert geo.tau[1] == v
    assert geo.tau[0] == pytest.approx(
        float(np.real(zeta_upper(double_pole, 1, v))), rel=1e-12)
    # the corner coincides with the axis-1 crossing by construction
    assert geo.tau[0] == pytest.approx(geo.axis1.u_gamma[0], rel=1e-9)


def test_domain_contains_product(product):
    assert domain_contains(product, (0.0, 0.0))
    assert not domain_contains(product, (math.log(3.0) + 0.01, 0.0))
    assert not domain_contains(product, (math.log(4.1), 0.0))
    assert domain_contains(product, (math.log(3.0) - 0.01, math.log(3.0) - 0.01))


def test_domain_monotone_along_rays(corpus20):
    for m in corpus20[:6]:
        geo = compute_geometry(m)
        for c in ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0)):
            alpha = math.log(directional_decay(m, c))
            for x in (0.5 * alpha, 0.9 * alpha):
                assert domain_contains(m, (x * c[0], x * c[1]))
            x = 1.05 * alpha
            assert not domain_contains(m, (x * c[0], x * c[1]))


def test_directional_decay_product(product):
    assert directional_decay(product, (1, 0)) == pytest.approx(3.0, abs=1e-6)
    assert directional_decay(product, (0, 1)) == pytest.approx(3.0, abs=1e-6)
    assert directional_decay(product, (1, 1)) == pytest.approx(3.0, abs=1e-6)


def test_directional_decay_matches_marginal_rate(corpus20):
    for m in corpus20[:8]:
        rate = qt.marginal_class(m, 1).rate
        assert directional_decay(m, (1, 0)) == pytest.approx(rate, rel=5e-3)


def test_directional_decay_rejects_other_directions(product):
    with pytest.raises(ValueError):
        directional_decay(product, (2, 1))


def test_sample_boundary_kernel_curve(product):
    sample = sample_boundary(product, "gamma_plus", 100)
    assert len(sample.u) == 100
    for (t1, t2), (u1, u2) in zip(sample.theta, sample.u):
        assert abs(gamma(product, "interior", u1, u2) - 1.0) < 1e-9
        assert (math.exp(t1), math.exp(t2)) == pytest.approx((u1, u2), rel=1e-12)
    us = np.array(sample.u)
    assert np.min(np.abs(us - np.array([3.0, 1.0])).sum(axis=1)) < 0.15
    assert np.min(np.abs(us - np.array([1.0, 3.0])).sum(axis=1)) < 0.15


def test_sample_boundary_face_curves(product):
    for curve, face in (("gamma1", "boundary1"), ("gamma2", "boundary2")):
        sample = sample_boundary(product, curve, 50)
        assert len(sample.u) == 50
        for u1, u2 in sample.u:
            assert abs(gamma(product, face, u1, u2) - 1.0) < 1e-9


def test_sample_boundary_endpoints_only(product):
    sample = sample_boundary(product, "gamma_plus", 2)
    bp = qt.branch_points(product, 1)
    assert sample.u[0][0] == pytest.approx(bp.u_min)
    assert sample.u[1][0] == pytest.approx(bp.u_max)


def test_sample_boundary_domain_curve(product):
    sample = sample_boundary(product, "domain", 64)
    geo = compute_geometry(product)
    for t1, t2 in sample.theta:
        from qbd_tails.geometry import _upper_envelope_max
        want = min(math.log(geo.tau[1]), _upper_envelope_max(product, t1))
        assert t2 == pytest.approx(want, abs=1e-9)
    assert sample.theta[-1][0] <= math.log(geo.tau[0])


def test_sample_boundary_unstable_rejected():
    m = qt.jackson_model(4, 5, 4, 0.25, 0.4)
    with pytest.raises(UnstableModelError):
        sample_boundary(m, "gamma_plus", 10)
    with pytest.raises(UnstableModelError):
        compute_geometry(m)


def test_category_comparison_coordinate_free(corpus20):
    # comparing the drivers in exponent coordinates gives the same category
    for m in corpus20:
        geo = compute_geometry(m)
        g1, g2 = geo.axis1, geo.axis2
        d1 = math.log(g1.u_gamma[0]) - math.log(g2.u_gamma[0])
        d2 = math.log(g2.u_gamma[1]) - math.log(g1.u_gamma[1])
        cat = ("I" if d1 > 0 and d2 > 0 else
               "II" if d1 > 0 else "III")
        assert cat == geo.category


def test_tau_dominates_unit(corpus20):
    for m in corpus20:
        tau = compute_geometry(m).tau
        assert tau[0] > 1.0 + 1e-9 and tau[1] > 1.0 + 1e-9
