"""Shared fixtures: named example models and a seeded random corpus.

The random corpus is filtered for numate comfort: stable, all non-arithmetic
flags true, and the competing singularities well separated so truncated-grid
tail fits converge inside the default window.  Near-tie behavior is covered
by the purpose-built named models instead.
"""

import numpy as np
import pytest

import qbd_tails as qt
from qbd_tails.model import TransitionKernel, validate

U_SET = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)]


def product_model():
    return qt.independent_mm1(0.1, 0.3, 0.15, 0.45)


def jackson_paper_model():
    return qt.jackson_model(1, 5, 4, 0.25, 0.4)


def jackson_q0_geometric_model():
    return qt.jackson_model(1, 2, 5, 0.25, 0.0)


def jackson_q0_branch_model():
    return qt.jackson_model(1, 5, 4, 0.25, 0.0)


def x_shaped_model():
    """Parity-preserving interior with an axis-1 face of the same shape;
    the origin carries a (1,0) jump so the reflected chain stays irreducible."""
    return validate({
        "interior": TransitionKernel.from_probs("interior", {
            (1, 1): 0.2, (-1, -1): 0.3, (1, -1): 0.2, (-1, 1): 0.2, (0, 0): 0.1}),
        "boundary1": TransitionKernel.from_probs("boundary1", {
            (1, 1): 0.2, (-1, 1): 0.2, (0, 0): 0.6}),
        "boundary2": TransitionKernel.from_probs("boundary2", {
            (1, 1): 0.1, (1, -1): 0.3, (0, -1): 0.3, (0, 0): 0.3}),
        "origin": TransitionKernel.from_probs("origin", {
            (1, 1): 0.4, (1, 0): 0.2, (0, 0): 0.4}),
    })


def tangent_model():
    """Product interior with an axis-1 face whose curve passes exactly
    through the rightmost point of the kernel curve (and has upward mass,
    so the square-root merger applies)."""
    mm1 = product_model()
    ustar, vstar = qt.extreme_max(mm1, 1)
    a1, c1 = 0.05, 0.1
    b1 = (a1 * (ustar - 1.0) + c1 * (vstar - 1.0)) / (1.0 - 1.0 / ustar)
    return validate({
        "interior": mm1.interior,
        "boundary1": TransitionKernel.from_probs("boundary1", {
            (1, 0): a1, (-1, 0): b1, (0, 1): c1, (0, 0): 1.0 - a1 - b1 - c1}),
        "boundary2": mm1.boundary2,
        "origin": mm1.origin,
    })


def degenerate_tangent_model():
    """Same tangency but with no upward mass on the face: the merger
    degenerates to a plain simple pole."""
    mm1 = product_model()
    umax = qt.branch_points(mm1, 1).u_max
    a = 0.1
    return validate({
        "interior": mm1.interior,
        "boundary1": TransitionKernel.from_probs("boundary1", {
            (1, 0): a, (-1, 0): a * umax, (0, 0): 1.0 - a - a * umax}),
        "boundary2": mm1.boundary2,
        "origin": mm1.origin,
    })


def double_pole_model():
    """Category-II model whose decay corner coincides with the axis-1
    crossing: the boundary sequence picks up a double pole (linear factor)."""
    mm1 = product_model()
    b1k = {(1, 0): 0.15, (-1, 0): 0.63801, (0, 1): 0.05, (0, 0): 0.16199}
    half = validate({
        "interior": mm1.interior,
        "boundary1": TransitionKernel.from_probs("boundary1", b1k),
        "boundary2": mm1.boundary2,
        "origin": mm1.origin,
    })
    u_r = qt.extreme_r(half, 1)
    v2 = float(np.real(qt.zeta_lower(half, 2, u_r[0])))
    x2 = float(np.real(qt.zeta_lower(half, 1, v2)))
    alpha, gam = 0.2, 0.1
    beta = (alpha * (v2 - 1.0) + gam * (x2 - 1.0)) / (1.0 - 1.0 / v2)
    rho = 1.0 - alpha - beta - gam
    return validate({
        "interior": mm1.interior,
        "boundary1": TransitionKernel.from_probs("boundary1", b1k),
        "boundary2": TransitionKernel.from_probs("boundary2", {
            (0, 1): alpha, (0, -1): beta, (1, 0): gam, (0, 0): rho}),
        "origin": mm1.origin,
    })


def _random_kernel(rng, face, supports):
    support = [s for s in supports if rng.random() < 0.75]
    if len(support) < 3:
        return None
    w = rng.dirichlet(np.ones(len(support)))
    if w.min() < 0.02:
        return None
    try:
        return TransitionKernel.from_probs(face, dict(zip(support, w)))
    except qt.ModelFileError:
        return None


def _comfortable(model) -> bool:
    """Reject models whose competing singularities are nearly tied, so the
    default fit window sees the asymptotic regime."""
    from qbd_tails.geometry import compute_geometry
    try:
        geo = compute_geometry(model)
    except Exception:
        return False
    if not (1.05 < geo.tau[0] < 12 and 1.05 < geo.tau[1] < 12):
        return False
    for ax in (geo.axis1, geo.axis2):
        g = ax.gamma_k_at_max
        if not (g < 0.85 or g > 1.15):
            return False
        if g > 1.15 and ax.u_max / ax.u_gamma[0] - 1.0 < 0.08:
            return False
    for work in (model, qt.swap_coordinates(model)):
        geo_w = compute_geometry(work)
        u_g1 = geo_w.axis1.u_gamma[0]
        if geo_w.category == "II":
            # a pole just inside the decay corner mimics a double pole on
            # any finite window; keep the two well apart
            gap = u_g1 / geo_w.tau[0] - 1.0
            if 1e-9 < gap < 0.08:
                return False
        zl = float(np.real(qt.zeta_lower(work, 2, u_g1)))
        zu = float(np.real(qt.zeta_upper(work, 2, u_g1)))
        if abs(zu - 1.0) < 0.1 or abs(zl - 1.0) < 0.1:
            return False
        if zu < 0.9:
            try:
                sp = qt.sigma_plus(work, 1)
            except ValueError:
                return False
            if abs(sp / geo_w.tau[0] - 1.0) < 0.08:
                return False
    try:
        sd = qt.sigma_diag(model)
    except ValueError:
        return False
    if abs(sd / min(geo.tau) - 1.0) < 0.08:
        return False
    return True


def _truncation_stable(model) -> bool:
    """Empirical screen for the censoring bias: rates fitted on a grid and
    on the doubled grid must agree, direction by direction.  Models with a
    slow secondary decay direction leak wall bias deep into the fit window
    and are rejected."""
    from qbd_tails.oracle import DIRECTIONS, extract, fit_tail, solve_truncated
    d1 = qt.solve_truncated(model, 72)
    d2 = qt.solve_truncated(model, 144)
    for direction in DIRECTIONS:
        f1 = fit_tail(extract(d1, direction))
        f2 = fit_tail(extract(d2, direction))
        if abs(f2.rate_hat / f1.rate_hat - 1.0) > 1e-3:
            return False
        if abs(f2.kappa_hat - f1.kappa_hat) > 0.1:
            return False
    return True


def random_stable_corpus(count=20, seed=20250810):
    rng = np.random.default_rng(seed)
    corpus = []
    attempts = 0
    while len(corpus) < count and attempts < 40000:
        attempts += 1
        interior = _random_kernel(rng, "interior", [s for s in U_SET if s != (0, 0)])
        b1 = _random_kernel(rng, "boundary1", [s for s in U_SET if s[1] >= 0])
        b2 = _random_kernel(rng, "boundary2", [s for s in U_SET if s[0] >= 0])
        org = _random_kernel(rng, "origin", [s for s in U_SET if s[0] >= 0 and s[1] >= 0])
        if None in (interior, b1, b2, org):
            continue
        try:
            model = validate({"interior": interior, "boundary1": b1,
                              "boundary2": b2, "origin": org})
        except qt.ValidationError:
            continue
        prof = qt.arithmetic_profile(model)
        if not (prof.va and prof.vb and prof.vc):
            continue
        if not qt.check_stability(qt.drifts(model)).stable:
            continue
        if not _comfortable(model):
            continue
        if not _truncation_stable(model):
            continue
        corpus.append(model)
    if len(corpus) < count:
        raise RuntimeError(f"only {len(corpus)} corpus models found")
    return corpus


@pytest.fixture(scope="session")
def product():
    return product_model()


@pytest.fixture(scope="session")
def jackson_paper():
    return jackson_paper_model()


@pytest.fixture(scope="session")
def jackson_q0_geometric():
    return jackson_q0_geometric_model()


@pytest.fixture(scope="session")
def jackson_q0_branch():
    return jackson_q0_branch_model()


@pytest.fixture(scope="session")
def x_shaped():
    return x_shaped_model()


@pytest.fixture(scope="session")
def tangent():
    return tangent_model()


@pytest.fixture(scope="session")
def degenerate_tangent():
    return degenerate_tangent_model()


@pytest.fixture(scope="session")
def double_pole():
    return double_pole_model()


@pytest.fixture(scope="session")
def corpus20():
    return random_stable_corpus(20)


@pytest.fixture(scope="session")
def product_dist300(product):
    return qt.solve_truncated(product, 300)
