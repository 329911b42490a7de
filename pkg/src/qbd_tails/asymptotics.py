"""Exact tail-asymptotic classes of the stationary distribution.

Each direction (the two boundary rays, the two coordinate marginals, and
the diagonal) gets a class (rate a, exponent kappa, period-2 flag) meaning
p(n) ~ const * n^kappa * (1 + b(-1)^n) * a^(-n), with b left unknown in
[-1, 1] whenever the period-2 factor is present.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from . import kernel
from .geometry import EQ_TOL, compute_geometry
from .model import (
    ValidatedModel,
    arithmetic_profile,
    check_stability,
    drifts,
    require_stable,
    swap_coordinates,
)


@dataclass(frozen=True)
class AsymptoticClass:
    rate: float  # the a in a^(-n), strictly above 1
    kappa: float  # one of -3/2, -1/2, 0, 1
    periodic: bool  # presence of the (1 + b(-1)^n) factor
    b_known: float | None  # only set when the dispatch pins b; usually None
    provenance: str

    def human(self) -> str:
        parts = []
        if self.kappa != 0.0:
            e = {1.0: "n", -0.5: "n^{-1/2}", -1.5: "n^{-3/2}"}[self.kappa]
            parts.append(e)
        if self.periodic:
            parts.append("(1+b(-1)^n)")
        parts.append(f"({self.rate:.5g})^{{-n}}")
        return " ".join(parts)


@dataclass(frozen=True)
class SigmaPoints:
    sigma_plus_1: float | None
    sigma_plus_2: float | None
    sigma_d: float | None


def sigma_plus(model: ValidatedModel, axis: int) -> float:
    """The root above 1 of the kernel curve restricted to the unit line of
    the other coordinate; closed form: downward over upward aggregate mass."""
    require_stable(model)
    m = model.interior.matrix()
    agg = m.sum(axis=1) if axis == 1 else m.sum(axis=0)  # index di+1 (or dj+1)
    up, down = float(agg[2]), float(agg[0])
    if up <= 0.0:
        raise ValueError("no mass forward along the axis; no root above 1")
    root = down / up
    if root <= 1.0 + 1e-12:
        raise ValueError(
            f"sigma_plus(axis {axis}) has no root above 1 (root {root:.6g}); "
            "the marginal decay is governed by the decay vector alone")
    return root


def sigma_diag(model: ValidatedModel) -> float:
    """The unique root above 1 of the kernel curve restricted to the diagonal."""
    require_stable(model)
    mx, my = model.interior.mean()
    if mx + my >= 0.0:
        raise ValueError("nonnegative diagonal drift; no diagonal root above 1")
    geo = compute_geometry(model)
    ub = max(geo.axis1.u_max, geo.axis2.u_max)

    def g(u: float) -> float:
        return float(np.real(kernel.gamma(model, "interior", u, u))) - 1.0

    lo = 1.0 + 1e-9
    if g(lo) >= 0.0:
        raise ValueError("diagonal section does not drop below 1 beyond u = 1")
    hi = ub * (1.0 + 1e-12)
    if g(hi) < 0.0:
        raise ValueError("diagonal root bracketing failed")
    return float(brentq(g, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=300))


def sigma_points(model: ValidatedModel) -> SigmaPoints:
    vals = []
    for f in (lambda: sigma_plus(model, 1), lambda: sigma_plus(model, 2),
              lambda: sigma_diag(model)):
        try:
            vals.append(f())
        except ValueError:
            vals.append(None)
    return SigmaPoints(*vals)


def _rel_eq(x: float, y: float) -> bool:
    return abs(x - y) <= EQ_TOL * max(1.0, abs(x), abs(y))


def _boundary_case_axis1(model: ValidatedModel) -> tuple[float, str, bool]:
    """Exponent, case label, and period-2 flag for the axis-1 boundary ray."""
    geo = compute_geometry(model)
    prof = arithmetic_profile(model)
    g1 = geo.axis1
    cat = geo.category
    tau1 = geo.tau[0]
    gmax = g1.gamma_k_at_max
    crossing_at_branch = abs(gmax - 1.0) <= EQ_TOL
    driver_is_crossing = gmax > 1.0 + EQ_TOL
    # with no upward mass on the face its curve section is analytic, so a
    # tangency at the branch point leaves a plain simple pole instead of the
    # square-root merger (the merger constant divides by the upward mass)
    degenerate_tangency = crossing_at_branch and prof.m1_2_zero

    if cat in ("I", "III"):
        if driver_is_crossing:
            kappa, case = 0.0, "simple-pole"
        elif degenerate_tangency:
            kappa, case = 0.0, "pole-at-branch-degenerate-face"
        elif crossing_at_branch:
            kappa, case = -0.5, "pole-merged-with-branch"
        else:
            kappa, case = -1.5, "bare-branch"
    else:  # category II: the other axis pins the decay vector
        if tau1 < g1.u_gamma[0] and not _rel_eq(tau1, g1.u_gamma[0]):
            kappa, case = 0.0, "upstream-pole"
        elif driver_is_crossing:
            kappa, case = 1.0, "double-pole"
        elif crossing_at_branch:
            kappa, case = 0.0, "upstream-pole-at-branch"
        else:
            kappa, case = -0.5, "upstream-pole-on-branch"

    periodic = False
    if not prof.va:
        if prof.b_case == "B2":
            periodic = True
        elif cat in ("I", "III"):
            periodic = kappa == -1.5
        else:
            periodic = case == "upstream-pole-on-branch" and prof.c_case == "C2"
    return kappa, f"category-{cat}|{case}", periodic


def boundary_class(model: ValidatedModel, axis: int) -> AsymptoticClass:
    """Exact asymptotic class of the stationary probabilities on the
    `axis` boundary ray (all mass on the other coordinate at zero)."""
    require_stable(model)
    work = model if axis == 1 else swap_coordinates(model)
    kappa, case, periodic = _boundary_case_axis1(work)
    rate = compute_geometry(work).tau[0]
    arith = "non-arithmetic" if arithmetic_profile(work).va else (
        arithmetic_profile(work).b_case + arithmetic_profile(work).c_case)
    return AsymptoticClass(
        rate=rate,
        kappa=kappa,
        periodic=periodic,
        b_known=None,
        provenance=f"boundary{axis}|{arith}|{case}",
    )


def _marginal_axis1(model: ValidatedModel) -> AsymptoticClass:
    geo = compute_geometry(model)
    u_g1 = geo.axis1.u_gamma[0]
    zl = float(np.real(kernel.zeta_lower(model, 2, u_g1)))
    zu = float(np.real(kernel.zeta_upper(model, 2, u_g1)))
    tau1 = geo.tau[0]
    zu_eq1 = abs(zu - 1.0) <= EQ_TOL
    zl_eq1 = abs(zl - 1.0) <= EQ_TOL

    if zu < 1.0 - EQ_TOL:
        try:
            rate = sigma_plus(model, 1)
            return AsymptoticClass(rate, 0.0, False, None,
                                   "marginal|unit-line-exits-early")
        except ValueError:
            base = boundary_class(model, 1)
            return replace(base,
                           provenance="marginal|boundary-driven|sigma-missing-warning")
    if not zu_eq1 and not zl_eq1:
        base = boundary_class(model, 1)
        return replace(base, provenance="marginal|boundary-driven|" +
                       base.provenance.split("|", 1)[1])
    if not zu_eq1 and zl_eq1:
        return AsymptoticClass(tau1, 0.0, False, None,
                               "marginal|unit-line-through-lower-branch")
    if zu_eq1 and zl_eq1:
        return AsymptoticClass(tau1, 0.0, False, None,
                               "marginal|unit-line-at-branch-point")
    return AsymptoticClass(tau1, 1.0, False, None,
                           "marginal|unit-line-through-upper-branch")


def marginal_class(model: ValidatedModel, axis: int) -> AsymptoticClass:
    """Exact asymptotic class of the `axis` marginal tail."""
    require_stable(model)
    work = model if axis == 1 else swap_coordinates(model)
    cls = _marginal_axis1(work)
    return replace(cls, provenance=f"marginal{axis}|" + cls.provenance.split("|", 1)[1])


def diagonal_class(model: ValidatedModel) -> AsymptoticClass:
    """Exact asymptotic class of the tail of the coordinate sum."""
    require_stable(model)
    geo = compute_geometry(model)
    work = model
    if geo.tau[0] > geo.tau[1] and not _rel_eq(geo.tau[0], geo.tau[1]):
        work = swap_coordinates(model)
        geo = compute_geometry(work)
    tau1, tau2 = geo.tau
    u_max1 = geo.axis1.u_max
    try:
        sd = sigma_diag(work)
    except ValueError:
        base = boundary_class(work, 1)
        return replace(base,
                       provenance="diagonal|boundary-driven|sigma-missing-warning")
    if sd < tau1 and not _rel_eq(sd, tau1):
        return AsymptoticClass(sd, 0.0, False, None, "diagonal|diagonal-exits-early")
    if sd > tau1 and not _rel_eq(sd, tau1):
        base = boundary_class(work, 1)
        return replace(base, provenance="diagonal|boundary-driven|" +
                       base.provenance.split("|", 1)[1])
    if not _rel_eq(tau1, u_max1):
        return AsymptoticClass(sd, 1.0, False, None, "diagonal|double-pole")
    if _rel_eq(tau1, tau2):
        return AsymptoticClass(sd, 1.0, False, None, "diagonal|double-pole-symmetric")
    return AsymptoticClass(sd, 0.0, False, None, "diagonal|pole-at-branch")


DIRECTIONS = ("boundary1", "boundary2", "marginal1", "marginal2", "diagonal")


def classes(model: ValidatedModel) -> dict[str, AsymptoticClass]:
    return {
        "boundary1": boundary_class(model, 1),
        "boundary2": boundary_class(model, 2),
        "marginal1": marginal_class(model, 1),
        "marginal2": marginal_class(model, 2),
        "diagonal": diagonal_class(model),
    }


@dataclass(frozen=True)
class AnalysisReport:
    stable: bool
    body: dict

    def to_dict(self) -> dict:
        return self.body


def _round12(x):
    if isinstance(x, float):
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: _round12(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round12(v) for v in x]
    return x


def _class_dict(cls: AsymptoticClass) -> dict:
    return {
        "rate": cls.rate,
        "kappa": cls.kappa,
        "periodic": cls.periodic,
        "b": None if cls.b_known is None else cls.b_known,
        "b_note": "unknown in [-1,1], conjectured |b| < 1" if cls.periodic else None,
        "provenance": cls.provenance,
        "human": cls.human(),
    }


def full_report(model: ValidatedModel, source: str = "inline") -> AnalysisReport:
    """Aggregate stability, geometry, sigma points, arithmetic profile and
    all five asymptotic classes into one serializable record."""
    d = drifts(model)
    verdict = check_stability(d)
    prof = arithmetic_profile(model)
    body: dict = {
        "meta": {"tool": "qbd-tails", "source": source},
        "stability": {
            "stable": verdict.stable,
            "matched_condition": verdict.matched_condition,
            "inner_product_face1": verdict.ip_m1,
            "inner_product_face2": verdict.ip_m2,
        },
        "drifts": {
            "m": list(d.m), "m1": list(d.m1), "m2": list(d.m2),
            "m1_perp": list(d.m1_perp), "m2_perp": list(d.m2_perp),
        },
        "arithmetic_profile": {
            "va": prof.va, "vb": prof.vb, "vc": prof.vc,
            "b_case": prof.b_case, "c_case": prof.c_case,
            "m1_2_zero": prof.m1_2_zero, "m2_1_zero": prof.m2_1_zero,
        },
    }
    if not verdict.stable:
        return AnalysisReport(False, _round12(body))
    geo = compute_geometry(model)
    sig = sigma_points(model)
    body["geometry"] = {
        "category": geo.category,
        "tau": list(geo.tau),
        "axis1": _axis_dict(geo.axis1),
        "axis2": _axis_dict(geo.axis2),
    }
    body["sigma"] = {
        "sigma_plus_1": sig.sigma_plus_1,
        "sigma_plus_2": sig.sigma_plus_2,
        "sigma_d": sig.sigma_d,
    }
    body["classes"] = {name: _class_dict(cls) for name, cls in classes(model).items()}
    return AnalysisReport(True, _round12(body))


def _axis_dict(ax) -> dict:
    return {
        "u_min": ax.u_min,
        "u_max": ax.u_max,
        "u_max_pt": list(ax.u_max_pt),
        "u_r": None if ax.u_r is None else list(ax.u_r),
        "gamma_face_at_max": ax.gamma_k_at_max,
        "gamma_gap_at_max": ax.gamma_k_at_max - 1.0,
        "u_gamma": list(ax.u_gamma),
    }
