"""Generating-function kernel of the interior walk.

For a fixed abscissa the curve gamma_plus(u1, u2) = 1 is a quadratic in the
other coordinate; this module evaluates the face generating functions, the
section coefficients of that quadratic, its discriminant, the two branch
functions (lower/upper root), and the branch points where they coincide.

Axis convention. `axis` names the coordinate the quadratic is solved for:
section_coefficients(model, 2, u) are the u2-quadratic coefficients at
u1 = u, and discriminant(model, 2, u) is its discriminant D2(u). The
branch interval of coordinate k (branch_points(model, k)) is the zero set
of the discriminant of the opposite axis, D_{3-k}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import ValidatedModel

_REAL_ROOT_RTOL = 1e-8  # |imag| < rtol * (1 + |real|) declares a root real
_NEWTON_STEPS = 60


class KernelError(RuntimeError):
    """Numerical failure while resolving the kernel branch structure."""


@dataclass(frozen=True)
class SectionCoefficients:
    p_star1: complex
    p_star0: complex
    p_star_minus1: complex


@dataclass(frozen=True)
class BranchPoints:
    u_min: float
    u_max: float
    all_quartic_roots: tuple[float, ...]
    is_even: bool


def gamma(model: ValidatedModel, face: str, u1, u2):
    """Evaluate the face generating function at (u1, u2); broadcasts."""
    u1 = np.asarray(u1)
    u2 = np.asarray(u2)
    if np.any(u1 == 0) or np.any(u2 == 0):
        raise ValueError("generating function undefined at zero argument")
    out = np.zeros(np.broadcast(u1, u2).shape, dtype=np.result_type(u1, u2, float))
    for di, dj, p in model.kernel(face).entries:
        out = out + p * u1 ** di * u2 ** dj
    if out.ndim == 0:
        return out[()]
    return out


def _section_matrix(model: ValidatedModel, axis: int):
    """Mass matrix arranged so column k holds the transverse-increment-k
    masses as ascending polynomial coefficients in the abscissa."""
    m = model.interior.matrix()
    if axis == 2:
        return m  # row index: abscissa power (u1); column: u2 increment
    if axis == 1:
        return m.T
    raise ValueError("axis must be 1 or 2")


def section_coefficients(model: ValidatedModel, axis: int, u) -> SectionCoefficients:
    """Coefficients (p_{*1}, p_{*0}, p_{*-1}) of the kernel quadratic in
    coordinate `axis`, as functions of the other coordinate at value u."""
    m = _section_matrix(model, axis)
    u = np.asarray(u)
    if np.any(u == 0):
        raise ValueError("section coefficients undefined at zero abscissa")
    powers = np.stack([1.0 / u, np.ones_like(u), u])  # abscissa power -1,0,1
    vals = np.tensordot(m, powers, axes=(0, 0))  # shape (3, ...) by column j
    return SectionCoefficients(
        p_star1=vals[2] if vals[2].ndim else vals[2][()],
        p_star0=vals[1] if vals[1].ndim else vals[1][()],
        p_star_minus1=vals[0] if vals[0].ndim else vals[0][()],
    )


def discriminant(model: ValidatedModel, axis: int, u):
    """D_axis(u) = (1 - p_{*0}(u))^2 - 4 p_{*1}(u) p_{*-1}(u)."""
    s = section_coefficients(model, axis, u)
    return (1.0 - s.p_star0) ** 2 - 4.0 * s.p_star1 * s.p_star_minus1


@lru_cache(maxsize=256)
def _poly_u2D(model: ValidatedModel, axis: int) -> tuple[float, ...]:
    """Ascending coefficients of the polynomial u^2 * D_axis(u), degree <= 4."""
    m = _section_matrix(model, axis)
    # u * p_{*k}(u) has ascending coefficients m[:, k+1]
    b = m[:, 2]  # u * p_{*1}
    c = m[:, 0]  # u * p_{*-1}
    a = np.array([-m[0, 1], 1.0 - m[1, 1], -m[2, 1]])  # u * (1 - p_{*0})
    out = np.zeros(5)
    for poly, w in ((np.polynomial.polynomial.polymul(a, a), 1.0),
                    (np.polynomial.polynomial.polymul(b, c), -4.0)):
        out[: poly.size] += w * poly
    return tuple(out)


def _polish_roots(coeffs_desc: np.ndarray, roots: np.ndarray) -> np.ndarray:
    deriv = np.polyder(coeffs_desc)
    for _ in range(_NEWTON_STEPS):
        f = np.polyval(coeffs_desc, roots)
        df = np.polyval(deriv, roots)
        step = np.where(df != 0, f / np.where(df != 0, df, 1.0), 0.0)
        roots = roots - step
    return roots


def quartic_roots(model: ValidatedModel, axis: int) -> np.ndarray:
    """All real roots of u^2 D_{3-axis}(u) = 0, i.e. the branch abscissas of
    coordinate `axis`; raises if any root fails the realness test."""
    coeffs = np.array(_poly_u2D(model, 3 - axis))
    desc = coeffs[::-1]
    nz = np.nonzero(desc)[0]
    if nz.size == 0 or desc.size - nz[0] - 1 < 2:
        raise KernelError("kernel discriminant polynomial degenerates below degree 2")
    desc = desc[nz[0]:]
    roots = np.roots(desc)
    roots = _polish_roots(desc, roots)
    bad = np.abs(roots.imag) >= _REAL_ROOT_RTOL * (1.0 + np.abs(roots.real))
    if np.any(bad):
        raise KernelError(
            f"non-real branch-point roots {roots[bad]}; model invalid or numerics failed")
    return np.sort(roots.real)


def is_even_discriminant(model: ValidatedModel, axis: int = 2) -> bool:
    """True iff u^2 D_axis(u) is an even polynomial (odd coefficients vanish)."""
    c = _poly_u2D(model, axis)
    return bool(abs(c[1]) < 1e-14 and abs(c[3]) < 1e-14)


@lru_cache(maxsize=256)
def branch_points(model: ValidatedModel, axis: int) -> BranchPoints:
    """Branch interval [u_min, u_max] of coordinate `axis` on the kernel
    curve, bracketed among the real roots of the quartic.

    The bracket is the unique adjacent pair of positive roots between which
    the discriminant is positive and the transverse roots are positive
    (midpoint test on 1 - p_{*0}).
    """
    roots = quartic_roots(model, axis)
    pos = roots[roots > 0]
    candidates = []
    for lo, hi in zip(pos, pos[1:]):
        if hi - lo < 1e-13:
            continue
        mid = 0.5 * (lo + hi)
        d = discriminant(model, 3 - axis, mid)
        s = section_coefficients(model, 3 - axis, mid)
        if d.real > 0 and (1.0 - s.p_star0).real > 0:
            candidates.append((lo, hi))
    if len(candidates) != 1:
        raise KernelError(
            f"expected a unique branch bracket, found {candidates} among roots {roots}")
    u_min, u_max = candidates[0]
    return BranchPoints(
        u_min=float(u_min),
        u_max=float(u_max),
        all_quartic_roots=tuple(float(r) for r in roots),
        is_even=is_even_discriminant(model, 3 - axis),
    )


@lru_cache(maxsize=256)
def _sqrt_disc_factors(model: ValidatedModel, axis: int):
    """Factorized form of +sqrt(u^2 D_{3-axis}(u)) analytic off the two real
    cuts (-inf, u_min] and [u_max, inf) and positive on (u_min, u_max).

    Gluing the principal square roots factor by factor keeps the branch
    continuous across the negative real axis, where a naive principal-branch
    sqrt of D would jump.
    """
    bp = branch_points(model, axis)
    roots = np.array(bp.all_quartic_roots)
    coeffs = np.array(_poly_u2D(model, 3 - axis))
    deg = np.nonzero(coeffs)[0][-1]
    lead = coeffs[deg]
    left = roots[roots <= bp.u_min + 1e-13]
    right = roots[roots >= bp.u_max - 1e-13]
    pref_sq = lead * (-1.0) ** len(right)
    if pref_sq <= 0:
        raise KernelError("inconsistent sign in branch factorization")
    return math.sqrt(pref_sq), tuple(left), tuple(right), bp


def _sqrt_disc(model: ValidatedModel, axis: int, z):
    """sqrt(D_{3-axis}(z)) on the doubly cut plane, positive on the branch
    interval; `z` may be real in [u_min, u_max] or complex off the cuts."""
    pref, left, right, bp = _sqrt_disc_factors(model, axis)
    z = np.asarray(z)
    if np.iscomplexobj(z):
        on_cut = (z.imag == 0) & ((z.real < bp.u_min - 1e-12) | (z.real > bp.u_max + 1e-12))
        if np.any(on_cut):
            raise ValueError("argument lies on a branch cut")
        zc = z.astype(complex)
    else:
        if np.any((z < bp.u_min - 1e-12) | (z > bp.u_max + 1e-12)):
            raise ValueError("real argument outside the branch interval")
        zc = np.clip(z, bp.u_min, bp.u_max).astype(float)
    f = np.full_like(zc, pref)
    for r in left:
        f = f * np.sqrt(zc - r)
    for r in right:
        f = f * np.sqrt(r - zc)
    return f / zc


def _branch_values(model: ValidatedModel, axis: int, u):
    """Both roots of the kernel quadratic in coordinate `axis` at the other
    coordinate's value u, on the analytic branch (lower, upper).

    The abscissa u and the branch interval live on coordinate 3-axis."""
    s = section_coefficients(model, axis, u)
    if not _section_matrix(model, axis)[:, 2].any():
        # no interior mass upward along `axis`: the quadratic degenerates to
        # a line with the single root below; the upper branch is a sentinel
        a = 1.0 - s.p_star0
        lower = s.p_star_minus1 / a
        upper = np.full_like(np.asarray(lower, dtype=float), np.inf)
        return (lower, upper) if np.ndim(lower) else (lower, math.inf)
    sq = _sqrt_disc(model, 3 - axis, u)
    a = 1.0 - s.p_star0
    p1 = s.p_star1
    pm1 = s.p_star_minus1
    plus = a + sq
    minus = a - sq
    use_plus = np.abs(plus) >= np.abs(minus)
    safe_p1 = np.where(p1 == 0, 1.0, 2.0 * p1)
    lower = np.where(use_plus, 2.0 * pm1 / np.where(plus == 0, 1.0, plus), minus / safe_p1)
    upper = np.where(use_plus, plus / safe_p1, 2.0 * pm1 / np.where(minus == 0, 1.0, minus))
    if lower.ndim == 0:
        return lower[()], upper[()]
    return lower, upper


def zeta_lower(model: ValidatedModel, axis: int, u):
    """Lower branch of the kernel curve in coordinate `axis` at abscissa u
    (the root continuous with the smaller real root on the branch interval)."""
    return _branch_values(model, axis, u)[0]


def zeta_upper(model: ValidatedModel, axis: int, u):
    """Upper branch of the kernel curve in coordinate `axis` at abscissa u."""
    return _branch_values(model, axis, u)[1]


def zeta_upper_second_derivative(model: ValidatedModel, axis: int, u: float,
                                 h: float = 1e-5) -> float:
    """Central-difference second derivative of the upper branch."""
    f = lambda x: float(np.real(zeta_upper(model, axis, x)))
    return (f(u + h) - 2.0 * f(u) + f(u - h)) / (h * h)
