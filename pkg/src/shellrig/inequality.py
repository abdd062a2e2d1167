"""Both sides of the interpolation inequality and its relatives as numbers.

Given a deformation y, a rotation R, and an offset b, the report collects
  lhs           = ||grad y - R||_p^2
  rhs_product   = ||y - R x - b||_p * ||dist(grad y, SO(3))||_p / h
  rhs_field_sq  = ||y - R x - b||_p^2
  rhs_dist_sq   = ||dist(grad y, SO(3))||_p^2
and the empirical constant ratio = lhs / (sum of the three RHS terms).
The linearized (Korn) variant replaces the distance by the linear strain
and compares the gradient against zero.

Constants are never assumed: every function returns the measured ratio and
leaves its h-dependence to the sweep layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .fields import FrameField, frame_gradient
from .geometry import ThinDomain, embed
from .matrixops import dist_SO3
from .norms import QuadratureGrid, lp_norm, weighted_mean

Array = np.ndarray

DEGENERATE_RTOL = 1e-10


@dataclass(frozen=True)
class InequalityReport:
    """One evaluation of the inequality sides for a fixed field and h."""

    lhs: float
    rhs_product: float
    rhs_field_sq: float
    rhs_dist_sq: float
    p: float
    h: float
    rotation: tuple | None
    offset: tuple | None
    ratio: float
    flag: str = ""  # "", "degenerate-exact", or "impossible"
    meta: dict = dc_field(default_factory=dict)

    @property
    def rhs_total(self) -> float:
        return self.rhs_product + self.rhs_field_sq + self.rhs_dist_sq

    def to_dict(self) -> dict:
        out = {
            "lhs": self.lhs,
            "rhs_product": self.rhs_product,
            "rhs_field_sq": self.rhs_field_sq,
            "rhs_dist_sq": self.rhs_dist_sq,
            "ratio": self.ratio,
            "p": self.p,
            "h": self.h,
            "flag": self.flag,
            "rotation": self.rotation,
            "offset": self.offset,
        }
        out.update(self.meta)
        return out


def _finalize(lhs, prod, field_sq, dist_sq, p, h, rotation, offset, scale, meta) -> InequalityReport:
    rhs_total = prod + field_sq + dist_sq
    tiny = DEGENERATE_RTOL * max(scale, 1e-300)
    flag = ""
    if rhs_total <= tiny:
        flag = "degenerate-exact" if lhs <= tiny else "impossible"
    ratio = lhs / rhs_total if rhs_total > 0 else math.nan
    return InequalityReport(
        lhs=float(lhs),
        rhs_product=float(prod),
        rhs_field_sq=float(field_sq),
        rhs_dist_sq=float(dist_sq),
        p=float(p),
        h=float(h),
        rotation=None if rotation is None else tuple(map(tuple, np.asarray(rotation))),
        offset=None if offset is None else tuple(np.asarray(offset)),
        ratio=float(ratio) if math.isfinite(ratio) else math.nan,
        flag=flag,
        meta=dict(meta or {}),
    )


def _require_rotation(rotation: Array) -> Array:
    r = np.asarray(rotation, dtype=float)
    if r.shape != (3, 3):
        raise ValueError("rotation must be a single 3x3 matrix")
    if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-10 or abs(float(np.linalg.det(r)) - 1.0) > 1e-10:
        raise ValueError("rotation must lie in SO(3) within 1e-10")
    return r


def optimal_offset(y: FrameField, rotation: Array, domain: ThinDomain, grid: QuadratureGrid) -> Array:
    """Grid mean of y - R x, the L^2-optimal offset (used for all p)."""
    t, th, zz = grid.mesh()
    y_e = y.euclidean(domain.surface, t, th, zz)
    x_e = embed(domain, t, th, zz, check=False)
    resid = y_e - np.einsum("ij,...j->...i", np.asarray(rotation, dtype=float), x_e)
    return weighted_mean(resid, grid)


def interpolation_sides(
    y: FrameField,
    rotation: Array,
    offset: Array,
    domain: ThinDomain,
    grid: QuadratureGrid,
    p: float,
    meta: dict | None = None,
) -> InequalityReport:
    """Evaluate every side of the interpolation inequality for a deformation."""
    if y.kind != "deformation":
        raise ValueError("interpolation sides need a deformation field")
    r = _require_rotation(rotation)
    b = np.zeros(3) if offset is None else np.asarray(offset, dtype=float)

    t, th, zz = grid.mesh()
    surface = domain.surface
    g = frame_gradient(y, surface, t, th, zz)
    e = surface.frame(th, zz)
    e = np.broadcast_to(e, g.shape)
    r_frame = np.einsum("...ki,kl,...lj->...ij", e, r, e)

    y_e = y.euclidean(surface, t, th, zz)
    x_e = embed(domain, t, th, zz, check=False)
    resid = y_e - np.einsum("ij,...j->...i", r, x_e) - b

    field_norm = lp_norm(resid, grid, p)
    dist_norm = lp_norm(dist_SO3(g), grid, p)
    lhs = lp_norm(g - r_frame, grid, p) ** 2
    prod = field_norm * dist_norm / domain.h
    scale = grid.volume ** (2.0 / p)
    return _finalize(
        lhs, prod, field_norm**2, dist_norm**2, p, domain.h, r, b, scale,
        {"variant": "interpolation", **(meta or {})},
    )


def korn_linear_sides(
    u: FrameField,
    domain: ThinDomain,
    grid: QuadratureGrid,
    p: float,
    meta: dict | None = None,
) -> InequalityReport:
    """Linearized sides: gradient vs field norm and linear strain."""
    if u.kind != "displacement":
        raise ValueError("the linearized sides need a displacement field")
    t, th, zz = grid.mesh()
    surface = domain.surface
    g = frame_gradient(u, surface, t, th, zz)
    strain = 0.5 * (g + np.swapaxes(g, -1, -2))

    field_norm = lp_norm(u.components(t, th, zz), grid, p)
    strain_norm = lp_norm(strain, grid, p)
    lhs = lp_norm(g, grid, p) ** 2
    prod = field_norm * strain_norm / domain.h
    scale = grid.volume ** (2.0 / p)
    return _finalize(
        lhs, prod, field_norm**2, strain_norm**2, p, domain.h, None, None, scale,
        {"variant": "korn", **(meta or {})},
    )


# -- two-parameter balance form -----------------------------------------------------


@dataclass(frozen=True)
class BalanceForm:
    """The two balance terms ||v||_p^2 / h^s and ||dist||_p^2 / h^(2-s)."""

    s: float
    term_field: float
    term_dist: float
    p: float
    h: float
    field_norm: float
    dist_norm: float

    @property
    def total(self) -> float:
        return self.term_field + self.term_dist


def balance_form(
    v: FrameField, domain: ThinDomain, grid: QuadratureGrid, p: float, s: float
) -> BalanceForm:
    """Evaluate the balance terms of a displacement at exponent s in [0, 2]."""
    if not 0.0 <= s <= 2.0:
        raise ValueError("balance exponent s must lie in [0, 2]")
    t, th, zz = grid.mesh()
    g = frame_gradient(v, domain.surface, t, th, zz)
    eye = np.eye(3)
    dist_norm = lp_norm(dist_SO3(g + eye), grid, p)
    field_norm = lp_norm(v.components(t, th, zz), grid, p)
    h = domain.h
    return BalanceForm(
        s=float(s),
        term_field=field_norm**2 / h**s,
        term_dist=dist_norm**2 / h ** (2.0 - s),
        p=float(p),
        h=float(h),
        field_norm=field_norm,
        dist_norm=dist_norm,
    )


def balance_exponent(field_norm: float, dist_norm: float, h: float) -> float:
    """Exponent equalizing the two balance terms, clamped to [0, 2].

    Solves h^s = h * field_norm / dist_norm.
    """
    if field_norm <= 0 or dist_norm <= 0:
        raise ValueError("balance exponent needs positive norms")
    if not 0 < h < 1:
        raise ValueError("h must lie in (0, 1)")
    s = 1.0 + math.log(field_norm / dist_norm) / math.log(h)
    return min(2.0, max(0.0, s))


# -- expression-level equivalence of the two right-hand sides ------------------------


@dataclass(frozen=True)
class EquivalenceRecord:
    """Comparison of E1 = ab/h + a^2 + b^2 against E2* = min_s a^2/h^s + b^2/h^(2-s)."""

    a: float
    b: float
    h: float
    e1: float
    e2_star: float
    s_star: float
    upper_ok: bool  # E2* <= 3 E1
    lower_ok: bool  # E1 <= 2 E2* + (a^2 + b^2)
    amgm_ok: bool  # min_s form >= 2ab/h

    @property
    def ratio_e2_to_e1(self) -> float:
        return self.e2_star / self.e1

    @property
    def ratio_e1_to_e2(self) -> float:
        return self.e1 / self.e2_star

    @property
    def all_ok(self) -> bool:
        return self.upper_ok and self.lower_ok and self.amgm_ok


def equivalence_check(a: float, b: float, h: float) -> EquivalenceRecord:
    """Quantitative mutual bound between the product form and the balance form.

    The minimum over s in [0, 2] of a^2 h^-s + b^2 h^(s-2) is 2ab/h when the
    balancing exponent is interior and an endpoint value otherwise; either
    way it is within fixed constants of ab/h + a^2 + b^2.
    """
    if a <= 0 or b <= 0 or not 0 < h < 1:
        raise ValueError("need a, b > 0 and h in (0, 1)")
    e1 = a * b / h + a * a + b * b
    s_star = 1.0 + math.log(a / b) / math.log(h)
    if s_star <= 0.0:
        s_star = 0.0
    elif s_star >= 2.0:
        s_star = 2.0
    e2_star = a * a / h**s_star + b * b / h ** (2.0 - s_star)
    rel = 1e-12 * max(e1, e2_star)
    return EquivalenceRecord(
        a=float(a),
        b=float(b),
        h=float(h),
        e1=e1,
        e2_star=e2_star,
        s_star=s_star,
        upper_ok=e2_star <= 3.0 * e1 + rel,
        lower_ok=e1 <= 2.0 * e2_star + (a * a + b * b) + rel,
        amgm_ok=e2_star >= 2.0 * a * b / h - rel,
    )
