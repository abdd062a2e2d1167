"""Vector fields in the curvilinear frame and their gradients.

A field is stored by its components (y_t, y_theta, y_z) in the local
orthonormal frame together with all nine first coordinate partials.  The
frame gradient expresses the full 3x3 Euclidean Jacobian in that frame from
the partials and the surface metric/curvature data; an independent
finite-difference oracle reconstructs the same Jacobian from the embedded
Euclidean map.

Field values are immutable and evaluation is pure; construction from a seed
is deterministic, so parallel sweeps are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .geometry import (
    ChartDegeneracyError,
    DomainError,
    ParamSurface,
    ThinDomain,
    embed,
)

Array = np.ndarray


def _arr(x) -> Array:
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class FrameField:
    """Components and first partials of a field in the frame (e_t, e_theta, e_z).

    ``components(t, theta, z)`` returns (..., 3); ``partials`` returns
    (..., 3, 3) with entry [i, j] = d component_i / d coordinate_j for the
    coordinate order (t, theta, z).  ``kind`` is "deformation" (gradient
    compared against rotations) or "displacement" (compared against zero).
    """

    components: Callable
    partials: Callable
    kind: str
    description: str = ""

    def __post_init__(self):
        if self.kind not in ("deformation", "displacement"):
            raise ValueError("kind must be 'deformation' or 'displacement'")

    def euclidean(self, surface: ParamSurface, t, theta, z) -> Array:
        """Field value as a Euclidean vector, E @ components."""
        e = surface.frame(theta, z)
        return np.einsum("...ij,...j->...i", e, self.components(t, theta, z))


def check_field_finite(field: FrameField, t, theta, z) -> None:
    c = field.components(t, theta, z)
    p = field.partials(t, theta, z)
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(p))):
        raise ValueError("field produced non-finite values")


# -- frame gradient ------------------------------------------------------------


def frame_gradient(field: FrameField, surface: ParamSurface, t, theta, z) -> Array:
    """3x3 gradient of the field in the orthonormal frame of the offset chart.

    Row order (t, theta, z) matches the frame; the theta/z columns carry the
    (1 + t*kappa) offset factors and the metric-coefficient coupling terms.
    """
    t = _arr(t)
    comp = field.components(t, theta, z)
    par = field.partials(t, theta, z)
    if par is None:
        raise ValueError("field has no partials; supply analytic or sampled partials")

    ath = _arr(surface.a_theta(theta, z))
    az = _arr(surface.a_z(theta, z))
    kth = _arr(surface.kappa_theta(theta, z))
    kz = _arr(surface.kappa_z(theta, z))
    athz = _arr(surface.da_theta_dz(theta, z))
    azth = _arr(surface.da_z_dtheta(theta, z))

    fac_th = 1.0 + t * kth
    fac_z = 1.0 + t * kz
    if np.any(fac_th <= 0) or np.any(fac_z <= 0):
        raise ChartDegeneracyError("1 + t*kappa <= 0 at an evaluation point")
    dth = ath * fac_th
    dz = az * fac_z

    yt, yth, yz = comp[..., 0], comp[..., 1], comp[..., 2]
    g = np.empty(np.broadcast(t, ath).shape + (3, 3))
    g[..., 0, 0] = par[..., 0, 0]
    g[..., 1, 0] = par[..., 1, 0]
    g[..., 2, 0] = par[..., 2, 0]
    g[..., 0, 1] = (par[..., 0, 1] - ath * kth * yth) / dth
    g[..., 1, 1] = (par[..., 1, 1] + ath * kth * yt + (athz / az) * yz) / dth
    g[..., 2, 1] = (par[..., 2, 1] - (athz / az) * yth) / dth
    g[..., 0, 2] = (par[..., 0, 2] - az * kz * yz) / dz
    g[..., 1, 2] = (par[..., 1, 2] - (azth / ath) * yz) / dz
    g[..., 2, 2] = (par[..., 2, 2] + az * kz * yt + (azth / ath) * yth) / dz
    return g


def linear_strain(field: FrameField, surface: ParamSurface, t, theta, z) -> Array:
    """Symmetric part of the frame gradient of a displacement."""
    if field.kind != "displacement":
        raise ValueError("linear strain is defined for displacement fields")
    g = frame_gradient(field, surface, t, theta, z)
    return 0.5 * (g + np.swapaxes(g, -1, -2))


def euclidean_gradient_oracle(
    field: FrameField, domain: ThinDomain, t, theta, z, step: float = 1e-4
) -> Array:
    """Finite-difference reconstruction of the frame gradient (oracle path).

    Central-differences the embedded Euclidean map Y(xi) = E(xi) @ comp(xi)
    and the chart X(xi) = embed(xi) in the chart coordinates, forms
    dY/dX = dY * (dX)^-1, and re-expresses it in the frame at the point.
    Second-order accurate in ``step``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    t, theta, z = np.broadcast_arrays(_arr(t), _arr(theta), _arr(z))
    for dt, dth, dzz in ((step, 0, 0), (0, step, 0), (0, 0, step)):
        try:
            domain.require_inside(t + dt, theta + dth, z + dzz)
            domain.require_inside(t - dt, theta - dth, z - dzz)
        except DomainError as err:
            raise DomainError(f"oracle step {step} exits the chart: {err}") from err

    surface = domain.surface

    def y_euclid(tt, th, zz):
        e = surface.frame(th, zz)
        return np.einsum("...ij,...j->...i", e, field.components(tt, th, zz))

    def x_euclid(tt, th, zz):
        return embed(domain, tt, th, zz, check=False)

    dy = np.empty(t.shape + (3, 3))
    dx = np.empty(t.shape + (3, 3))
    offsets = ((step, 0.0, 0.0), (0.0, step, 0.0), (0.0, 0.0, step))
    for j, (dt, dth, dzz) in enumerate(offsets):
        dy[..., :, j] = (
            y_euclid(t + dt, theta + dth, z + dzz) - y_euclid(t - dt, theta - dth, z - dzz)
        ) / (2 * step)
        dx[..., :, j] = (
            x_euclid(t + dt, theta + dth, z + dzz) - x_euclid(t - dt, theta - dth, z - dzz)
        ) / (2 * step)

    jac = dy @ np.linalg.inv(dx)
    e0 = surface.frame(theta, z)
    return np.einsum("...ki,...kl,...lj->...ij", e0, jac, e0)


# -- built-in fields --------------------------------------------------------------


def identity_deformation(surface: ParamSurface) -> FrameField:
    """The map x -> x written in frame components on the offset chart."""

    def comp(t, theta, z):
        pos = surface.position(theta, z) + _arr(t)[..., None] * surface.normal(theta, z)
        e = surface.frame(theta, z)
        return np.einsum("...ik,...i->...k", e, pos)

    def par(t, theta, z):
        t = _arr(t)
        pos = surface.position(theta, z) + t[..., None] * surface.normal(theta, z)
        e = surface.frame(theta, z)
        de_th, de_z = surface.frame_derivatives(theta, z)
        ath = _arr(surface.a_theta(theta, z))
        az = _arr(surface.a_z(theta, z))
        kth = _arr(surface.kappa_theta(theta, z))
        kz = _arr(surface.kappa_z(theta, z))
        dp_t = surface.normal(theta, z)
        dp_th = (ath * (1.0 + t * kth))[..., None] * e[..., 1]
        dp_z = (az * (1.0 + t * kz))[..., None] * e[..., 2]
        out = np.empty(np.broadcast(t, ath).shape + (3, 3))
        out[..., 0] = np.einsum("...ik,...i->...k", e, dp_t)
        out[..., 1] = np.einsum("...ik,...i->...k", e, dp_th) + np.einsum(
            "...ik,...i->...k", de_th, pos
        )
        out[..., 2] = np.einsum("...ik,...i->...k", e, dp_z) + np.einsum(
            "...ik,...i->...k", de_z, pos
        )
        return out

    return FrameField(comp, par, kind="deformation", description="identity")


def transform_rigid(
    field: FrameField, surface: ParamSurface, rotation: Array, offset: Array
) -> FrameField:
    """Post-compose a field with the rigid motion x -> Q x + c."""
    q = _arr(rotation)
    c = _arr(offset)

    def mats(theta, z):
        e = surface.frame(theta, z)
        de_th, de_z = surface.frame_derivatives(theta, z)
        m = np.einsum("...ik,ij,...jl->...kl", e, q, e)
        dm_th = np.einsum("...ik,ij,...jl->...kl", de_th, q, e) + np.einsum(
            "...ik,ij,...jl->...kl", e, q, de_th
        )
        dm_z = np.einsum("...ik,ij,...jl->...kl", de_z, q, e) + np.einsum(
            "...ik,ij,...jl->...kl", e, q, de_z
        )
        d = np.einsum("...ik,i->...k", e, c)
        dd_th = np.einsum("...ik,i->...k", de_th, c)
        dd_z = np.einsum("...ik,i->...k", de_z, c)
        return m, dm_th, dm_z, d, dd_th, dd_z

    def comp(t, theta, z):
        m, _, _, d, _, _ = mats(theta, z)
        return np.einsum("...kl,...l->...k", m, field.components(t, theta, z)) + d

    def par(t, theta, z):
        m, dm_th, dm_z, _, dd_th, dd_z = mats(theta, z)
        base = field.components(t, theta, z)
        dbase = field.partials(t, theta, z)
        out = np.einsum("...kl,...lj->...kj", m, dbase)
        out[..., 1] += np.einsum("...kl,...l->...k", dm_th, base) + dd_th
        out[..., 2] += np.einsum("...kl,...l->...k", dm_z, base) + dd_z
        return out

    return FrameField(
        comp, par, kind=field.kind, description=f"rigid({field.description})"
    )


def rigid_deformation(surface: ParamSurface, rotation: Array, offset: Array) -> FrameField:
    """The rigid motion x -> Q x + c in frame components."""
    f = transform_rigid(identity_deformation(surface), surface, rotation, offset)
    return replace(f, description="rigid-motion")


def displacement_to_deformation(
    surface: ParamSurface, u: FrameField, eps: float
) -> FrameField:
    """Deformation x + eps * u built from a displacement field."""
    if u.kind != "displacement":
        raise ValueError("expected a displacement field")
    ident = identity_deformation(surface)

    def comp(t, theta, z):
        return ident.components(t, theta, z) + eps * u.components(t, theta, z)

    def par(t, theta, z):
        return ident.partials(t, theta, z) + eps * u.partials(t, theta, z)

    return FrameField(
        comp, par, kind="deformation", description=f"x + {eps!r}*({u.description})"
    )


def random_smooth_field(
    seed: int, amplitude: float, mode_count: int, surface: ParamSurface
) -> FrameField:
    """Deterministic truncated trigonometric displacement with analytic partials.

    Coefficients, integer frequencies, and phases are drawn from the seed;
    the same seed always reproduces the same field.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    if mode_count < 1:
        raise ValueError("mode_count must be at least 1")
    rng = np.random.default_rng(seed)
    t0, t1, z0, z1 = surface.domain
    coef = rng.uniform(-1.0, 1.0, (3, mode_count)) * (amplitude / mode_count)
    w_t = np.pi * rng.integers(0, 3, (3, mode_count))
    w_th = (np.pi / (t1 - t0)) * rng.integers(0, 3, (3, mode_count))
    w_z = (np.pi / (z1 - z0)) * rng.integers(0, 3, (3, mode_count))
    phase = rng.uniform(0.0, 2.0 * np.pi, (3, mode_count, 3))

    def _angles(t, theta, z):
        t, theta, z = np.broadcast_arrays(_arr(t), _arr(theta), _arr(z))
        sh = t.shape + (1,)
        at = t.reshape(sh) * w_t + phase[..., 0]
        ath = (theta.reshape(sh) - t0) * w_th + phase[..., 1]
        az = (z.reshape(sh) - z0) * w_z + phase[..., 2]
        return at, ath, az  # shapes (..., 3, mode_count) after broadcasting

    def comp(t, theta, z):
        t_, th_, z_ = np.broadcast_arrays(_arr(t), _arr(theta), _arr(z))
        sh = t_.shape + (1, 1)
        at = t_.reshape(sh) * w_t + phase[..., 0]
        ath = (th_.reshape(sh) - t0) * w_th + phase[..., 1]
        az = (z_.reshape(sh) - z0) * w_z + phase[..., 2]
        return np.sum(coef * np.cos(at) * np.cos(ath) * np.cos(az), axis=-1)

    def par(t, theta, z):
        t_, th_, z_ = np.broadcast_arrays(_arr(t), _arr(theta), _arr(z))
        sh = t_.shape + (1, 1)
        at = t_.reshape(sh) * w_t + phase[..., 0]
        ath = (th_.reshape(sh) - t0) * w_th + phase[..., 1]
        az = (z_.reshape(sh) - z0) * w_z + phase[..., 2]
        ct, cth, cz = np.cos(at), np.cos(ath), np.cos(az)
        st, sth, sz = np.sin(at), np.sin(ath), np.sin(az)
        out = np.empty(t_.shape + (3, 3))
        out[..., 0] = np.sum(-coef * w_t * st * cth * cz, axis=-1)
        out[..., 1] = np.sum(-coef * w_th * ct * sth * cz, axis=-1)
        out[..., 2] = np.sum(-coef * w_z * ct * cth * sz, axis=-1)
        return out

    return FrameField(
        comp,
        par,
        kind="displacement",
        description=f"random(seed={seed}, amp={amplitude}, modes={mode_count})",
    )


# -- bending-type compactly supported displacement ---------------------------------


def poly_bump(s: Array) -> Array:
    """C^3 bump (1 - s^2)^4 on [-1, 1], identically zero outside."""
    s = _arr(s)
    inside = np.abs(s) < 1.0
    core = np.where(inside, 1.0 - s * s, 0.0)
    return core**4


def poly_bump_d1(s: Array) -> Array:
    s = _arr(s)
    inside = np.abs(s) < 1.0
    core = np.where(inside, 1.0 - s * s, 0.0)
    return -8.0 * s * core**3


def poly_bump_d2(s: Array) -> Array:
    s = _arr(s)
    inside = np.abs(s) < 1.0
    core = np.where(inside, 1.0 - s * s, 0.0)
    return core**2 * (56.0 * s * s - 8.0) * inside


@dataclass(frozen=True)
class AnsatzProfile:
    """Smooth compactly supported profile W(xi, z) with its partials.

    ``w`` and the partial maps take (xi, z) where xi is the stretched
    in-plane coordinate; the support is |xi| <= xi_halfwidth,
    |z - z_center| <= z_halfwidth.  ``epsilon`` is the default linearization
    amplitude used when a deformation is built from the resulting
    displacement.
    """

    w: Callable
    w_xi: Callable
    w_z: Callable
    w_xixi: Callable
    w_xiz: Callable
    w_zz: Callable
    xi_halfwidth: float
    z_center: float
    z_halfwidth: float
    epsilon: float = 1e-3

    def support_check(self) -> None:
        xi = np.linspace(-self.xi_halfwidth, self.xi_halfwidth, 41)
        zz = self.z_center + self.z_halfwidth * np.linspace(-1, 1, 41)
        peak = float(np.max(np.abs(self.w(xi[:, None], zz[None, :]))))
        if peak <= 0:
            raise ValueError("profile W is identically zero")
        tol = 1e-12 * peak
        edge_xi = np.array([-self.xi_halfwidth, self.xi_halfwidth])
        edge_z = self.z_center + np.array([-self.z_halfwidth, self.z_halfwidth])
        for f in (self.w, self.w_xi, self.w_z, self.w_xixi, self.w_xiz, self.w_zz):
            if np.max(np.abs(f(edge_xi[:, None], zz[None, :]))) > tol:
                raise ValueError("profile does not vanish on the xi support boundary")
            if np.max(np.abs(f(xi[:, None], edge_z[None, :]))) > tol:
                raise ValueError("profile does not vanish on the z support boundary")


def default_ansatz_profile(
    surface: ParamSurface,
    xi_halfwidth: float = 1.0,
    z_fraction: float = 0.9,
    epsilon: float = 1e-3,
) -> AnsatzProfile:
    """Separable polynomial-bump profile W(xi, z) = b(xi/w) * b((z - zc)/wz)."""
    z0, z1 = surface.z_span
    zc = 0.5 * (z0 + z1)
    zhw = z_fraction * 0.5 * (z1 - z0)
    wx = float(xi_halfwidth)

    def scale(f_xi, f_z, sx=1.0, sz=1.0):
        def call(xi, z):
            return sx * sz * f_xi(_arr(xi) / wx) * f_z((_arr(z) - zc) / zhw)

        return call

    prof = AnsatzProfile(
        w=scale(poly_bump, poly_bump),
        w_xi=scale(poly_bump_d1, poly_bump, sx=1.0 / wx),
        w_z=scale(poly_bump, poly_bump_d1, sz=1.0 / zhw),
        w_xixi=scale(poly_bump_d2, poly_bump, sx=1.0 / wx**2),
        w_xiz=scale(poly_bump_d1, poly_bump_d1, sx=1.0 / wx, sz=1.0 / zhw),
        w_zz=scale(poly_bump, poly_bump_d2, sz=1.0 / zhw**2),
        xi_halfwidth=wx,
        z_center=zc,
        z_halfwidth=zhw,
        epsilon=epsilon,
    )
    prof.support_check()
    return prof


def ansatz_displacement(
    profile: AnsatzProfile, surface: ParamSurface, h: float
) -> FrameField:
    """Bending-type displacement oscillating at scale sqrt(h) in theta.

    u_t = W(xi, z) with xi = (theta - theta_c)/sqrt(h), and the in-plane
    components are -t times the surface gradient of u_t, so the symmetric
    part of the gradient stays asymptotically smaller than the gradient.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if h >= surface.h0():
        raise ValueError(f"h={h} is not below the chart bound h0={surface.h0()}")
    t0, t1 = surface.theta_span
    z0, z1 = surface.z_span
    thc = 0.5 * (t0 + t1)
    s = 1.0 / np.sqrt(h)
    if profile.xi_halfwidth / s >= 0.5 * (t1 - t0):
        raise ValueError(
            "support of the stretched profile exceeds the patch in theta; "
            "use a smaller xi_halfwidth or a larger patch"
        )
    if (
        profile.z_center - profile.z_halfwidth < z0
        or profile.z_center + profile.z_halfwidth > z1
    ):
        raise ValueError(
            "profile z-support exceeds the patch; use a smaller z support or a larger patch"
        )

    def _data(t, theta, z):
        t = _arr(t)
        xi = (_arr(theta) - thc) * s
        return t, xi, _arr(z)

    def comp(t, theta, z):
        t, xi, zz = _data(t, theta, z)
        ath = _arr(surface.a_theta(theta, z))
        az = _arr(surface.a_z(theta, z))
        ut = profile.w(xi, zz) + 0.0 * t
        uth = -t * s * profile.w_xi(xi, zz) / ath
        uz = -t * profile.w_z(xi, zz) / az
        return np.stack(np.broadcast_arrays(ut, uth, uz), axis=-1)

    def par(t, theta, z):
        t, xi, zz = _data(t, theta, z)
        ath = _arr(surface.a_theta(theta, z))
        az = _arr(surface.a_z(theta, z))
        ath_th = _arr(surface.da_theta_dtheta(theta, z))
        ath_z = _arr(surface.da_theta_dz(theta, z))
        az_th = _arr(surface.da_z_dtheta(theta, z))
        az_z = _arr(surface.da_z_dz(theta, z))
        w_xi = profile.w_xi(xi, zz)
        w_z = profile.w_z(xi, zz)
        w_xixi = profile.w_xixi(xi, zz)
        w_xiz = profile.w_xiz(xi, zz)
        w_zz = profile.w_zz(xi, zz)

        shape = np.broadcast(t, xi, zz, ath).shape
        out = np.zeros(shape + (3, 3))
        out[..., 0, 0] = 0.0
        out[..., 0, 1] = s * w_xi
        out[..., 0, 2] = w_z
        out[..., 1, 0] = -s * w_xi / ath
        out[..., 1, 1] = -t * s * (s * w_xixi * ath - w_xi * ath_th) / ath**2
        out[..., 1, 2] = -t * s * (w_xiz * ath - w_xi * ath_z) / ath**2
        out[..., 2, 0] = -w_z / az
        out[..., 2, 1] = -t * (s * w_xiz * az - w_z * az_th) / az**2
        out[..., 2, 2] = -t * (w_zz * az - w_z * az_z) / az**2
        return out

    return FrameField(
        comp, par, kind="displacement", description=f"ansatz(h={h!r})"
    )


def sampled_displacement(path, domain: ThinDomain, fd_step: float = 1e-5) -> FrameField:
    """Displacement interpolated from nodal samples in the CSV schema.

    The samples must form a tensor grid: identical normalized thickness
    nodes in every (theta, z) column, as produced by exporting grid values.
    Components are interpolated linearly in (normalized t, theta, z);
    partials are central finite differences with the given step, one-sided
    at the chart boundary.
    """
    from scipy.interpolate import RegularGridInterpolator

    from .norms import read_samples_csv

    t_raw, th_raw, z_raw, vals = read_samples_csv(path)
    if vals.shape[1] != 3:
        raise ValueError("sampled displacement needs exactly 3 value columns")
    theta_ax = np.unique(th_raw)
    z_ax = np.unique(z_raw)
    nt = t_raw.size // (theta_ax.size * z_ax.size)
    if nt * theta_ax.size * z_ax.size != t_raw.size:
        raise ValueError("samples do not form a tensor (t, theta, z) grid")

    g1 = np.asarray(domain.profile.g1(th_raw, z_raw), dtype=float)
    g2 = np.asarray(domain.profile.g2(th_raw, z_raw), dtype=float)
    t_hat = (t_raw - 0.5 * (g2 - g1)) / (0.5 * (g1 + g2))
    i_th = np.searchsorted(theta_ax, th_raw)
    i_z = np.searchsorted(z_ax, z_raw)
    order = np.lexsort((t_hat, i_z, i_th))  # column-major blocks of nt rows each
    layers = np.arange(order.size) % nt
    cube = np.full((nt, theta_ax.size, z_ax.size, 3), np.nan)
    cube[layers, i_th[order], i_z[order]] = vals[order]
    if np.any(np.isnan(cube)):
        raise ValueError("samples do not cover the full tensor grid")
    t_cols = t_hat[order].reshape(theta_ax.size * z_ax.size, nt)
    t_ax = t_cols[0]
    if np.max(np.abs(t_cols - t_ax)) > 1e-9:
        raise ValueError("normalized thickness nodes differ between columns")

    interp = RegularGridInterpolator(
        (t_ax, theta_ax, z_ax), cube, bounds_error=False, fill_value=None
    )
    t0d, t1d, z0d, z1d = domain.surface.domain

    def comp(t, theta, z):
        t, theta, z = np.broadcast_arrays(_arr(t), _arr(theta), _arr(z))
        g1l = np.asarray(domain.profile.g1(theta, z), dtype=float)
        g2l = np.asarray(domain.profile.g2(theta, z), dtype=float)
        th_hat = (t - 0.5 * (g2l - g1l)) / (0.5 * (g1l + g2l))
        pts = np.stack([th_hat.reshape(-1), theta.reshape(-1), z.reshape(-1)], axis=-1)
        return interp(pts).reshape(t.shape + (3,))

    def par(t, theta, z):
        t, theta, z = np.broadcast_arrays(_arr(t), _arr(theta), _arr(z))
        out = np.empty(t.shape + (3, 3))
        steps = (fd_step, fd_step * (t1d - t0d), fd_step * (z1d - z0d))
        for j, s in enumerate(steps):
            lo = [t.copy(), theta.copy(), z.copy()]
            hi = [t.copy(), theta.copy(), z.copy()]
            hi[j] = hi[j] + s
            lo[j] = lo[j] - s
            if j == 1:
                hi[j] = np.minimum(hi[j], t1d)
                lo[j] = np.maximum(lo[j], t0d)
            if j == 2:
                hi[j] = np.minimum(hi[j], z1d)
                lo[j] = np.maximum(lo[j], z0d)
            span = hi[j] - lo[j]
            out[..., j] = (comp(*hi) - comp(*lo)) / span[..., None]
        return out

    return FrameField(comp, par, kind="displacement", description=f"sampled({path})")


def make_field(
    spec: str,
    surface: ParamSurface,
    h: float,
    amplitude: float = 0.1,
    modes: int = 4,
    profile: AnsatzProfile | None = None,
    domain: ThinDomain | None = None,
) -> FrameField:
    """Field registry: identity | rigid:<seed> | ansatz | random:<seed> | user:<csv>."""
    name, _, arg = spec.partition(":")
    if name == "identity":
        return identity_deformation(surface)
    if name == "rigid":
        from .matrixops import random_rotation

        rng = np.random.default_rng(int(arg or 0))
        q = random_rotation(rng)
        c = rng.normal(size=3)
        return rigid_deformation(surface, q, c)
    if name == "ansatz":
        prof = profile or default_ansatz_profile(surface)
        return ansatz_displacement(prof, surface, h)
    if name == "random":
        return random_smooth_field(int(arg or 0), amplitude, modes, surface)
    if name == "user":
        if domain is None:
            raise ValueError("a sampled user field needs the thin domain for normalization")
        if not arg:
            raise ValueError("user field spec must carry a CSV path, e.g. user:field.csv")
        return sampled_displacement(arg, domain)
    raise ValueError(f"unknown field spec {spec!r}")
