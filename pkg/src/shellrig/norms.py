"""Tensor-product Gauss-Legendre grids over thin domains and L^p norms.

The t-interval of the rule follows the thickness profile column by column,
and the quadrature weights absorb the curvilinear volume element, so a
weighted sum over nodes is an integral over the thin domain.  Reductions
use a fixed summation order, which keeps runs bit-reproducible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import roots_legendre

from .geometry import ChartDegeneracyError, ThinDomain, volume_jacobian

Array = np.ndarray


@dataclass(frozen=True)
class QuadratureGrid:
    """Gauss-Legendre nodes/weights on a thin domain.

    ``t`` has shape (nt, ntheta, nz); ``theta`` and ``z`` are the 1-d node
    sets; ``weights`` includes the volume element, so ``weights.sum()`` is
    the domain volume up to the rule's accuracy.
    """

    domain: ThinDomain
    resolution: tuple[int, int, int]
    t: Array
    theta: Array
    z: Array
    weights: Array

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def volume(self) -> float:
        return float(self.weights.sum())

    def mesh(self) -> tuple[Array, Array, Array]:
        """Full (nt, ntheta, nz) coordinate arrays."""
        nt, nth, nz = self.resolution
        th = np.broadcast_to(self.theta[None, :, None], (nt, nth, nz))
        zz = np.broadcast_to(self.z[None, None, :], (nt, nth, nz))
        return self.t, th, zz


def build_grid(domain: ThinDomain, resolution: tuple[int, int, int]) -> QuadratureGrid:
    """Tensor-product Gauss-Legendre grid; t spans (-g1, g2) per column."""
    nt, nth, nz = (int(n) for n in resolution)
    if min(nt, nth, nz) < 2:
        raise ValueError("every grid dimension needs at least 2 nodes")
    t0, t1, z0, z1 = domain.surface.domain

    xt, wt = roots_legendre(nt)
    xth, wth = roots_legendre(nth)
    xz, wz = roots_legendre(nz)

    theta = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * xth
    z = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * xz
    wth = 0.5 * (t1 - t0) * wth
    wz = 0.5 * (z1 - z0) * wz

    th2 = theta[:, None]
    z2 = z[None, :]
    g1 = np.broadcast_to(np.asarray(domain.profile.g1(th2, z2), dtype=float), (nth, nz))
    g2 = np.broadcast_to(np.asarray(domain.profile.g2(th2, z2), dtype=float), (nth, nz))
    half = 0.5 * (g1 + g2)
    mid = 0.5 * (g2 - g1)
    t = mid[None, :, :] + half[None, :, :] * xt[:, None, None]
    w_t = half[None, :, :] * wt[:, None, None]

    th3 = np.broadcast_to(theta[None, :, None], (nt, nth, nz))
    z3 = np.broadcast_to(z[None, None, :], (nt, nth, nz))
    try:
        jac = volume_jacobian(domain, t, th3, z3)
    except ChartDegeneracyError as err:
        raise ChartDegeneracyError(f"grid node inside a degenerate chart region: {err}") from err
    bad = jac <= 0
    if np.any(bad):
        i = np.argwhere(bad)[0]
        raise ChartDegeneracyError(
            f"nonpositive volume element at node t={t[tuple(i)]:.3e}, "
            f"theta={theta[i[1]]:.3e}, z={z[i[2]]:.3e}"
        )
    weights = w_t * wth[None, :, None] * wz[None, None, :] * jac
    return QuadratureGrid(
        domain=domain,
        resolution=(nt, nth, nz),
        t=t,
        theta=theta,
        z=z,
        weights=weights,
    )


def adaptive_theta_resolution(domain: ThinDomain, base: int = 64, per_scale: int = 16) -> int:
    """Theta node count resolving sqrt(h)-scale oscillation on the patch."""
    t0, t1, _, _ = domain.surface.domain
    return max(base, int(math.ceil(per_scale * (t1 - t0) / math.sqrt(domain.h))))


def _pointwise_magnitude(values: Array, grid: QuadratureGrid) -> Array:
    values = np.asarray(values, dtype=float)
    base = tuple(grid.resolution)
    if values.shape == base:
        return np.abs(values)
    if values.shape == base + (3,):
        return np.linalg.norm(values, axis=-1)
    if values.shape == base + (3, 3):
        return np.linalg.norm(values, axis=(-2, -1))
    raise ValueError(
        f"values shape {values.shape} does not match grid resolution {base} "
        "(scalar, 3-vector, or 3x3 nodal values expected)"
    )


def lp_norm(values: Array, grid: QuadratureGrid, p: float) -> float:
    """L^p norm over the thin domain; 1 < p < infinity only.

    Scalars use absolute value, vectors the Euclidean norm, matrices the
    Frobenius norm.
    """
    if not (1.0 < p < math.inf):
        raise ValueError("p must satisfy 1 < p < infinity")
    mag = _pointwise_magnitude(values, grid)
    if not np.all(np.isfinite(mag)):
        raise ValueError("values must be finite on all grid nodes")
    return float(np.sum(grid.weights * mag**p) ** (1.0 / p))


def weighted_mean(values: Array, grid: QuadratureGrid) -> Array:
    """Volume-weighted mean of nodal scalar or vector values."""
    values = np.asarray(values, dtype=float)
    w = grid.weights
    if values.shape == tuple(grid.resolution):
        return np.sum(w * values) / grid.volume
    return np.einsum("tij,tij...->...", w, values) / grid.volume


# -- sampled-field CSV schema -----------------------------------------------------


def write_samples_csv(path, grid: QuadratureGrid, values: Array, header_values=None) -> None:
    """Write nodal samples as rows ``t,theta,z,v1,...,vk`` with a header."""
    values = np.asarray(values, dtype=float)
    nt, nth, nz = grid.resolution
    flat_vals = values.reshape(nt * nth * nz, -1)
    k = flat_vals.shape[1]
    names = header_values or [f"v{i + 1}" for i in range(k)]
    t, th, zz = grid.mesh()
    cols = np.column_stack(
        [t.reshape(-1), th.reshape(-1), zz.reshape(-1), flat_vals]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "theta", "z", *names])
        for row in cols:
            writer.writerow([format(x, ".17g") for x in row])


def read_samples_csv(path) -> tuple[Array, Array, Array, Array]:
    """Read the sampled-field schema back as (t, theta, z, values) flat arrays."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["t", "theta", "z"]:
            raise ValueError(f"{path}: expected header starting with t,theta,z")
        data = np.array([[float(x) for x in row] for row in reader])
    if data.size == 0:
        raise ValueError(f"{path}: no sample rows")
    return data[:, 0], data[:, 1], data[:, 2], data[:, 3:]
