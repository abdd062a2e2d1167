"""h-sweeps, scaling-exponent fits, and pass/fail verdicts.

A sweep builds one thin domain, grid, and field per thickness value,
evaluates the inequality report, and fits log(ratio) against log(h).  The
headline checks are sharpness (the ratio of the bending-type field stays
flat in h) and validity (no random field makes the constant blow up as
h -> 0).  Verdict thresholds are artifact policy, stored in the config and
echoed into every output.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from . import fields as fl
from . import geometry as geo
from . import inequality as ineq
from . import norms as nm

CSV_HEADER = [
    "h",
    "p",
    "epsilon",
    "lhs",
    "rhs_product",
    "rhs_field_sq",
    "rhs_dist_sq",
    "ratio",
    "grid_nt",
    "grid_ntheta",
    "grid_nz",
]


class SweepError(RuntimeError):
    """A sweep failed at a specific thickness value.

    ``partial_rows`` carries the rows computed before the failure so callers
    can persist them with a failure marker.
    """

    def __init__(self, message: str, partial_rows=None):
        super().__init__(message)
        self.partial_rows = partial_rows or []


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares slope of log(value) against log(h)."""

    pairs: tuple
    alpha_hat: float
    intercept: float
    r2: float
    max_residual: float

    def to_dict(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "intercept": self.intercept,
            "r2": self.r2,
            "max_residual": self.max_residual,
            "pairs": [list(pq) for pq in self.pairs],
        }


def fit_exponent(pairs) -> ScalingFit:
    """Ordinary least squares of log(value) on log(h).

    Raises on nonpositive values, naming the offending pair.
    """
    pairs = [(float(h), float(v)) for h, v in pairs]
    if len(pairs) < 2:
        raise ValueError("need at least two (h, value) pairs")
    for h, v in pairs:
        if not (h > 0 and v > 0) or not (math.isfinite(h) and math.isfinite(v)):
            raise ValueError(f"cannot fit a log-log slope through the pair (h={h!r}, value={v!r})")
    x = np.log([h for h, _ in pairs])
    y = np.log([v for _, v in pairs])
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(
        pairs=tuple(pairs),
        alpha_hat=float(slope),
        intercept=float(intercept),
        r2=float(r2),
        max_residual=float(np.max(np.abs(y - pred))),
    )


@dataclass
class SweepConfig:
    """Everything needed to reproduce one sweep bit for bit."""

    surface: str = "sphere"
    surface_params: dict = dc_field(default_factory=dict)
    profile: str = "shell"
    p: float = 2.0
    h_min: float = 1e-3
    h_max: float = 1e-1
    num_h: int = 9
    field: str = "ansatz"  # identity | rigid:<seed> | ansatz | random:<seed> | random (battery)
    seeds: int = 20  # battery size when field == "random"
    eps_rule: str = "h"  # h | h2 | fixed
    eps_value: float = 1e-3  # used when eps_rule == "fixed"
    amplitude: float = 0.1
    modes: int = 4
    rotation_mode: str = "identity"  # identity | best-fit
    offset_mode: str = "mean"  # mean | zero
    nt: int = 8
    ntheta: int = 64
    nz: int = 64
    adaptive_theta: bool = True
    gamma: float = 0.5
    slope_tol: float = 0.2
    r2_floor: float = 0.9
    threads: int = 1

    def validate(self) -> None:
        if not (1.0 < self.p < math.inf):
            raise ValueError("p must satisfy 1 < p < infinity")
        if not (0 < self.h_min < self.h_max):
            raise ValueError("need 0 < h_min < h_max")
        if self.num_h < 4:
            raise ValueError("a sweep needs at least 4 thickness values to fit a slope")
        surf = geo.make_surface(self.surface, **self.surface_params)
        h0 = surf.h0()
        if self.h_max >= h0:
            raise ValueError(f"h_max={self.h_max:g} must stay below the chart bound h0={h0:g}")
        if self.eps_rule not in ("h", "h2", "fixed"):
            raise ValueError("eps_rule must be one of: h, h2, fixed")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def h_values(self) -> np.ndarray:
        return np.geomspace(self.h_min, self.h_max, self.num_h)

    def epsilon(self, h: float) -> float:
        if self.eps_rule == "h":
            return float(h)
        if self.eps_rule == "h2":
            return float(h * h)
        return float(self.eps_value)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    rows: list  # one dict per h, CSV_HEADER keys plus extras
    reports: list
    fit: ScalingFit | None
    verdicts: dict  # name -> (bool passed, detail string)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.verdicts.values())


def _resolution_for(config: SweepConfig, domain: geo.ThinDomain) -> tuple[int, int, int]:
    nth = config.ntheta
    if config.adaptive_theta and config.field.startswith("ansatz"):
        nth = nm.adaptive_theta_resolution(domain, base=config.ntheta)
    return (config.nt, nth, config.nz)


def _single_report(config: SweepConfig, surface, h: float, field_spec: str, profile_cache: dict):
    domain = geo.ThinDomain(surface, geo.make_profile(config.profile, h, surface))
    grid = nm.build_grid(domain, _resolution_for(config, domain))
    eps = config.epsilon(h)
    name = field_spec.partition(":")[0]

    if name in ("identity", "rigid"):
        y = fl.make_field(field_spec, surface, h)
        if name == "rigid":
            rot, off = _rigid_params(field_spec)
        else:
            rot, off = np.eye(3), np.zeros(3)
    else:
        if name == "ansatz":
            prof = profile_cache.setdefault("ansatz", fl.default_ansatz_profile(surface))
            u = fl.ansatz_displacement(prof, surface, h)
        elif name == "user":
            u = fl.make_field(field_spec, surface, h, domain=domain)
        else:
            u = fl.random_smooth_field(int(field_spec.partition(":")[2] or 0), config.amplitude, config.modes, surface)
        y = fl.displacement_to_deformation(surface, u, eps)
        rot = np.eye(3)
        off = None

    if config.rotation_mode == "best-fit":
        t, th, zz = grid.mesh()
        g = fl.frame_gradient(y, surface, t, th, zz)
        e = np.broadcast_to(surface.frame(th, zz), g.shape)
        ge = np.einsum("...ik,...kl,...jl->...ij", e, g, e)
        mean = np.einsum("tij,tijkl->kl", grid.weights, ge) / grid.volume
        from .matrixops import nearest_rotation

        rot = nearest_rotation(mean, warn_degenerate=False)
    if off is None:
        off = (
            ineq.optimal_offset(y, rot, domain, grid)
            if config.offset_mode == "mean"
            else np.zeros(3)
        )
    rep = ineq.interpolation_sides(
        y, rot, off, domain, grid, config.p,
        meta={"epsilon": eps, "field": field_spec, "grid": grid.resolution},
    )
    return rep, grid


def _rigid_params(spec: str):
    from .matrixops import random_rotation

    rng = np.random.default_rng(int(spec.partition(":")[2] or 0))
    return random_rotation(rng), rng.normal(size=3)


def _row_from(rep, grid, h, eps) -> dict:
    return {
        "h": h,
        "p": rep.p,
        "epsilon": eps,
        "lhs": rep.lhs,
        "rhs_product": rep.rhs_product,
        "rhs_field_sq": rep.rhs_field_sq,
        "rhs_dist_sq": rep.rhs_dist_sq,
        "ratio": rep.ratio,
        "grid_nt": grid.resolution[0],
        "grid_ntheta": grid.resolution[1],
        "grid_nz": grid.resolution[2],
    }


def _map_h(config: SweepConfig, work, h_values):
    """Evaluate work(h) for each h, ordered by h; raise with partial results.

    Worker output is deterministic either way: each per-h evaluation is a
    pure function and results are assembled in h order.
    """
    results = []
    try:
        if config.threads > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                results = list(pool.map(work, h_values))
        else:
            for h in h_values:
                results.append(work(h))
    except Exception as err:
        failing = h_values[len(results)] if len(results) < len(h_values) else None
        partial = [_row_from(rep, grid, h, eps) for h, eps, rep, grid in results]
        raise SweepError(f"sweep failed at h={failing}: {err}", partial) from err
    return results


def run_sweep(config: SweepConfig) -> SweepResult:
    """Interpolation-inequality sweep over the configured thickness values.

    Any per-h failure aborts the sweep with the failing h identified; rows
    computed before the failure are attached to the raised error.
    """
    config.validate()
    surface = geo.make_surface(config.surface, **config.surface_params)
    battery = config.field == "random"
    profile_cache: dict = {}
    rows, reports = [], []

    def work(h: float):
        eps = config.epsilon(h)
        if battery:
            best = None
            for seed in range(config.seeds):
                rep, grid = _single_report(config, surface, h, f"random:{seed}", profile_cache)
                if best is None or (
                    math.isfinite(rep.ratio) and rep.ratio > best[0].ratio
                ):
                    best = (rep, grid)
            rep, grid = best
        else:
            rep, grid = _single_report(config, surface, h, config.field, profile_cache)
        return h, eps, rep, grid

    h_values = [float(h) for h in config.h_values()]
    results = _map_h(config, work, h_values)
    for h, eps, rep, grid in results:
        rows.append(_row_from(rep, grid, h, eps))
        reports.append(rep)

    verdicts = {}
    degenerate = all(rep.flag == "degenerate-exact" for rep in reports)
    if degenerate:
        fit = None
        verdicts["degenerate-exact"] = (
            True,
            "all reports are exact rigid motions; ratio fit skipped",
        )
    else:
        fit = fit_exponent([(row["h"], row["ratio"]) for row in rows])
        if config.field.startswith("ansatz"):
            ok = abs(fit.alpha_hat) <= config.slope_tol
            verdicts["sharpness"] = (
                ok,
                f"|alpha_hat|={abs(fit.alpha_hat):.4f} vs tol {config.slope_tol} "
                f"(r2 of the flat-line fit: {fit.r2:.4f})",
            )
        elif battery or config.field.startswith("random"):
            ok = fit.alpha_hat >= -config.slope_tol
            verdicts["validity"] = (
                ok,
                f"alpha_hat={fit.alpha_hat:.4f} >= -{config.slope_tol} required",
            )
        else:
            verdicts["fit"] = (True, f"alpha_hat={fit.alpha_hat:.4f}")
    return SweepResult(config=config, rows=rows, reports=reports, fit=fit, verdicts=verdicts)


def korn_sweep(config: SweepConfig) -> SweepResult:
    """Sweep of the linearized sides; fields must be displacements."""
    config.validate()
    name = config.field.partition(":")[0]
    if name in ("identity", "rigid"):
        raise ValueError("the linearized sweep needs a displacement field (ansatz or random)")
    surface = geo.make_surface(config.surface, **config.surface_params)
    battery = config.field == "random"
    profile_cache: dict = {}

    def one(h: float, spec: str):
        domain = geo.ThinDomain(surface, geo.make_profile(config.profile, h, surface))
        grid = nm.build_grid(domain, _resolution_for(config, domain))
        if spec.startswith("ansatz"):
            prof = profile_cache.setdefault("ansatz", fl.default_ansatz_profile(surface))
            u = fl.ansatz_displacement(prof, surface, h)
        elif spec.startswith("user"):
            u = fl.make_field(spec, surface, h, domain=domain)
        else:
            u = fl.random_smooth_field(int(spec.partition(":")[2] or 0), config.amplitude, config.modes, surface)
        rep = ineq.korn_linear_sides(
            u, domain, grid, config.p, meta={"epsilon": 0.0, "field": spec, "grid": grid.resolution}
        )
        return rep, grid

    def work(h: float):
        if battery:
            best = None
            for seed in range(config.seeds):
                rep, grid = one(h, f"random:{seed}")
                if best is None or (math.isfinite(rep.ratio) and rep.ratio > best[0].ratio):
                    best = (rep, grid)
            rep, grid = best
        else:
            rep, grid = one(h, config.field)
        return h, 0.0, rep, grid

    h_values = [float(h) for h in config.h_values()]
    results = _map_h(config, work, h_values)
    rows, reports = [], []
    for h, eps, rep, grid in results:
        rows.append(_row_from(rep, grid, h, eps))
        reports.append(rep)

    verdicts = {}
    skew_like = all(rep.rhs_dist_sq <= 1e-24 * max(rep.lhs, 1.0) for rep in reports)
    if skew_like:
        fit = None
        verdicts["no-strain"] = (
            True,
            "strain term vanishes; ratio is the plain gradient-to-field quotient, not fitted",
        )
    else:
        fit = fit_exponent([(row["h"], row["ratio"]) for row in rows])
        if config.field.startswith("ansatz"):
            ok = abs(fit.alpha_hat) <= config.slope_tol
            verdicts["korn-sharpness"] = (
                ok,
                f"|alpha_hat|={abs(fit.alpha_hat):.4f} vs tol {config.slope_tol} "
                f"(r2: {fit.r2:.4f})",
            )
        else:
            ok = fit.alpha_hat >= -config.slope_tol
            verdicts["korn-validity"] = (ok, f"alpha_hat={fit.alpha_hat:.4f} >= -{config.slope_tol}")
    return SweepResult(config=config, rows=rows, reports=reports, fit=fit, verdicts=verdicts)


# -- deterministic artifact writers ---------------------------------------------------


def write_rows_csv(path, rows, header=CSV_HEADER) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    format(row[k], ".17g") if isinstance(row[k], float) else row[k]
                    for k in header
                ]
            )


def write_fit_json(path, fit: ScalingFit | None, config_echo: dict) -> None:
    payload = {
        "alpha_hat": None if fit is None else fit.alpha_hat,
        "intercept": None if fit is None else fit.intercept,
        "r2": None if fit is None else fit.r2,
        "max_residual": None if fit is None else fit.max_residual,
        "config_echo": config_echo,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
