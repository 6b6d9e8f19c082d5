"""High-level products: regime reports, energy landscapes, phase-portrait
bundles and parameter-plane scans.

The single-vs-bistable distinction is made operationally from fixed-point
multiplicity (a phase branch carrying two centers and a saddle), with the
closed-form critical window used as a cross-check rather than the source of
truth; whenever the two disagree the disagreement is reported, never
dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams, PhasePoint, _energy_values, strictly_admissible
from .dynamics import (
    IntegratorConfig,
    Trajectory,
    classify_phase,
    integrate,
    level_curve,
    separatrix_energy,
)
from .fixed_points import CriticalParams, FixedPoint, critical_params, find_fixed_points

REGIME_SINGLE = "rabi_single"
REGIME_BISTABLE = "josephson_bistable"

PHI0_KEY = "phi=0"
PHI_PI_KEY = "phi=pi"


@dataclass(frozen=True)
class RegimeReport:
    params: ModelParams
    regime: str
    fixed_point_counts: dict[str, int]
    critical_window: tuple[float, float] | None
    notes: tuple[str, ...]


@dataclass(frozen=True)
class LandscapeGrid:
    """Energy sampled on a rectangular (phi, z) grid.

    ``h_values[i, j]`` is H(z_axis[i], phi_axis[j]); cells with z > k are
    out of domain and carry NaN, an explicit sentinel that is never
    interpolated over.  ``in_domain`` is the matching boolean mask.
    """

    phi_axis: np.ndarray
    z_axis: np.ndarray
    h_values: np.ndarray
    in_domain: np.ndarray


@dataclass
class SurveyTrajectory:
    z0: float
    phi0: float
    trajectory: Trajectory


@dataclass
class SeparatrixData:
    energy: float
    saddle: FixedPoint
    curve: np.ndarray  # (n, 2) rows of (phi, z)


@dataclass
class PortraitBundle:
    params: ModelParams
    fixed_points: list[FixedPoint]
    trajectories: list[SurveyTrajectory]
    separatrix: SeparatrixData | None
    landscape: LandscapeGrid
    notes: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class TransitionPoint:
    lambda_ratio: float
    k: float
    count_phi0: int
    count_phi_pi: int
    regime_by_count: str
    regime_by_window: str | None
    agree: bool
    note: str = ""


@dataclass(frozen=True)
class TransitionScan:
    delta: float
    criticals: tuple[CriticalParams, ...]
    points: tuple[TransitionPoint, ...]
    notes: tuple[str, ...]


def _count_by_branch(fps: list[FixedPoint]) -> tuple[int, int]:
    n0 = sum(1 for f in fps if f.phi_star == 0.0)
    return n0, len(fps) - n0


def classify_regime(p: ModelParams, samples: int = 100_000) -> RegimeReport:
    """Count fixed points per phase branch and name the dynamical regime.

    Bistable means some branch carries at least three fixed points (two
    centers separated by a saddle).  On resonance the closed-form critical
    window is attached; the numeric cubic root is reported next to its
    large-coupling estimate 3 / lambda_ratio^2 because the two differ badly
    away from that limit.
    """
    fps = find_fixed_points(p, samples=samples)
    n0, n_pi = _count_by_branch(fps)
    regime = REGIME_BISTABLE if max(n0, n_pi) >= 3 else REGIME_SINGLE

    notes: list[str] = []
    window = None
    if p.delta == 0.0 and p.lambda_ratio > 0.0:
        cp = critical_params(p.lambda_ratio)
        if math.isfinite(cp.k_c_minus) and math.isfinite(cp.k_c_plus):
            window = (cp.k_c_minus, cp.k_c_plus)
        estimate = 3.0 / p.lambda_ratio ** 2
        notes.append(
            f"critical z_c = {cp.z_c:.9g} (numeric cubic root); "
            f"large-coupling estimate 3/lambda_ratio^2 = {estimate:.9g}")
        if window is None:
            notes.append("no fold pair: critical root outside |z| <= 1")
    for f in fps:
        if f.classification in ("maximum", "minimum"):
            family = "pi" if f.phi_star == 0.0 else "plasma"
            notes.append(
                f"center at z = {f.z_star:.9g} on the phi = "
                f"{'0' if f.phi_star == 0.0 else 'pi'} branch: "
                f"{family}-oscillation family")
        if f.boundary:
            notes.append(f"root at z = {f.z_star:.9g} hugs the domain "
                         "boundary; refinement ill-conditioned")
    return RegimeReport(
        params=p,
        regime=regime,
        fixed_point_counts={PHI0_KEY: n0, PHI_PI_KEY: n_pi},
        critical_window=window,
        notes=tuple(notes),
    )


def landscape(p: ModelParams, n_phi: int = 201, n_z: int = 201,
              phi_range: tuple[float, float] = (0.0, 2.0 * math.pi),
              z_range: tuple[float, float] = (-1.0, 1.0)) -> LandscapeGrid:
    """Energy surface on a uniform grid over the cylinder.

    The z-axis spans [-1, 1] by default so that a truncated domain (k < 1)
    shows up as an out-of-domain band rather than silently shrinking the
    picture.
    """
    if n_phi < 2 or n_z < 2:
        raise ValueError("grid must be at least 2x2")
    phi_axis = np.linspace(phi_range[0], phi_range[1], n_phi)
    z_axis = np.linspace(z_range[0], z_range[1], n_z)
    h = _energy_values(p, z_axis[:, None], phi_axis[None, :])
    in_domain = (p.k - z_axis[:, None] >= 0.0) & (np.abs(z_axis[:, None]) <= 1.0)
    in_domain = np.broadcast_to(in_domain, h.shape).copy()
    h = np.where(in_domain, h, np.nan)
    return LandscapeGrid(phi_axis=phi_axis, z_axis=z_axis, h_values=h,
                         in_domain=in_domain)


def default_survey(p: ModelParams, n: int = 41) -> list[tuple[float, float]]:
    """Initial conditions phi(0) = 0, z(0) on a uniform grid spanning the
    admissible z interval (singular endpoints included; the bundle skips
    what it cannot integrate and says so)."""
    z_hi = min(p.k, 1.0)
    return [(float(z), 0.0) for z in np.linspace(-1.0, z_hi, n)]


def portrait_bundle(p: ModelParams,
                    survey: list[tuple[float, float]] | None = None,
                    cfg: IntegratorConfig | None = None,
                    landscape_shape: tuple[int, int] = (201, 201),
                    samples: int = 100_000) -> PortraitBundle:
    """Self-consistent phase-portrait dataset for one parameter set:
    classified fixed points, a trajectory survey with phase classes, the
    saddle level set when one exists, and the energy landscape.

    Survey entries that are not strictly admissible (z0 > k, or on a
    singular edge) are skipped with a note instead of failing the bundle.
    """
    cfg = cfg or IntegratorConfig(tau_max=30.0, abs_tol=1e-9, rel_tol=1e-9,
                                  output_stride=2)
    notes: list[str] = []
    fps = find_fixed_points(p, samples=samples)

    sep = separatrix_energy(p, samples=samples)
    sep_data = None
    if sep is not None:
        energy, saddle = sep
        sep_data = SeparatrixData(energy=energy, saddle=saddle,
                                  curve=level_curve(p, energy))
    else:
        notes.append("no saddle: separatrix omitted")

    ics = survey if survey is not None else default_survey(p)
    trajectories: list[SurveyTrajectory] = []
    for z0, phi0 in ics:
        usable = (abs(z0) <= 1.0
                  and strictly_admissible(p, PhasePoint(z0, phi0),
                                          margin=cfg.boundary_margin))
        if not usable:
            notes.append(f"initial condition z0 = {z0:.9g}, phi0 = "
                         f"{phi0:.9g} skipped: not strictly admissible "
                         f"for k = {p.k:.9g}")
            continue
        x0 = PhasePoint(z0, phi0)
        traj = integrate(p, x0, cfg)
        traj.phase_class = classify_phase(p, x0, trajectory=traj)
        trajectories.append(SurveyTrajectory(z0=z0, phi0=phi0,
                                             trajectory=traj))

    n_phi, n_z = landscape_shape
    grid = landscape(p, n_phi=n_phi, n_z=n_z)
    return PortraitBundle(params=p, fixed_points=fps,
                          trajectories=trajectories, separatrix=sep_data,
                          landscape=grid, notes=notes)


def transition_scan(lambda_range: tuple[float, float],
                    k_range: tuple[float, float],
                    delta: float = 0.0,
                    n_lambda: int = 11,
                    n_k: int = 25,
                    samples: int = 20_000) -> TransitionScan:
    """Phase-diagram scan over the (lambda_ratio, k) plane.

    For every coupling ratio the closed-form critical window is computed and
    each sampled k is classified twice: by counting fixed points and by
    window membership.  Disagreements are listed point by point.
    """
    if n_lambda < 1 or n_k < 1:
        raise ValueError("resolutions must be positive")
    lams = np.linspace(lambda_range[0], lambda_range[1], n_lambda)
    ks = np.linspace(k_range[0], k_range[1], n_k)

    notes: list[str] = []
    if delta != 0.0:
        notes.append("critical window is defined on resonance only; "
                     "window classification omitted")

    criticals: list[CriticalParams] = []
    points: list[TransitionPoint] = []
    for lam in lams:
        window = None
        if delta == 0.0 and lam > 0.0:
            cp = critical_params(float(lam))
            criticals.append(cp)
            if math.isfinite(cp.k_c_minus) and math.isfinite(cp.k_c_plus):
                window = (cp.k_c_minus, cp.k_c_plus)
        for k in ks:
            params = ModelParams(delta=delta, lambda_ratio=float(lam),
                                 k=float(k))
            fps = find_fixed_points(params, samples=samples)
            n0, n_pi = _count_by_branch(fps)
            by_count = REGIME_BISTABLE if max(n0, n_pi) >= 3 else REGIME_SINGLE
            by_window = None
            if window is not None:
                by_window = (REGIME_BISTABLE
                             if window[0] < k < window[1] else REGIME_SINGLE)
            agree = by_window is None or by_count == by_window
            note = ""
            if not agree:
                note = (f"count says {by_count} but window "
                        f"({window[0]:.9g}, {window[1]:.9g}) says {by_window}")
            points.append(TransitionPoint(
                lambda_ratio=float(lam), k=float(k), count_phi0=n0,
                count_phi_pi=n_pi, regime_by_count=by_count,
                regime_by_window=by_window, agree=agree, note=note))
    return TransitionScan(delta=delta, criticals=tuple(criticals),
                          points=tuple(points), notes=tuple(notes))
