"""Stationary states of the mean-field flow and their bifurcation structure.

Fixed points sit on the two lines cos(phi) = +/-1 of the cylinder and solve
dH/dz = 0 there.  The primary finder is a dense sign-change scan of the
unsquared condition with bisection + Newton refinement; inverting the closed
form k(z) for the excitation ratio is kept as an independent cross-check
because squaring that relation can inject spurious roots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    DomainError,
    ModelParams,
    PhasePoint,
    _line_curvature,
    _line_slope,
    hamiltonian,
    hessian,
)

#: Roots closer than this to z in {-1, k, 1} are flagged: the square-root
#: singularity makes further refinement ill-conditioned there.
BOUNDARY_FLAG_DISTANCE = 1e-6

#: Coincident roots from the two closed-form branches (fold points) merge
#: below this separation.
MERGE_DISTANCE = 1e-8


class NoExclusionBandError(ValueError):
    """The closed-form z-bounds do not define an exclusion band here."""


@dataclass(frozen=True)
class FixedPoint:
    """One stationary state, refined and classified.

    ``classification`` uses the Hessian signature at (z_star, phi_star),
    where the cross term vanishes: both second derivatives negative is a
    maximum, both positive a minimum, mixed a saddle.  ``branch_sign`` tells
    which branch of the closed-form excitation-ratio relation reproduces the
    input k ("+", "-"), or "oracle" when only the scan sees the root.
    """

    z_star: float
    phi_star: float
    energy: float
    classification: str
    branch_sign: str
    residual: float
    boundary: bool = False


@dataclass(frozen=True)
class CriticalParams:
    """Fold data from the resonant critical cubic.

    ``z_c`` is the single real root of ``lambda_ratio^2 z^3 - 3 z^2 - 1``.
    For lambda_ratio < 2 the root lies outside the physical sphere and the
    fold pair does not exist; both critical ratios are NaN then.
    """

    lambda_ratio: float
    z_c: float
    k_c_minus: float
    k_c_plus: float


@dataclass(frozen=True)
class AdmissibleZRange:
    """z-intervals on which the closed-form excitation ratio is real.

    z = 0 is always excluded (the closed form is singular there), even when
    it falls inside an interval.
    """

    intervals: tuple[tuple[float, float], ...]

    def contains(self, z: float) -> bool:
        if z == 0.0:
            return False
        return any(lo <= z <= hi for lo, hi in self.intervals)


@dataclass(frozen=True)
class SweepRow:
    sweep_value: float
    fixed_points: tuple[FixedPoint, ...]
    error: str | None = None

    def count(self, phi_star: float) -> int:
        return sum(1 for f in self.fixed_points if f.phi_star == phi_star)


@dataclass(frozen=True)
class FoldEvent:
    """Per-branch fixed-point count change between adjacent sweep values."""

    phi_star: float
    below: float
    above: float
    count_below: int
    count_above: int


@dataclass(frozen=True)
class BifurcationTable:
    base: ModelParams
    sweep_axis: str
    rows: tuple[SweepRow, ...]
    folds: tuple[FoldEvent, ...]


def k_of_z(delta: float, lambda_ratio: float, z: float, sign: int) -> float:
    """Excitation ratio that makes z stationary, on the +/- branch.

    At z = +/-1 the discriminant term carries an exact factor (1 - z^2) = 0,
    so k = 1/z regardless of the couplings; the endpoints short-circuit to
    keep that identity exact even where the discriminant alone would be
    negative.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if z == 0.0:
        raise DomainError("excitation-ratio inversion is singular at z = 0")
    if abs(z) > 1.0:
        raise DomainError(f"z = {z} outside [-1, 1]")
    if z == 1.0 or z == -1.0:
        return z
    a = delta + lambda_ratio * z
    disc = a * a - 4.0 * z
    if disc < 0.0:
        # fold points sit exactly at disc = 0; absorb round-off there
        if disc >= -1e-12 * max(1.0, a * a):
            disc = 0.0
        else:
            raise DomainError(
                f"no real excitation ratio at z = {z}: discriminant {disc} < 0")
    return ((3.0 * z * z - 1.0) / (2.0 * z)
            + (1.0 - z * z) * abs(a) / (4.0 * z * z)
            * (abs(a) + sign * math.sqrt(disc)))


def _k_branch_values(p: ModelParams, z, sign: int):
    """Vectorized k_of_z over an array; NaN where the inversion is invalid."""
    z = np.asarray(z, dtype=float)
    a = p.delta + p.lambda_ratio * z
    disc = a * a - 4.0 * z
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = ((3.0 * z * z - 1.0) / (2.0 * z)
                + (1.0 - z * z) * np.abs(a) / (4.0 * z * z)
                * (np.abs(a) + sign * np.sqrt(disc)))
    vals = np.where((disc < 0.0) | (z == 0.0), np.nan, vals)
    return vals


def z_bounds(delta: float, lambda_ratio: float) -> tuple[float, float]:
    """Edges of the z-band where the closed-form excitation ratio turns
    complex: (z_minus, z_plus) with real k only outside (z_minus, z_plus).

    Raises :class:`NoExclusionBandError` when lambda_ratio = 0 (the closed
    form degenerates) or delta * lambda_ratio > 1 (k is real everywhere).
    """
    if lambda_ratio == 0.0:
        raise NoExclusionBandError(
            "coupling ratio is zero: bounds formula undefined")
    t = delta * lambda_ratio
    if t > 1.0:
        raise NoExclusionBandError(
            f"delta * lambda_ratio = {t} > 1: excitation ratio real for all z")
    r = 2.0 * math.sqrt(1.0 - t)
    lam2 = lambda_ratio * lambda_ratio
    return (2.0 - t - r) / lam2, (2.0 - t + r) / lam2


def admissible_z_range(delta: float, lambda_ratio: float) -> AdmissibleZRange:
    """Subset of [-1, 1] on which the closed-form excitation ratio is real."""
    if lambda_ratio == 0.0:
        # discriminant reduces to delta^2 - 4 z >= 0
        hi = min(1.0, delta * delta / 4.0)
        return AdmissibleZRange(intervals=((-1.0, hi),))
    try:
        z_minus, z_plus = z_bounds(delta, lambda_ratio)
    except NoExclusionBandError:
        return AdmissibleZRange(intervals=((-1.0, 1.0),))
    # the discriminant at z = -1 is (lambda_ratio - delta)^2 + 4 > 0, so the
    # band never swallows the lower edge
    intervals = [(-1.0, min(z_minus, 1.0))]
    if z_plus <= 1.0:
        intervals.append((z_plus, 1.0))
    return AdmissibleZRange(intervals=tuple(intervals))


# ---------------------------------------------------------------------------
# root scanning
# ---------------------------------------------------------------------------

def _scan_interval(p: ModelParams) -> tuple[float, float]:
    return -1.0, min(p.k, 1.0)


def _refine_bracket(p: ModelParams, cos_phi: float, a: float, b: float,
                    fa: float) -> tuple[float, float]:
    """Bisection to machine width then guarded Newton; returns (z, |dH/dz|)."""
    lo, hi = a, b
    for _ in range(80):
        m = 0.5 * (a + b)
        if m == a or m == b:
            break
        fm = float(_line_slope(p, m, cos_phi))
        if fm == 0.0:
            a = b = m
            break
        if (fm > 0.0) == (fa > 0.0):
            a, fa = m, fm
        else:
            b = m
    z = 0.5 * (a + b)
    best_z, best_res = z, abs(float(_line_slope(p, z, cos_phi)))
    for _ in range(6):
        g = float(_line_slope(p, z, cos_phi))
        gz = float(_line_curvature(p, z, cos_phi))
        if not (math.isfinite(g) and math.isfinite(gz)) or gz == 0.0:
            break
        z_next = z - g / gz
        if not (lo < z_next < hi):
            break
        res = abs(float(_line_slope(p, z_next, cos_phi)))
        if res < best_res:
            best_z, best_res = z_next, res
        if res >= abs(g):
            break
        z = z_next
    return best_z, best_res


def _line_roots(p: ModelParams, cos_phi: float,
                samples: int) -> list[tuple[float, float]]:
    """All roots of dH/dz on one fixed-phase line, as (z, residual) pairs."""
    z_lo, z_hi = _scan_interval(p)
    if not z_hi > z_lo:
        return []
    width = z_hi - z_lo
    eps_end = max(1e-13, 1e-9 * width)
    zs = np.linspace(z_lo, z_hi, samples)
    zs[0] = z_lo + eps_end
    zs[-1] = z_hi - eps_end
    g = _line_slope(p, zs, cos_phi)
    finite = np.isfinite(g)
    sgn = np.where(finite, np.sign(g), 0.0)

    roots: list[tuple[float, float]] = []
    exact = np.nonzero(finite & (g == 0.0))[0]
    for i in exact:
        roots.append((float(zs[i]), 0.0))

    change = np.nonzero((sgn[:-1] * sgn[1:]) < 0.0)[0]
    for i in change:
        roots.append(_refine_bracket(p, cos_phi, float(zs[i]),
                                     float(zs[i + 1]), float(g[i])))

    roots.sort(key=lambda r: r[0])
    return _merge_close(roots)


def _merge_close(roots: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[tuple[float, float]] = []
    for z, res in roots:
        if merged and abs(z - merged[-1][0]) < MERGE_DISTANCE:
            if res < merged[-1][1]:
                merged[-1] = (z, res)
        else:
            merged.append((z, res))
    return merged


def _classify(h_zz: float, h_phiphi: float) -> str:
    if h_zz < 0.0 and h_phiphi < 0.0:
        return "maximum"
    if h_zz > 0.0 and h_phiphi > 0.0:
        return "minimum"
    return "saddle"


def _branch_sign_label(p: ModelParams, z: float) -> str:
    best, best_err = "oracle", math.inf
    for sign, label in ((1, "+"), (-1, "-")):
        try:
            k_back = k_of_z(p.delta, p.lambda_ratio, z, sign)
        except DomainError:
            continue
        err = abs(k_back - p.k) / max(1.0, abs(p.k))
        if err < 1e-6 and err < best_err:
            best, best_err = label, err
    return best


def _build_fixed_point(p: ModelParams, z: float, phi_star: float,
                       residual: float, branch_sign: str | None = None
                       ) -> FixedPoint:
    z_lo, z_hi = _scan_interval(p)
    x = PhasePoint(z, phi_star)
    hes = hessian(p, x)
    return FixedPoint(
        z_star=z,
        phi_star=phi_star,
        energy=hamiltonian(p, x),
        classification=_classify(hes.zz, hes.phiphi),
        branch_sign=(branch_sign if branch_sign is not None
                     else _branch_sign_label(p, z)),
        residual=residual,
        boundary=min(z - z_lo, z_hi - z) < BOUNDARY_FLAG_DISTANCE,
    )


def find_fixed_points(p: ModelParams,
                      samples: int = 100_000) -> list[FixedPoint]:
    """All stationary states of the flow, scanned, refined and classified.

    For each phase branch phi in {0, pi} the stationarity condition is
    sampled densely on the open interval z in (-1, min(k, 1)); every sign
    change is bisected and Newton-polished to |dH/dz| < 1e-9 (boundary-hugging
    roots are flagged instead of forced).  Result is sorted by (phi, z).
    """
    out: list[FixedPoint] = []
    for phi_star, cos_phi in ((0.0, 1.0), (math.pi, -1.0)):
        for z, res in _line_roots(p, cos_phi, samples):
            out.append(_build_fixed_point(p, z, phi_star, res))
    out.sort(key=lambda f: (f.phi_star, f.z_star))
    return out


def fixed_points_by_inversion(p: ModelParams,
                              samples: int = 100_000) -> list[FixedPoint]:
    """Cross-check finder: invert the closed-form k(z) relation instead of
    scanning the stationarity condition directly.

    Roots of k_branch(z) = k are located per +/- branch by dense scan and
    bisection over each interval where the closed form is real (so roots
    hugging a fold edge are never lost to a masked cell), filtered to the
    physical region, merged across branches at fold points, and assigned to
    the phase branch whose unsquared condition they satisfy.
    """
    z_lo, z_hi = _scan_interval(p)
    if not z_hi > z_lo:
        return []
    width = z_hi - z_lo

    # Real-discriminant intervals, clipped to the physical scan window and
    # split at the z = 0 pole.  The pole needs a hard exclusion zone: the
    # closed form there is a difference of two ~1/z^2 terms whose float
    # cancellation noise fakes roots.  Stationary points that close to z = 0
    # are the scan path's job.
    pole_margin = 1e-6
    pieces: list[tuple[float, float]] = []
    for lo, hi in admissible_z_range(p.delta, p.lambda_ratio).intervals:
        lo, hi = max(lo, z_lo), min(hi, z_hi)
        if not hi > lo:
            continue
        for plo, phi_ in ((lo, min(hi, -pole_margin)),
                          (max(lo, pole_margin), hi)):
            if phi_ > plo:
                pieces.append((plo, phi_))

    hits: list[tuple[float, str]] = []
    for lo, hi in pieces:
        n = max(64, int(samples * (hi - lo) / width))
        eps_end = max(1e-13, 1e-12 * (hi - lo))
        zs = np.linspace(lo, hi, n)
        zs[0] = lo + eps_end
        zs[-1] = hi - eps_end
        for sign, label in ((1, "+"), (-1, "-")):
            vals = _k_branch_values(p, zs, sign) - p.k
            finite = np.isfinite(vals)
            sgn = np.where(finite, np.sign(vals), 0.0)
            exact = np.nonzero(finite & (vals == 0.0))[0]
            for i in exact:
                hits.append((float(zs[i]), label))
            change = np.nonzero((sgn[:-1] * sgn[1:]) < 0.0)[0]
            for i in change:
                a, b = float(zs[i]), float(zs[i + 1])
                fa = float(vals[i])
                for _ in range(80):
                    m = 0.5 * (a + b)
                    if m == a or m == b:
                        break
                    fm = float(_k_branch_values(p, m, sign)) - p.k
                    if fm == 0.0:
                        a = b = m
                        break
                    if (fm > 0.0) == (fa > 0.0):
                        a, fa = m, fm
                    else:
                        b = m
                hits.append((0.5 * (a + b), label))

    hits.sort(key=lambda h: h[0])
    merged: list[tuple[float, str]] = []
    for z, label in hits:
        if merged and abs(z - merged[-1][0]) < MERGE_DISTANCE:
            continue
        merged.append((z, label))

    out: list[FixedPoint] = []
    for z, label in merged:
        # assign to the phase branch whose unsquared condition holds
        res0 = abs(float(_line_slope(p, z, 1.0)))
        res_pi = abs(float(_line_slope(p, z, -1.0)))
        phi_star, res = (0.0, res0) if res0 <= res_pi else (math.pi, res_pi)
        out.append(_build_fixed_point(p, z, phi_star, res, branch_sign=label))
    out.sort(key=lambda f: (f.phi_star, f.z_star))
    return out


# ---------------------------------------------------------------------------
# critical parameters
# ---------------------------------------------------------------------------

def critical_params(lambda_ratio: float) -> CriticalParams:
    """Fold locations of the resonant (delta = 0) branch diagram.

    z_c is the unique real root of ``lambda_ratio^2 z^3 - 3 z^2 - 1 = 0``,
    bracketed by doubling and bisected, then Newton-polished.  The critical
    excitation ratios are the two closed-form branches evaluated at z_c;
    they coincide only in the degenerate case z_c = 1 (lambda_ratio = 2) and
    are NaN for lambda_ratio < 2, where z_c leaves the physical range.
    """
    if not lambda_ratio > 0.0:
        raise ValueError("lambda_ratio must be positive")
    lam2 = lambda_ratio * lambda_ratio

    def cubic(z: float) -> float:
        return lam2 * z * z * z - 3.0 * z * z - 1.0

    b = 1.0
    for _ in range(200):
        if cubic(b) > 0.0:
            break
        b *= 2.0
    a = 0.0
    fa = cubic(a)
    for _ in range(200):
        m = 0.5 * (a + b)
        if m == a or m == b:
            break
        fm = cubic(m)
        if fm == 0.0:
            a = b = m
            break
        if (fm > 0.0) == (fa > 0.0):
            a, fa = m, fm
        else:
            b = m
    z_c = 0.5 * (a + b)
    for _ in range(8):
        f = cubic(z_c)
        df = 3.0 * lam2 * z_c * z_c - 6.0 * z_c
        if df == 0.0:
            break
        step = f / df
        z_c -= step
        if abs(step) < 1e-12 * max(1.0, abs(z_c)):
            break

    disc = (lambda_ratio * z_c) ** 2 - 4.0 * z_c
    if disc < 0.0 or z_c > 1.0:
        k_minus = k_plus = math.nan
    else:
        k_minus = k_of_z(0.0, lambda_ratio, z_c, -1)
        k_plus = k_of_z(0.0, lambda_ratio, z_c, 1)
    return CriticalParams(lambda_ratio=lambda_ratio, z_c=z_c,
                          k_c_minus=k_minus, k_c_plus=k_plus)


def k_at_zplus(lambda_ratio: float) -> float:
    """Resonant excitation ratio at the smallest self-trapped positive z,
    z_plus = 4 / lambda_ratio^2: equals (16 + lambda_ratio^4) / (8
    lambda_ratio^2)."""
    if not lambda_ratio > 0.0:
        raise ValueError("lambda_ratio must be positive")
    lam2 = lambda_ratio * lambda_ratio
    return (16.0 + lam2 * lam2) / (8.0 * lam2)


# ---------------------------------------------------------------------------
# parameter sweeps
# ---------------------------------------------------------------------------

_SWEEP_FIELDS = {"k": "k", "lambda": "lambda_ratio", "delta": "delta"}


def branch_sweep(base: ModelParams, sweep_axis: str,
                 sweep_range: tuple[float, float], steps: int,
                 samples: int = 20_000) -> BifurcationTable:
    """Fixed-point branches along one swept parameter.

    For every swept value the full classified fixed-point set is recorded;
    per-point failures land in the row's ``error`` field and never abort the
    sweep.  Fold events mark where a phase branch changes its root count
    between adjacent sweep values.
    """
    if sweep_axis not in _SWEEP_FIELDS:
        raise ValueError(f"sweep_axis must be one of {sorted(_SWEEP_FIELDS)}")
    lo, hi = sweep_range
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("sweep range must be finite")
    if steps < 2:
        raise ValueError("steps must be at least 2")
    field = _SWEEP_FIELDS[sweep_axis]
    values = np.linspace(lo, hi, steps)

    rows: list[SweepRow] = []
    for v in values:
        params = replace(base, **{field: float(v)})
        try:
            fps = tuple(find_fixed_points(params, samples=samples))
            rows.append(SweepRow(float(v), fps))
        except Exception as exc:  # recorded in-row, sweep continues
            rows.append(SweepRow(float(v), (), error=str(exc)))

    folds: list[FoldEvent] = []
    for phi_star in (0.0, math.pi):
        for prev, cur in zip(rows, rows[1:]):
            if prev.error or cur.error:
                continue
            c0, c1 = prev.count(phi_star), cur.count(phi_star)
            if c0 != c1:
                folds.append(FoldEvent(phi_star, prev.sweep_value,
                                       cur.sweep_value, c0, c1))
    return BifurcationTable(base=base, sweep_axis=sweep_axis,
                            rows=tuple(rows), folds=tuple(folds))
