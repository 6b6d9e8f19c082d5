"""Time evolution on the phase cylinder and trajectory classification.

The flow is the canonical one generated by the energy,

    dz/dtau   = -dH/dphi = sqrt(2 (1 - z^2)(k - z)) sin(phi)
    dphi/dtau = +dH/dz

in dimensionless time tau (physical time scaled by the field coupling), so
the energy is an exact invariant and its numerical drift is an audit: it is
recomputed at every accepted step, never assumed.

Integration uses the Dormand-Prince 5(4) embedded pair, propagating the
5th-order solution (local extrapolation) under standard proportional step
control.  An
adaptive explicit pair is the right tool here because dphi/dtau diverges
like (k - z)^(-1/2) at the empty-field boundary: steps shrink into the
boundary layer, and a trajectory entering the stop margin terminates with a
tagged ``boundary_hit`` instead of crashing.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

from .core import (
    EPS_DOMAIN,
    SQRT2,
    DomainError,
    ModelParams,
    PhasePoint,
    _energy_values,
    gradient,
    hamiltonian,
    strictly_admissible,
)
from .fixed_points import FixedPoint, find_fixed_points

# Dormand-Prince 5(4) tableau (FSAL: stage 7 is the next step's stage 1).
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (9017 / 3168, -355 / 33, 46732 / 5247,
                                49 / 176, -5103 / 18656)
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920,
                                -17253 / 339200, 22 / 525, -1 / 40)

_H_MIN = 1e-12
_MAX_STEPS = 20_000_000


class _LeftDomain(Exception):
    """Internal: a stage evaluation stepped outside the admissible region."""


@dataclass
class IntegratorConfig:
    """Tolerances and termination settings for :func:`integrate`."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    tau_max: float = 100.0
    output_stride: int = 1
    boundary_margin: float = 1e-9

    def __post_init__(self):
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if not self.tau_max > 0.0:
            raise ValueError("tau_max must be positive")
        if self.output_stride < 1:
            raise ValueError("output_stride must be a positive step count")
        if self.boundary_margin < EPS_DOMAIN:
            raise ValueError(f"boundary_margin must be >= {EPS_DOMAIN}")


@dataclass
class Trajectory:
    """Sampled solution with its energy audit.

    ``phis`` are unwrapped.  ``termination`` is one of ``completed``,
    ``boundary_hit`` or ``step_underflow``; ``phase_class`` stays
    ``undetermined`` until :func:`classify_phase` fills it in.
    """

    taus: np.ndarray
    zs: np.ndarray
    phis: np.ndarray
    energies: np.ndarray
    energy_drift: float
    termination: str
    phase_class: str = "undetermined"

    @property
    def samples(self) -> np.ndarray:
        """(n, 3) array of (tau, z, phi) rows."""
        return np.column_stack([self.taus, self.zs, self.phis])

    @property
    def winding(self) -> float:
        return abs(float(self.phis[-1] - self.phis[0]))


def eom(p: ModelParams, x: PhasePoint) -> tuple[float, float]:
    """Right-hand side (dz/dtau, dphi/dtau) of the canonical flow."""
    g = gradient(p, x)
    return -g.d_phi, g.d_z


def _make_rhs(p: ModelParams):
    delta, lam, k = p.delta, p.lambda_ratio, p.k

    def rhs(z: float, phi: float) -> tuple[float, float]:
        one_m_z2 = 1.0 - z * z
        u = k - z
        if one_m_z2 <= 0.0 or u <= 0.0:
            raise _LeftDomain
        root = math.sqrt(one_m_z2 * u)
        dz = SQRT2 * root * math.sin(phi)
        dphi = (delta + lam * z
                - (1.0 + 2.0 * k * z - 3.0 * z * z) / (SQRT2 * root)
                * math.cos(phi))
        return dz, dphi

    return rhs


def _attempt_step(delta, lam, k, z, phi, h, k1z, k1p,
                  sqrt=math.sqrt, sin=math.sin, cos=math.cos):
    """One Dormand-Prince 5(4) attempt with the right-hand side inlined.

    Returns (z_new, phi_new, k7z, k7p, err_z, err_p, e_new), or None when a
    stage evaluation leaves the admissible region.  Hot path: flat float
    arithmetic, no allocations beyond the result tuple.
    """
    zz = z + h * (_A21 * k1z)
    pp = phi + h * (_A21 * k1p)
    om = 1.0 - zz * zz
    u = k - zz
    if om <= 0.0 or u <= 0.0:
        return None
    r = sqrt(om * u)
    k2z = SQRT2 * r * sin(pp)
    k2p = delta + lam * zz - (1.0 + 2.0 * k * zz - 3.0 * zz * zz) / (SQRT2 * r) * cos(pp)

    zz = z + h * (_A31 * k1z + _A32 * k2z)
    pp = phi + h * (_A31 * k1p + _A32 * k2p)
    om = 1.0 - zz * zz
    u = k - zz
    if om <= 0.0 or u <= 0.0:
        return None
    r = sqrt(om * u)
    k3z = SQRT2 * r * sin(pp)
    k3p = delta + lam * zz - (1.0 + 2.0 * k * zz - 3.0 * zz * zz) / (SQRT2 * r) * cos(pp)

    zz = z + h * (_A41 * k1z + _A42 * k2z + _A43 * k3z)
    pp = phi + h * (_A41 * k1p + _A42 * k2p + _A43 * k3p)
    om = 1.0 - zz * zz
    u = k - zz
    if om <= 0.0 or u <= 0.0:
        return None
    r = sqrt(om * u)
    k4z = SQRT2 * r * sin(pp)
    k4p = delta + lam * zz - (1.0 + 2.0 * k * zz - 3.0 * zz * zz) / (SQRT2 * r) * cos(pp)

    zz = z + h * (_A51 * k1z + _A52 * k2z + _A53 * k3z + _A54 * k4z)
    pp = phi + h * (_A51 * k1p + _A52 * k2p + _A53 * k3p + _A54 * k4p)
    om = 1.0 - zz * zz
    u = k - zz
    if om <= 0.0 or u <= 0.0:
        return None
    r = sqrt(om * u)
    k5z = SQRT2 * r * sin(pp)
    k5p = delta + lam * zz - (1.0 + 2.0 * k * zz - 3.0 * zz * zz) / (SQRT2 * r) * cos(pp)

    zz = z + h * (_A61 * k1z + _A62 * k2z + _A63 * k3z + _A64 * k4z + _A65 * k5z)
    pp = phi + h * (_A61 * k1p + _A62 * k2p + _A63 * k3p + _A64 * k4p + _A65 * k5p)
    om = 1.0 - zz * zz
    u = k - zz
    if om <= 0.0 or u <= 0.0:
        return None
    r = sqrt(om * u)
    k6z = SQRT2 * r * sin(pp)
    k6p = delta + lam * zz - (1.0 + 2.0 * k * zz - 3.0 * zz * zz) / (SQRT2 * r) * cos(pp)

    z_new = z + h * (_B1 * k1z + _B3 * k3z + _B4 * k4z + _B5 * k5z + _B6 * k6z)
    phi_new = phi + h * (_B1 * k1p + _B3 * k3p + _B4 * k4p + _B5 * k5p + _B6 * k6p)
    om = 1.0 - z_new * z_new
    u = k - z_new
    if om <= 0.0 or u <= 0.0:
        return None
    r = sqrt(om * u)
    c = cos(phi_new)
    k7z = SQRT2 * r * sin(phi_new)
    k7p = delta + lam * z_new - (1.0 + 2.0 * k * z_new - 3.0 * z_new * z_new) / (SQRT2 * r) * c

    err_z = h * (_E1 * k1z + _E3 * k3z + _E4 * k4z + _E5 * k5z + _E6 * k6z + _E7 * k7z)
    err_p = h * (_E1 * k1p + _E3 * k3p + _E4 * k4p + _E5 * k5p + _E6 * k6p + _E7 * k7p)
    e_new = (delta + 0.5 * lam * z_new) * z_new + SQRT2 * r * c
    return z_new, phi_new, k7z, k7p, err_z, err_p, e_new


def _energy_of(p: ModelParams, z: float, phi: float) -> float:
    return ((p.delta + 0.5 * p.lambda_ratio * z) * z
            + math.sqrt(2.0 * (1.0 - z * z) * (p.k - z)) * math.cos(phi))


def _initial_step(rhs, z: float, phi: float, f1, atol: float, rtol: float,
                  tau_max: float) -> float:
    sc_z = atol + rtol * abs(z)
    sc_p = atol + rtol * abs(phi)
    d0 = math.sqrt(0.5 * ((z / sc_z) ** 2 + (phi / sc_p) ** 2))
    d1 = math.sqrt(0.5 * ((f1[0] / sc_z) ** 2 + (f1[1] / sc_p) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, tau_max)
    try:
        f2 = rhs(z + h0 * f1[0], phi + h0 * f1[1])
    except _LeftDomain:
        return min(1e-6, tau_max)
    d2 = math.sqrt(0.5 * (((f2[0] - f1[0]) / sc_z) ** 2
                          + ((f2[1] - f1[1]) / sc_p) ** 2)) / h0
    if max(d1, d2) < 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, tau_max)


def integrate(p: ModelParams, x0: PhasePoint,
              cfg: IntegratorConfig | None = None) -> Trajectory:
    """Adaptive 5(4) integration of the flow from ``x0``.

    Samples every ``output_stride``-th accepted step plus the initial and
    final states; the maximum energy deviation from the initial value over
    all accepted steps is recorded as ``energy_drift``.  The run stops at
    ``tau_max`` (``completed``), when z enters ``boundary_margin`` of the
    singular set {-1, 1, k} (``boundary_hit``), or when the controller
    cannot hold the tolerance with a step above 1e-12 (``step_underflow``).
    """
    cfg = cfg or IntegratorConfig()
    if not strictly_admissible(p, x0):
        raise DomainError("initial condition is on or beyond the singular "
                          f"boundary: z0 = {x0.z}, k = {p.k}")
    rhs = _make_rhs(p)
    k_edge = p.k
    z, phi = x0.z, x0.phi
    tau = 0.0
    e0 = _energy_of(p, z, phi)
    drift = 0.0
    # The flow conserves H exactly, so each step's energy increment is pure
    # integration error.  Budgeting it per unit time bounds the total drift
    # linearly in tau instead of linearly in the step count.  The floor keeps
    # roundoff-level increments (independent of h) from starving the step.
    e_rate = 0.3 * (cfg.abs_tol + cfg.rel_tol * max(1.0, abs(e0)))
    e_floor = 64.0 * sys.float_info.epsilon * max(1.0, abs(e0))

    taus = [tau]
    zs = [z]
    phis = [phi]
    energies = [e0]

    def boundary_distance(zv: float) -> float:
        return min(1.0 - zv, zv + 1.0, k_edge - zv)

    if boundary_distance(z) < cfg.boundary_margin:
        return Trajectory(np.array(taus), np.array(zs), np.array(phis),
                          np.array(energies), 0.0, "boundary_hit")

    f1 = rhs(z, phi)
    h = _initial_step(rhs, z, phi, f1, cfg.abs_tol, cfg.rel_tol, cfg.tau_max)
    termination = "completed"
    n_accepted = 0
    pending = False  # unsampled accepted state

    def record(force: bool = False):
        nonlocal pending
        if pending and (force or n_accepted % cfg.output_stride == 0):
            taus.append(tau)
            zs.append(z)
            phis.append(phi)
            energies.append(e)
            pending = False

    e = e0
    delta, lam = p.delta, p.lambda_ratio
    abs_tol, rel_tol, tau_max = cfg.abs_tol, cfg.rel_tol, cfg.tau_max
    k1z, k1p = f1
    steps = 0
    while tau < tau_max:
        steps += 1
        if steps > _MAX_STEPS:
            raise RuntimeError("integrator exceeded maximum step count")
        at_end = h >= tau_max - tau
        if at_end:
            h = tau_max - tau
        attempt = _attempt_step(delta, lam, k_edge, z, phi, h, k1z, k1p)
        if attempt is None:
            h *= 0.5
            if h < _H_MIN:
                termination = ("boundary_hit"
                               if boundary_distance(z) < 1e-6
                               else "step_underflow")
                break
            continue
        z_new, phi_new, k7z, k7p, err_z, err_p, e_new = attempt

        sc_z = abs_tol + rel_tol * max(abs(z), abs(z_new))
        sc_p = abs_tol + rel_tol * max(abs(phi), abs(phi_new))
        # energy increment relative to its per-step budget scales like h^5,
        # same as the state error, so one controller handles both
        err = max(math.sqrt(0.5 * ((err_z / sc_z) ** 2
                                   + (err_p / sc_p) ** 2)),
                  abs(e_new - e) / max(e_rate * h, e_floor))
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < _H_MIN:
                termination = ("boundary_hit"
                               if boundary_distance(z) < 1e-6
                               else "step_underflow")
                break
            continue

        tau = tau_max if at_end else tau + h
        z, phi = z_new, phi_new
        k1z, k1p = k7z, k7p
        n_accepted += 1
        e = e_new
        drift = max(drift, abs(e - e0))
        pending = True

        if boundary_distance(z) < cfg.boundary_margin:
            termination = "boundary_hit"
            record(force=True)
            break
        if at_end:
            record(force=True)
            break
        record()
        if err == 0.0:
            h *= 5.0
        else:
            h *= min(5.0, max(0.2, 0.9 * err ** -0.2))

    record(force=True)
    return Trajectory(np.array(taus), np.array(zs), np.array(phis),
                      np.array(energies), drift, termination)


# ---------------------------------------------------------------------------
# level sets and phase classification
# ---------------------------------------------------------------------------

def _row_roots(p: ModelParams, energy: float, phis: np.ndarray,
               z_samples: int) -> list[np.ndarray]:
    """Solutions z of H(z, phi) = energy for every phi row, by vectorized
    sign-change bisection on [-1, min(k, 1)]."""
    z_hi = min(p.k, 1.0)
    zs = np.linspace(-1.0, z_hi, z_samples)
    f = _energy_values(p, zs[None, :], phis[:, None]) - energy
    sgn = np.sign(f)

    rows_out: list[list[float]] = [[] for _ in range(len(phis))]
    zero_r, zero_c = np.nonzero(f == 0.0)
    for r, c in zip(zero_r, zero_c):
        rows_out[r].append(float(zs[c]))

    rr, cc = np.nonzero(sgn[:, :-1] * sgn[:, 1:] < 0.0)
    if len(rr):
        a = zs[cc].copy()
        b = zs[cc + 1].copy()
        phi_b = phis[rr]
        fa = f[rr, cc].copy()
        for _ in range(60):
            m = 0.5 * (a + b)
            fm = _energy_values(p, m, phi_b) - energy
            go_left = (fm > 0.0) == (fa > 0.0)
            a = np.where(go_left, m, a)
            fa = np.where(go_left, fm, fa)
            b = np.where(go_left, b, m)
        mid = 0.5 * (a + b)
        for r, zv in zip(rr, mid):
            rows_out[r].append(float(zv))
    return [np.sort(np.array(row)) for row in rows_out]


def _trace_step(roots: np.ndarray, cur: float, jump_tol: float):
    if len(roots) == 0:
        return None
    j = int(np.argmin(np.abs(roots - cur)))
    if abs(roots[j] - cur) > jump_tol:
        return None
    return float(roots[j])


def _trace_component(p: ModelParams, energy: float, phis: np.ndarray,
                     rows: list[np.ndarray], z0: float, z_samples: int,
                     jump_tol: float) -> str:
    """Follow the level-set component through phi: 'wrapped', 'folded' or
    'lost' (no continuous continuation found even after local refinement)."""
    cur = z0
    for j in range(1, len(phis)):
        nxt = _trace_step(rows[j], cur, jump_tol)
        if nxt is None:
            # refine locally: steep segments can jump more than jump_tol
            # between coarse rows without the component actually ending
            sub = np.linspace(phis[j - 1], phis[j], 33)[1:]
            sub_rows = _row_roots(p, energy, sub, z_samples)
            ok = True
            for roots in sub_rows:
                if len(roots) == 0:
                    return "folded"
                step = _trace_step(roots, cur, jump_tol)
                if step is None:
                    ok = False
                    break
                cur = step
            if not ok:
                return "folded"
        else:
            cur = nxt
    return "wrapped" if abs(cur - z0) < 1e-6 else "lost"


def classify_phase(p: ModelParams, x0: PhasePoint, n_phi: int = 720,
                   z_samples: int = 2001,
                   cfg: IntegratorConfig | None = None,
                   trajectory: Trajectory | None = None) -> str:
    """Libration vs running phase for the trajectory through ``x0``.

    Geometry first: on the energy level set of ``x0``, scan a 2*pi phase
    grid and ask whether every phase admits a solution connected to ``x0``'s
    component.  A phase with no solution, or a component that folds back,
    means bounded phase; a component that wraps the cylinder means
    unbounded.  The verdict is confirmed dynamically by integrating and
    comparing the total winding against 4*pi; any disagreement (or an
    integration that cannot run to completion) returns ``undetermined``.
    """
    if not strictly_admissible(p, x0):
        raise DomainError("initial condition must be strictly admissible")
    energy = hamiltonian(p, x0)
    phis = x0.phi + np.linspace(0.0, 2.0 * math.pi, n_phi + 1)
    rows = _row_roots(p, energy, phis, z_samples)

    if any(len(r) == 0 for r in rows):
        geometric = "bounded"
    else:
        z_hi = min(p.k, 1.0)
        jump_tol = 0.05 * (z_hi + 1.0)
        outcome = _trace_component(p, energy, phis, rows, x0.z, z_samples,
                                   jump_tol)
        if outcome == "wrapped":
            geometric = "unbounded"
        elif outcome == "folded":
            geometric = "bounded"
        else:
            return "undetermined"

    if trajectory is None:
        cfg = cfg or IntegratorConfig(tau_max=200.0, output_stride=64)
        trajectory = integrate(p, x0, cfg)
    if trajectory.winding >= 4.0 * math.pi:
        dynamic = "unbounded"
    elif trajectory.termination == "completed":
        dynamic = "bounded"
    else:
        return "undetermined"
    return geometric if geometric == dynamic else "undetermined"


def level_curve(p: ModelParams, energy: float, n_phi: int = 721,
                z_samples: int = 2001,
                phi_range: tuple[float, float] = (0.0, 2.0 * math.pi)
                ) -> np.ndarray:
    """Points (phi, z) of the level set H = energy, ordered by phi.

    Returns an (n, 2) array; multiple z-solutions at one phi appear as
    separate rows.
    """
    phis = np.linspace(phi_range[0], phi_range[1], n_phi)
    rows = _row_roots(p, energy, phis, z_samples)
    pts = [(float(phi), float(z)) for phi, row in zip(phis, rows) for z in row]
    return np.array(pts).reshape(-1, 2)


def separatrix_energy(p: ModelParams, samples: int = 100_000
                      ) -> tuple[float, FixedPoint] | None:
    """Energy of the saddle dividing the oscillation families, with the
    saddle itself; None when no saddle exists (single-family regime)."""
    saddles = [f for f in find_fixed_points(p, samples=samples)
               if f.classification == "saddle"]
    if not saddles:
        return None
    best = min(saddles, key=lambda f: f.residual)
    return best.energy, best
