"""Dimensionless mean-field model of two condensate modes exchanging
excitations with one bosonic field mode.

The state lives on the phase cylinder ``(z, phi)``: ``z`` is the fractional
population difference between the two modes and ``phi`` the total phase.
With dimensionless detuning ``delta``, coupling ratio ``lambda_ratio`` and
excitation ratio ``k``, the conserved energy (in units of
``hbar * n_qubits * lam / 2``) is

    H(z, phi) = (delta + lambda_ratio * z / 2) * z
                + sqrt(2 * (1 - z^2) * (k - z)) * cos(phi)

The square root ties the accessible part of the cylinder to ``k``: the field
occupation ``(n_qubits / 2) * (k - z)`` may not go negative, so the domain is
``|z| <= 1`` together with ``z <= k``.

All first and second derivatives are exact closed forms; finite differences
appear only in the test suite as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SQRT2 = math.sqrt(2.0)

# Round-off slack at the empty-field boundary: k - z in [-EPS_DOMAIN, 0) is
# clamped onto the boundary, anything lower is rejected.
EPS_DOMAIN = 1e-12


class DomainError(ValueError):
    """A phase-space point left the admissible region of the model."""


@dataclass(frozen=True)
class PhysicalConfig:
    """Dimensionful parameters of one experimental configuration.

    Frequencies and couplings are angular frequencies in rad/s; ``n_qubits``
    is the condensate size and ``total_excitations`` the conserved number of
    combined field plus mode excitations (real-valued in mean field).
    """

    omega: float
    omega_f: float
    eta: float
    lam: float
    n_qubits: float
    total_excitations: float

    def __post_init__(self):
        for name in ("omega", "omega_f", "eta", "lam", "n_qubits",
                     "total_excitations"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.lam <= 0.0:
            raise ValueError("field coupling lam must be strictly positive")
        if self.n_qubits < 1.0:
            raise ValueError("n_qubits must be at least 1")


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless parameter triple (delta, lambda_ratio, k)."""

    delta: float
    lambda_ratio: float
    k: float

    def __post_init__(self):
        for name in ("delta", "lambda_ratio", "k"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class PhasePoint:
    """Point on the phase cylinder.

    ``phi`` is stored unwrapped; reduction mod 2*pi happens only when
    reporting, so winding information survives.
    """

    z: float
    phi: float

    def __post_init__(self):
        if not (math.isfinite(self.z) and math.isfinite(self.phi)):
            raise ValueError("z and phi must be finite")
        if abs(self.z) > 1.0:
            raise ValueError(f"z = {self.z} outside [-1, 1]")


class Gradient(NamedTuple):
    d_z: float
    d_phi: float


class Hessian(NamedTuple):
    zz: float
    zphi: float
    phiphi: float


def to_model_params(cfg: PhysicalConfig) -> ModelParams:
    """Reduce a physical configuration to the dimensionless triple.

    delta = (omega - omega_f) / lam, lambda_ratio = eta / lam,
    k = 2 * total_excitations / n_qubits.
    """
    return ModelParams(
        delta=(cfg.omega - cfg.omega_f) / cfg.lam,
        lambda_ratio=cfg.eta / cfg.lam,
        k=2.0 * cfg.total_excitations / cfg.n_qubits,
    )


def admissible(p: ModelParams, x: PhasePoint) -> bool:
    """True iff ``|z| <= 1`` and ``k - z >= 0`` (field occupation >= 0)."""
    return abs(x.z) <= 1.0 and p.k - x.z >= 0.0


def strictly_admissible(p: ModelParams, x: PhasePoint,
                        margin: float = EPS_DOMAIN) -> bool:
    """True when ``x`` keeps a positive distance from every singular edge."""
    return (p.k - x.z > margin) and (abs(x.z) < 1.0 - margin)


def hamiltonian(p: ModelParams, x: PhasePoint) -> float:
    """Energy at ``x`` in units of ``hbar * n_qubits * lam / 2``.

    Raises :class:`DomainError` when ``k - z`` is below ``-EPS_DOMAIN``;
    values inside the slack band are clamped onto the boundary, where the
    square-root term vanishes exactly.
    """
    u = p.k - x.z
    if u < -EPS_DOMAIN:
        raise DomainError(f"k - z = {u} < 0: field occupation negative")
    u = max(u, 0.0)
    osc = math.sqrt(2.0 * (1.0 - x.z * x.z) * u)
    return (p.delta + 0.5 * p.lambda_ratio * x.z) * x.z + osc * math.cos(x.phi)


def gradient(p: ModelParams, x: PhasePoint) -> Gradient:
    """Exact first derivatives (dH/dz, dH/dphi).

    ``x`` must be strictly admissible: both derivatives contain
    ``sqrt((1 - z^2)(k - z))`` in a denominator or prefactor that becomes
    singular on the boundary.
    """
    if not strictly_admissible(p, x):
        raise DomainError(
            f"point (z={x.z}) too close to singular boundary for derivatives")
    z = x.z
    root = math.sqrt((1.0 - z * z) * (p.k - z))
    d_z = (p.delta + p.lambda_ratio * z
           - (1.0 + 2.0 * p.k * z - 3.0 * z * z) / (SQRT2 * root)
           * math.cos(x.phi))
    d_phi = -SQRT2 * root * math.sin(x.phi)
    return Gradient(d_z, d_phi)


def hessian(p: ModelParams, x: PhasePoint) -> Hessian:
    """Exact second derivatives (H_zz, H_zphi, H_phiphi).

    Written via s(z) = 2 (1 - z^2)(k - z) and S = sqrt(s):
    H_zz = lambda_ratio + S'' cos(phi), H_zphi = -S' sin(phi),
    H_phiphi = -S cos(phi).
    """
    if not strictly_admissible(p, x):
        raise DomainError(
            f"point (z={x.z}) too close to singular boundary for derivatives")
    z = x.z
    s = 2.0 * (1.0 - z * z) * (p.k - z)
    sp = -2.0 * (1.0 + 2.0 * p.k * z - 3.0 * z * z)
    spp = 12.0 * z - 4.0 * p.k
    big_s = math.sqrt(s)
    big_sp = sp / (2.0 * big_s)
    big_spp = spp / (2.0 * big_s) - sp * sp / (4.0 * s * big_s)
    cos_phi = math.cos(x.phi)
    return Hessian(
        zz=p.lambda_ratio + big_spp * cos_phi,
        zphi=-big_sp * math.sin(x.phi),
        phiphi=-big_s * cos_phi,
    )


# ---------------------------------------------------------------------------
# vectorized internals shared by the scanning / gridding modules
# ---------------------------------------------------------------------------

def _energy_values(p: ModelParams, z, phi):
    """H on broadcast arrays; NaN wherever the point is out of domain."""
    z = np.asarray(z, dtype=float)
    phi = np.asarray(phi, dtype=float)
    arg = 2.0 * (1.0 - z * z) * (p.k - z)
    with np.errstate(invalid="ignore"):
        osc = np.sqrt(arg)
    return (p.delta + 0.5 * p.lambda_ratio * z) * z + osc * np.cos(phi)


def _line_slope(p: ModelParams, z, cos_phi: float):
    """dH/dz along a fixed-phase line with cos(phi) = cos_phi (+1 or -1).

    Diverges at z in {-1, 1, k}; NaN outside the domain.
    """
    z = np.asarray(z, dtype=float)
    arg = (1.0 - z * z) * (p.k - z)
    with np.errstate(invalid="ignore", divide="ignore"):
        slope = (p.delta + p.lambda_ratio * z
                 - cos_phi * (1.0 + 2.0 * p.k * z - 3.0 * z * z)
                 / (SQRT2 * np.sqrt(arg)))
    return slope


def _line_curvature(p: ModelParams, z, cos_phi: float):
    """d2H/dz2 along a fixed-phase line; NaN/inf on the singular edges."""
    z = np.asarray(z, dtype=float)
    s = 2.0 * (1.0 - z * z) * (p.k - z)
    sp = -2.0 * (1.0 + 2.0 * p.k * z - 3.0 * z * z)
    spp = 12.0 * z - 4.0 * p.k
    with np.errstate(invalid="ignore", divide="ignore"):
        big_s = np.sqrt(s)
        curv = (p.lambda_ratio
                + cos_phi * (spp / (2.0 * big_s) - sp * sp / (4.0 * s * big_s)))
    return curv
