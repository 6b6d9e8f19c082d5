"""Integrator correctness, energy audit, boundary handling and phase
classification.

Oracles: the flow must equal (-dH/dphi, +dH/dz) of the exact derivatives;
conserved energy and time-reversal symmetry bound the global error; the
level-set geometry decides libration vs running phase independently of the
integration.
"""

import math

import numpy as np
import pytest

from zphi import (
    DomainError,
    IntegratorConfig,
    ModelParams,
    PhasePoint,
    classify_phase,
    eom,
    find_fixed_points,
    gradient,
    hamiltonian,
    integrate,
    level_curve,
    separatrix_energy,
)
from zphi.core import _energy_values


def random_cases(n, seed, margin=0.05):
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(n):
        lam = rng.uniform(0.0, 10.0)
        delta = rng.uniform(-1.0, 1.0) / max(lam, 1.0)
        k = rng.uniform(0.05, 20.0)
        z_hi = min(k, 1.0)
        z0 = rng.uniform(-1.0 + margin, z_hi - margin * (z_hi + 1.0))
        phi0 = rng.uniform(0.0, 2.0 * math.pi)
        cases.append((ModelParams(delta, lam, k), PhasePoint(z0, phi0)))
    return cases


class TestEquationsOfMotion:
    def test_population_frozen_at_zero_phase(self):
        for p, x in random_cases(20, seed=1):
            dz, _ = eom(p, PhasePoint(x.z, 0.0))
            assert dz == 0.0

    def test_fixed_point_is_stationary(self):
        p = ModelParams(0.0, 0.0, 0.1)
        # rounded root as quoted to six digits
        dz, dphi = eom(p, PhasePoint(-0.544978, math.pi))
        assert abs(dz) < 1e-5 and abs(dphi) < 1e-5
        z = (p.k - math.sqrt(p.k * p.k + 3.0)) / 3.0
        dz, dphi = eom(p, PhasePoint(z, math.pi))
        assert abs(dz) < 1e-12 and abs(dphi) < 1e-12

    def test_quarter_phase_values(self):
        dz, dphi = eom(ModelParams(0.0, 0.0, 2.0), PhasePoint(0.0, math.pi / 2))
        assert dz == pytest.approx(2.0, rel=1e-15)
        assert abs(dphi) < 1e-12  # cos(pi/2) rounds to ~6e-17

    def test_matches_energy_derivatives(self):
        for p, x in random_cases(100, seed=2):
            dz, dphi = eom(p, x)
            g = gradient(p, x)
            assert dz == -g.d_phi
            assert dphi == g.d_z


class TestIntegrator:
    def test_equilibrium_stays_put(self):
        p = ModelParams(0.0, 6.0, 10.0)
        for f in find_fixed_points(p):
            traj = integrate(p, PhasePoint(f.z_star, f.phi_star),
                             IntegratorConfig(tau_max=50.0, output_stride=50))
            assert traj.termination == "completed"
            assert float(np.max(np.abs(traj.zs - f.z_star))) < 1e-6

    def test_energy_conserved_on_reference_run(self):
        traj = integrate(ModelParams(0.0, 0.0, 10.0), PhasePoint(0.5, 0.0),
                         IntegratorConfig(tau_max=100.0, output_stride=16))
        assert traj.termination == "completed"
        assert traj.energy_drift < 1e-8 * max(1.0, abs(traj.energies[0]))
        assert traj.taus[-1] == 100.0

    def test_samples_monotone_and_admissible(self):
        for p, x in random_cases(10, seed=3):
            traj = integrate(p, x, IntegratorConfig(tau_max=20.0,
                                                    output_stride=4))
            assert np.all(np.diff(traj.taus) > 0.0)
            assert np.all(p.k - traj.zs >= 0.0)
            assert np.all(np.abs(traj.zs) <= 1.0)
            assert np.all(np.isfinite(traj.energies))

    def test_boundary_hit_is_tagged_not_fatal(self):
        # detuned, uncoupled: the level set through (0, pi/3) touches z = k
        p = ModelParams(1.0, 0.0, 0.5)
        traj = integrate(p, PhasePoint(0.0, math.pi / 3),
                         IntegratorConfig(tau_max=50.0))
        assert traj.termination == "boundary_hit"
        assert p.k - traj.zs[-1] < 1e-6
        assert np.all(p.k - traj.zs >= 0.0)

    def test_time_reversal_roundtrip(self):
        cfg = IntegratorConfig(tau_max=20.0, output_stride=10 ** 9)
        for p, x in random_cases(10, seed=4):
            fwd = integrate(p, x, cfg)
            if fwd.termination != "completed":
                continue
            back = integrate(p, PhasePoint(float(fwd.zs[-1]),
                                           float(-fwd.phis[-1])), cfg)
            assert abs(float(back.zs[-1]) - x.z) < 1e-6
            assert abs(float(back.phis[-1]) + x.phi) < 1e-6

    def test_tolerance_halving_convergence(self):
        p = ModelParams(0.3, 4.0, 7.0)
        x = PhasePoint(0.2, 0.5)
        loose = integrate(p, x, IntegratorConfig(tau_max=10.0, abs_tol=1e-9,
                                                 rel_tol=1e-9,
                                                 output_stride=10 ** 9))
        tight = integrate(p, x, IntegratorConfig(tau_max=10.0, abs_tol=5e-10,
                                                 rel_tol=5e-10,
                                                 output_stride=10 ** 9))
        assert abs(float(loose.zs[-1] - tight.zs[-1])) < 1e-8
        assert abs(float(loose.phis[-1] - tight.phis[-1])) < 1e-8

    def test_output_stride_thins_samples(self):
        p = ModelParams(0.0, 0.0, 10.0)
        dense = integrate(p, PhasePoint(0.5, 0.0),
                          IntegratorConfig(tau_max=10.0, output_stride=1))
        thin = integrate(p, PhasePoint(0.5, 0.0),
                         IntegratorConfig(tau_max=10.0, output_stride=10))
        assert len(thin.taus) < len(dense.taus)
        assert thin.taus[-1] == dense.taus[-1] == 10.0

    def test_rejects_singular_start(self):
        with pytest.raises(DomainError):
            integrate(ModelParams(0.0, 0.0, 0.5), PhasePoint(0.5, 0.0))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            IntegratorConfig(abs_tol=0.0)
        with pytest.raises(ValueError):
            IntegratorConfig(tau_max=-1.0)
        with pytest.raises(ValueError):
            IntegratorConfig(output_stride=0)
        with pytest.raises(ValueError):
            IntegratorConfig(boundary_margin=1e-14)


class TestClassifyPhase:
    def test_near_center_is_bounded(self):
        p = ModelParams(0.0, 0.0, 10.0)
        z_center = (p.k - math.sqrt(p.k * p.k + 3.0)) / 3.0
        assert classify_phase(p, PhasePoint(z_center + 1e-3, 0.0)) == "bounded"

    def test_positive_energy_level_set_cannot_reach_opposite_phase(self):
        # with no detuning and no intra-coupling the energy is
        # sqrt(...) * cos(phi) >= -sqrt(...), so a positive-energy level set
        # has no solution at phi = pi: libration, whatever the start point
        p = ModelParams(0.0, 0.0, 0.1)
        x0 = PhasePoint(0.09, 0.0)
        e = hamiltonian(p, x0)
        assert e > 0.0
        zs = np.linspace(-1.0, p.k, 4001)
        assert float(np.nanmax(_energy_values(p, zs, math.pi))) < e
        assert classify_phase(p, x0) == "bounded"

    def test_running_phase_detected(self):
        # strong intra-coupling, low excitation: most starts wind
        p = ModelParams(0.0, 6.0, 0.1)
        x0 = PhasePoint(-0.5, 0.0)
        verdict = classify_phase(p, x0)
        traj = integrate(p, x0, IntegratorConfig(tau_max=200.0,
                                                 output_stride=64))
        assert traj.winding >= 4.0 * math.pi  # independent dynamic check
        assert verdict == "unbounded"

    def test_invariant_under_full_phase_turn(self):
        p = ModelParams(0.0, 6.0, 0.1)
        a = classify_phase(p, PhasePoint(-0.5, 0.0))
        b = classify_phase(p, PhasePoint(-0.5, 2.0 * math.pi))
        assert a == b

    def test_huge_excitation_ratio_pair_is_bounded(self):
        # k -> infinity restores the full sphere; symmetric starts give
        # librations (the dynamics there run ~sqrt(2k) fast, so the
        # confirmation window is a few oscillation periods, not tau = 200)
        p = ModelParams(0.0, 0.0, 1e6)
        cfg = IntegratorConfig(tau_max=0.05, output_stride=64)
        for z0 in (0.5, -0.5):
            assert classify_phase(p, PhasePoint(z0, 0.0), cfg=cfg) == "bounded"

    def test_reuses_precomputed_trajectory(self):
        p = ModelParams(0.0, 0.0, 10.0)
        x0 = PhasePoint(0.5, 0.0)
        traj = integrate(p, x0, IntegratorConfig(tau_max=200.0,
                                                 output_stride=64))
        assert classify_phase(p, x0, trajectory=traj) == "bounded"


class TestSeparatrix:
    def test_absent_in_single_family_regime(self):
        assert separatrix_energy(ModelParams(0.0, 0.0, 0.1)) is None

    def test_saddle_found_in_bistable_regime(self):
        result = separatrix_energy(ModelParams(0.0, 6.0, 10.0))
        assert result is not None
        energy, saddle = result
        assert saddle.classification == "saddle"
        assert saddle.phi_star == 0.0
        assert energy == pytest.approx(saddle.energy)

    def test_straddling_energies_split_into_families(self):
        p = ModelParams(0.0, 6.0, 10.0)
        e_s, saddle = separatrix_energy(p)
        maxima = [f for f in find_fixed_points(p)
                  if f.classification == "maximum"]
        z_lo_center = min(f.z_star for f in maxima)
        z_hi_center = max(f.z_star for f in maxima)
        assert z_lo_center < saddle.z_star < z_hi_center

        # two starts at energy e_s + 1e-3 on either side of the saddle
        target = e_s + 1e-3
        ics = []
        for lo, hi in ((z_lo_center, saddle.z_star),
                       (saddle.z_star, z_hi_center)):
            a, b = lo, hi
            fa = hamiltonian(p, PhasePoint(a, 0.0)) - target
            for _ in range(80):
                m = 0.5 * (a + b)
                fm = hamiltonian(p, PhasePoint(m, 0.0)) - target
                if (fm > 0) == (fa > 0):
                    a, fa = m, fm
                else:
                    b = m
            ics.append(0.5 * (a + b))
        cfg = IntegratorConfig(tau_max=100.0, output_stride=4)
        low_family = integrate(p, PhasePoint(ics[0], 0.0), cfg)
        high_family = integrate(p, PhasePoint(ics[1], 0.0), cfg)
        assert float(np.max(low_family.zs)) < saddle.z_star
        assert float(np.min(high_family.zs)) > saddle.z_star

    def test_level_curve_passes_through_saddle(self):
        p = ModelParams(0.0, 6.0, 10.0)
        e_s, saddle = separatrix_energy(p)
        curve = level_curve(p, e_s)
        assert len(curve) > 0
        # the saddle itself is a tangency of the level set, invisible to a
        # sign-change scan; nearby rows must still approach it to within the
        # X-branch spread over one phi grid cell
        gap = np.min(np.abs(curve[:, 1] - saddle.z_star)
                     + np.abs(np.mod(curve[:, 0], 2 * math.pi)
                              - saddle.phi_star))
        assert gap < 0.05
