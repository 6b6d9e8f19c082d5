"""Energy function, exact derivatives and domain handling.

Derivative checks use central finite differences as the independent oracle;
reference energies come from arbitrary-precision re-evaluation with mpmath.
"""

import math

import mpmath as mp
import numpy as np
import pytest

from zphi import (
    DomainError,
    ModelParams,
    PhasePoint,
    PhysicalConfig,
    admissible,
    gradient,
    hamiltonian,
    hessian,
    strictly_admissible,
    to_model_params,
)

mp.mp.dps = 40


def mp_energy(delta, lam, k, z, phi):
    delta, lam, k, z, phi = map(mp.mpf, (delta, lam, k, z, phi))
    return ((delta + lam * z / 2) * z
            + mp.sqrt(2 * (1 - z ** 2) * (k - z)) * mp.cos(phi))


def fd_gradient(p, x, step=1e-6):
    dz = (hamiltonian(p, PhasePoint(x.z + step, x.phi))
          - hamiltonian(p, PhasePoint(x.z - step, x.phi))) / (2 * step)
    dphi = (hamiltonian(p, PhasePoint(x.z, x.phi + step))
            - hamiltonian(p, PhasePoint(x.z, x.phi - step))) / (2 * step)
    return dz, dphi


def fd_hessian(p, x, step=1e-6):
    gp = gradient(p, PhasePoint(x.z + step, x.phi))
    gm = gradient(p, PhasePoint(x.z - step, x.phi))
    zz = (gp.d_z - gm.d_z) / (2 * step)
    zphi = (gp.d_phi - gm.d_phi) / (2 * step)
    gp = gradient(p, PhasePoint(x.z, x.phi + step))
    gm = gradient(p, PhasePoint(x.z, x.phi - step))
    phiphi = (gp.d_phi - gm.d_phi) / (2 * step)
    return zz, zphi, phiphi


def random_points(n, seed, margin_frac=0.02):
    """Strictly admissible interior points over random parameter triples."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        delta = rng.uniform(-2.0, 2.0)
        lam = rng.uniform(0.0, 10.0)
        k = rng.uniform(0.05, 20.0)
        z_hi = min(k, 1.0)
        m = margin_frac * (z_hi + 1.0)
        z = rng.uniform(-1.0 + m, z_hi - m)
        phi = rng.uniform(-math.pi, 3.0 * math.pi)
        out.append((ModelParams(delta, lam, k), PhasePoint(z, phi)))
    return out


class TestModelReduction:
    def test_resonant_uncoupled_ensemble(self):
        cfg = PhysicalConfig(omega=5.0, omega_f=5.0, eta=0.0, lam=1.0,
                             n_qubits=100, total_excitations=5)
        p = to_model_params(cfg)
        assert p.delta == 0.0
        assert p.lambda_ratio == 0.0
        assert p.k == pytest.approx(0.1, rel=1e-15)

    def test_detuning_is_frequency_difference_over_coupling(self):
        cfg = PhysicalConfig(omega=3.0, omega_f=1.0, eta=0.0, lam=4.0,
                             n_qubits=10, total_excitations=1)
        assert to_model_params(cfg).delta == 0.5

    def test_large_ensemble_regime(self):
        cfg = PhysicalConfig(omega=1.0, omega_f=1.0, eta=6.0, lam=1.0,
                             n_qubits=2e6, total_excitations=1e7)
        p = to_model_params(cfg)
        assert p.lambda_ratio == 6.0
        assert p.k == 10.0

    def test_rejects_nonpositive_coupling(self):
        with pytest.raises(ValueError):
            PhysicalConfig(omega=1, omega_f=1, eta=0, lam=0.0,
                           n_qubits=10, total_excitations=1)
        with pytest.raises(ValueError):
            PhysicalConfig(omega=1, omega_f=1, eta=0, lam=-2.0,
                           n_qubits=10, total_excitations=1)

    def test_rejects_tiny_ensemble(self):
        with pytest.raises(ValueError):
            PhysicalConfig(omega=1, omega_f=1, eta=0, lam=1.0,
                           n_qubits=0.5, total_excitations=1)

    def test_params_must_be_finite(self):
        with pytest.raises(ValueError):
            ModelParams(math.nan, 0.0, 1.0)
        with pytest.raises(ValueError):
            ModelParams(0.0, math.inf, 1.0)


class TestHamiltonian:
    def test_flat_case_at_origin(self):
        p = ModelParams(0.0, 0.0, 2.0)
        assert hamiltonian(p, PhasePoint(0.0, 0.0)) == pytest.approx(2.0, abs=1e-15)

    def test_oscillatory_term_dies_at_full_inversion(self):
        p = ModelParams(1.0, 2.0, 1.0)
        for phi in (0.0, 0.37, math.pi, 5.1):
            assert hamiltonian(p, PhasePoint(1.0, phi)) == 2.0

    def test_against_arbitrary_precision(self):
        p = ModelParams(0.0, 6.0, 10.0)
        got = hamiltonian(p, PhasePoint(1.0 / 3.0, math.pi))
        want = float(mp_energy(0, 6, 10, mp.mpf(1) / 3, mp.pi))
        assert got == pytest.approx(want, rel=1e-14)
        assert got == pytest.approx(-3.8122, abs=5e-5)

    def test_phase_symmetries(self):
        for p, x in random_points(50, seed=11):
            h = hamiltonian(p, x)
            assert hamiltonian(p, PhasePoint(x.z, -x.phi)) == pytest.approx(h, rel=1e-15, abs=1e-15)
            two_pi = 2.0 * math.pi
            assert hamiltonian(p, PhasePoint(x.z, x.phi + two_pi)) == pytest.approx(h, rel=1e-12, abs=1e-12)

    def test_boundary_values_exact(self):
        p = ModelParams(0.7, 3.0, 0.25)
        z = 0.25  # z = k: empty field
        assert hamiltonian(p, PhasePoint(z, 1.23)) == (p.delta + 0.5 * p.lambda_ratio * z) * z
        p2 = ModelParams(-0.4, 2.0, 5.0)
        assert hamiltonian(p2, PhasePoint(1.0, 0.8)) == (p2.delta + 0.5 * p2.lambda_ratio) * 1.0

    def test_domain_slack_clamps_then_rejects(self):
        p = ModelParams(0.0, 0.0, 0.5)
        z = 0.5 + 1e-13  # inside the slack band
        h = hamiltonian(p, PhasePoint(z, 0.0))
        assert h == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(DomainError):
            hamiltonian(p, PhasePoint(0.5 + 1e-9, 0.0))


class TestGradient:
    def test_flat_case_value(self):
        p = ModelParams(0.0, 0.0, 2.0)
        g = gradient(p, PhasePoint(0.0, 0.0))
        assert g.d_z == pytest.approx(-0.5, abs=1e-15)
        assert g.d_phi == 0.0
        fd_z, fd_phi = fd_gradient(p, PhasePoint(0.0, 0.0))
        assert g.d_z == pytest.approx(fd_z, abs=1e-8)
        assert g.d_phi == pytest.approx(fd_phi, abs=1e-8)

    def test_phi_derivative_vanishes_on_branch_lines(self):
        for p, x in random_points(20, seed=3):
            assert gradient(p, PhasePoint(x.z, 0.0)).d_phi == 0.0
            # float pi is not exactly pi, so sin leaves ~1e-16 residue
            assert abs(gradient(p, PhasePoint(x.z, math.pi)).d_phi) < 1e-14

    def test_stationary_at_quadratic_root(self):
        # with no detuning and no intra-coupling, stationarity reduces to
        # 3 z^2 - 2 k z - 1 = 0; the admissible root for k = 0.1:
        p = ModelParams(0.0, 0.0, 0.1)
        assert abs(gradient(p, PhasePoint(-0.544978, 0.0)).d_z) < 1e-5
        z = (p.k - math.sqrt(p.k * p.k + 3.0)) / 3.0
        assert abs(gradient(p, PhasePoint(z, 0.0)).d_z) < 1e-12

    def test_matches_finite_differences(self):
        for p, x in random_points(1000, seed=42):
            g = gradient(p, x)
            fd_z, fd_phi = fd_gradient(p, x)
            assert g.d_z == pytest.approx(fd_z, abs=1e-6)
            assert g.d_phi == pytest.approx(fd_phi, abs=1e-6)

    def test_rejects_singular_boundary(self):
        p = ModelParams(0.0, 0.0, 0.5)
        with pytest.raises(DomainError):
            gradient(p, PhasePoint(0.5, 0.0))
        with pytest.raises(DomainError):
            gradient(p, PhasePoint(1.0, 0.0))


class TestHessian:
    def test_cross_term_vanishes_on_branch_lines(self):
        for p, x in random_points(20, seed=5):
            assert hessian(p, PhasePoint(x.z, 0.0)).zphi == 0.0
            assert abs(hessian(p, PhasePoint(x.z, math.pi)).zphi) < 1e-14

    def test_phiphi_value(self):
        p = ModelParams(0.0, 0.0, 2.0)
        assert hessian(p, PhasePoint(0.0, 0.0)).phiphi == pytest.approx(-2.0, abs=1e-15)

    def test_reference_point_against_finite_differences(self):
        p = ModelParams(0.0, 6.0, 10.0)
        x = PhasePoint(1.0 / 3.0, math.pi)
        hes = hessian(p, x)
        fd = fd_hessian(p, x)
        assert hes.zz == pytest.approx(fd[0], abs=1e-6)
        assert hes.zphi == pytest.approx(fd[1], abs=1e-6)
        assert hes.phiphi == pytest.approx(fd[2], abs=1e-6)

    def test_matches_finite_differences(self):
        for p, x in random_points(1000, seed=43):
            hes = hessian(p, x)
            fd = fd_hessian(p, x)
            assert hes.zz == pytest.approx(fd[0], abs=1e-5)
            assert hes.zphi == pytest.approx(fd[1], abs=1e-5)
            assert hes.phiphi == pytest.approx(fd[2], abs=1e-5)


class TestAdmissibility:
    def test_examples(self):
        assert not admissible(ModelParams(0, 0, 0.1), PhasePoint(0.5, 0.0))
        assert admissible(ModelParams(0, 0, 10.0), PhasePoint(0.99, 0.0))
        # empty field boundary counts as admissible
        assert admissible(ModelParams(0, 0, 1.0), PhasePoint(1.0, 0.0))

    def test_strict_admissibility_excludes_edges(self):
        p = ModelParams(0, 0, 1.0)
        assert not strictly_admissible(p, PhasePoint(1.0, 0.0))
        assert strictly_admissible(p, PhasePoint(0.9, 0.0))

    def test_phase_point_validation(self):
        with pytest.raises(ValueError):
            PhasePoint(1.5, 0.0)
        with pytest.raises(ValueError):
            PhasePoint(0.0, math.nan)
        PhasePoint(-1.0, 100.0)  # unwrapped phase is fine
