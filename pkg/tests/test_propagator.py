import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import landau_drive as ld
from landau_drive.errors import TruncationError, TruncationWarning


@pytest.fixture
def rotating(natural):
    """Moderate off-resonant drive with known closed forms."""
    e0, nu, t = 0.16, 0.8, 10.0
    return ld.assemble(natural, ld.RotatingField(e0, nu), t, dim=64), e0, nu, t


class TestAssemble:
    def test_zero_field(self, natural):
        p = ld.assemble(natural, ld.ZeroField(), 7.0, dim=16)
        assert p.displacement == 0 and p.u == 0
        assert p.beta == 0 and p.gamma == 0
        assert_allclose(p.j_op.matrix, np.eye(16))
        assert_allclose(p.dynamical_phases, -(np.arange(16) + 0.5) * 7.0)

    def test_time_zero(self, natural):
        p = ld.assemble(natural, ld.RotatingField(0.2, 0.9), 0.0, dim=8)
        assert p.u == 0 and p.displacement == 0
        assert_allclose(p.j_op.matrix, np.eye(8))

    def test_rotating_closed_forms(self, rotating, natural):
        p, e0, nu, t = rotating
        r0 = e0 / nu
        d = nu - 1.0
        assert p.displacement == pytest.approx(r0 * (np.exp(-1j * nu * t) - 1))
        assert p.u == pytest.approx((-r0 * nu / 2) * (np.exp(1j * d * t) - 1) / (1j * d))
        assert p.beta == pytest.approx(0.5 * r0**2 * (nu * t - math.sin(nu * t)))
        assert p.gamma == pytest.approx(
            (r0**2 / 2) * (nu / (1 - nu)) ** 2 * ((1 - nu) * t - math.sin((1 - nu) * t))
        )
        assert p.provenance == "closed-form"

    def test_amplitude_mapping_sign(self, rotating, natural):
        p, *_ = rotating
        assert p.alpha.alpha == pytest.approx(-np.conj(p.u) * natural.k)

    def test_resonance_pure_displacement(self, natural):
        e0, t = 0.1, 12.0
        p = ld.assemble(natural, ld.RotatingField(e0, 1.0), t, dim=48)
        r0 = e0 / 1.0
        assert p.u == pytest.approx(-r0 * t / 2.0, rel=1e-12)
        assert p.gamma == pytest.approx(0.0, abs=1e-12)
        # J carries no extra phase: it is exactly D(alpha)
        d_ref = ld.displacement_matrix(p.alpha, 48)
        assert_allclose(p.j_op.matrix, d_ref.matrix, atol=1e-14)

    def test_default_dimension_rule(self, natural):
        p = ld.assemble(natural, ld.RotatingField(0.1, 1.0), 2.0)
        assert p.dim == ld.suggested_dimension(p.alpha)

    def test_negative_time_rejected(self, natural):
        with pytest.raises(ValueError):
            ld.assemble(natural, ld.ZeroField(), -1.0)


class TestUnitScaleInvariance:
    def test_dimensionless_outputs_match_across_unit_systems(self, natural):
        # the same dimensionless drive expressed in an arbitrary consistent
        # unit system must reproduce beta, gamma, |uk|, and all transition
        # probabilities exactly
        weird = ld.PhysicalSystem(charge=2.0, magnetic_field=3.0, mass=5.0,
                                  hbar=7.0, c=11.0)
        scales = weird.internal_scales()
        nu_int, e_int, t_int = 0.8, 0.16, 10.0
        w_nat = ld.RotatingField(e_int, nu_int)
        w_wrd = ld.RotatingField(e_int * scales.field, nu_int / scales.time)
        p_nat = ld.assemble(natural, w_nat, t_int, dim=48)
        p_wrd = ld.assemble(weird, w_wrd, t_int * scales.time, dim=48)
        assert p_wrd.beta == pytest.approx(p_nat.beta, rel=1e-12)
        assert p_wrd.gamma == pytest.approx(p_nat.gamma, rel=1e-12)
        assert abs(p_wrd.u) * weird.k == pytest.approx(
            abs(p_nat.u) * natural.k, rel=1e-12
        )
        assert p_wrd.displacement / weird.l_b == pytest.approx(
            p_nat.displacement / natural.l_b, rel=1e-12
        )
        assert_allclose(
            ld.transition_probabilities(p_wrd, 2),
            ld.transition_probabilities(p_nat, 2),
            atol=1e-13,
        )


class TestJMatrixElement:
    def test_zero_drive_is_identity(self, natural):
        p = ld.assemble(natural, ld.ZeroField(), 3.0, dim=12)
        assert ld.j_matrix_element(p, 2, 2) == 1.0
        assert ld.j_matrix_element(p, 1, 3) == 0.0

    def test_vacuum_element(self, rotating, natural):
        p, *_ = rotating
        x = (abs(p.u) * natural.k) ** 2
        expected = np.exp(1j * p.gamma) * math.exp(-x / 2.0)
        assert ld.j_matrix_element(p, 0, 0) == pytest.approx(expected, rel=1e-12)

    def test_against_matrix_exponential_at_larger_dim(self, rotating):
        p, *_ = rotating
        n_big = p.dim + 32
        a, ad = ld.ladder_ops(n_big)
        gen = ld.TruncatedOperator(
            p.alpha.alpha * ad.matrix - np.conj(p.alpha.alpha) * a.matrix
        )
        ref = np.exp(1j * p.gamma) * ld.matrix_exponential(gen).matrix
        for m, n in ((0, 0), (3, 1), (2, 6), (10, 10)):
            assert ld.j_matrix_element(p, m, n) == pytest.approx(
                complex(ref[m, n]), abs=1e-12
            )

    def test_unhealthy_index_rejected(self, rotating):
        p, *_ = rotating
        h = ld.healthy_dim(p)
        with pytest.raises(TruncationError):
            ld.j_matrix_element(p, h, 0)
        with pytest.raises(IndexError):
            ld.j_matrix_element(p, -1, 0)
        with pytest.raises(IndexError):
            ld.j_matrix_element(p, 0, p.dim)

    def test_healthy_dim_rule(self, rotating):
        p, *_ = rotating
        expected = p.dim - math.ceil(4 * p.alpha.mean_level + 8)
        assert ld.healthy_dim(p) == expected


class TestTransitionProbabilities:
    def test_zero_drive(self, natural):
        p = ld.assemble(natural, ld.ZeroField(), 5.0, dim=12)
        assert_allclose(ld.transition_probabilities(p, 3), np.eye(12)[3])

    def test_ground_state_survival(self, rotating, natural):
        p, *_ = rotating
        x = (abs(p.u) * natural.k) ** 2
        assert ld.transition_probabilities(p, 0)[0] == pytest.approx(math.exp(-x))

    def test_poisson_row_from_vacuum(self, rotating, natural):
        p, *_ = rotating
        x = (abs(p.u) * natural.k) ** 2
        probs = ld.transition_probabilities(p, 0)
        ms = np.arange(12)
        expected = np.exp(-x) * x**ms / np.array([math.factorial(m) for m in ms])
        assert_allclose(probs[:12], expected, atol=1e-12)

    def test_rows_sum_to_one(self, natural):
        p = ld.assemble(natural, ld.RotatingField(0.12, 0.9), 8.0, dim=64)
        for n in (0, 3, 10):
            assert ld.transition_probabilities(p, n).sum() == pytest.approx(1.0, abs=1e-8)

    def test_detailed_balance_symmetry(self, rotating):
        p, *_ = rotating
        h = ld.healthy_dim(p)
        probs = np.abs(p.j_op.matrix) ** 2
        assert_allclose(probs[:h, :h], probs[:h, :h].T, atol=1e-12)

    def test_phase_irrelevance(self, rotating, natural):
        # rebuilding J with perturbed geometric phases moves no probability
        p, *_ = rotating
        base = ld.transition_probabilities(p, 2)
        shifted = ld.FactorizedPropagator(
            system=p.system, time=p.time, displacement=p.displacement,
            beta=p.beta + 0.37, u=p.u, gamma=p.gamma + 1.1, alpha=p.alpha,
            j_op=ld.TruncatedOperator(
                np.exp(1j * (p.gamma + 1.1)) * ld.displacement_matrix(p.alpha, p.dim).matrix,
                unitary=True,
            ),
            provenance=p.provenance,
        )
        assert_allclose(ld.transition_probabilities(shifted, 2), base, atol=1e-14)

    def test_unhealthy_level_rejected(self, rotating):
        p, *_ = rotating
        with pytest.raises(TruncationError):
            ld.transition_probabilities(p, ld.healthy_dim(p))


class TestAdiabaticEstimates:
    def test_ground_state_has_no_lower_level(self, natural):
        down, up = ld.adiabatic_estimates(natural, 0, 0.01)
        assert down == 0.0
        assert up == pytest.approx((natural.k * 0.01) ** 2)

    def test_exact_vs_estimate_small_drive(self, natural):
        # k|u| = 1e-2, n = 3: leading-order formulas hold to 1e-3
        u = 1e-2 / natural.k
        n = 3
        down_est, up_est = ld.adiabatic_estimates(natural, n, u)
        alpha = ld.displacement_argument(natural, u)
        d = ld.displacement_matrix(alpha, 64)
        down = abs(d.matrix[n - 1, n]) ** 2
        up = abs(d.matrix[n + 1, n]) ** 2
        assert abs(down - down_est) / down_est < 1e-3
        assert abs(up - up_est) / up_est < 1e-3

    def test_negative_level_rejected(self, natural):
        with pytest.raises(ValueError):
            ld.adiabatic_estimates(natural, -1, 0.1)

    def test_drive_strength_coefficient_si(self, electron_si):
        coeff = ld.drive_strength_coefficient(electron_si, 1000.0)
        assert coeff == pytest.approx(1.46e-5, rel=0.02)

    def test_drive_strength_coefficient_gaussian_equivalence(self, electron_si):
        # same electron and fields expressed in cgs-Gaussian units must give
        # the same dimensionless coefficient as the SI velocity form
        from landau_drive.cli import UNIT_CONSTANTS

        g = UNIT_CONSTANTS["gaussian"]
        electron_g = ld.PhysicalSystem(
            charge=-g["elementary_charge"],
            magnetic_field=150_000.0,            # 15 T in gauss
            mass=g["electron_mass"],
            hbar=g["hbar"],
            c=g["c"],
        )
        e_statvolt_cm = 1000.0 / 29979.2458      # 1000 V/m
        coeff_g = ld.drive_strength_coefficient(electron_g, e_statvolt_cm)
        coeff_si = ld.drive_strength_coefficient(electron_si, 1000.0)
        assert coeff_g == pytest.approx(coeff_si, rel=1e-9)
        assert electron_g.omega == pytest.approx(electron_si.omega, rel=1e-9)


class TestResonanceSurvival:
    def test_no_time_no_decay(self, natural):
        assert ld.resonance_survival(natural, 0.3, 0.0) == 1.0
        assert ld.resonance_survival(natural, 0.0, 9.0) == 1.0

    @pytest.mark.parametrize("e0,t", [(0.05, 4.0), (0.12, 10.0), (0.3, 6.0)])
    def test_matches_assembled_propagator(self, natural, e0, t):
        p = ld.assemble(natural, ld.RotatingField(e0, 1.0), t)
        assert ld.transition_probabilities(p, 0)[0] == pytest.approx(
            ld.resonance_survival(natural, e0, t), rel=1e-10
        )

    def test_alt_prefactor_is_fourth_power(self, natural):
        s_half = ld.resonance_survival(natural, 0.1, 5.0)
        s_two = ld.resonance_survival_alt_prefactor(natural, 0.1, 5.0)
        assert s_two == pytest.approx(s_half**4, rel=1e-12)

    def test_rejects_negative_inputs(self, natural):
        with pytest.raises(ValueError):
            ld.resonance_survival(natural, -0.1, 1.0)


class TestEvolveState:
    def test_zero_field_pure_phases(self, natural):
        p = ld.assemble(natural, ld.ZeroField(), 4.0, dim=8)
        psi = np.zeros(8, dtype=complex)
        psi[:4] = 0.5
        out, record = ld.evolve_state(p, psi)
        assert_allclose(np.abs(out), np.abs(psi))
        assert_allclose(out, np.exp(-1j * (np.arange(8) + 0.5) * 4.0) * psi)
        assert record.displacement == 0 and record.phase == 0

    def test_vacuum_becomes_poisson(self, rotating, natural):
        p, *_ = rotating
        psi = np.zeros(p.dim, dtype=complex)
        psi[0] = 1.0
        out, _ = ld.evolve_state(p, psi)
        x = (abs(p.u) * natural.k) ** 2
        ms = np.arange(8)
        expected = np.exp(-x) * x**ms / np.array([math.factorial(m) for m in ms])
        assert_allclose(np.abs(out[:8]) ** 2, expected, atol=1e-12)

    def test_norm_preserved(self, rotating):
        # high levels spread roughly sqrt(n) faster than the vacuum, so
        # keep the support well inside the leading quarter
        p, *_ = rotating
        rng = np.random.default_rng(7)
        psi = np.zeros(p.dim, dtype=complex)
        psi[:16] = rng.normal(size=16) + 1j * rng.normal(size=16)
        psi /= np.linalg.norm(psi)
        out, _ = ld.evolve_state(p, psi)
        assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-8)

    def test_geometric_record_returned(self, rotating):
        p, *_ = rotating
        psi = np.zeros(p.dim, dtype=complex)
        psi[0] = 1.0
        _, record = ld.evolve_state(p, psi)
        assert record == ld.GeometricRecord(p.displacement, p.beta)

    def test_dimension_mismatch(self, natural):
        p = ld.assemble(natural, ld.ZeroField(), 1.0, dim=8)
        with pytest.raises(ValueError):
            ld.evolve_state(p, np.zeros(9, dtype=complex))

    def test_truncation_leak_warns(self, natural):
        with pytest.warns(TruncationWarning):
            p = ld.assemble(natural, ld.RotatingField(0.4, 1.0), 20.0, dim=24)
        psi = np.zeros(24, dtype=complex)
        psi[10] = 1.0
        with pytest.warns(TruncationWarning):
            ld.evolve_state(p, psi)

    def test_zero_field_composition(self, natural):
        # evolving t1 then t2 equals evolving t1 + t2: dynamical phases add
        t1, t2 = 2.3, 4.1
        psi = np.zeros(8, dtype=complex)
        psi[:4] = 0.5
        p1 = ld.assemble(natural, ld.ZeroField(), t1, dim=8)
        p2 = ld.assemble(natural, ld.ZeroField(), t2, dim=8)
        p12 = ld.assemble(natural, ld.ZeroField(), t1 + t2, dim=8)
        step, _ = ld.evolve_state(p1, psi)
        step, _ = ld.evolve_state(p2, step)
        once, _ = ld.evolve_state(p12, psi)
        assert_allclose(step, once, atol=1e-14)
        assert p12.beta == p1.beta + p2.beta == 0.0
