import numpy as np
import pytest

from core import designs, gentle_povm, lowerbound, qmat
from core.gentle_povm import GentlePovm
from core.lowerbound import AlternativeEnsemble, ExplicitPovm


@pytest.fixture(scope="module")
def qubit_explicit(qubit_povm):
    return qubit_povm.materialize()


@pytest.fixture(scope="module")
def qubit_superop(qubit_povm):
    return lowerbound.gentle_superop(qubit_povm, mode="classes")


@pytest.fixture(scope="module")
def z_measurement():
    return ExplicitPovm.projective(np.eye(2))


class TestExplicitPovm:

    def test_incomplete_elements_rejected(self):
        with pytest.raises(ValueError, match="identity"):
            ExplicitPovm(np.array([np.eye(2) * 0.4, np.eye(2) * 0.4]))

    def test_lenient_mode_keeps_broken_measurement(self):
        povm = ExplicitPovm(np.array([np.eye(2) * 0.4]), strict=False)
        assert povm.completeness_residual() == pytest.approx(0.6)

    def test_non_positive_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            ExplicitPovm(np.array([np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])]))

    def test_materialized_gentle_povm(self, qubit_explicit):
        assert len(qubit_explicit) == 64
        assert qubit_explicit.completeness_residual() <= 1e-10


class TestSuperOperator:

    def test_classes_match_exact_enumeration(self, qubit_povm, qubit_superop):
        exact = lowerbound.gentle_superop(qubit_povm, mode="exact")
        np.testing.assert_allclose(qubit_superop.matrix, exact.matrix, atol=1e-10)

    def test_classes_match_qutrit_enumeration(self):
        povm = GentlePovm.from_alpha(designs.build_mub_design(3), 0.3)
        exact = lowerbound.gentle_superop(povm, mode="exact")
        classes = lowerbound.gentle_superop(povm, mode="classes")
        np.testing.assert_allclose(classes.matrix, exact.matrix, atol=1e-10)

    def test_monte_carlo_approximates(self, qubit_povm, qubit_superop, rng):
        mc = lowerbound.gentle_superop(qubit_povm, mode="mc", rng=rng, samples=20000)
        np.testing.assert_allclose(mc.matrix, qubit_superop.matrix, atol=0.08)
        assert mc.matrix[-1, -1] == pytest.approx(1.0, abs=1e-10)

    def test_matrix_matches_direct_application(self, qubit_explicit, rng):
        s = lowerbound.superop_from_povm(qubit_explicit)
        a = qmat.random_hermitian(2, rng)
        np.testing.assert_allclose(s.apply(a), lowerbound.apply_superop(qubit_explicit, a), atol=1e-12)

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_traceless_spectrum_is_flat(self, d):
        povm = GentlePovm.from_alpha(designs.build_mub_design(d), 0.2)
        s = lowerbound.gentle_superop(povm)
        mu = lowerbound.gentle_traceless_eigenvalue(povm)
        np.testing.assert_allclose(s.traceless_eigenvalues, mu, atol=1e-10)
        np.testing.assert_allclose(s.matrix[-1], np.eye(d * d)[-1], atol=1e-10)
        assert np.sum(np.isclose(s.eigenvalues, 1.0, atol=1e-9)) == 1

    def test_projective_z_spectrum(self, z_measurement):
        s = lowerbound.superop_from_povm(z_measurement)
        np.testing.assert_allclose(s.traceless_eigenvalues, [0.0, 0.0, 1.0], atol=1e-12)
        basis = qmat.hermitian_basis(2)
        directions = s.eigen_matrices()
        np.testing.assert_allclose(directions[0], basis.elements[0], atol=1e-12)
        np.testing.assert_allclose(directions[1], basis.elements[1], atol=1e-12)

    def test_trivial_measurement_kills_traceless_part(self):
        s = lowerbound.superop_from_povm(ExplicitPovm.trivial(3))
        np.testing.assert_allclose(s.traceless_eigenvalues, 0.0, atol=1e-12)

    def test_average_of_identical_povms(self, z_measurement):
        single = lowerbound.superop_from_povm(z_measurement)
        averaged = lowerbound.average_superop([z_measurement, z_measurement])
        np.testing.assert_allclose(averaged.matrix, single.matrix, atol=1e-12)

    def test_superop_json(self, qubit_superop):
        restored = lowerbound.superop_from_json(lowerbound.superop_to_json(qubit_superop))
        np.testing.assert_allclose(restored.matrix, qubit_superop.matrix)


class TestChannelProperties:

    def test_gentle_povm_channel(self, qubit_explicit, rng):
        s = lowerbound.superop_from_povm(qubit_explicit)
        report = lowerbound.verify_channel_properties(s, qubit_explicit, rng)
        assert report.passed
        assert report.identity_eigen_residual <= 1e-10
        assert report.traceless_residual <= 1e-10

    def test_non_unital_povm_fails(self, rng):
        leaky = ExplicitPovm(np.array([np.diag([0.9, 0.0]), np.diag([0.0, 1.0])]), strict=False)
        s = lowerbound.superop_from_povm(leaky)
        report = lowerbound.verify_channel_properties(s, leaky, rng)
        assert report.traceless_residual > 0.1
        assert report.identity_eigen_residual > 0.01
        assert not report.passed

    def test_projective_channel(self, z_measurement, rng):
        s = lowerbound.superop_from_povm(z_measurement)
        assert lowerbound.verify_channel_properties(s, z_measurement, rng).passed


class TestEigenvalueSum:

    @pytest.mark.parametrize("d,alpha", [(2, 0.05), (2, 0.1), (2, 0.3), (3, 0.1), (3, 0.2), (5, 0.2)])
    def test_gentle_sum_within_bound(self, d, alpha):
        povm = GentlePovm.from_alpha(designs.build_mub_design(d), alpha)
        report = lowerbound.eigenvalue_sum_check(lowerbound.gentle_superop(povm), alpha)
        assert report.passed
        assert report.traceless_sum <= report.bound

    def test_bound_values(self):
        assert lowerbound.eigenvalue_sum_bound(0.1) == pytest.approx(0.16 / 0.96 ** 2)
        report = lowerbound.eigenvalue_sum_check(lowerbound.superop_from_povm(ExplicitPovm.trivial(2)), 0.1)
        assert report.traceless_sum == pytest.approx(0.0, abs=1e-12)

    def test_projective_measurement_exceeds_small_alpha_bound(self, z_measurement):
        report = lowerbound.eigenvalue_sum_check(lowerbound.superop_from_povm(z_measurement), 0.05)
        assert not report.passed


class TestAlternatives:

    def test_fixed_directions_are_least_sensitive(self, z_measurement):
        s = lowerbound.superop_from_povm(z_measurement)
        ens = lowerbound.build_alternatives(s, 0.004, 2, mode="fixed")
        assert ens.count == 2
        directions = ens.directions()
        for direction in directions:
            assert abs(np.trace(direction)) <= 1e-12
            np.testing.assert_allclose(lowerbound.apply_superop(z_measurement, direction), 0.0, atol=1e-12)

    def test_randomized_directions_are_orthonormal(self, qubit_superop, rng):
        ens = lowerbound.build_alternatives(qubit_superop, 0.004, 3, mode="randomized", rng=rng)
        np.testing.assert_allclose(ens.coefficients @ ens.coefficients.T, np.eye(3), atol=1e-10)
        assert np.all(ens.coefficients[:, -1] == 0.0)

    @pytest.mark.parametrize("count", [1, 4])
    def test_direction_count_range(self, qubit_superop, count):
        with pytest.raises(ValueError, match="Direction count"):
            lowerbound.build_alternatives(qubit_superop, 0.004, count)

    def test_epsilon_range(self, qubit_superop):
        with pytest.raises(ValueError, match="epsilon"):
            lowerbound.build_alternatives(qubit_superop, 0.01, 3)

    def test_states_and_admissibility(self, qubit_superop, rng):
        ens = lowerbound.build_alternatives(qubit_superop, 0.004, 3)
        for nu in ens.all_signs():
            state = qmat.DensityMatrix(ens.state(nu))
            assert qmat.trace_norm_dist(state, ens.rho0) > 0.004
        report = lowerbound.admissibility_stats(ens, 2000, rng)
        assert report.fraction >= report.fraction_bound
        assert report.samples == 2000

    def test_sign_enumeration(self, qubit_superop):
        ens = lowerbound.build_alternatives(qubit_superop, 0.004, 2)
        signs = ens.all_signs()
        assert signs.shape == (4, 2)
        assert {tuple(row) for row in signs} == {(1, 1), (1, -1), (-1, 1), (-1, -1)}


class TestChiSquare:

    def test_decoupled_matches_distribution_level(self, qubit_explicit, qubit_superop):
        ens = lowerbound.build_alternatives(qubit_superop, 0.004, 3)
        decoupled = lowerbound.chi2_decoupled(qubit_superop, ens, 5)
        direct = lowerbound.chi2_from_distributions([qubit_explicit], ens, 5)
        assert decoupled == pytest.approx(direct, abs=1e-10)
        assert decoupled >= 0

    def test_mixed_measurements_per_copy(self, qubit_explicit, qubit_superop, z_measurement):
        s_z = lowerbound.superop_from_povm(z_measurement)
        ens = lowerbound.build_alternatives(qubit_superop, 0.004, 2)
        decoupled = lowerbound.chi2_decoupled([qubit_superop, s_z], ens, 2)
        direct = lowerbound.chi2_from_distributions([qubit_explicit, z_measurement], ens, 2)
        assert decoupled == pytest.approx(direct, abs=1e-10)

    def test_trivial_measurement_has_zero_distance(self):
        s = lowerbound.superop_from_povm(ExplicitPovm.trivial(2))
        ens = lowerbound.build_alternatives(s, 0.004, 3)
        assert lowerbound.chi2_decoupled(s, ens, 100) == pytest.approx(0.0, abs=1e-12)

    def test_monte_carlo_agrees(self, qubit_superop, rng):
        ens = lowerbound.build_alternatives(qubit_superop, 0.004, 3)
        exact = lowerbound.chi2_decoupled(qubit_superop, ens, 200)
        mc = lowerbound.chi2_decoupled(qubit_superop, ens, 200, mode="mc", rng=rng, samples=50000)
        assert mc == pytest.approx(exact, abs=0.02 + 0.1 * exact)

    def test_invalid_regime(self, z_measurement):
        s = lowerbound.superop_from_povm(z_measurement)
        ens = AlternativeEnsemble(basis=s.basis, coefficients=s.traceless_eigenvectors.T, epsilon=0.3)
        with pytest.raises(lowerbound.InvalidRegimeError):
            lowerbound.chi2_decoupled(s, ens, 3)

    def test_copy_count_mismatch(self, qubit_superop):
        ens = lowerbound.build_alternatives(qubit_superop, 0.004, 3)
        with pytest.raises(ValueError, match="per-copy"):
            lowerbound.chi2_decoupled([qubit_superop, qubit_superop], ens, 3)


class TestClosedFormBounds:

    def test_fixed_scaling_in_dimension_and_epsilon(self):
        base = lowerbound.lower_bound_sample_size(2, 0.1, 0.1)
        assert lowerbound.lower_bound_sample_size(4, 0.1, 0.1) == pytest.approx(8 * base)
        assert lowerbound.lower_bound_sample_size(2, 0.05, 0.1) == pytest.approx(4 * base)
        assert lowerbound.lower_bound_sample_size(2, 0.1, 0.05) == pytest.approx(4 * base)

    def test_randomized_scales_with_direction_count(self):
        small = lowerbound.lower_bound_sample_size(2, 0.1, 0.1, mode="randomized")
        large = lowerbound.lower_bound_sample_size(3, 0.1, 0.1, mode="randomized")
        assert large / small == pytest.approx(8 / 3)

    def test_exponent_reaches_target(self):
        report = lowerbound.lower_bound_report(3, 0.2, 0.1)
        assert np.expm1(report.exponent_coefficient * report.n_star ** 2) == pytest.approx(4 / 9)
        assert report.directions == 4.5
        assert report.conditioning == pytest.approx(lowerbound.conditioning_factor(3))

    def test_conditioning_factor(self):
        assert lowerbound.conditioning_factor(2) == pytest.approx((1 / (1 - 2 * np.exp(-2))) ** 2)

    def test_quarter_alpha_skips_singular_form(self):
        assert lowerbound.randomized_mu_square_bound(0.25) == pytest.approx(
            lowerbound.eigenvalue_sum_bound(0.25) ** 2)
        assert np.isfinite(lowerbound.lower_bound_sample_size(2, 0.1, 0.25, mode="randomized"))

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            lowerbound.lower_bound_report(2, 0.1, 0.5)
        with pytest.raises(ValueError, match="mode"):
            lowerbound.lower_bound_report(2, 0.1, 0.1, mode="adaptive")


class TestSpecialCases:

    def test_average_of_z_and_x(self, z_measurement):
        s = 1 / np.sqrt(2)
        x_measurement = ExplicitPovm.projective(np.array([[s, s], [s, -s]]))
        averaged = lowerbound.average_superop([z_measurement, x_measurement])
        np.testing.assert_allclose(averaged.eigenvalues, [0.0, 0.5, 0.5, 1.0], atol=1e-12)
        np.testing.assert_allclose(averaged.matrix, averaged.matrix.T, atol=1e-12)

    def test_full_spectrum_of_projective_z(self, z_measurement):
        s = lowerbound.superop_from_povm(z_measurement)
        np.testing.assert_allclose(s.eigenvalues, [0.0, 0.0, 1.0, 1.0], atol=1e-12)

    def test_scaled_element_breaks_trace_preservation(self, rng):
        corrupted = ExplicitPovm(np.array([1.01 * np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]), strict=False)
        s = lowerbound.superop_from_povm(corrupted)
        report = lowerbound.verify_channel_properties(s, corrupted, rng)
        assert not report.trace_preserving
        assert not report.passed

    def test_non_uniform_reference_stays_self_adjoint(self, qubit_explicit):
        s = lowerbound.superop_from_povm(qubit_explicit, rho0=np.diag([0.7, 0.3]))
        np.testing.assert_allclose(s.matrix, s.matrix.T, atol=1e-10)

    def test_zero_alpha_has_empty_traceless_sum(self, qubit_design):
        povm = GentlePovm.from_alpha(qubit_design, 0.0)
        report = lowerbound.eigenvalue_sum_check(lowerbound.gentle_superop(povm), 0.0)
        assert report.traceless_sum == pytest.approx(0.0, abs=1e-12)
        assert report.passed

    def test_quarter_alpha_bound(self):
        assert lowerbound.eigenvalue_sum_bound(0.25) == pytest.approx(16 / 9)


class TestPerturbationGeometry:

    def test_amplitude_and_symmetry(self, qubit_superop, rng):
        ens = lowerbound.build_alternatives(qubit_superop, 0.004, 3)
        nu = ens.sample_signs(rng, 1)[0]
        delta = ens.delta(nu)
        assert abs(np.trace(delta)) <= 1e-12
        assert np.linalg.norm(delta, "fro") == pytest.approx(ens.c * ens.epsilon / np.sqrt(2), abs=1e-10)
        np.testing.assert_allclose(ens.delta(-nu), -delta, atol=1e-15)

    def test_pairing_diagonalizes_on_eigenvectors(self, qubit_superop, qubit_explicit, rng):
        ens = lowerbound.build_alternatives(qubit_superop, 0.004, 3)
        nu1, nu2 = ens.sample_signs(rng, 2)
        a, b = ens.delta(nu1), ens.delta(nu2)
        mu = qubit_superop.traceless_eigenvalues[:3]
        expected = 2 * ens.amplitude ** 2 * np.sum(mu * nu1 * nu2)
        assert lowerbound.pairing(qubit_superop, a, b) == pytest.approx(expected, abs=1e-10)
        direct = 2 * np.trace(a @ lowerbound.apply_superop(qubit_explicit, b)).real
        assert lowerbound.pairing(qubit_superop, a, b) == pytest.approx(direct, abs=1e-10)

    def test_blind_directions_give_zero_distance(self, z_measurement):
        s = lowerbound.superop_from_povm(z_measurement)
        ens = lowerbound.build_alternatives(s, 0.004, 2)
        assert lowerbound.chi2_decoupled(s, ens, 1) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("d", [3, 4])
    def test_admissible_fraction_meets_bound(self, d, rng):
        povm = GentlePovm.from_alpha(designs.build_mub_design(d), 0.2)
        s = lowerbound.gentle_superop(povm)
        ens = lowerbound.build_alternatives(s, 1e-6, d * d - 1)
        report = lowerbound.admissibility_stats(ens, 10000, rng)
        assert report.fraction >= report.fraction_bound - 3 * report.stderr
        assert lowerbound.admissible_mask(ens, np.ones((1, ens.count)))[0]
