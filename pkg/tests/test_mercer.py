"""Tests for the trigonometric feature model, targets, and noise models."""

import math

import numpy as np
import pytest

from ratelab.errors import (
    AmplitudeError,
    ConstructionError,
    ParameterError,
    SourceViolationError,
)
from ratelab.index_functions import HolderIndex, LogIndex
from ratelab.mercer import (
    NoiseSpec,
    approx_error_norms,
    build_model,
    kernel_eval,
    norms_of_expansion,
    population_regularized,
    power_law_source,
    sample_dataset,
    target_from_source,
    trigonometric_basis,
    two_point_weights,
)


class TestBasis:
    def test_orthonormal_under_uniform_measure(self):
        """Averaging B^T B over a fine uniform grid recovers the identity."""
        xs = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
        feats = trigonometric_basis(xs, 9)
        gram = feats.T @ feats / 4096
        np.testing.assert_allclose(gram, np.eye(9), atol=1e-12)

    def test_first_feature_is_constant(self):
        feats = trigonometric_basis(np.array([0.3, 1.7]), 3)
        np.testing.assert_allclose(feats[:, 0], 1.0)


class TestBuildModel:
    def test_kappa_matches_energy_at_origin(self):
        """Cosine features peak at x = 0, so the sup is t_1 + 2 sum t_even."""
        model = build_model(b=2.0, n_trunc=512)
        t = model.eigenvalues
        expected = t[0] + 2.0 * t[1::2].sum()
        assert model.kappa_sq == pytest.approx(expected, rel=1e-12)
        assert model.kappa_sq == pytest.approx(1.8205177181543402, rel=1e-12)

    def test_output_dim_scales_kappa(self):
        one = build_model(b=2.0, n_trunc=16)
        three = build_model(b=2.0, d=3, n_trunc=16)
        assert three.kappa_sq == pytest.approx(3 * one.kappa_sq, rel=1e-14)

    def test_trace_tail_bound(self):
        model = build_model(b=2.0, n_trunc=512)
        assert model.trace_tail_bound() == pytest.approx(1.0 / 512.0)

    def test_spectrum_rules(self):
        mid = build_model(b=2.0, alpha=0.5, beta=1.5, spectrum_rule="midpoint", n_trunc=8)
        np.testing.assert_allclose(
            mid.eigenvalues, np.arange(1, 9, dtype=float) ** -2.0
        )
        upper = build_model(b=2.0, alpha=0.5, beta=1.5, spectrum_rule="upper", n_trunc=8)
        np.testing.assert_allclose(
            upper.eigenvalues, 1.5 * np.arange(1, 9, dtype=float) ** -2.0
        )

    def test_explicit_spectrum_inside_envelope(self):
        ns = np.arange(1, 9, dtype=float)
        eigs = 1.2 * ns**-2.0
        model = build_model(b=2.0, alpha=1.0, beta=1.5, spectrum_rule=eigs, n_trunc=8)
        assert model.spectrum_rule == "explicit"
        np.testing.assert_allclose(model.eigenvalues, eigs)

    def test_explicit_spectrum_outside_envelope(self):
        ns = np.arange(1, 9, dtype=float)
        with pytest.raises(ConstructionError):
            build_model(b=2.0, alpha=1.0, beta=1.5, spectrum_rule=2.0 * ns**-2.0, n_trunc=8)

    def test_explicit_spectrum_must_decay(self):
        eigs = np.full(8, 0.5)
        with pytest.raises(ConstructionError):
            build_model(b=2.0, alpha=0.1, beta=1.0, spectrum_rule=eigs, n_trunc=8)

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            build_model(b=0.5)
        with pytest.raises(ParameterError):
            build_model(b=2.0, n_trunc=4)
        with pytest.raises(ConstructionError):
            build_model(b=2.0, alpha=2.0, beta=1.0)

    def test_kernel_eval_is_diagonal(self):
        model = build_model(b=2.0, d=2, n_trunc=8)
        block = kernel_eval(model, 0.4, 0.4)
        feats = trigonometric_basis(np.array([0.4]), 8)[0]
        assert block.shape == (2, 2)
        assert block[0, 1] == 0.0
        assert block[0, 0] == pytest.approx(float((feats**2) @ model.eigenvalues))


class TestTargets:
    def test_power_law_source_hits_radius(self):
        model = build_model(b=2.0, n_trunc=8)
        src = power_law_source(model, s=1.0, radius=1.5)
        assert float(np.sqrt((src**2).sum())) == pytest.approx(1.5)

    def test_target_coefficients_are_phi_weighted(self):
        model = build_model(b=2.0, n_trunc=8)
        phi = HolderIndex(0.5, domain_max=model.kappa_sq)
        src = power_law_source(model, radius=1.5)
        target = target_from_source(model, phi, src, radius=1.5)
        np.testing.assert_allclose(
            target.coefficients, np.sqrt(model.eigenvalues)[:, None] * src
        )
        assert target.source_norm == pytest.approx(1.5)

    def test_source_norm_cannot_exceed_radius(self):
        model = build_model(b=2.0, n_trunc=8)
        phi = HolderIndex(0.5, domain_max=model.kappa_sq)
        src = power_law_source(model, radius=2.0)
        with pytest.raises(SourceViolationError):
            target_from_source(model, phi, src, radius=1.0)

    def test_expansion_norms(self):
        model = build_model(b=2.0, n_trunc=8)
        coeffs = np.zeros((8, 1))
        coeffs[0, 0], coeffs[1, 0], coeffs[3, 0] = 1.0, 2.0, 1.0
        norms = norms_of_expansion(model, coeffs)
        assert norms.rkhs == pytest.approx(math.sqrt(6.0))
        assert norms.l2 == pytest.approx(1.4361406616345072, rel=1e-12)

    def test_population_regularized_shrinks_modewise(self):
        model = build_model(b=2.0, n_trunc=8)
        phi = HolderIndex(0.5, domain_max=model.kappa_sq)
        target = target_from_source(model, phi, power_law_source(model), radius=1.0)
        reg = population_regularized(model, target, lam=0.25)
        shrink = model.eigenvalues / (model.eigenvalues + 0.25)
        np.testing.assert_allclose(reg.coefficients, shrink[:, None] * target.coefficients)
        assert reg.source_norm < target.source_norm

    def test_evaluate_matches_feature_expansion(self):
        model = build_model(b=2.0, n_trunc=8)
        phi = HolderIndex(1.0, domain_max=model.kappa_sq)
        target = target_from_source(model, phi, power_law_source(model), radius=1.0)
        xs = np.array([0.0, 1.0, 4.0])
        feats = trigonometric_basis(xs, 8)
        expected = feats @ (np.sqrt(model.eigenvalues)[:, None] * target.coefficients)
        np.testing.assert_allclose(target.evaluate(xs), expected)


class TestApproxError:
    def test_worst_case_l2_for_square_root_profile(self):
        """With phi(t) = sqrt(t) the sup of lam t / (t + lam) sits at t_1 = 1."""
        model = build_model(b=2.0, n_trunc=8)
        phi = HolderIndex(0.5, domain_max=model.kappa_sq)
        report = approx_error_norms(model, phi, radius=1.0, lam=0.01, worst_case=True)
        assert report.l2_error == pytest.approx(0.01 / 1.01, rel=1e-12)
        assert report.applicable
        assert all(check.holds for check in report.bounds)

    def test_errors_grow_with_lambda(self):
        model = build_model(b=2.0, n_trunc=8)
        phi = HolderIndex(0.5, domain_max=model.kappa_sq)
        small = approx_error_norms(model, phi, radius=1.0, lam=0.01, worst_case=True)
        large = approx_error_norms(model, phi, radius=1.0, lam=0.1, worst_case=True)
        assert small.l2_error < large.l2_error
        assert small.rkhs_error < large.rkhs_error

    def test_target_case_never_beats_worst_case(self):
        model = build_model(b=2.0, n_trunc=8)
        phi = HolderIndex(0.5, domain_max=model.kappa_sq)
        target = target_from_source(model, phi, power_law_source(model), radius=1.0)
        worst = approx_error_norms(model, phi, radius=1.0, lam=0.05, worst_case=True)
        actual = approx_error_norms(model, phi, radius=1.0, lam=0.05, target=target)
        assert actual.l2_error <= worst.l2_error * (1 + 1e-12)
        assert actual.rkhs_error <= worst.rkhs_error * (1 + 1e-12)

    def test_unlicensed_profile_reports_not_applicable(self):
        """A profile whose monotonicity flags fail licenses no bounds."""
        model = build_model(b=2.0, n_trunc=8)
        phi = LogIndex(p=0.5, nu=1.0, domain_max=model.kappa_sq)
        report = approx_error_norms(model, phi, radius=1.0, lam=0.05, worst_case=True)
        assert not report.applicable
        assert len(report.bounds) == 0

    def test_lambda_domain(self):
        model = build_model(b=2.0, n_trunc=8)
        phi = HolderIndex(0.5, domain_max=model.kappa_sq)
        from ratelab.errors import DomainError

        with pytest.raises(DomainError):
            approx_error_norms(model, phi, radius=1.0, lam=0.0, worst_case=True)
        with pytest.raises(DomainError):
            approx_error_norms(
                model, phi, radius=1.0, lam=2 * model.kappa_sq, worst_case=True
            )


class TestGaussianNoise:
    def test_moment_constants(self):
        spec = NoiseSpec(kind="gaussian", sigma=0.7)
        scale, sd = spec.moment_constants(3)
        assert scale == pytest.approx(2.1 * math.sqrt(3.0))
        assert sd == pytest.approx(1.4 * math.sqrt(3.0))

    def test_certificate_holds(self):
        model = build_model(b=2.0, d=3, n_trunc=8)
        cert = NoiseSpec(kind="gaussian", sigma=0.7).certify(model)
        assert cert.satisfied
        assert cert.moment_value <= cert.moment_limit
        assert cert.moment_value == pytest.approx(0.06408806124676189, rel=1e-9)

    def test_variance_cap_is_informational(self):
        """The closed-form cap fails for these constants but does not veto."""
        model = build_model(b=2.0, n_trunc=8)
        cert = NoiseSpec(kind="gaussian", sigma=1.0).certify(model)
        assert cert.satisfied
        assert not cert.cap_satisfied

    def test_noiseless_is_trivially_certified(self):
        model = build_model(b=2.0, n_trunc=8)
        cert = NoiseSpec(kind="gaussian", sigma=0.0).certify(model)
        assert cert.satisfied
        assert cert.moment_value == 0.0


class TestTwoPointNoise:
    def test_moment_constants(self):
        spec = NoiseSpec(kind="two_point", amplitude=4.0)
        scale, sd = spec.moment_constants(1)
        assert scale == pytest.approx(5.0)
        assert sd == pytest.approx(4.0 * math.sqrt(2.0))

    def test_weights_reproduce_the_mean(self):
        atoms, weights = two_point_weights(np.array([0.5, -0.25]), level=2.0, d=2)
        np.testing.assert_allclose(weights.sum(axis=-1), 1.0)
        np.testing.assert_allclose(weights @ atoms, [[0.5, -0.25]])
        np.testing.assert_allclose(weights[0], [0.3125, 0.21875, 0.1875, 0.28125])

    def test_weights_reject_overlarge_values(self):
        with pytest.raises(AmplitudeError):
            two_point_weights(np.array([3.0]), level=2.0, d=1)

    def test_certificate_holds_for_large_amplitude(self):
        model = build_model(b=2.0, n_trunc=8)
        phi = HolderIndex(0.5, domain_max=model.kappa_sq)
        target = target_from_source(
            model, phi, power_law_source(model, radius=0.2), radius=0.2
        )
        cert = NoiseSpec(kind="two_point", amplitude=4.0).certify(model, target=target)
        assert cert.satisfied
        assert cert.moment_value == pytest.approx(0.42554092849246783, rel=1e-9)
        assert cert.moment_limit == pytest.approx(0.64)

    def test_decertified_when_target_exceeds_amplitude(self):
        model = build_model(b=2.0, n_trunc=8)
        phi = HolderIndex(0.5, domain_max=model.kappa_sq)
        target = target_from_source(
            model, phi, power_law_source(model, radius=0.2), radius=0.2
        )
        cert = NoiseSpec(kind="two_point", amplitude=1e-4).certify(model, target=target)
        assert not cert.satisfied
        assert cert.moment_value == math.inf


class TestSampling:
    def test_deterministic_for_fixed_seed(self):
        model = build_model(b=2.0, n_trunc=8)
        phi = HolderIndex(0.5, domain_max=model.kappa_sq)
        target = target_from_source(model, phi, power_law_source(model), radius=1.0)
        noise = NoiseSpec(kind="gaussian", sigma=0.3)
        first = sample_dataset(model, target, noise, m=16, seed=5)
        second = sample_dataset(model, target, noise, m=16, seed=5)
        np.testing.assert_array_equal(first.xs, second.xs)
        np.testing.assert_array_equal(first.ys, second.ys)

    def test_noiseless_outputs_are_exact(self):
        model = build_model(b=2.0, n_trunc=8)
        phi = HolderIndex(0.5, domain_max=model.kappa_sq)
        target = target_from_source(model, phi, power_law_source(model), radius=1.0)
        data = sample_dataset(model, target, NoiseSpec(kind="gaussian", sigma=0.0), m=8, seed=1)
        np.testing.assert_allclose(data.ys, target.evaluate(data.xs), atol=1e-15)

    def test_two_point_outputs_sit_on_atoms(self):
        model = build_model(b=2.0, n_trunc=8)
        phi = HolderIndex(0.5, domain_max=model.kappa_sq)
        target = target_from_source(
            model, phi, power_law_source(model, radius=0.2), radius=0.2
        )
        data = sample_dataset(model, target, NoiseSpec(kind="two_point", amplitude=4.0), m=64, seed=2)
        np.testing.assert_allclose(np.abs(data.ys), 4.0)

    def test_shapes(self):
        model = build_model(b=2.0, d=2, n_trunc=8)
        phi = HolderIndex(0.5, domain_max=model.kappa_sq)
        target = target_from_source(model, phi, power_law_source(model), radius=1.0)
        data = sample_dataset(model, target, NoiseSpec(kind="gaussian", sigma=0.1), m=10, seed=0)
        assert data.xs.shape == (10,)
        assert data.ys.shape == (10, 2)
