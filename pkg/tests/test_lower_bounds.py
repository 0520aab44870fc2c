"""Tests for sign packings, adversarial families, and the information bounds."""

import math

import numpy as np
import pytest

from ratelab.errors import (
    AmplitudeError,
    ConstructionError,
    ParameterError,
)
from ratelab.index_functions import HolderIndex
from ratelab.lower_bounds import (
    FANO_CONSTANT,
    TwoPointMeasure,
    adversarial_family,
    amplitude_for,
    bayes_error,
    build_packing,
    code_length_for_separation,
    empirical_fano_check,
    fano_bound,
    kl_divergence,
    max_separation,
    packing_size,
    separation_for_code_length,
)
from ratelab.mercer import build_model


def _lab(n_trunc=128):
    model = build_model(b=2.0, n_trunc=n_trunc)
    phi = HolderIndex(0.5, domain_max=model.kappa_sq)
    return model, phi


class TestPacking:
    def test_sizes(self):
        assert packing_size(24) == 3
        assert packing_size(48) == 8

    @pytest.mark.parametrize("ell", [24, 48])
    def test_codes_are_well_separated_signs(self, ell):
        packing = build_packing(ell)
        codes = packing.codes
        assert codes.shape == (packing_size(ell), ell)
        assert np.all(np.abs(codes) == 1)
        dots = codes @ codes.T
        off = dots[~np.eye(len(codes), dtype=bool)]
        assert off.max() <= ell / 2

    def test_deterministic(self):
        first = build_packing(48, seed=3)
        second = build_packing(48, seed=3)
        np.testing.assert_array_equal(first.codes, second.codes)

    def test_codes_are_distinct(self):
        codes = build_packing(48).codes
        as_rows = {tuple(row) for row in codes.astype(int)}
        assert len(as_rows) == len(codes)

    def test_length_validation(self):
        with pytest.raises(ParameterError):
            build_packing(23)
        with pytest.raises(ParameterError):
            build_packing(26)


class TestSeparations:
    def test_power_profile_value(self):
        """With phi = sqrt the combined scale is linear, so eps = ell**-b."""
        model, phi = _lab()
        eps = separation_for_code_length(model, phi, 1.0, 48)
        assert eps == pytest.approx(48.0**-2, rel=1e-12)

    def test_code_length_round_trip(self):
        model, phi = _lab()
        eps = separation_for_code_length(model, phi, 1.0, 48)
        assert code_length_for_separation(model, phi, 1.0, eps) == 48

    def test_largest_feasible_separation(self):
        """Any separation at or below the cap maps back to a length above 16."""
        model, phi = _lab()
        widest = max_separation(model, phi, 1.0)
        assert widest == pytest.approx(17.0**-2, rel=1e-12)
        assert code_length_for_separation(model, phi, 1.0, widest) == 17

    def test_norm_variant_value(self):
        model, phi = _lab()
        eps = separation_for_code_length(model, phi, 1.0, 48, rkhs_variant=True)
        assert eps == pytest.approx(2.0 / math.sqrt(5.0) / 60.0, rel=1e-12)


class TestAdversarialFamily:
    def test_members_separated_within_the_window(self):
        model, phi = _lab()
        packing = build_packing(48)
        eps = separation_for_code_length(model, phi, 1.0, 48)
        family = adversarial_family(model, phi, 1.0, eps, packing)
        assert len(family.members) == 8
        assert family.min_separation >= eps * (1 - 1e-9)
        assert family.max_separation <= 2 * eps * (1 + 1e-9)

    def test_members_respect_the_source_radius(self):
        model, phi = _lab()
        packing = build_packing(24)
        eps = separation_for_code_length(model, phi, 1.0, 24)
        family = adversarial_family(model, phi, 1.0, eps, packing)
        for member in family.members:
            assert member.source_norm <= 1.0 + 1e-9

    def test_mismatched_code_length_rejected(self):
        model, phi = _lab()
        packing = build_packing(24)
        eps = separation_for_code_length(model, phi, 1.0, 48)
        with pytest.raises(ConstructionError):
            adversarial_family(model, phi, 1.0, eps, packing)

    def test_needs_enough_features(self):
        model_small, phi_small = _lab(n_trunc=16)
        packing = build_packing(48)
        eps = separation_for_code_length(model_small, phi_small, 1.0, 48)
        with pytest.raises(ConstructionError):
            adversarial_family(model_small, phi_small, 1.0, eps, packing)

    def test_norm_variant_feasibility(self):
        model, phi = _lab()
        packing = build_packing(48)
        feasible = separation_for_code_length(model, phi, 1.0, 48, rkhs_variant=True)
        family = adversarial_family(model, phi, 1.0, feasible, packing, rkhs_variant=True)
        assert family.variant == "rkhs"
        with pytest.raises(ConstructionError):
            adversarial_family(model, phi, 1.0, 10 * feasible, packing, rkhs_variant=True)


class TestTwoPointMeasure:
    def test_amplitude_keeps_weights_bounded_away_from_zero(self):
        model, phi = _lab()
        packing = build_packing(24)
        eps = separation_for_code_length(model, phi, 1.0, 24)
        family = adversarial_family(model, phi, 1.0, eps, packing)
        level = amplitude_for(phi, 1.0, model)
        measure = TwoPointMeasure(model, family.members[0], level)
        xs = np.linspace(0.0, 2 * np.pi, 257)
        for x in xs[::16]:
            _, weights = measure.conditional(float(x))
            assert weights.min() >= 3.0 / 8.0 - 1e-12

    def test_conditional_mean_matches_target(self):
        model, phi = _lab()
        packing = build_packing(24)
        eps = separation_for_code_length(model, phi, 1.0, 24)
        family = adversarial_family(model, phi, 1.0, eps, packing)
        level = amplitude_for(phi, 1.0, model)
        measure = TwoPointMeasure(model, family.members[0], level)
        atoms, weights = measure.conditional(1.3)
        target_value = family.members[0].evaluate(np.array([1.3]))[0]
        np.testing.assert_allclose(weights @ atoms, target_value, atol=1e-12)

    def test_samples_sit_on_atoms(self):
        model, phi = _lab()
        packing = build_packing(24)
        eps = separation_for_code_length(model, phi, 1.0, 24)
        family = adversarial_family(model, phi, 1.0, eps, packing)
        level = amplitude_for(phi, 1.0, model)
        measure = TwoPointMeasure(model, family.members[0], level)
        rng = np.random.default_rng(0)
        ys = measure.sample(np.linspace(0.0, 2 * np.pi, 32), rng)
        np.testing.assert_allclose(np.abs(ys), level)

    def test_undersized_level_rejected(self):
        model, phi = _lab()
        packing = build_packing(24)
        eps = separation_for_code_length(model, phi, 1.0, 24)
        family = adversarial_family(model, phi, 1.0, eps, packing)
        measure = TwoPointMeasure(model, family.members[0], 1e-9)
        with pytest.raises(AmplitudeError):
            measure.conditional(0.0)


class TestKLDivergence:
    def test_zero_for_identical_measures(self):
        model, phi = _lab()
        packing = build_packing(24)
        eps = separation_for_code_length(model, phi, 1.0, 24)
        family = adversarial_family(model, phi, 1.0, eps, packing)
        level = amplitude_for(phi, 1.0, model)
        measure = TwoPointMeasure(model, family.members[0], level)
        assert kl_divergence(measure, measure).value == 0.0

    def test_all_pairs_below_the_ceiling(self):
        model, phi = _lab()
        packing = build_packing(24)
        eps = separation_for_code_length(model, phi, 1.0, 24)
        family = adversarial_family(model, phi, 1.0, eps, packing)
        level = amplitude_for(phi, 1.0, model)
        measures = [TwoPointMeasure(model, member, level) for member in family.members]
        for i, first in enumerate(measures):
            for second in measures[i + 1 :]:
                comparison = kl_divergence(first, second)
                assert comparison.within
                assert comparison.value >= 0.0

    def test_mismatched_measures_rejected(self):
        model, phi = _lab()
        packing = build_packing(24)
        eps = separation_for_code_length(model, phi, 1.0, 24)
        family = adversarial_family(model, phi, 1.0, eps, packing)
        level = amplitude_for(phi, 1.0, model)
        first = TwoPointMeasure(model, family.members[0], level)
        second = TwoPointMeasure(model, family.members[1], 2 * level)
        with pytest.raises(ParameterError):
            kl_divergence(first, second)


class TestFanoBound:
    def test_plateau_branch_for_small_samples(self):
        model, phi = _lab()
        eps = separation_for_code_length(model, phi, 1.0, 48)
        level = amplitude_for(phi, 1.0, model)
        out = fano_bound(48, m=1, epsilon=eps, d=1, amplitude=level)
        assert out["branch"] == "plateau"
        assert out["value"] == pytest.approx(1.0 / (1.0 + math.exp(-2.0)), abs=1e-12)

    def test_information_branch_decays_with_m(self):
        model, phi = _lab()
        eps = separation_for_code_length(model, phi, 1.0, 48)
        level = amplitude_for(phi, 1.0, model)
        mid = fano_bound(48, m=10**7, epsilon=eps, d=1, amplitude=level)
        late = fano_bound(48, m=2 * 10**7, epsilon=eps, d=1, amplitude=level)
        assert mid["branch"] == "information"
        assert late["value"] < mid["value"]

    def test_prefactor_cancellation(self):
        assert FANO_CONSTANT == pytest.approx(math.exp(-3.0 / math.e), abs=1e-15)
        assert FANO_CONSTANT == pytest.approx(0.3316621915110052, abs=1e-12)

    def test_code_length_validation(self):
        with pytest.raises(ParameterError):
            fano_bound(20, m=1, epsilon=0.01, d=1, amplitude=1.0)


class TestBayesError:
    def test_matches_the_normal_tail(self):
        assert bayes_error(np.array([3.0, 4.0]), 5.0) == pytest.approx(
            0.15865525393145707, rel=1e-12
        )

    def test_noiseless_edge_cases(self):
        assert bayes_error(np.array([1.0]), 0.0) == 0.0
        assert bayes_error(np.array([0.0]), 0.0) == 0.5

    def test_shrinks_with_separation(self):
        near = bayes_error(np.array([0.5]), 1.0)
        far = bayes_error(np.array([2.0]), 1.0)
        assert far < near


class TestEmpiricalFano:
    def test_small_run_is_consistent_with_the_bound(self):
        model, phi = _lab()
        out = empirical_fano_check(model, phi, 1.0, ell=24, m=64, trials=60, seed=0)
        assert out["N"] == 3
        assert out["trials"] == 60
        assert 0.0 <= out["observed_frequency"] <= 1.0
        assert out["consistent"]
