"""Tests for attack-centred measures: beliefs, gains, estimation error."""

import math

import numpy as np
import pytest

import oracles
from conftest import bsc, make_alphabet, random_channel, random_prior
from obfeval.aca import (
    AdversaryModel,
    DistortionFn,
    Strategy,
    belief_min_conditional_entropy,
    belief_posterior,
    expected_distortion_privacy,
    expected_estimation_error,
    expected_information_gain,
    information_gain,
    map_strategy,
    min_conditional_entropy,
    profile_channel,
)
from obfeval.channel import Alphabet, ObfuscationChannel, ProbVec, delta_dist
from obfeval.errors import DistributionError, DogmaticExclusionError
from obfeval.mca import mutual_information


def perfectly_noisy(n_in, n_out=None):
    n_out = n_out or n_in
    return ObfuscationChannel.constant_rows(
        make_alphabet(n_in), ProbVec.uniform(make_alphabet(n_out, "e"))
    )


class TestBeliefPosterior:
    def test_identity_channel_true_belief(self):
        a = make_alphabet(2)
        adversary = AdversaryModel(ProbVec.uniform(a))
        update = belief_posterior(adversary, ObfuscationChannel.identity(a), "x0")
        assert update.dist == delta_dist(a, "x0")
        assert not update.used_fallback

    def test_dogmatic_belief_never_moves(self):
        ch = bsc(0.25)
        adversary = AdversaryModel(delta_dist(ch.input_alphabet, "1"))
        for observed in ("0", "1"):
            update = belief_posterior(adversary, ch, observed)
            assert update.dist.mass.tolist() == [0.0, 1.0]
            assert not update.used_fallback  # W[e|x1] > 0 for both outputs

    def test_wrong_prior_bayes_arithmetic(self):
        # frozen from the direct Bayes oracle:
        # (0.9*0.25, 0.1*0.75) / 0.3 = (0.75, 0.25)
        expected = oracles.posterior_oracle(
            [0.9, 0.1], [[0.75, 0.25], [0.25, 0.75]], 1
        )
        assert np.allclose(expected, [0.75, 0.25], atol=1e-15)
        ch = bsc(0.25)
        adversary = AdversaryModel(ProbVec(ch.input_alphabet, [0.9, 0.1]))
        update = belief_posterior(adversary, ch, "1")
        assert np.allclose(update.dist.mass, expected, atol=1e-15)

    def test_zero_evidence_falls_back_flagged(self):
        a = make_alphabet(2)
        ch = ObfuscationChannel.identity(a)
        adversary = AdversaryModel(delta_dist(a, "x0"))
        update = belief_posterior(adversary, ch, "x1")
        assert update.used_fallback
        assert update.dist == adversary.belief


class TestInformationGain:
    def test_identity_channel_uniform_belief_one_bit(self):
        a = make_alphabet(2)
        adversary = AdversaryModel(ProbVec.uniform(a))
        gain = information_gain(
            adversary, ObfuscationChannel.identity(a), "x0", "x0"
        )
        assert gain == 1.0

    def test_perfectly_noisy_zero(self, np_rng):
        adversary = AdversaryModel(random_prior(np_rng, make_alphabet(3)))
        ch = perfectly_noisy(3)
        for e in ch.output_alphabet.labels:
            assert information_gain(adversary, ch, "x1", e) == 0.0

    def test_wrong_prior_corrected(self):
        # log2(0.25) - log2(0.1) = 1.3219... bits
        ch = bsc(0.25)
        adversary = AdversaryModel(ProbVec(ch.input_alphabet, [0.9, 0.1]))
        gain = information_gain(adversary, ch, "1", "1")
        expected = math.log2(0.25) - math.log2(0.1)
        assert abs(expected - 1.3219280948873622) < 1e-15
        assert abs(gain - expected) < 1e-12

    def test_can_be_negative(self):
        ch = bsc(0.25)
        adversary = AdversaryModel(ProbVec.uniform(ch.input_alphabet))
        # observing the flipped symbol misleads the adversary
        assert information_gain(adversary, ch, "0", "1") < 0.0

    def test_dogmatic_exclusion(self):
        a = make_alphabet(2)
        adversary = AdversaryModel(delta_dist(a, "x0"))
        with pytest.raises(DogmaticExclusionError):
            information_gain(
                adversary,
                ObfuscationChannel.identity(a),
                "x1",
                "x1",
            )


class TestExpectedInformationGain:
    def test_correct_belief_equals_mutual_information(self, np_rng):
        for _ in range(100):
            ch = random_channel(np_rng, 5, 5)
            prior = random_prior(np_rng, ch.input_alphabet)
            adversary = AdversaryModel(prior)
            gain = expected_information_gain(prior, adversary, ch)
            assert abs(gain - mutual_information(prior, ch)) < 1e-9

    def test_perfectly_noisy_zero(self, np_rng):
        prior = random_prior(np_rng, make_alphabet(3))
        adversary = AdversaryModel(random_prior(np_rng, make_alphabet(3)))
        assert expected_information_gain(prior, adversary, perfectly_noisy(3)) == 0.0

    def test_wrong_belief_matches_oracle(self):
        ch = bsc(0.1)
        true_prior = ProbVec.uniform(ch.input_alphabet)
        belief = ProbVec(ch.input_alphabet, [0.99, 0.01])
        adversary = AdversaryModel(belief)
        got = expected_information_gain(true_prior, adversary, ch)
        expected = oracles.expected_info_gain_oracle(
            [0.5, 0.5], [0.99, 0.01], [[0.9, 0.1], [0.1, 0.9]]
        )
        assert abs(got - expected) < 1e-12

    def test_nonnegative_under_correct_belief(self, np_rng):
        for _ in range(50):
            ch = random_channel(np_rng, 3, 4)
            prior = random_prior(np_rng, ch.input_alphabet)
            assert (
                expected_information_gain(prior, AdversaryModel(prior), ch)
                >= -1e-12
            )

    def test_dogmatic_exclusion(self):
        a = make_alphabet(2)
        with pytest.raises(DogmaticExclusionError):
            expected_information_gain(
                ProbVec.uniform(a),
                AdversaryModel(delta_dist(a, "x0")),
                ObfuscationChannel.identity(a),
            )


class TestMapStrategy:
    def test_identity_channel_identity_strategy(self, np_rng):
        a = make_alphabet(3)
        adversary = AdversaryModel(random_prior(np_rng, a))
        strategy = map_strategy(adversary, ObfuscationChannel.identity(a))
        assert np.array_equal(strategy.matrix, np.eye(3))

    def test_perfectly_noisy_constant_guess(self):
        a = make_alphabet(3)
        adversary = AdversaryModel(ProbVec(a, [0.2, 0.5, 0.3]))
        strategy = map_strategy(adversary, perfectly_noisy(3))
        assert np.array_equal(strategy.matrix[:, 1], np.ones(3))

    def test_tie_breaks_to_lowest_index(self):
        # belief (0.6, 0.4) against flip probability 0.4: observing e1
        # yields exactly (0.24, 0.24), a tie, resolved to x0
        ch = bsc(0.4)
        adversary = AdversaryModel(ProbVec(ch.input_alphabet, [0.6, 0.4]))
        strategy = map_strategy(adversary, ch)
        assert strategy.matrix[1].tolist() == [1.0, 0.0]
        # and the unambiguous observation picks x0 as well
        assert strategy.matrix[0].tolist() == [1.0, 0.0]

    def test_guess_flips_when_posterior_crosses_half(self):
        ch = bsc(0.25)
        adversary = AdversaryModel(ProbVec(ch.input_alphabet, [0.4, 0.6]))
        strategy = map_strategy(adversary, ch)
        # e0: 0.4*0.75=0.3 vs 0.6*0.25=0.15 -> x0; e1: 0.1 vs 0.45 -> x1
        assert strategy.matrix.tolist() == [[1.0, 0.0], [0.0, 1.0]]

    def test_profile_level_strategy(self):
        a = make_alphabet(4)
        adversary = AdversaryModel(
            ProbVec.uniform(a), psi={"x0": "p0", "x1": "p0", "x2": "p1", "x3": "p1"}
        )
        strategy = map_strategy(adversary, ObfuscationChannel.identity(a))
        assert strategy.guess_alphabet.labels == ("p0", "p1")
        assert strategy.matrix.tolist() == [
            [1.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.0, 1.0],
        ]


class TestExpectedEstimationError:
    def test_identity_channel_map_zero(self, np_rng):
        a = make_alphabet(3)
        prior = random_prior(np_rng, a)
        adversary = AdversaryModel(prior)
        ch = ObfuscationChannel.identity(a)
        strategy = map_strategy(adversary, ch)
        eee = expected_estimation_error(
            prior, ch, strategy, DistortionFn.zero_one(a)
        )
        assert eee == 0.0

    def test_perfectly_noisy_uniform4_map_three_quarters(self):
        a = make_alphabet(4)
        prior = ProbVec.uniform(a)
        ch = perfectly_noisy(4)
        strategy = map_strategy(AdversaryModel(prior), ch)
        eee = expected_estimation_error(
            prior, ch, strategy, DistortionFn.zero_one(a)
        )
        assert eee == 0.75

    def test_zero_distortion_gives_zero(self, np_rng):
        a = make_alphabet(3)
        prior = random_prior(np_rng, a)
        ch = random_channel(np_rng, 3, 3)
        strategy = map_strategy(AdversaryModel(prior), ch)
        distortion = DistortionFn(a, a, np.zeros((3, 3)))
        assert expected_estimation_error(prior, ch, strategy, distortion) == 0.0

    def test_matches_brute_force_triple_sum(self, np_rng):
        for _ in range(100):
            n_phi = int(np_rng.integers(2, 5))
            n_out = int(np_rng.integers(2, 5))
            phi = make_alphabet(n_phi, "f")
            out = make_alphabet(n_out, "e")
            guesses = make_alphabet(n_phi, "f")
            prior = random_prior(np_rng, phi)
            rows = np_rng.random((n_phi, n_out)) + 1e-3
            rows /= rows.sum(axis=1, keepdims=True)
            ch = ObfuscationChannel(phi, out, rows)
            smatrix = np_rng.random((n_out, n_phi)) + 1e-3
            smatrix /= smatrix.sum(axis=1, keepdims=True)
            strategy = Strategy(out, guesses, smatrix)
            d = np_rng.random((n_phi, n_phi))
            np.fill_diagonal(d, 0.0)
            distortion = DistortionFn(guesses, phi, d)
            got = expected_estimation_error(prior, ch, strategy, distortion)
            expected = oracles.eee_oracle(
                prior.mass.tolist(),
                ch.rows.tolist(),
                strategy.matrix.tolist(),
                distortion.matrix.tolist(),
            )
            assert abs(got - expected) < 1e-12

    def test_bounds_for_zero_one_map(self, np_rng):
        for _ in range(200):
            n = int(np_rng.integers(2, 5))
            a = make_alphabet(n)
            prior = random_prior(np_rng, a)
            ch = random_channel(np_rng, n, int(np_rng.integers(2, 5)))
            strategy = map_strategy(AdversaryModel(prior), ch)
            eee = expected_estimation_error(
                prior, ch, strategy, DistortionFn.zero_one(a)
            )
            assert -1e-12 <= eee <= 1.0 - prior.mass.max() + 1e-12
            # identity channel can only help the adversary
            ch_id = ObfuscationChannel.identity(a)
            eee_id = expected_estimation_error(
                prior,
                ch_id,
                map_strategy(AdversaryModel(prior), ch_id),
                DistortionFn.zero_one(a),
            )
            assert eee_id <= eee + 1e-12

    def test_perfectly_noisy_reaches_upper_bound(self, np_rng):
        a = make_alphabet(4)
        prior = random_prior(np_rng, a)
        ch = perfectly_noisy(4)
        strategy = map_strategy(AdversaryModel(prior), ch)
        eee = expected_estimation_error(
            prior, ch, strategy, DistortionFn.zero_one(a)
        )
        assert abs(eee - (1.0 - prior.mass.max())) < 1e-12

    def test_profile_collapse_with_psi(self):
        # push a 4-symbol input through a 2-profile map and check Eq-style
        # numbers against the brute-force oracle on the collapsed model
        a = make_alphabet(4)
        prior = ProbVec(a, [0.4, 0.1, 0.3, 0.2])
        rows = [
            [0.7, 0.1, 0.1, 0.1],
            [0.1, 0.7, 0.1, 0.1],
            [0.1, 0.1, 0.7, 0.1],
            [0.1, 0.1, 0.1, 0.7],
        ]
        ch = ObfuscationChannel(a, make_alphabet(4, "e"), rows)
        adversary = AdversaryModel(
            prior, psi={"x0": "p0", "x1": "p0", "x2": "p1", "x3": "p1"}
        )
        profile_prior, profile_ch = profile_channel(prior, ch, adversary)
        assert profile_prior.mass.tolist() == [0.5, 0.5]
        strategy = map_strategy(adversary, ch)
        got = expected_estimation_error(
            profile_prior,
            profile_ch,
            strategy,
            DistortionFn.zero_one(adversary.profile_alphabet),
        )
        expected = oracles.eee_oracle(
            profile_prior.mass.tolist(),
            profile_ch.rows.tolist(),
            strategy.matrix.tolist(),
            DistortionFn.zero_one(adversary.profile_alphabet).matrix.tolist(),
        )
        assert abs(got - expected) < 1e-15

    def test_estimated_public_prior_variant(self, np_rng):
        a = make_alphabet(3)
        true_prior = ProbVec(a, [0.5, 0.25, 0.25])
        public_prior = ProbVec(a, [0.8, 0.1, 0.1])
        ch = random_channel(np_rng, 3, 3)
        strategy = map_strategy(AdversaryModel(true_prior), ch)
        d = DistortionFn.zero_one(a)
        eee_true = expected_estimation_error(true_prior, ch, strategy, d)
        edp = expected_distortion_privacy(public_prior, ch, strategy, d)
        assert eee_true != edp
        assert edp == expected_estimation_error(public_prior, ch, strategy, d)


class TestDistortionFn:
    def test_diagonal_must_be_zero(self):
        a = make_alphabet(2)
        with pytest.raises(DistributionError):
            DistortionFn(a, a, [[0.5, 1.0], [1.0, 0.0]])

    def test_negative_rejected(self):
        a = make_alphabet(2)
        with pytest.raises(DistributionError):
            DistortionFn(a, a, [[0.0, -1.0], [1.0, 0.0]])


class TestMinConditionalEntropy:
    def test_identity_uniform_zero(self):
        a = make_alphabet(4)
        got = min_conditional_entropy(
            ProbVec.uniform(a), ObfuscationChannel.identity(a)
        )
        assert got == 0.0

    def test_perfectly_noisy_uniform_two_bits(self):
        assert (
            min_conditional_entropy(ProbVec.uniform(make_alphabet(4)), perfectly_noisy(4))
            == 2.0
        )

    def test_matches_oracle(self, np_rng):
        for _ in range(50):
            ch = random_channel(np_rng, 3, 3)
            prior = random_prior(np_rng, ch.input_alphabet)
            expected = oracles.min_cond_entropy_oracle(
                prior.mass.tolist(), ch.rows.tolist()
            )
            assert abs(min_conditional_entropy(prior, ch) - expected) < 1e-12

    def test_hamadou_inequality_thousand_triples(self, np_rng):
        violations = 0
        for _ in range(1000):
            ch = random_channel(np_rng, 3, 3)
            prior = random_prior(np_rng, ch.input_alphabet)
            belief = random_prior(np_rng, ch.input_alphabet)
            true_h = min_conditional_entropy(prior, ch)
            belief_h = belief_min_conditional_entropy(prior, belief, ch)
            if true_h > belief_h:
                violations += 1
        assert violations == 0

    def test_belief_variant_matches_oracle(self, np_rng):
        for _ in range(50):
            ch = random_channel(np_rng, 3, 3)
            prior = random_prior(np_rng, ch.input_alphabet)
            belief = random_prior(np_rng, ch.input_alphabet)
            expected = oracles.belief_min_cond_entropy_oracle(
                prior.mass.tolist(), belief.mass.tolist(), ch.rows.tolist()
            )
            got = belief_min_conditional_entropy(prior, belief, ch)
            assert abs(got - expected) < 1e-12

    def test_dogmatic_belief_rejected(self):
        ch = bsc(0.25)
        a = ch.input_alphabet
        with pytest.raises(DogmaticExclusionError):
            belief_min_conditional_entropy(
                ProbVec.uniform(a), delta_dist(a, "0"), ch
            )
