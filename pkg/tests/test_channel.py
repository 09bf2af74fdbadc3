"""Tests for the discrete probability substrate."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import bsc, make_alphabet, random_channel, random_prior
from obfeval.channel import (
    Alphabet,
    JointDist,
    ObfuscationChannel,
    ProbVec,
    cascade,
    conditional_entropy,
    delta_dist,
    deterministic_channel,
    entropy,
    joint,
    kl_divergence,
    output_marginal,
    posterior,
)
from obfeval.errors import (
    AbsoluteContinuityError,
    AlphabetMismatchError,
    DistributionError,
    UnknownLabelError,
    ZeroEvidenceError,
)


class TestAlphabet:
    def test_unique_labels_required(self):
        with pytest.raises(DistributionError):
            Alphabet(["a", "a"])

    def test_empty_rejected(self):
        with pytest.raises(DistributionError):
            Alphabet([])

    def test_integers(self):
        a = Alphabet.integers(0, 4)
        assert a.labels == ("0", "1", "2", "3", "4")
        assert a.as_integers() == [0, 1, 2, 3, 4]

    def test_index_unknown(self):
        with pytest.raises(UnknownLabelError):
            Alphabet(["a", "b"]).index("c")


class TestProbVec:
    def test_negative_rejected(self):
        with pytest.raises(DistributionError):
            ProbVec(make_alphabet(2), [1.2, -0.2])

    def test_sum_off_by_more_than_tolerance_rejected(self):
        with pytest.raises(DistributionError):
            ProbVec(make_alphabet(2), [0.5, 0.5 + 1e-6])

    def test_renormalizes_within_tolerance(self):
        p = ProbVec(make_alphabet(2), [0.5, 0.5 + 5e-10])
        assert p.mass.sum() == 1.0

    def test_immutable(self):
        p = ProbVec(make_alphabet(2), [0.5, 0.5])
        with pytest.raises((AttributeError, ValueError)):
            p.mass[0] = 0.9


class TestDeltaDist:
    def test_middle_symbol(self):
        a = Alphabet(["a", "b", "c"])
        assert delta_dist(a, "b").mass.tolist() == [0.0, 1.0, 0.0]

    def test_singleton(self):
        assert delta_dist(Alphabet(["a"]), "a").mass.tolist() == [1.0]

    def test_unknown_label(self):
        with pytest.raises(UnknownLabelError):
            delta_dist(Alphabet(["a", "b"]), "c")


class TestJoint:
    def test_identity_channel_uniform(self):
        a = make_alphabet(2)
        j = joint(ProbVec.uniform(a), ObfuscationChannel.identity(a))
        assert j.mass.tolist() == [[0.5, 0.0], [0.0, 0.5]]

    def test_degenerate_prior(self):
        a = make_alphabet(2)
        ch = bsc(0.25)
        j = joint(delta_dist(ch.input_alphabet, "0"), ch)
        assert j.mass.tolist() == [[0.75, 0.25], [0.0, 0.0]]

    def test_uniform_bsc_hand_multiplied(self):
        # frozen from the brute-force enumeration oracle
        expected = oracles.joint_oracle([0.5, 0.5], [[0.75, 0.25], [0.25, 0.75]])
        assert expected == [[0.375, 0.125], [0.125, 0.375]]
        j = joint(ProbVec.uniform(bsc(0.25).input_alphabet), bsc(0.25))
        assert j.mass.tolist() == expected

    def test_alphabet_mismatch(self):
        with pytest.raises(AlphabetMismatchError):
            joint(ProbVec.uniform(make_alphabet(3)), bsc(0.25))


class TestPosterior:
    def test_uniform_bsc_observe_zero(self):
        ch = bsc(0.25)
        expected = oracles.posterior_oracle([0.5, 0.5], [[0.75, 0.25], [0.25, 0.75]], 0)
        assert expected == [0.75, 0.25]
        post = posterior(ProbVec.uniform(ch.input_alphabet), ch, "0")
        assert post.mass.tolist() == expected

    def test_identity_channel_reaches_delta(self, np_rng):
        a = make_alphabet(3)
        prior = random_prior(np_rng, a)
        post = posterior(prior, ObfuscationChannel.identity(a), "x1")
        assert post == delta_dist(a, "x1")

    def test_zero_evidence(self):
        a = make_alphabet(2)
        ch = ObfuscationChannel(a, a, [[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(ZeroEvidenceError):
            posterior(delta_dist(a, "x0"), ch, "x1")

    def test_remarginalization_reproduces_prior(self, np_rng):
        for _ in range(50):
            ch = random_channel(np_rng, 3, 4)
            prior = random_prior(np_rng, ch.input_alphabet)
            marginal = output_marginal(prior, ch)
            acc = np.zeros(3)
            for e in ch.output_alphabet.labels:
                acc += marginal[e] * posterior(prior, ch, e).mass
            assert np.allclose(acc, prior.mass, atol=1e-9)


class TestEntropy:
    def test_uniform_four(self):
        assert entropy(ProbVec.uniform(make_alphabet(4))) == 2.0

    def test_delta_zero(self):
        assert entropy(delta_dist(make_alphabet(3), "x0")) == 0.0

    def test_direct_evaluation(self):
        # frozen from -sum p log2 p
        expected = oracles.entropy_oracle([0.75, 0.25])
        assert abs(expected - 0.8112781244591328) < 1e-15
        p = ProbVec(make_alphabet(2), [0.75, 0.25])
        assert abs(entropy(p) - expected) < 1e-12

    @given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=8))
    @settings(max_examples=200)
    def test_bounded_by_log_size(self, raw):
        mass = np.array(raw) / sum(raw)
        p = ProbVec(make_alphabet(len(raw)), mass)
        h = entropy(p)
        assert -1e-9 <= h <= math.log2(len(raw)) + 1e-9
        if abs(h - math.log2(len(raw))) < 1e-9:
            assert np.allclose(mass, 1.0 / len(raw), atol=1e-6)


class TestConditionalEntropyAndKl:
    def test_kl_identical_is_zero(self, np_rng):
        p = random_prior(np_rng, make_alphabet(4))
        assert kl_divergence(p, p) == 0.0

    def test_identity_channel_conditional_entropy_zero(self, np_rng):
        a = make_alphabet(3)
        prior = random_prior(np_rng, a)
        j = joint(prior, ObfuscationChannel.identity(a))
        assert conditional_entropy(j) < 1e-12

    def test_kl_delta_vs_uniform(self):
        a = make_alphabet(2)
        expected = oracles.kl_oracle([1.0, 0.0], [0.5, 0.5])
        assert expected == 1.0
        assert kl_divergence(delta_dist(a, "x0"), ProbVec.uniform(a)) == 1.0

    def test_absolute_continuity(self):
        a = make_alphabet(2)
        with pytest.raises(AbsoluteContinuityError):
            kl_divergence(ProbVec.uniform(a), delta_dist(a, "x0"))

    def test_kl_nonnegative_on_random_pairs(self, np_rng):
        # Gibbs inequality on 1000 random pairs
        a = make_alphabet(5)
        for _ in range(1000):
            p = random_prior(np_rng, a)
            q = random_prior(np_rng, a)
            assert kl_divergence(p, q) >= 0.0

    def test_conditional_entropy_matches_oracle(self, np_rng):
        for _ in range(20):
            ch = random_channel(np_rng, 3, 3)
            prior = random_prior(np_rng, ch.input_alphabet)
            j = joint(prior, ch)
            expected = oracles.conditional_entropy_oracle(j.mass.tolist())
            assert abs(conditional_entropy(j) - expected) < 1e-10


class TestCascade:
    def test_identity_composition(self, np_rng):
        ch = random_channel(np_rng, 3, 3)
        composed = cascade(ObfuscationChannel.identity(ch.input_alphabet), ch)
        assert np.array_equal(composed.rows, ch.rows)

    def test_bsc_composition_closed_form(self):
        p, q = 0.25, 0.1
        composed = cascade(bsc(p), bsc(q))
        flip = p + q - 2 * p * q
        assert np.allclose(
            composed.rows, [[1 - flip, flip], [flip, 1 - flip]], atol=1e-15
        )

    def test_perfectly_noisy_absorbs(self, np_rng):
        ch = random_channel(np_rng, 3, 3)
        noisy = ObfuscationChannel.constant_rows(
            ch.output_alphabet, ProbVec.uniform(ch.output_alphabet)
        )
        composed = cascade(ch, noisy)
        assert np.allclose(composed.rows, 1.0 / 3, atol=1e-12)

    def test_rows_stay_stochastic(self, np_rng):
        for _ in range(100):
            first = random_channel(np_rng, 3, 4)
            rows = np_rng.random((4, 2)) + 1e-3
            rows /= rows.sum(axis=1, keepdims=True)
            second = ObfuscationChannel(
                first.output_alphabet, make_alphabet(2, "z"), rows
            )
            composed = cascade(first, second)
            assert np.all(np.abs(composed.rows.sum(axis=1) - 1.0) <= 1e-9)

    def test_alphabet_mismatch(self, np_rng):
        with pytest.raises(AlphabetMismatchError):
            cascade(random_channel(np_rng, 2, 3), random_channel(np_rng, 2, 3))


class TestSerialization:
    def test_channel_round_trip_value_exact(self):
        a = Alphabet(["0", "1"])
        rows = [[0.123456789012345, 0.876543210987655], [0.5, 0.5]]
        ch = ObfuscationChannel(a, a, rows)
        again = ObfuscationChannel.from_json(ch.to_json())
        assert np.array_equal(again.rows, ch.rows)
        assert again.input_alphabet == a

    def test_distribution_round_trip(self):
        p = ProbVec(Alphabet(["a", "b", "c"]), [0.25, 0.5, 0.25])
        assert ProbVec.from_json(p.to_json()) == p

    def test_channel_json_shape(self):
        ch = bsc(0.25)
        doc = json.loads(ch.to_json())
        assert set(doc) == {"alphabet", "rows"}
        assert doc["alphabet"] == ["0", "1"]

    def test_non_square_channel_keeps_output_alphabet(self):
        a = Alphabet(["a", "b"])
        out = Alphabet(["G"])
        ch = deterministic_channel(a, out, {"a": "G", "b": "G"})
        again = ObfuscationChannel.from_json(ch.to_json())
        assert again.output_alphabet == out

    @given(
        st.lists(
            st.floats(0.0, 1.0, allow_nan=False).map(lambda v: round(v, 15)),
            min_size=2,
            max_size=6,
        )
    )
    @settings(max_examples=100)
    def test_fifteen_digit_literals_round_trip(self, raw):
        total = sum(raw)
        if total <= 0:
            return
        mass = [v / total for v in raw]
        p = ProbVec(make_alphabet(len(raw)), mass)
        assert ProbVec.from_json(p.to_json()) == p


class TestJointDist:
    def test_marginals_valid(self, np_rng):
        ch = random_channel(np_rng, 3, 4)
        prior = random_prior(np_rng, ch.input_alphabet)
        j = joint(prior, ch)
        assert np.allclose(j.input_marginal().mass, prior.mass, atol=1e-12)
        assert abs(j.output_marginal().mass.sum() - 1.0) < 1e-12

    def test_total_mass_checked(self):
        a = make_alphabet(2)
        with pytest.raises(DistributionError):
            JointDist(a, a, [[0.5, 0.5], [0.5, 0.5]])
