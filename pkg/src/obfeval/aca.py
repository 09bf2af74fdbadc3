"""Attack-centred analysis.

Concrete adversaries with (possibly wrong) beliefs, explicit attack
strategies, and profile-level scoring: information gain, expected
estimation error, and the min-conditional-entropy pair used to compare a
correct-prior adversary against a wrong-belief one.

The strategy term P(guess | observation) is factored as
(belief, Bayes update, decision rule); other factorings are possible but
this one makes every ingredient swappable and testable. Zero-evidence
observations (zero marginal probability under the belief) are not fatal:
the adversary keeps its belief and the fallback is flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .channel import (
    Alphabet,
    ObfuscationChannel,
    ProbVec,
    posterior,
)
from .errors import (
    AlphabetMismatchError,
    DistributionError,
    DogmaticExclusionError,
    UnknownLabelError,
    ZeroEvidenceError,
)


class DistortionFn:
    """Distortion d[guess][truth] >= 0, zero on matching labels.

    The greater the distortion the adversary ends up with, the better
    for the user.
    """

    __slots__ = ("guesses", "truths", "matrix")

    def __init__(self, guesses: Alphabet, truths: Alphabet, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        expected = (guesses.size, truths.size)
        if matrix.shape != expected:
            raise DistributionError(
                f"distortion matrix has shape {matrix.shape}, expected {expected}"
            )
        if np.any(matrix < 0):
            raise DistributionError("distortion entries must be non-negative")
        for g, lab in enumerate(guesses.labels):
            if lab in truths:
                t = truths.index(lab)
                if matrix[g, t] != 0.0:
                    raise DistributionError(
                        f"distortion must be zero on the diagonal, d[{lab!r}][{lab!r}] != 0"
                    )
        matrix = np.ascontiguousarray(matrix)
        matrix.flags.writeable = False
        object.__setattr__(self, "guesses", guesses)
        object.__setattr__(self, "truths", truths)
        object.__setattr__(self, "matrix", matrix)

    def __setattr__(self, name, value):
        raise AttributeError("DistortionFn is immutable")

    @classmethod
    def zero_one(cls, alphabet: Alphabet) -> "DistortionFn":
        return cls(alphabet, alphabet, 1.0 - np.eye(alphabet.size))


@dataclass(frozen=True)
class Strategy:
    """Row-stochastic attack strategy P(guess | observation)."""

    observation_alphabet: Alphabet
    guess_alphabet: Alphabet
    matrix: np.ndarray

    def __post_init__(self):
        ch = ObfuscationChannel(
            self.observation_alphabet, self.guess_alphabet, self.matrix
        )
        object.__setattr__(self, "matrix", ch.rows)


class AdversaryModel:
    """Belief prior, profiling map, and optional fixed strategy.

    ``psi`` maps input symbols to profile symbols and must be total over
    the belief's alphabet; None means the identity map (profiles are the
    inputs themselves).
    """

    __slots__ = ("belief", "psi", "strategy", "profile_alphabet")

    def __init__(
        self,
        belief: ProbVec,
        psi: Mapping[str, str] | None = None,
        strategy: Strategy | None = None,
    ):
        secrets = belief.alphabet
        if psi is None:
            psi_map = {x: x for x in secrets.labels}
        else:
            missing = [x for x in secrets.labels if x not in psi]
            if missing:
                raise UnknownLabelError(
                    f"profiling map is not total: missing {missing!r}"
                )
            psi_map = {x: str(psi[x]) for x in secrets.labels}
        profiles: list[str] = []
        for x in secrets.labels:
            if psi_map[x] not in profiles:
                profiles.append(psi_map[x])
        object.__setattr__(self, "belief", belief)
        object.__setattr__(self, "psi", psi_map)
        object.__setattr__(self, "strategy", strategy)
        object.__setattr__(self, "profile_alphabet", Alphabet(profiles))

    def __setattr__(self, name, value):
        raise AttributeError("AdversaryModel is immutable")

    def profile_of(self, x: str) -> str:
        return self.psi[str(x)]


@dataclass(frozen=True)
class BeliefUpdate:
    """Posterior belief plus whether the zero-evidence fallback fired."""

    dist: ProbVec
    used_fallback: bool


def belief_posterior(
    adversary: AdversaryModel, channel: ObfuscationChannel, observed
) -> BeliefUpdate:
    """Bayes update of the adversary's belief on one observation.

    When the observation has zero marginal probability under the belief
    (it contradicts the adversary's prior), the belief is returned
    unchanged with the fallback flag set; this is the documented
    contract, not an error.
    """
    if adversary.belief.alphabet != channel.input_alphabet:
        raise AlphabetMismatchError(
            "belief alphabet does not match channel input alphabet"
        )
    try:
        return BeliefUpdate(posterior(adversary.belief, channel, observed), False)
    except ZeroEvidenceError:
        channel.output_alphabet.index(observed)  # still reject unknown labels
        return BeliefUpdate(adversary.belief, True)


def information_gain(
    adversary: AdversaryModel,
    channel: ObfuscationChannel,
    true_secret,
    observed,
) -> float:
    """Bits gained about the true secret: log2 beta(x|e) - log2 beta(x).

    Negative when the observation misleads the adversary; -inf when it
    rules the truth out entirely under the belief. Undefined (raises
    DogmaticExclusionError) when the belief already excludes the truth.
    """
    prior_mass = adversary.belief[true_secret]
    if prior_mass <= 0.0:
        raise DogmaticExclusionError(
            f"belief assigns zero mass to the true secret {true_secret!r}"
        )
    post = belief_posterior(adversary, channel, observed).dist
    post_mass = post[true_secret]
    if post_mass <= 0.0:
        return -math.inf
    return math.log2(post_mass) - math.log2(prior_mass)


def expected_information_gain(
    true_prior: ProbVec, adversary: AdversaryModel, channel: ObfuscationChannel
) -> float:
    """Expectation of information gain over the true joint P(x, e).

    With a correct belief (beta == true prior) this equals the channel's
    mutual information under that prior.
    """
    if true_prior.alphabet != channel.input_alphabet:
        raise AlphabetMismatchError(
            "true prior alphabet does not match channel input alphabet"
        )
    beta = adversary.belief
    if beta.alphabet != true_prior.alphabet:
        raise AlphabetMismatchError("belief and true prior alphabets differ")
    excluded = (true_prior.mass > 0) & (beta.mass == 0)
    if np.any(excluded):
        labels = [
            lab for lab, b in zip(true_prior.alphabet.labels, excluded) if b
        ]
        raise DogmaticExclusionError(
            f"belief assigns zero mass to possible secrets {labels!r}"
        )
    rows = channel.rows
    beta_marginal = beta.mass @ rows
    total = 0.0
    for x in range(true_prior.alphabet.size):
        px = true_prior.mass[x]
        if px == 0.0:
            continue
        for e in range(channel.output_alphabet.size):
            weight = px * rows[x, e]
            if weight == 0.0:
                continue
            # beta-marginal is positive here: beta covers x and W[e|x] > 0
            gain = math.log2(rows[x, e] / beta_marginal[e])
            total += weight * gain
    return total


def map_strategy(
    adversary: AdversaryModel, channel: ObfuscationChannel
) -> Strategy:
    """Deterministic MAP attack at the profile level.

    For each observation the belief posterior is pushed through the
    profiling map and all mass goes to the maximum-probability profile;
    ties break to the lowest profile index. Zero-evidence observations
    fall back to the prior belief.
    """
    profiles = adversary.profile_alphabet
    n_out = channel.output_alphabet.size
    push = np.zeros((adversary.belief.alphabet.size, profiles.size))
    for i, x in enumerate(adversary.belief.alphabet.labels):
        push[i, profiles.index(adversary.profile_of(x))] = 1.0
    matrix = np.zeros((n_out, profiles.size))
    for e, label in enumerate(channel.output_alphabet.labels):
        post = belief_posterior(adversary, channel, label).dist
        profile_mass = post.mass @ push
        matrix[e, int(np.argmax(profile_mass))] = 1.0
    return Strategy(channel.output_alphabet, profiles, matrix)


def profile_channel(
    input_prior: ProbVec,
    channel: ObfuscationChannel,
    adversary: AdversaryModel,
) -> tuple[ProbVec, ObfuscationChannel]:
    """Collapse an input-level channel to the profile level via psi.

    Returns (profile prior, channel P(e | profile)). Profiles with zero
    prior mass get a uniform row; they contribute nothing to any
    expectation taken under the returned prior.
    """
    if input_prior.alphabet != channel.input_alphabet:
        raise AlphabetMismatchError(
            "input prior alphabet does not match channel input alphabet"
        )
    profiles = adversary.profile_alphabet
    n_profiles = profiles.size
    n_out = channel.output_alphabet.size
    mass = np.zeros(n_profiles)
    rows = np.zeros((n_profiles, n_out))
    for i, x in enumerate(input_prior.alphabet.labels):
        f = profiles.index(adversary.profile_of(x))
        mass[f] += input_prior.mass[i]
        rows[f] += input_prior.mass[i] * channel.rows[i]
    for f in range(n_profiles):
        if mass[f] > 0.0:
            rows[f] /= mass[f]
        else:
            rows[f] = 1.0 / n_out
    return ProbVec(profiles, mass), ObfuscationChannel(
        profiles, channel.output_alphabet, rows
    )


def expected_estimation_error(
    profile_prior: ProbVec,
    channel: ObfuscationChannel,
    strategy: Strategy,
    distortion: DistortionFn,
) -> float:
    """Distortion-weighted adversarial error; higher is better for the user.

    Triple sum over true profile, observation, and guess:
    sum_f P(f) sum_e P(e|f) sum_g S(g|e) d(g, f).

    ``channel`` must already be at the profile level (see
    :func:`profile_channel`), or input-level with the identity profiling
    map, which is the same computation on raw inputs.
    """
    if profile_prior.alphabet != channel.input_alphabet:
        raise AlphabetMismatchError(
            "profile prior alphabet does not match channel input alphabet"
        )
    if strategy.observation_alphabet != channel.output_alphabet:
        raise AlphabetMismatchError(
            "strategy observation alphabet does not match channel output alphabet"
        )
    if strategy.guess_alphabet != distortion.guesses:
        raise AlphabetMismatchError(
            "strategy guess alphabet does not match distortion guess alphabet"
        )
    if distortion.truths != profile_prior.alphabet:
        raise AlphabetMismatchError(
            "distortion truth alphabet does not match profile alphabet"
        )
    # T[e, f] = sum_g S(g|e) d(g, f)
    expected_d = strategy.matrix @ distortion.matrix
    return float(
        np.einsum("f,fe,ef->", profile_prior.mass, channel.rows, expected_d)
    )


def expected_distortion_privacy(
    public_prior: ProbVec,
    channel: ObfuscationChannel,
    strategy: Strategy,
    distortion: DistortionFn,
) -> float:
    """Estimation error averaged under an estimated public prior.

    Same triple sum as :func:`expected_estimation_error`, but the outer
    expectation uses a publicly estimated prior (an optimizer's stand-in
    for the adversary's knowledge) rather than the true profile
    distribution; the wrong-belief adversary lives in the strategy term
    instead.
    """
    return expected_estimation_error(public_prior, channel, strategy, distortion)


def min_conditional_entropy(prior: ProbVec, channel: ObfuscationChannel) -> float:
    """-log2 of the MAP adversary's success probability after observing."""
    if prior.alphabet != channel.input_alphabet:
        raise AlphabetMismatchError(
            "prior alphabet does not match channel input alphabet"
        )
    success = float((prior.mass[:, None] * channel.rows).max(axis=0).sum())
    if success <= 0.0:
        return math.inf
    return -math.log2(success)


def belief_min_conditional_entropy(
    prior: ProbVec, belief: ProbVec, channel: ObfuscationChannel
) -> float:
    """Uncertainty of a wrong-belief MAP adversary, scored on the truth.

    The adversary guesses argmax_x belief(x) W[e|x] per observation
    (lowest index on ties); the success probability is evaluated under
    the true prior. Never below the correct-prior value.
    """
    if prior.alphabet != channel.input_alphabet:
        raise AlphabetMismatchError(
            "prior alphabet does not match channel input alphabet"
        )
    if belief.alphabet != prior.alphabet:
        raise AlphabetMismatchError("belief and prior alphabets differ")
    excluded = (prior.mass > 0) & (belief.mass == 0)
    if np.any(excluded):
        labels = [lab for lab, b in zip(prior.alphabet.labels, excluded) if b]
        raise DogmaticExclusionError(
            f"belief assigns zero mass to possible secrets {labels!r}"
        )
    scores = belief.mass[:, None] * channel.rows
    guesses = np.argmax(scores, axis=0)
    success = 0.0
    for e in range(channel.output_alphabet.size):
        x = int(guesses[e])
        success += prior.mass[x] * channel.rows[x, e]
    if success <= 0.0:
        return math.inf
    return -math.log2(success)
