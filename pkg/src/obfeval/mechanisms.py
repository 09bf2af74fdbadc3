"""Concrete obfuscation mechanisms.

Each mechanism exposes both a seeded sampler and an exact channel
extraction, so empirical behavior can always be checked against the
matrix the measures are computed from.

Mechanisms are immutable and hold no random state; sampling takes an
explicit Rng handle. Distinct Rng instances may be used in parallel, a
single instance must not be shared concurrently.
"""

from __future__ import annotations

import itertools
import math
from typing import Mapping, Sequence

import numpy as np

from .channel import Alphabet, ObfuscationChannel, ProbVec, deterministic_channel
from .errors import (
    AlphabetMismatchError,
    ConfigurationError,
    IncompletePartitionError,
    ParameterRangeError,
    UnknownLabelError,
    UnknownMechanismError,
    ZeroEvidenceError,
)

SEQUENCE_SEPARATOR = "|"


class Rng:
    """Deterministic sample stream: numpy PCG64 seeded with a 64-bit integer.

    PCG64 is numpy's documented default bit generator; an identical seed
    yields an identical stream, which the trace-level determinism
    contract relies on.
    """

    __slots__ = ("seed", "generator")

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ParameterRangeError(
                f"seed must be an unsigned 64-bit integer, got {seed!r}"
            )
        self.seed = seed
        self.generator = np.random.Generator(np.random.PCG64(seed))

    def choice_index(self, mass: np.ndarray) -> int:
        return int(self.generator.choice(len(mass), p=mass))

    def integer(self, upper: int) -> int:
        """Uniform draw from 0..upper-1."""
        return int(self.generator.integers(0, upper))


class Mechanism:
    """An obfuscator: named parameters, exact channel, seeded sampler."""

    def __init__(
        self,
        name: str,
        channel: ObfuscationChannel,
        parameters: Mapping | None = None,
    ):
        self.name = name
        self._channel = channel
        self.parameters = dict(parameters or {})

    @property
    def input_alphabet(self) -> Alphabet:
        return self._channel.input_alphabet

    @property
    def output_alphabet(self) -> Alphabet:
        return self._channel.output_alphabet

    def to_channel(self) -> ObfuscationChannel:
        return self._channel

    def delivery_channel(self) -> ObfuscationChannel:
        """Channel from real input to what utility scoring sees.

        For symbol-modifying mechanisms the service acts on the
        obfuscated symbol, so delivery equals the obfuscation channel.
        Chaff overrides this: dummy responses are filtered out.
        """
        return self._channel

    def sample(self, label: str, rng: Rng) -> str:
        """One obfuscated output for the given input symbol."""
        row = self._channel.rows[self.input_alphabet.index(label)]
        return self.output_alphabet.labels[rng.choice_index(row)]

    def sample_counts(self, label: str, n: int, rng: Rng) -> np.ndarray:
        """Histogram of n samples over the output alphabet."""
        row = self._channel.rows[self.input_alphabet.index(label)]
        draws = rng.generator.choice(self.output_alphabet.size, size=n, p=row)
        return np.bincount(draws, minlength=self.output_alphabet.size)

    def __repr__(self) -> str:
        return f"Mechanism({self.name!r}, {self.parameters!r})"


def identity_mechanism(alphabet: Alphabet) -> Mechanism:
    """No-op obfuscator; the INEFFECTIVE reference point."""
    return Mechanism("identity", ObfuscationChannel.identity(alphabet))


class RandomizedResponseMechanism(Mechanism):
    """Keeps the input with probability stay_prob, else a uniform other symbol."""

    def sample(self, label: str, rng: Rng) -> str:
        i = self.input_alphabet.index(label)
        p = self.parameters["stay_prob"]
        if rng.generator.random() < p:
            return label
        other = rng.integer(self.input_alphabet.size - 1)
        if other >= i:
            other += 1
        return self.output_alphabet.labels[other]

    def sample_counts(self, label: str, n: int, rng: Rng) -> np.ndarray:
        i = self.input_alphabet.index(label)
        p = self.parameters["stay_prob"]
        size = self.input_alphabet.size
        keep = rng.generator.random(n) < p
        others = rng.generator.integers(0, size - 1, size=n)
        others = np.where(others >= i, others + 1, others)
        draws = np.where(keep, i, others)
        return np.bincount(draws, minlength=size)


def randomized_response(alphabet: Alphabet, stay_prob: float) -> Mechanism:
    """Randomized response: diagonal stay_prob, uniform off-diagonal mass.

    stay_prob must lie strictly above the uniform boundary 1/size (so the
    truth stays the likeliest report) and at most 1 (identity).
    """
    n = alphabet.size
    if not (1.0 / n < stay_prob <= 1.0):
        raise ParameterRangeError(
            f"stay_prob must be in (1/{n}, 1], got {stay_prob!r}"
        )
    off = (1.0 - stay_prob) / (n - 1) if n > 1 else 0.0
    rows = np.full((n, n), off)
    np.fill_diagonal(rows, stay_prob)
    return RandomizedResponseMechanism(
        "randomized_response",
        ObfuscationChannel(alphabet, alphabet, rows),
        {"stay_prob": float(stay_prob)},
    )


def randomized_response_epsilon(stay_prob: float, size: int) -> float:
    """Closed-form local epsilon of randomized response: ln(p(n-1)/(1-p))."""
    if stay_prob == 1.0:
        return math.inf
    return abs(math.log(stay_prob * (size - 1) / (1.0 - stay_prob)))


def geometric_noise(int_alphabet: Alphabet, alpha: float) -> Mechanism:
    """Two-sided geometric noise on a consecutive-integer alphabet.

    Interior outputs carry the exact geometric mass
    (1-alpha)/(1+alpha) * alpha^|e-x|; tail mass beyond the truncated
    support is folded onto the endpoint outputs. Folding keeps the ratio
    between *adjacent* inputs at alpha for every output, endpoints
    included, so a sensitivity-1 query obfuscated this way gets epsilon
    |ln alpha| with no boundary inflation. The channel's own local
    epsilon over arbitrary input pairs is span * |ln alpha|.
    """
    if not (0.0 < alpha < 1.0):
        raise ParameterRangeError(f"alpha must be in (0, 1), got {alpha!r}")
    values = int_alphabet.as_integers()
    for a, b in zip(values, values[1:]):
        if b != a + 1:
            raise ParameterRangeError(
                f"alphabet values must be consecutive integers, got {values!r}"
            )
    n = int_alphabet.size
    if n == 1:
        rows = np.ones((1, 1))
    else:
        coeff = (1.0 - alpha) / (1.0 + alpha)
        rows = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                dist = abs(values[j] - values[i])
                if j == 0:
                    rows[i, j] = alpha ** (values[i] - values[0]) / (1.0 + alpha)
                elif j == n - 1:
                    rows[i, j] = alpha ** (values[-1] - values[i]) / (1.0 + alpha)
                else:
                    rows[i, j] = coeff * alpha**dist
    return Mechanism(
        "geometric_noise",
        ObfuscationChannel(int_alphabet, int_alphabet, rows),
        {"alpha": float(alpha)},
    )


def generalization(
    input_alphabet: Alphabet, partition: Mapping[str, str]
) -> Mechanism:
    """Deterministic coarsening of symbols onto class labels.

    The partition must be total over the input alphabet; class labels are
    ordered by first appearance in input-alphabet order.
    """
    missing = [x for x in input_alphabet.labels if x not in partition]
    if missing:
        raise IncompletePartitionError(
            f"partition missing input symbols {missing!r}"
        )
    unknown = [x for x in partition if x not in input_alphabet]
    if unknown:
        raise UnknownLabelError(f"partition keys {unknown!r} not in alphabet")
    classes: list[str] = []
    for x in input_alphabet.labels:
        c = str(partition[x])
        if c not in classes:
            classes.append(c)
    output = Alphabet(classes)
    mapping = {x: str(partition[x]) for x in input_alphabet.labels}
    return Mechanism(
        "generalization",
        deterministic_channel(input_alphabet, output, mapping),
        {"partition": mapping},
    )


def suppression(
    input_alphabet: Alphabet, drop_prob: float, drop_symbol: str
) -> Mechanism:
    """Forwards each symbol unchanged or replaces it by the drop marker."""
    if not (0.0 <= drop_prob <= 1.0):
        raise ParameterRangeError(
            f"drop_prob must be in [0, 1], got {drop_prob!r}"
        )
    drop_symbol = str(drop_symbol)
    if drop_symbol in input_alphabet:
        raise ParameterRangeError(
            f"drop_symbol {drop_symbol!r} must not be an input symbol"
        )
    n = input_alphabet.size
    output = Alphabet(list(input_alphabet.labels) + [drop_symbol])
    rows = np.zeros((n, n + 1))
    for i in range(n):
        rows[i, i] = 1.0 - drop_prob
        rows[i, n] = drop_prob
    return Mechanism(
        "suppression",
        ObfuscationChannel(input_alphabet, output, rows),
        {"drop_prob": float(drop_prob), "drop_symbol": drop_symbol},
    )


def sequence_label(actions: Sequence[str]) -> str:
    return SEQUENCE_SEPARATOR.join(actions)


def split_sequence_label(label: str) -> tuple[str, ...]:
    return tuple(label.split(SEQUENCE_SEPARATOR))


class ChaffMechanism(Mechanism):
    """Interleaves one real action with k dummy actions.

    Outputs are length-(k+1) sequences; the slot holding the real action
    is drawn uniformly and returned only by sample_tagged, as ground
    truth for traces. The adversary-facing view never carries the tag.
    """

    def __init__(self, channel, parameters, real_dist, dummy_gen):
        super().__init__("chaff_injector", channel, parameters)
        self.real_dist = real_dist
        self.dummy_gen = dummy_gen

    @property
    def slots(self) -> int:
        return self.parameters["dummies_per_real"] + 1

    def delivery_channel(self) -> ObfuscationChannel:
        # Dummy responses are filtered out, so the user-facing path is lossless.
        return ObfuscationChannel.identity(self.input_alphabet)

    def sample_tagged(self, label: str, rng: Rng) -> tuple[str, int]:
        """(sequence label, real slot index); the slot is the hidden tag."""
        k = self.parameters["dummies_per_real"]
        slot = rng.integer(k + 1)
        actions = []
        for j in range(k + 1):
            if j == slot:
                actions.append(label)
            else:
                idx = rng.choice_index(self.dummy_gen.mass)
                actions.append(self.input_alphabet.labels[idx])
        return sequence_label(actions), slot

    def sample(self, label: str, rng: Rng) -> str:
        return self.sample_tagged(label, rng)[0]

    def sample_counts(self, label: str, n: int, rng: Rng) -> np.ndarray:
        length = self.slots
        base = self.input_alphabet.size
        x = self.input_alphabet.index(label)
        slots = rng.generator.integers(0, length, size=n)
        draws = rng.generator.choice(
            base, size=(n, length), p=self.dummy_gen.mass
        )
        draws[np.arange(n), slots] = x
        # sequence index in itertools.product order: last position varies fastest
        weights = base ** np.arange(length - 1, -1, -1)
        indices = draws @ weights
        return np.bincount(indices, minlength=self.output_alphabet.size)

    def slot_posterior(self, sequence: str) -> np.ndarray:
        """Posterior over which slot holds the real action.

        Proportional to real_dist(seq[s]) * prod_{j != s} dummy_gen(seq[j]).
        Raises ZeroEvidenceError for sequences the model cannot produce.
        """
        actions = split_sequence_label(sequence)
        if len(actions) != self.slots:
            raise AlphabetMismatchError(
                f"sequence {sequence!r} does not have {self.slots} slots"
            )
        p = self.real_dist.mass
        q = self.dummy_gen.mass
        idx = [self.input_alphabet.index(a) for a in actions]
        weights = np.empty(self.slots)
        for s in range(self.slots):
            w = p[idx[s]]
            for j in range(self.slots):
                if j != s:
                    w *= q[idx[j]]
            weights[s] = w
        total = weights.sum()
        if total <= 0.0:
            raise ZeroEvidenceError(
                f"sequence {sequence!r} has zero probability under the model"
            )
        return weights / total

    def map_real_slot(self, sequence: str) -> int:
        """MAP slot guess; ties broken by lowest slot index."""
        return int(np.argmax(self.slot_posterior(sequence)))


def chaff_injector(
    real_dist: ProbVec, dummy_gen: ProbVec, dummies_per_real: int
) -> ChaffMechanism:
    """Chaff injection: 1 real action plus k dummies per step.

    Indistinguishability is a property to be measured, not assumed: any
    dummy generator is accepted and the evaluation quantifies the
    leakage it produces.
    """
    if dummies_per_real < 0:
        raise ParameterRangeError(
            f"dummies_per_real must be >= 0, got {dummies_per_real!r}"
        )
    if dummy_gen.alphabet != real_dist.alphabet:
        raise AlphabetMismatchError(
            "dummy generator must share the real action alphabet"
        )
    base_alphabet = real_dist.alphabet
    if any(SEQUENCE_SEPARATOR in lab for lab in base_alphabet.labels):
        raise ParameterRangeError(
            f"action labels must not contain {SEQUENCE_SEPARATOR!r}"
        )
    k = int(dummies_per_real)
    length = k + 1
    tuples = list(itertools.product(range(base_alphabet.size), repeat=length))
    output = Alphabet(
        sequence_label([base_alphabet.labels[i] for i in tup]) for tup in tuples
    )
    q = dummy_gen.mass
    rows = np.zeros((base_alphabet.size, len(tuples)))
    for col, tup in enumerate(tuples):
        dummy_prod = np.empty(length)
        for s in range(length):
            w = 1.0
            for j in range(length):
                if j != s:
                    w *= q[tup[j]]
            dummy_prod[s] = w
        for s in range(length):
            rows[tup[s], col] += dummy_prod[s] / length
    channel = ObfuscationChannel(base_alphabet, output, rows)
    return ChaffMechanism(
        channel,
        {"dummies_per_real": k},
        real_dist,
        dummy_gen,
    )


SUPPORTED_MECHANISMS = (
    "chaff_injector",
    "generalization",
    "geometric_noise",
    "identity",
    "randomized_response",
    "suppression",
)


def _dist_from_config(alphabet: Alphabet, spec, field: str) -> ProbVec:
    if spec is None:
        return ProbVec.uniform(alphabet)
    if isinstance(spec, dict):
        try:
            return ProbVec.from_mapping(alphabet, spec)
        except ConfigurationError as err:
            raise ConfigurationError(str(err), field=field) from None
    try:
        return ProbVec(alphabet, spec)
    except ConfigurationError as err:
        raise ConfigurationError(str(err), field=field) from None


def mechanism_from_config(config: Mapping) -> Mechanism:
    """Build a mechanism from its JSON specification.

    Expected shape: {"mechanism": name, "alphabet": [labels],
    "params": {...}}. Unknown names are a hard error listing the
    supported mechanisms.
    """
    name = config.get("mechanism")
    if name not in SUPPORTED_MECHANISMS:
        raise UnknownMechanismError(
            f"unknown mechanism {name!r}; supported: "
            + ", ".join(SUPPORTED_MECHANISMS),
            field="mechanism",
        )
    labels = config.get("alphabet")
    if not labels:
        raise ConfigurationError("alphabet is required", field="alphabet")
    alphabet = Alphabet(labels)
    params = config.get("params", {})

    def need(key):
        if key not in params:
            raise ConfigurationError("missing parameter", field=f"params.{key}")
        return params[key]

    try:
        if name == "identity":
            return identity_mechanism(alphabet)
        if name == "randomized_response":
            return randomized_response(alphabet, float(need("stay_prob")))
        if name == "geometric_noise":
            return geometric_noise(alphabet, float(need("alpha")))
        if name == "generalization":
            return generalization(alphabet, need("partition"))
        if name == "suppression":
            return suppression(
                alphabet, float(need("drop_prob")), need("drop_symbol")
            )
        real = _dist_from_config(alphabet, params.get("real_dist"), "params.real_dist")
        dummy = _dist_from_config(
            alphabet, params.get("dummy_gen", params.get("real_dist")), "params.dummy_gen"
        )
        return chaff_injector(real, dummy, int(need("dummies_per_real")))
    except ConfigurationError as err:
        if err.field is None:
            raise ConfigurationError(str(err), field="params") from None
        raise
