"""Finite discrete probability primitives.

Alphabets, probability vectors, row-stochastic channel matrices, joint
distributions, and the entropy/divergence arithmetic every measure in the
toolkit is written against. All logarithms are base 2; results are bits.

Conventions:
  * 0 * log 0 = 0.
  * Constructors renormalize mass whose sum deviates from 1 by at most
    ATOL (1e-9 absolute) and reject anything worse.
  * All objects are immutable after construction; operations are pure.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    AbsoluteContinuityError,
    AlphabetMismatchError,
    DistributionError,
    UnknownLabelError,
    ZeroEvidenceError,
)

# Absolute tolerance on probability mass normalization.
ATOL = 1e-9
# Deviations at machine-precision scale count as already normalized and
# are stored verbatim; renormalizing them would break value-exact JSON
# round-trips for nothing.
EXACT_ATOL = 1e-12


class Alphabet:
    """Ordered set of unique symbol labels.

    One instance per universe: inputs, obfuscated outputs, adversarial
    targets, dataset outputs, and so on.
    """

    __slots__ = ("labels", "_index")

    def __init__(self, labels: Iterable[str]):
        labels = tuple(str(x) for x in labels)
        if not labels:
            raise DistributionError("alphabet must contain at least one label")
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != len(labels):
            raise DistributionError("alphabet labels must be unique")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", index)

    def __setattr__(self, name, value):
        raise AttributeError("Alphabet is immutable")

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label) -> bool:
        return str(label) in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Alphabet) and self.labels == other.labels

    def __hash__(self) -> int:
        return hash(self.labels)

    def __repr__(self) -> str:
        return f"Alphabet({list(self.labels)!r})"

    def index(self, label) -> int:
        """Position of ``label``, raising UnknownLabelError if absent."""
        try:
            return self._index[str(label)]
        except KeyError:
            raise UnknownLabelError(
                f"label {label!r} not in alphabet {list(self.labels)!r}"
            ) from None

    @classmethod
    def integers(cls, lo: int, hi: int) -> "Alphabet":
        """Alphabet of consecutive integers lo..hi inclusive, as strings."""
        if hi < lo:
            raise DistributionError(f"empty integer range {lo}..{hi}")
        return cls(str(i) for i in range(lo, hi + 1))

    def as_integers(self) -> list[int]:
        """Parse all labels as integers; raises DistributionError otherwise."""
        try:
            return [int(lab) for lab in self.labels]
        except ValueError:
            raise DistributionError(
                f"alphabet {list(self.labels)!r} is not integer-labeled"
            ) from None


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, order="C", copy=True)
    a.flags.writeable = False
    return a


def _validate_mass(mass: np.ndarray, what: str) -> np.ndarray:
    if np.any(mass < 0):
        raise DistributionError(f"{what} has negative entries")
    total = float(mass.sum())
    if abs(total - 1.0) > ATOL:
        raise DistributionError(
            f"{what} mass sums to {total!r}, outside 1 +/- {ATOL}"
        )
    if abs(total - 1.0) > EXACT_ATOL:
        mass = mass / total
    return mass


class ProbVec:
    """Probability distribution over a finite labeled alphabet."""

    __slots__ = ("alphabet", "mass")

    def __init__(self, alphabet: Alphabet, mass: Sequence[float]):
        mass = np.asarray(mass, dtype=np.float64)
        if mass.shape != (alphabet.size,):
            raise DistributionError(
                f"mass has shape {mass.shape}, expected ({alphabet.size},)"
            )
        mass = _validate_mass(mass, "distribution")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "mass", _frozen(mass))

    def __setattr__(self, name, value):
        raise AttributeError("ProbVec is immutable")

    def __getitem__(self, label) -> float:
        return float(self.mass[self.alphabet.index(label)])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ProbVec)
            and self.alphabet == other.alphabet
            and np.array_equal(self.mass, other.mass)
        )

    def __hash__(self):
        return hash((self.alphabet, self.mass.tobytes()))

    def __repr__(self) -> str:
        pairs = ", ".join(
            f"{lab}: {p:.6g}" for lab, p in zip(self.alphabet.labels, self.mass)
        )
        return f"ProbVec({{{pairs}}})"

    @classmethod
    def uniform(cls, alphabet: Alphabet) -> "ProbVec":
        return cls(alphabet, np.full(alphabet.size, 1.0 / alphabet.size))

    @classmethod
    def from_mapping(cls, alphabet: Alphabet, probs: Mapping[str, float]) -> "ProbVec":
        mass = np.zeros(alphabet.size)
        for label, p in probs.items():
            mass[alphabet.index(label)] = p
        return cls(alphabet, mass)

    def support(self) -> list[str]:
        return [lab for lab, p in zip(self.alphabet.labels, self.mass) if p > 0]

    def argmax_label(self) -> str:
        """Label of the largest mass; ties broken by lowest alphabet index."""
        return self.alphabet.labels[int(np.argmax(self.mass))]

    def to_json(self) -> str:
        return json.dumps(
            {"alphabet": list(self.alphabet.labels), "mass": [float(p) for p in self.mass]}
        )

    @classmethod
    def from_json(cls, doc: str) -> "ProbVec":
        obj = json.loads(doc)
        return cls(Alphabet(obj["alphabet"]), obj["mass"])


class ObfuscationChannel:
    """Row-stochastic conditional matrix W[e|x].

    Rows are indexed by the input alphabet, columns by the output
    alphabet; each row is a distribution over outputs.
    """

    __slots__ = ("input_alphabet", "output_alphabet", "rows")

    def __init__(
        self,
        input_alphabet: Alphabet,
        output_alphabet: Alphabet,
        rows: Sequence[Sequence[float]],
    ):
        rows = np.asarray(rows, dtype=np.float64)
        expected = (input_alphabet.size, output_alphabet.size)
        if rows.shape != expected:
            raise DistributionError(
                f"channel matrix has shape {rows.shape}, expected {expected}"
            )
        normalized = np.empty_like(rows)
        for i in range(rows.shape[0]):
            normalized[i] = _validate_mass(
                rows[i], f"channel row {input_alphabet.labels[i]!r}"
            )
        object.__setattr__(self, "input_alphabet", input_alphabet)
        object.__setattr__(self, "output_alphabet", output_alphabet)
        object.__setattr__(self, "rows", _frozen(normalized))

    def __setattr__(self, name, value):
        raise AttributeError("ObfuscationChannel is immutable")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ObfuscationChannel)
            and self.input_alphabet == other.input_alphabet
            and self.output_alphabet == other.output_alphabet
            and np.array_equal(self.rows, other.rows)
        )

    def __hash__(self):
        return hash(
            (self.input_alphabet, self.output_alphabet, self.rows.tobytes())
        )

    def __repr__(self) -> str:
        return (
            f"ObfuscationChannel({self.input_alphabet.size}x"
            f"{self.output_alphabet.size})"
        )

    def prob(self, output, given) -> float:
        """W[output | given]."""
        return float(
            self.rows[self.input_alphabet.index(given), self.output_alphabet.index(output)]
        )

    def row(self, given) -> ProbVec:
        return ProbVec(self.output_alphabet, self.rows[self.input_alphabet.index(given)])

    @classmethod
    def identity(cls, alphabet: Alphabet) -> "ObfuscationChannel":
        return cls(alphabet, alphabet, np.eye(alphabet.size))

    @classmethod
    def constant_rows(cls, input_alphabet: Alphabet, row: ProbVec) -> "ObfuscationChannel":
        """Perfectly noisy channel: every input maps to the same output law."""
        rows = np.tile(row.mass, (input_alphabet.size, 1))
        return cls(input_alphabet, row.alphabet, rows)

    def to_json(self) -> str:
        doc = {
            "alphabet": list(self.input_alphabet.labels),
            "rows": [[float(p) for p in row] for row in self.rows],
        }
        if self.output_alphabet != self.input_alphabet:
            doc["output_alphabet"] = list(self.output_alphabet.labels)
        return json.dumps(doc)

    @classmethod
    def from_json(cls, doc: str) -> "ObfuscationChannel":
        obj = json.loads(doc)
        inp = Alphabet(obj["alphabet"])
        out = Alphabet(obj["output_alphabet"]) if "output_alphabet" in obj else inp
        return cls(inp, out, obj["rows"])


class JointDist:
    """Joint distribution P(x, e) over input x output pairs."""

    __slots__ = ("input_alphabet", "output_alphabet", "mass")

    def __init__(
        self,
        input_alphabet: Alphabet,
        output_alphabet: Alphabet,
        mass: Sequence[Sequence[float]],
    ):
        mass = np.asarray(mass, dtype=np.float64)
        expected = (input_alphabet.size, output_alphabet.size)
        if mass.shape != expected:
            raise DistributionError(
                f"joint mass has shape {mass.shape}, expected {expected}"
            )
        if np.any(mass < 0):
            raise DistributionError("joint mass has negative entries")
        total = float(mass.sum())
        if abs(total - 1.0) > ATOL:
            raise DistributionError(
                f"joint mass sums to {total!r}, outside 1 +/- {ATOL}"
            )
        if total != 1.0:
            mass = mass / total
        object.__setattr__(self, "input_alphabet", input_alphabet)
        object.__setattr__(self, "output_alphabet", output_alphabet)
        object.__setattr__(self, "mass", _frozen(mass))

    def __setattr__(self, name, value):
        raise AttributeError("JointDist is immutable")

    def input_marginal(self) -> ProbVec:
        return ProbVec(self.input_alphabet, self.mass.sum(axis=1))

    def output_marginal(self) -> ProbVec:
        return ProbVec(self.output_alphabet, self.mass.sum(axis=0))


def delta_dist(alphabet: Alphabet, label) -> ProbVec:
    """Degenerate distribution: all mass on ``label``."""
    mass = np.zeros(alphabet.size)
    mass[alphabet.index(label)] = 1.0
    return ProbVec(alphabet, mass)


def joint(prior: ProbVec, channel: ObfuscationChannel) -> JointDist:
    """Joint P(x, e) = prior[x] * W[e|x]."""
    if prior.alphabet != channel.input_alphabet:
        raise AlphabetMismatchError(
            "prior alphabet does not match channel input alphabet"
        )
    mass = prior.mass[:, None] * channel.rows
    return JointDist(channel.input_alphabet, channel.output_alphabet, mass)


def output_marginal(prior: ProbVec, channel: ObfuscationChannel) -> ProbVec:
    """Marginal P(e) = sum_x prior[x] W[e|x]."""
    if prior.alphabet != channel.input_alphabet:
        raise AlphabetMismatchError(
            "prior alphabet does not match channel input alphabet"
        )
    return ProbVec(channel.output_alphabet, prior.mass @ channel.rows)


def posterior(prior: ProbVec, channel: ObfuscationChannel, observed) -> ProbVec:
    """Bayes update P(x|e) for an observed output symbol.

    Raises ZeroEvidenceError when the observed symbol has zero marginal
    probability under the prior: the observation contradicts the model
    and callers decide the fallback (see the attack-centred module).
    """
    if prior.alphabet != channel.input_alphabet:
        raise AlphabetMismatchError(
            "prior alphabet does not match channel input alphabet"
        )
    e = channel.output_alphabet.index(observed)
    unnorm = prior.mass * channel.rows[:, e]
    total = float(unnorm.sum())
    if total <= 0.0:
        raise ZeroEvidenceError(
            f"observed symbol {observed!r} has zero marginal probability"
        )
    return ProbVec(prior.alphabet, unnorm / total)


def entropy(p: ProbVec) -> float:
    """Shannon entropy in bits, with the 0 log 0 = 0 convention."""
    return entropy_bits(p.mass)


def entropy_bits(mass: np.ndarray) -> float:
    mass = np.asarray(mass, dtype=np.float64)
    nz = mass[mass > 0]
    return float(-(nz * np.log2(nz)).sum())


def conditional_entropy(j: JointDist) -> float:
    """H(X|E) in bits: H(X,E) - H(E)."""
    h_joint = entropy_bits(j.mass.ravel())
    h_out = entropy_bits(j.mass.sum(axis=0))
    return max(0.0, h_joint - h_out)


def kl_divergence(p: ProbVec, q: ProbVec) -> float:
    """KL(p || q) in bits.

    Requires q > 0 wherever p > 0 (absolute continuity); raises
    AbsoluteContinuityError otherwise.
    """
    if p.alphabet != q.alphabet:
        raise AlphabetMismatchError("KL divergence requires a shared alphabet")
    pm, qm = p.mass, q.mass
    bad = (pm > 0) & (qm == 0)
    if np.any(bad):
        labels = [lab for lab, b in zip(p.alphabet.labels, bad) if b]
        raise AbsoluteContinuityError(
            f"q has zero mass on p's support at {labels!r}"
        )
    nz = pm > 0
    return float((pm[nz] * (np.log2(pm[nz]) - np.log2(qm[nz]))).sum())


def cascade(
    first: ObfuscationChannel, second: ObfuscationChannel
) -> ObfuscationChannel:
    """Sequential composition: feed first's outputs into second.

    Supports stacked user-side plus provider-side obfuscation.
    """
    if first.output_alphabet != second.input_alphabet:
        raise AlphabetMismatchError(
            "first channel's output alphabet must equal second's input alphabet"
        )
    return ObfuscationChannel(
        first.input_alphabet, second.output_alphabet, first.rows @ second.rows
    )


def deterministic_channel(
    input_alphabet: Alphabet, output_alphabet: Alphabet, mapping: Mapping[str, str]
) -> ObfuscationChannel:
    """Channel induced by a total deterministic map on input symbols."""
    rows = np.zeros((input_alphabet.size, output_alphabet.size))
    for x in input_alphabet.labels:
        if x not in mapping:
            raise UnknownLabelError(f"map is not total: missing {x!r}")
        rows[input_alphabet.index(x), output_alphabet.index(mapping[x])] = 1.0
    return ObfuscationChannel(input_alphabet, output_alphabet, rows)
