"""Mechanism-centred analysis.

Indistinguishability and information-leakage measures computed from the
channel matrix alone, independent of any adversary's knowledge:
multiplicative epsilon bounds (local and dataset-level), mutual
information, channel capacity, min-entropy leakage, min-capacity,
g-leakage and marginal guesswork.

Epsilon scans reduce the sup over output *subsets* to a sup over single
output symbols: for finite alphabets the ratio of set probabilities is a
mass-weighted mean of per-symbol ratios, so it never exceeds the largest
per-symbol ratio. Ratios of the form 0/0 are skipped; finite/0 yields
+inf. +inf is a first-class epsilon value with a structured witness, not
an exception: deterministic mechanisms are legitimate inputs whose report
must show why they fail differential privacy.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import kernels
from .channel import Alphabet, ObfuscationChannel, ProbVec
from .errors import (
    AlphabetMismatchError,
    ConvergenceError,
    DegenerateGainError,
    DistributionError,
    EnumerationCapError,
    ParameterRangeError,
)

DEFAULT_CAPACITY_TOL = 1e-9
DEFAULT_CAPACITY_MAX_ITER = 10_000
DEFAULT_PAIR_CAP = 1_000_000


def enumeration_cap() -> int:
    """Enumeration cap for exhaustive scans; OBF_EVAL_MAX_ENUM overrides."""
    raw = os.environ.get("OBF_EVAL_MAX_ENUM", "")
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ParameterRangeError(
                f"OBF_EVAL_MAX_ENUM must be an integer, got {raw!r}"
            ) from None
        if cap < 1:
            raise ParameterRangeError("OBF_EVAL_MAX_ENUM must be positive")
        return cap
    return DEFAULT_PAIR_CAP


@dataclass(frozen=True)
class EpsilonReport:
    """Multiplicative indistinguishability bound with its achieving witness.

    ``witness`` is (input, other_input, output, ratio): the pair of inputs
    and the output symbol achieving the sup, with the probability ratio
    that reproduces exp(epsilon). None only for single-input channels,
    where no pair exists and epsilon is 0.
    """

    epsilon: float
    witness: tuple | None
    flags: tuple[str, ...] = field(default=())

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.epsilon)


@dataclass(frozen=True)
class NeighborRelation:
    """Symmetric, irreflexive predicate over dataset pairs."""

    name: str
    predicate: Callable[[tuple, tuple], bool]

    def __call__(self, d1: tuple, d2: tuple) -> bool:
        return d1 != d2 and self.predicate(d1, d2)


def replace_one_neighbors() -> NeighborRelation:
    """Datasets of equal user count differing in exactly one user's record."""

    def differ_in_one(d1: tuple, d2: tuple) -> bool:
        if len(d1) != len(d2):
            return False
        return sum(1 for a, b in zip(d1, d2) if a != b) == 1

    return NeighborRelation("replace-one", differ_in_one)


class GainFunction:
    """Gain g[w][x] of issuing guess w against secret x.

    The guess alphabet may differ from the secret alphabet. Every column
    must contain at least one positive entry and all entries must be
    finite.
    """

    __slots__ = ("guesses", "secrets", "matrix")

    def __init__(self, guesses: Alphabet, secrets: Alphabet, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        expected = (guesses.size, secrets.size)
        if matrix.shape != expected:
            raise DistributionError(
                f"gain matrix has shape {matrix.shape}, expected {expected}"
            )
        if not np.all(np.isfinite(matrix)):
            raise DistributionError("gain matrix entries must be finite")
        if np.any(matrix.max(axis=0) <= 0):
            raise DistributionError(
                "every secret must have at least one positive-gain guess"
            )
        matrix = np.ascontiguousarray(matrix)
        matrix.flags.writeable = False
        object.__setattr__(self, "guesses", guesses)
        object.__setattr__(self, "secrets", secrets)
        object.__setattr__(self, "matrix", matrix)

    def __setattr__(self, name, value):
        raise AttributeError("GainFunction is immutable")

    @classmethod
    def identity(cls, alphabet: Alphabet) -> "GainFunction":
        """One-try identification gain; reduces g-leakage to min-entropy leakage."""
        return cls(alphabet, alphabet, np.eye(alphabet.size))


def _sup_log_ratio(dists, pairs, outputs):
    """Shared scan: sup over pairs and outputs of ln(P1[e]/P2[e]).

    ``dists`` maps keys to mass arrays; ``pairs`` yields ordered key
    pairs. Returns (epsilon, witness) with witness (k1, k2, output index,
    ratio).
    """
    best = -math.inf
    best_witness = None
    for k1, k2 in pairs:
        p1 = dists[k1]
        p2 = dists[k2]
        for e in outputs:
            num = float(p1[e])
            den = float(p2[e])
            if num == 0.0 and den == 0.0:
                continue
            if den == 0.0:
                return math.inf, (k1, k2, e, math.inf)
            if num == 0.0:
                continue  # reciprocal pair covers the +inf direction
            ratio = num / den
            log_ratio = math.log(ratio)
            if log_ratio > best:
                best = log_ratio
                best_witness = (k1, k2, e, ratio)
    if best_witness is None:
        return 0.0, None
    return max(best, 0.0), best_witness


def local_epsilon(channel: ObfuscationChannel) -> EpsilonReport:
    """Worst-case multiplicative gap between any two inputs' output laws."""
    n_in = channel.input_alphabet.size
    dists = {i: channel.rows[i] for i in range(n_in)}
    pairs = [(i, j) for i in range(n_in) for j in range(n_in) if i != j]
    eps, witness = _sup_log_ratio(dists, pairs, range(channel.output_alphabet.size))
    if witness is not None:
        i, j, e, ratio = witness
        witness = (
            channel.input_alphabet.labels[i],
            channel.input_alphabet.labels[j],
            channel.output_alphabet.labels[e],
            ratio,
        )
    return EpsilonReport(eps, witness)


def central_epsilon(
    dataset_mechanism: Callable[[tuple], ProbVec],
    neighbors: NeighborRelation,
    dataset_universe: Iterable[tuple],
    max_pairs: int | None = None,
) -> EpsilonReport:
    """Dataset-level epsilon: sup of the log ratio over neighboring pairs.

    ``dataset_mechanism`` maps each dataset (a tuple of per-user records)
    to its output distribution; all outputs must share one alphabet.
    Replace-one semantics are supplied by :func:`replace_one_neighbors`.

    Enumeration is exhaustive and capped (default 10^6 ordered pairs, env
    OBF_EVAL_MAX_ENUM overrides); larger universes raise
    EnumerationCapError instructing the caller to shrink the instance.

    When the output alphabet is integer-labeled the report carries a
    "boundary-inflation" flag if the sup is achieved strictly at an
    endpoint output with a larger ratio than any interior output attains.
    """
    universe = [tuple(d) for d in dataset_universe]
    if max_pairs is None:
        max_pairs = enumeration_cap()
    n_pairs = len(universe) * (len(universe) - 1)
    if n_pairs > max_pairs:
        raise EnumerationCapError(
            f"{n_pairs} ordered dataset pairs exceed the cap of {max_pairs}; "
            "shrink the instance or raise OBF_EVAL_MAX_ENUM"
        )

    dists: dict[tuple, np.ndarray] = {}
    out_alphabet = None
    for d in universe:
        pv = dataset_mechanism(d)
        if out_alphabet is None:
            out_alphabet = pv.alphabet
        elif pv.alphabet != out_alphabet:
            raise AlphabetMismatchError(
                "dataset mechanism must emit one shared output alphabet"
            )
        dists[d] = pv.mass
    assert out_alphabet is not None

    pairs = [
        (d1, d2) for d1 in universe for d2 in universe if neighbors(d1, d2)
    ]
    all_outputs = range(out_alphabet.size)
    eps, witness = _sup_log_ratio(dists, pairs, all_outputs)

    flags: tuple[str, ...] = ()
    try:
        out_alphabet.as_integers()
        integer_outputs = True
    except DistributionError:
        integer_outputs = False
    if integer_outputs and out_alphabet.size >= 3 and witness is not None:
        interior = range(1, out_alphabet.size - 1)
        interior_eps, _ = _sup_log_ratio(dists, pairs, interior)
        if eps > interior_eps + 1e-12:
            flags = ("boundary-inflation",)

    if witness is not None:
        d1, d2, e, ratio = witness
        witness = (d1, d2, out_alphabet.labels[e], ratio)
    return EpsilonReport(eps, witness, flags)


def mutual_information(prior: ProbVec, channel: ObfuscationChannel) -> float:
    """I(X; E) in bits under the given input prior."""
    if prior.alphabet != channel.input_alphabet:
        raise AlphabetMismatchError(
            "prior alphabet does not match channel input alphabet"
        )
    return kernels.mutual_information_bits(prior.mass, channel.rows)


@dataclass(frozen=True)
class CapacityResult:
    """Certified capacity bracket: bits <= C <= bits + gap."""

    bits: float
    achieving_prior: ProbVec
    iterations: int
    gap: float


def capacity(
    channel: ObfuscationChannel,
    tol: float = DEFAULT_CAPACITY_TOL,
    max_iter: int = DEFAULT_CAPACITY_MAX_ITER,
) -> CapacityResult:
    """Channel capacity in bits: maximum leakage over all input priors.

    Runs the alternating-maximization iteration until the certified
    upper/lower bound gap drops below ``tol`` bits; raises
    ConvergenceError carrying the best bracket after ``max_iter``.
    """
    if not tol > 0:
        raise ParameterRangeError(f"tol must be positive, got {tol!r}")
    if max_iter < 1:
        raise ParameterRangeError(f"max_iter must be >= 1, got {max_iter!r}")
    lower, upper, prior, iterations, converged = kernels.ba_iterate(
        channel.rows, tol, max_iter
    )
    if not converged:
        raise ConvergenceError(
            f"capacity iteration did not reach tol={tol}", lower, upper, iterations
        )
    return CapacityResult(
        bits=max(lower, 0.0),
        achieving_prior=ProbVec(channel.input_alphabet, prior),
        iterations=iterations,
        gap=upper - lower,
    )


def min_entropy_leakage(prior: ProbVec, channel: ObfuscationChannel) -> float:
    """Min-entropy leakage in bits: H_inf(X) - H_inf(X|E)."""
    if prior.alphabet != channel.input_alphabet:
        raise AlphabetMismatchError(
            "prior alphabet does not match channel input alphabet"
        )
    prior_vuln = float(prior.mass.max())
    post_vuln = float((prior.mass[:, None] * channel.rows).max(axis=0).sum())
    return math.log2(post_vuln / prior_vuln)


def min_capacity(channel: ObfuscationChannel) -> float:
    """Min-capacity in bits: log2 of the sum of column maxima.

    Upper-bounds min-entropy leakage over every prior; attained at the
    uniform prior.
    """
    return math.log2(float(channel.rows.max(axis=0).sum()))


def g_leakage(
    prior: ProbVec, channel: ObfuscationChannel, gain: GainFunction
) -> float:
    """Gain-function leakage: log2 of posterior over prior g-vulnerability."""
    if prior.alphabet != channel.input_alphabet:
        raise AlphabetMismatchError(
            "prior alphabet does not match channel input alphabet"
        )
    if gain.secrets != channel.input_alphabet:
        raise AlphabetMismatchError(
            "gain secret alphabet does not match channel input alphabet"
        )
    weighted = gain.matrix * prior.mass[None, :]
    prior_vuln = float(weighted.sum(axis=1).max())
    if prior_vuln <= 0.0:
        raise DegenerateGainError(
            "prior g-vulnerability is zero; leakage ratio undefined"
        )
    # posterior vulnerability: sum_e max_w sum_x g[w,x] p(x) W[e|x]
    per_output = np.einsum("wx,xe->we", weighted, channel.rows)
    post_vuln = float(per_output.max(axis=0).sum())
    return math.log2(post_vuln / prior_vuln)


def marginal_guesswork(prior: ProbVec, success_prob: float) -> int:
    """Minimum number of best-first guesses reaching the success probability."""
    if not (0.0 < success_prob <= 1.0):
        raise ParameterRangeError(
            f"success_prob must be in (0, 1], got {success_prob!r}"
        )
    order = np.argsort(-prior.mass, kind="stable")
    cumulative = 0.0
    for count, idx in enumerate(order, start=1):
        cumulative += float(prior.mass[idx])
        if cumulative >= success_prob - 1e-12:
            return count
    return prior.alphabet.size


def postprocess(
    channel: ObfuscationChannel, mapping, coarse_alphabet: Alphabet
) -> ObfuscationChannel:
    """Compose a deterministic output map onto a channel.

    Used for data-processing checks: every leakage measure of the
    composed channel is bounded by the original's.
    """
    from .channel import cascade, deterministic_channel

    post = deterministic_channel(channel.output_alphabet, coarse_alphabet, mapping)
    return cascade(channel, post)


def measure_record(name: str, value, params: dict | None = None, witness=None) -> dict:
    """Flat JSON-ready record for one measure evaluation."""
    if isinstance(value, float):
        if math.isinf(value):
            value = "inf" if value > 0 else "-inf"
    record = {"measure": name, "value": value, "params": params or {}}
    if witness is not None:
        record["witness"] = witness
    return record
