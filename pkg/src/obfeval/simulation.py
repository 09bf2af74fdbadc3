"""Executable system model: chaff scenarios, verdicts, disclosure ladder.

Three scenario families exercise chaff-based obfuscation against service
personalization levels:

  f0  no personalization: per-query responses, dummy responses filtered.
  f1  individual personalization: responses depend on the account's own
      history; chaff goes to Sybil accounts (or, in the naive variant,
      pollutes the real account's history).
  f2  collective personalization: responses depend on everyone's
      history; one user's Sybils disturb public utility for all, and the
      per-Sybil repair cost is counted explicitly.

The privacy-loss function attached to verdicts is a named measure chosen
per evaluation (capacity by default); the verdict records which one was
used. Personal utility defaults to exact-response match rate; f2 uses an
additive pairwise relevance model so marginal contributions are exact.

Scenario runs are single-threaded and deterministic per seed; traces are
immutable once a run completes.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import aca, mca
from .channel import Alphabet, ObfuscationChannel, ProbVec
from .errors import (
    ConfigurationError,
    EnumerationCapError,
    UnknownArchitectureError,
    UnknownMeasureError,
)
from .mechanisms import Mechanism, Rng, chaff_injector, split_sequence_label

SCHEMA_VERSION = 1

EMPTY_HISTORY = "-"


# ---------------------------------------------------------------------------
# utility specifications and feature models


@dataclass(frozen=True)
class UtilitySpec:
    """Deterministic non-negative scoring.

    kind "personal": scoring(real_symbol, delivered_symbol) -> float.
    kind "public": scoring(inputs_tuple, outcome) -> float.
    """

    kind: str
    name: str
    scoring: Callable

    def __post_init__(self):
        if self.kind not in ("personal", "public"):
            raise ConfigurationError(
                f"utility kind must be personal or public, got {self.kind!r}"
            )


def exact_match_utility() -> UtilitySpec:
    """Score 1 when the delivered symbol equals the real one, else 0."""
    return UtilitySpec(
        "personal", "exact_match", lambda x, y: 1.0 if x == y else 0.0
    )


class FeatureModel:
    """Named deterministic features of input symbols.

    ``utility_scoring``, when given, consumes the full feature-value
    mapping of a symbol and returns a non-negative score; it drives the
    contributes-to-utility flag.
    """

    __slots__ = ("input_alphabet", "features", "utility_scoring")

    def __init__(
        self,
        input_alphabet: Alphabet,
        features: Mapping[str, Mapping[str, str]],
        utility_scoring: Callable[[Mapping[str, str]], float] | None = None,
    ):
        checked = {}
        for name, fmap in features.items():
            missing = [x for x in input_alphabet.labels if x not in fmap]
            if missing:
                raise ConfigurationError(
                    f"feature {name!r} is not total: missing {missing!r}"
                )
            checked[name] = {x: str(fmap[x]) for x in input_alphabet.labels}
        object.__setattr__(self, "input_alphabet", input_alphabet)
        object.__setattr__(self, "features", checked)
        object.__setattr__(self, "utility_scoring", utility_scoring)

    def __setattr__(self, name, value):
        raise AttributeError("FeatureModel is immutable")

    def values_for(self, x: str) -> dict[str, str]:
        return {name: fmap[x] for name, fmap in self.features.items()}


@dataclass(frozen=True)
class FeatureFlags:
    """Computed classification of one feature."""

    name: str
    leaks: bool
    leakage_bits: float
    affects_utility: bool


def _exact_mi(pairs: dict[tuple, float]) -> float:
    """Mutual information in bits of a joint given as {(a, b): prob}."""
    left: Counter = Counter()
    right: Counter = Counter()
    for (a, b), p in pairs.items():
        left[a] += p
        right[b] += p
    total = 0.0
    for (a, b), p in pairs.items():
        if p > 0.0:
            total += p * math.log2(p / (left[a] * right[b]))
    return max(total, 0.0)


def classify_features(
    model: FeatureModel, input_prior: ProbVec, psi: Mapping[str, str]
) -> dict[str, FeatureFlags]:
    """Per-feature leakage and utility flags, computed not asserted.

    A feature leaks when its exact mutual information with the
    adversarial target psi(X) exceeds 1e-9 bits under the prior. It
    affects utility when ablating it (replacing its value by the value
    it takes on the first alphabet symbol) changes the utility score of
    any symbol in the prior's support.
    """
    alphabet = model.input_alphabet
    if input_prior.alphabet != alphabet:
        raise ConfigurationError("prior alphabet does not match feature model")
    missing = [x for x in alphabet.labels if x not in psi]
    if missing:
        raise ConfigurationError(f"psi is not total: missing {missing!r}")

    out: dict[str, FeatureFlags] = {}
    for name, fmap in model.features.items():
        pairs: dict[tuple, float] = {}
        for i, x in enumerate(alphabet.labels):
            p = float(input_prior.mass[i])
            if p == 0.0:
                continue
            key = (str(psi[x]), fmap[x])
            pairs[key] = pairs.get(key, 0.0) + p
        leakage = _exact_mi(pairs)

        affects = False
        if model.utility_scoring is not None:
            constant = fmap[alphabet.labels[0]]
            for i, x in enumerate(alphabet.labels):
                if input_prior.mass[i] == 0.0:
                    continue
                values = model.values_for(x)
                ablated = dict(values)
                ablated[name] = constant
                if model.utility_scoring(values) != model.utility_scoring(ablated):
                    affects = True
                    break
        out[name] = FeatureFlags(name, leakage > 1e-9, leakage, affects)
    return out


# ---------------------------------------------------------------------------
# mechanism verdicts


@dataclass(frozen=True)
class ObfuscationVerdict:
    """Utility-preserving / utility-degrading / ineffective classification."""

    classification: str
    utility_before: float
    utility_after: float
    privacy_measure: str
    privacy_before: float
    privacy_after: float

    def satisfies_invariant(self, tol: float = 1e-9) -> bool:
        if self.classification == "UPO":
            return (
                self.utility_after == self.utility_before
                and self.privacy_after <= self.privacy_before
            )
        if self.classification == "UDO":
            return (
                self.utility_after < self.utility_before
                and self.privacy_after <= self.privacy_before
            )
        if self.classification == "INEFFECTIVE":
            return (
                self.privacy_after > self.privacy_before - tol
                and self.utility_after <= self.utility_before
            )
        return False


VERDICT_MEASURES = (
    "capacity",
    "eee_complement",
    "min_entropy_leakage",
    "mutual_information",
)


def _privacy_loss(
    measure: str,
    channel: ObfuscationChannel,
    prior: ProbVec,
    params: Mapping,
) -> float:
    if measure == "mutual_information":
        return mca.mutual_information(prior, channel)
    if measure == "min_entropy_leakage":
        return mca.min_entropy_leakage(prior, channel)
    if measure == "capacity":
        return mca.capacity(
            channel,
            tol=params.get("tol", mca.DEFAULT_CAPACITY_TOL),
            max_iter=params.get("max_iter", mca.DEFAULT_CAPACITY_MAX_ITER),
        ).bits
    if measure == "eee_complement":
        adversary = aca.AdversaryModel(prior, params.get("psi"))
        profile_prior, profile_ch = aca.profile_channel(prior, channel, adversary)
        strategy = aca.map_strategy(adversary, channel)
        distortion = aca.DistortionFn.zero_one(adversary.profile_alphabet)
        eee = aca.expected_estimation_error(
            profile_prior, profile_ch, strategy, distortion
        )
        return 1.0 - eee
    raise UnknownMeasureError(
        f"unknown verdict measure {measure!r}; supported: "
        + ", ".join(VERDICT_MEASURES)
    )


def _expected_pairwise_utility(
    prior: ProbVec, delivery: ObfuscationChannel, scoring: Callable
) -> float:
    total = 0.0
    for i, x in enumerate(prior.alphabet.labels):
        px = float(prior.mass[i])
        if px == 0.0:
            continue
        for j, y in enumerate(delivery.output_alphabet.labels):
            w = float(delivery.rows[i, j])
            if w == 0.0:
                continue
            total += px * w * float(scoring(x, y))
    return total


def classify_mechanism(
    mech: Mechanism,
    utility: UtilitySpec,
    privacy_measure: str,
    input_prior: ProbVec,
    measure_params: Mapping | None = None,
    tol: float = 1e-9,
) -> ObfuscationVerdict:
    """Classify a mechanism as UPO, UDO or INEFFECTIVE.

    Utility is scored through the mechanism's delivery channel (identity
    for chaff with perfect filtering, the obfuscation channel
    otherwise); the before side uses the identity channel. Utility
    equality is exact when the delivery channel is deterministic and
    within ``tol`` otherwise.
    """
    if utility.kind != "personal":
        raise ConfigurationError(
            "classify_mechanism scores personal utility; got kind "
            f"{utility.kind!r}"
        )
    measure = privacy_measure.replace("-", "_")
    if measure not in VERDICT_MEASURES:
        raise UnknownMeasureError(
            f"unknown verdict measure {privacy_measure!r}; supported: "
            + ", ".join(VERDICT_MEASURES)
        )
    params = dict(measure_params or {})
    identity = ObfuscationChannel.identity(mech.input_alphabet)
    privacy_before = _privacy_loss(measure, identity, input_prior, params)
    privacy_after = _privacy_loss(measure, mech.to_channel(), input_prior, params)

    delivery = mech.delivery_channel()
    utility_before = _expected_pairwise_utility(input_prior, identity, utility.scoring)
    utility_after = _expected_pairwise_utility(input_prior, delivery, utility.scoring)

    deterministic = bool(np.all((delivery.rows == 0.0) | (delivery.rows == 1.0)))
    if deterministic:
        utility_equal = utility_after == utility_before
    else:
        utility_equal = abs(utility_after - utility_before) <= tol

    if utility_after - utility_before > tol:
        raise ConfigurationError(
            "utility increased under obfuscation; scoring is inconsistent"
        )
    if privacy_after > privacy_before - tol:
        classification = "INEFFECTIVE"
    elif utility_equal:
        classification = "UPO"
    else:
        classification = "UDO"
    return ObfuscationVerdict(
        classification,
        utility_before,
        utility_after,
        measure,
        privacy_before,
        privacy_after,
    )


# ---------------------------------------------------------------------------
# scenario traces


@dataclass(frozen=True)
class ScenarioTrace:
    """Per-run record of a scenario execution.

    ``obfuscated`` carries the ground-truth tags (real slot or real
    account); ``adversary_view`` is the same traffic with every tag
    stripped. ``filtered_outputs`` always has one entry per real input
    when filtering succeeds.
    """

    scenario: str
    seed: int
    steps: int
    real_inputs: tuple[str, ...]
    obfuscated: tuple
    outputs: tuple[str, ...]
    responses: tuple
    filtered_outputs: tuple[str, ...]
    adversary_view: tuple
    utility_per_step: tuple[float, ...]
    adversary_accuracy: float
    extras: dict = field(default_factory=dict)


def _required(config: Mapping, key: str):
    if key not in config:
        raise ConfigurationError("required field missing", field=key)
    return config[key]


def _int_field(config: Mapping, key: str, default, minimum):
    value = config.get(key, default)
    if value is None:
        raise ConfigurationError("required field missing", field=key)
    try:
        value = int(value)
    except (TypeError, ValueError):
        raise ConfigurationError(
            f"must be an integer, got {value!r}", field=key
        ) from None
    if value < minimum:
        raise ConfigurationError(f"must be >= {minimum}, got {value}", field=key)
    return value


def _dist_field(config: Mapping, key: str, alphabet: Alphabet, default=None):
    spec = config.get(key)
    if spec is None:
        return default if default is not None else ProbVec.uniform(alphabet)
    try:
        if isinstance(spec, dict):
            return ProbVec.from_mapping(alphabet, spec)
        return ProbVec(alphabet, spec)
    except ConfigurationError as err:
        raise ConfigurationError(str(err), field=key) from None


def _response_map(config: Mapping, alphabet: Alphabet) -> dict[str, str]:
    spec = config.get("response_map")
    if spec is None:
        return {x: x for x in alphabet.labels}
    missing = [x for x in alphabet.labels if x not in spec]
    if missing:
        raise ConfigurationError(
            f"map is not total: missing {missing!r}", field="response_map"
        )
    return {x: str(spec[x]) for x in alphabet.labels}


def run_scenario_f0(config: Mapping) -> tuple[ScenarioTrace, ObfuscationVerdict]:
    """Chaff against a memoryless service.

    Every query is answered independently, dummy responses are filtered,
    and the delivered outputs must match the no-chaff baseline exactly.
    The recorded adversary accuracy is the per-step MAP slot
    identification rate.
    """
    alphabet = Alphabet(_required(config, "alphabet"))
    seed = _int_field(config, "seed", 0, 0)
    steps = _int_field(config, "steps", 32, 1)
    k = _int_field(config, "dummies_per_real", None, 0)
    real_dist = _dist_field(config, "real_dist", alphabet)
    dummy_gen = _dist_field(config, "dummy_gen", alphabet, default=real_dist)
    respond = _response_map(config, alphabet)
    measure = config.get("privacy_measure", "capacity")
    measure_params = config.get("measure_params", {})

    mech = chaff_injector(real_dist, dummy_gen, k)
    rng = Rng(seed)

    real_inputs: list[str] = []
    tagged: list[tuple[str, int]] = []
    responses: list[tuple[str, ...]] = []
    filtered: list[str] = []
    baseline: list[str] = []
    utility: list[float] = []
    hits = 0
    for _ in range(steps):
        x = alphabet.labels[rng.choice_index(real_dist.mass)]
        seq, slot = mech.sample_tagged(x, rng)
        actions = split_sequence_label(seq)
        step_responses = tuple(respond[a] for a in actions)
        real_inputs.append(x)
        tagged.append((seq, slot))
        responses.append(step_responses)
        filtered.append(step_responses[slot])
        baseline.append(respond[x])
        utility.append(1.0 if step_responses[slot] == respond[x] else 0.0)
        if mech.map_real_slot(seq) == slot:
            hits += 1
    accuracy = hits / steps

    verdict = classify_mechanism(
        mech, exact_match_utility(), measure, real_dist, measure_params
    )
    trace = ScenarioTrace(
        scenario="f0",
        seed=seed,
        steps=steps,
        real_inputs=tuple(real_inputs),
        obfuscated=tuple(tagged),
        outputs=tuple(baseline),
        responses=tuple(responses),
        filtered_outputs=tuple(filtered),
        adversary_view=tuple(seq for seq, _ in tagged),
        utility_per_step=tuple(utility),
        adversary_accuracy=accuracy,
        extras={"dummies_per_real": k},
    )
    return trace, verdict


def _personalized_response(query: str, history: Sequence[str]) -> str:
    """Frequency personalization: results ranked by how often this account
    asked the same query before. Any dummy colliding with a later real
    query shifts the counter and changes the response."""
    repeats = sum(1 for item in history if item == query)
    return f"{query}#{repeats}"


def _verdict_from_rates(
    utility_before: float,
    utility_after: float,
    privacy_measure: str,
    privacy_before: float,
    privacy_after: float,
    tol: float = 1e-9,
) -> ObfuscationVerdict:
    if privacy_after > privacy_before - tol:
        classification = "INEFFECTIVE"
    elif utility_after == utility_before:
        classification = "UPO"
    else:
        classification = "UDO"
    return ObfuscationVerdict(
        classification,
        utility_before,
        utility_after,
        privacy_measure,
        privacy_before,
        privacy_after,
    )


def run_scenario_f1(config: Mapping) -> tuple[ScenarioTrace, ObfuscationVerdict]:
    """Chaff against per-account personalization.

    Responses depend on the querying account's own history. The Sybil
    variant keeps the real account clean and hosts chaff on dummy
    accounts; the adversary must identify the real account among s+1.
    The naive variant interleaves dummies into the real account, feeding
    personalization a polluted history.
    """
    alphabet = Alphabet(_required(config, "alphabet"))
    seed = _int_field(config, "seed", 0, 0)
    steps = _int_field(config, "steps", 16, 1)
    episodes = _int_field(config, "episodes", 1, 1)
    variant = config.get("variant", "sybil")
    if variant not in ("sybil", "naive"):
        raise ConfigurationError(
            f"must be 'sybil' or 'naive', got {variant!r}", field="variant"
        )
    real_dist = _dist_field(config, "real_dist", alphabet)
    rng = Rng(seed)

    if variant == "sybil":
        s = _int_field(config, "sybils", None, 0)
        gen_specs = config.get("sybil_gens")
        if gen_specs is None:
            gens = [real_dist] * s
        else:
            if len(gen_specs) != s:
                raise ConfigurationError(
                    f"expected {s} generators, got {len(gen_specs)}",
                    field="sybil_gens",
                )
            gens = [
                _dist_field({"g": spec}, "g", alphabet) for spec in gen_specs
            ]
        return _run_f1_sybil(
            alphabet, seed, steps, episodes, s, real_dist, gens, rng
        )
    k = _int_field(config, "dummies_per_real", 1, 1)
    dummy_gen = _dist_field(config, "dummy_gen", alphabet, default=real_dist)
    return _run_f1_naive(alphabet, seed, steps, episodes, k, real_dist, dummy_gen, rng)


def _log_mass(dist: ProbVec) -> np.ndarray:
    out = np.full(dist.alphabet.size, -np.inf)
    positive = dist.mass > 0
    out[positive] = np.log(dist.mass[positive])
    return out


def _map_real_account(
    stream_indices: list[np.ndarray],
    log_real: np.ndarray,
    log_gens: list[np.ndarray],
) -> int:
    """MAP hypothesis for which account is real; ties break lowest.

    Sybil generators are assigned to the non-real accounts in account
    order, which is the adversary's knowledge of the OT design. Terms
    are summed in account order for every hypothesis so exact ties stay
    exact.
    """
    n_accounts = len(stream_indices)
    real_terms = [float(log_real[idx].sum()) for idx in stream_indices]
    gen_terms = [
        [float(lg[idx].sum()) for lg in log_gens] for idx in stream_indices
    ]
    scores = []
    for h in range(n_accounts):
        total = 0.0
        gen_i = 0
        for a in range(n_accounts):
            if a == h:
                total += real_terms[a]
            else:
                total += gen_terms[a][gen_i]
                gen_i += 1
        scores.append(total)
    return int(np.argmax(scores))


def _run_f1_sybil(alphabet, seed, steps, episodes, s, real_dist, gens, rng):
    log_real = _log_mass(real_dist)
    log_gens = [_log_mass(g) for g in gens]
    first: dict = {}
    hits = 0
    for episode in range(episodes):
        real_account = rng.integer(s + 1)
        stream_indices: list[np.ndarray] = []
        gen_idx = 0
        for a in range(s + 1):
            if a == real_account:
                dist = real_dist
            else:
                dist = gens[gen_idx]
                gen_idx += 1
            stream_indices.append(
                rng.generator.choice(alphabet.size, size=steps, p=dist.mass)
            )
        if _map_real_account(stream_indices, log_real, log_gens) == real_account:
            hits += 1
        if episode == 0:
            streams = [
                [alphabet.labels[i] for i in idx] for idx in stream_indices
            ]
            first = {"streams": streams, "real_account": real_account}
    accuracy = hits / episodes

    streams = first["streams"]
    real_account = first["real_account"]
    real_stream = streams[real_account]
    baseline = [
        _personalized_response(q, real_stream[:t])
        for t, q in enumerate(real_stream)
    ]
    # real account history is unpolluted, so delivery equals baseline
    delivered = list(baseline)
    utility = [1.0 if d == b else 0.0 for d, b in zip(delivered, baseline)]
    utility_after = sum(utility) / steps

    verdict = _verdict_from_rates(
        1.0, utility_after, "map_account_accuracy", 1.0, accuracy
    )
    trace = ScenarioTrace(
        scenario="f1",
        seed=seed,
        steps=steps,
        real_inputs=tuple(real_stream),
        obfuscated=(tuple(tuple(st) for st in streams), real_account),
        outputs=tuple(baseline),
        responses=tuple(delivered),
        filtered_outputs=tuple(delivered),
        adversary_view=tuple(tuple(st) for st in streams),
        utility_per_step=tuple(utility),
        adversary_accuracy=accuracy,
        extras={"variant": "sybil", "sybils": s, "episodes": episodes},
    )
    return trace, verdict


def _run_f1_naive(alphabet, seed, steps, episodes, k, real_dist, dummy_gen, rng):
    chaff = chaff_injector(real_dist, dummy_gen, k)
    first: dict = {}
    hits = 0
    trials = 0
    utility_after_first = 0.0
    for episode in range(episodes):
        real_queries: list[str] = []
        account_stream: list[str] = []
        tagged: list[tuple[str, int]] = []
        baseline: list[str] = []
        delivered: list[str] = []
        utility: list[float] = []
        for t in range(steps):
            x = alphabet.labels[rng.choice_index(real_dist.mass)]
            seq, slot = chaff.sample_tagged(x, rng)
            actions = split_sequence_label(seq)
            clean_history = list(real_queries)
            polluted_history = account_stream + list(actions[:slot])
            baseline.append(_personalized_response(x, clean_history))
            delivered.append(_personalized_response(x, polluted_history))
            utility.append(1.0 if delivered[-1] == baseline[-1] else 0.0)
            real_queries.append(x)
            account_stream.extend(actions)
            tagged.append((seq, slot))
            if chaff.map_real_slot(seq) == slot:
                hits += 1
            trials += 1
        if episode == 0:
            first = {
                "real_queries": real_queries,
                "account_stream": account_stream,
                "tagged": tagged,
                "baseline": baseline,
                "delivered": delivered,
                "utility": utility,
            }
            utility_after_first = sum(utility) / steps
    accuracy = hits / trials

    verdict = _verdict_from_rates(
        1.0, utility_after_first, "map_slot_accuracy", 1.0, accuracy
    )
    trace = ScenarioTrace(
        scenario="f1",
        seed=seed,
        steps=steps,
        real_inputs=tuple(first["real_queries"]),
        obfuscated=tuple(first["tagged"]),
        outputs=tuple(first["baseline"]),
        responses=tuple(first["delivered"]),
        filtered_outputs=tuple(first["delivered"]),
        adversary_view=tuple(seq for seq, _ in first["tagged"]),
        utility_per_step=tuple(first["utility"]),
        adversary_accuracy=accuracy,
        extras={"variant": "naive", "dummies_per_real": k, "episodes": episodes},
    )
    return trace, verdict


@dataclass(frozen=True)
class PopulationUtilityReport:
    """Public utility accounting for the collective-personalization scenario."""

    strategy: str
    per_user_baseline: tuple[float, ...]
    per_user_with_ot: tuple[float, ...]
    total_baseline: float
    total_with_ot: float
    ot_user_contribution: float
    per_user_drop: tuple[float, ...]
    n_models: int
    cooperation_units: int


F2_STRATEGIES = ("include_all", "drop", "pick", "repair")


def _pairwise_utilities(
    receiver_counts: list[np.ndarray],
    contributor_counts: list[np.ndarray],
    contributor_ids: list[int],
    steps: int,
) -> list[float]:
    """Per-receiver utility: sum of normalized count-vector overlaps with
    every other contributing history."""
    utilities = []
    for u, cu in enumerate(receiver_counts):
        total = 0.0
        for cid, cv in zip(contributor_ids, contributor_counts):
            if cid == u:
                continue
            total += float(cu @ cv) / (steps * steps)
        utilities.append(total)
    return utilities


def run_scenario_f2(config: Mapping) -> tuple[ScenarioTrace, PopulationUtilityReport]:
    """Chaff against collective personalization.

    User 0 deploys Sybil accounts; the provider either includes
    everything, drops all of that user's accounts, picks the account it
    identifies as real, or builds one collective model per account
    (repair). Public utility is the additive pairwise relevance score,
    so marginal contributions are exact.
    """
    alphabet = Alphabet(_required(config, "alphabet"))
    seed = _int_field(config, "seed", 0, 0)
    steps = _int_field(config, "steps", 16, 1)
    n_users = _int_field(config, "population", None, 2)
    s = _int_field(config, "sybils", 0, 0)
    strategy = config.get("provider_strategy", "drop" if s else "include_all")
    if strategy not in F2_STRATEGIES:
        raise ConfigurationError(
            f"must be one of {F2_STRATEGIES}, got {strategy!r}",
            field="provider_strategy",
        )
    real_dist = _dist_field(config, "real_dist", alphabet)
    sybil_gen = _dist_field(config, "sybil_gen", alphabet, default=real_dist)
    rng = Rng(seed)

    def draw_stream(dist: ProbVec) -> list[str]:
        return [alphabet.labels[rng.choice_index(dist.mass)] for _ in range(steps)]

    def counts(stream: list[str]) -> np.ndarray:
        c = np.zeros(alphabet.size)
        for item in stream:
            c[alphabet.index(item)] += 1.0
        return c

    # user 0 is the OT user; draw order: real stream, sybil streams, others
    real_stream = draw_stream(real_dist)
    sybil_streams = [draw_stream(sybil_gen) for _ in range(s)]
    other_streams = [draw_stream(real_dist) for _ in range(n_users - 1)]

    real_counts = counts(real_stream)
    other_counts = [counts(st) for st in other_streams]
    receiver_counts = [real_counts] + other_counts

    per_user_baseline = _pairwise_utilities(
        receiver_counts, receiver_counts, list(range(n_users)), steps
    )

    if s == 0 or strategy == "include_all":
        contributor_counts = receiver_counts
        contributor_ids = list(range(n_users))
        n_models = 1
    elif strategy == "drop":
        contributor_counts = other_counts
        contributor_ids = list(range(1, n_users))
        n_models = 1
    elif strategy == "pick":
        # provider MAP-identifies the real account among the user's s+1;
        # real account position is shuffled, generators known by design
        accounts = [real_stream] + sybil_streams
        order = list(rng.generator.permutation(s + 1))
        shuffled = [accounts[i] for i in order]
        indices = [
            np.array([alphabet.index(a) for a in st]) for st in shuffled
        ]
        picked = _map_real_account(
            indices, _log_mass(real_dist), [_log_mass(sybil_gen)] * s
        )
        picked_counts = counts(shuffled[picked])
        contributor_counts = [picked_counts] + other_counts
        contributor_ids = list(range(n_users))
        n_models = 1
    else:  # repair: one model per account; users served from the real one
        contributor_counts = receiver_counts
        contributor_ids = list(range(n_users))
        n_models = s + 1

    per_user_with_ot = _pairwise_utilities(
        receiver_counts, contributor_counts, contributor_ids, steps
    )
    drops = [b - a for b, a in zip(per_user_baseline, per_user_with_ot)]
    contribution = sum(drops[1:])

    report = PopulationUtilityReport(
        strategy=strategy,
        per_user_baseline=tuple(per_user_baseline),
        per_user_with_ot=tuple(per_user_with_ot),
        total_baseline=sum(per_user_baseline),
        total_with_ot=sum(per_user_with_ot),
        ot_user_contribution=contribution,
        per_user_drop=tuple(drops),
        n_models=n_models,
        cooperation_units=n_models * (n_users - 1),
    )

    # the OT user's delivered responses: most popular query in the serving model
    def top_of(model_counts: list[np.ndarray], exclude: int | None) -> str:
        total = np.zeros(alphabet.size)
        for cid, cv in zip(contributor_ids, model_counts):
            if exclude is not None and cid == exclude:
                continue
            total += cv
        if total.sum() == 0.0:
            return EMPTY_HISTORY
        return alphabet.labels[int(np.argmax(total))]

    baseline_top = alphabet.labels[int(np.argmax(sum(receiver_counts)))]
    if strategy in ("include_all", "repair") or s == 0:
        served_top = baseline_top
    else:
        served_top = top_of(contributor_counts, None)
    baseline_resp = [f"{q}@{baseline_top}" for q in real_stream]
    delivered_resp = [f"{q}@{served_top}" for q in real_stream]
    utility = [1.0 if d == b else 0.0 for d, b in zip(delivered_resp, baseline_resp)]

    trace = ScenarioTrace(
        scenario="f2",
        seed=seed,
        steps=steps,
        real_inputs=tuple(real_stream),
        obfuscated=(
            tuple([tuple(real_stream)] + [tuple(st) for st in sybil_streams]),
            0,
        ),
        outputs=tuple(baseline_resp),
        responses=tuple(delivered_resp),
        filtered_outputs=tuple(delivered_resp),
        adversary_view=tuple(
            [tuple(st) for st in other_streams]
            + [tuple(real_stream)]
            + [tuple(st) for st in sybil_streams]
        ),
        utility_per_step=tuple(utility),
        adversary_accuracy=float("nan"),
        extras={
            "population": n_users,
            "sybils": s,
            "strategy": strategy,
            "n_models": n_models,
            "cooperation_units": report.cooperation_units,
        },
    )
    return trace, report


def run_scenario(config: Mapping):
    """Dispatch on the config's scenario discriminator."""
    scenario = config.get("scenario")
    if scenario == "f0":
        return run_scenario_f0(config)
    if scenario == "f1":
        return run_scenario_f1(config)
    if scenario == "f2":
        return run_scenario_f2(config)
    raise ConfigurationError(
        f"must be one of 'f0', 'f1', 'f2', got {scenario!r}", field="scenario"
    )


# ---------------------------------------------------------------------------
# disclosure ladder


DISCLOSURE_LADDER = ("raw", "local_models", "aggregate", "outcome_only", "constant")


@dataclass(frozen=True)
class DisclosureRung:
    """Leakage and utility of one disclosure architecture."""

    name: str
    leakage_bits: float
    public_utility: float
    irreducible_floor: bool


def disclosure_ledger(
    architecture,
    public_utility: UtilitySpec | None,
    input_prior: ProbVec,
    n_users: int = 3,
    psi: Mapping[str, str] | None = None,
    feature_map: Mapping[str, str] | None = None,
    outcome_fn: Callable | None = None,
) -> list[DisclosureRung]:
    """Exact leakage per disclosure architecture for iid users.

    Architectures form the redesign ladder raw -> local_models ->
    aggregate -> outcome_only -> constant, each rung a deterministic
    function of the previous, so per-user leakage (mutual information
    between psi(X_u) and the revealed quantity) is monotone
    non-increasing. The outcome_only rung is flagged as the irreducible
    floor whenever its leakage stays positive: public utility cannot be
    produced with zero disclosure.

    ``architecture`` is a rung name or a list of rung names; unknown
    names raise UnknownArchitectureError.
    """
    if isinstance(architecture, str):
        requested = [architecture]
    else:
        requested = list(architecture)
    for name in requested:
        if name not in DISCLOSURE_LADDER:
            raise UnknownArchitectureError(
                f"unknown architecture {name!r}; ladder: "
                + ", ".join(DISCLOSURE_LADDER)
            )
    alphabet = input_prior.alphabet
    if n_users < 1:
        raise ConfigurationError("n_users must be >= 1", field="n_users")
    n_states = alphabet.size**n_users
    cap = mca.enumeration_cap()
    if n_states > cap:
        raise EnumerationCapError(
            f"{n_states} joint states exceed the cap of {cap}; "
            "shrink the instance or raise OBF_EVAL_MAX_ENUM"
        )
    if psi is not None:
        missing = [x for x in alphabet.labels if x not in psi]
        if missing:
            raise ConfigurationError(f"psi is not total: missing {missing!r}")
    fmap = {x: str(feature_map[x]) if feature_map else x for x in alphabet.labels}

    def default_outcome(histogram: tuple) -> str:
        # most frequent local value; ties break to the smallest label
        top = max(count for _, count in histogram)
        return min(value for value, count in histogram if count == top)

    outcome = outcome_fn or default_outcome

    def reveal(name: str, state: tuple[str, ...]):
        locals_ = tuple(fmap[x] for x in state)
        if name == "raw":
            return state
        if name == "local_models":
            return locals_
        histogram = tuple(sorted(Counter(locals_).items()))
        if name == "aggregate":
            return histogram
        if name == "outcome_only":
            return outcome(histogram)
        return "none"

    rungs = []
    for name in requested:
        pairs: dict[tuple, float] = {}
        score = 0.0
        for state in itertools.product(alphabet.labels, repeat=n_users):
            p = 1.0
            for x in state:
                p *= input_prior[x]
            if p == 0.0:
                continue
            target = psi[state[0]] if psi else state[0]
            key = (target, reveal(name, state))
            pairs[key] = pairs.get(key, 0.0) + p
            if name != "constant":
                sigma = reveal("outcome_only", state)
                if public_utility is not None:
                    score += p * float(public_utility.scoring(state, sigma))
                else:
                    score += p
        leakage = _exact_mi(pairs)
        rungs.append(
            DisclosureRung(
                name=name,
                leakage_bits=leakage,
                public_utility=score,
                irreducible_floor=(name == "outcome_only" and leakage > 1e-9),
            )
        )
    return rungs


# ---------------------------------------------------------------------------
# trace persistence


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(config: Mapping) -> str:
    return hashlib.sha256(_canonical_json(config).encode()).hexdigest()


def trace_records(trace: ScenarioTrace, digest: str, tool_version: str):
    """Line-delimited JSON records for one run: header, steps, summary.

    The adversary view is per-step for f0 and the naive f1 variant; for
    account-level scenarios (f1 sybil, f2) the whole account streams go
    into the header instead.
    """
    per_step_view = len(trace.adversary_view) == trace.steps
    header = {
        "schema_version": SCHEMA_VERSION,
        "kind": "header",
        "scenario": trace.scenario,
        "seed": trace.seed,
        "steps": trace.steps,
        "config_digest": digest,
        "tool_version": tool_version,
        "extras": trace.extras,
    }
    if not per_step_view:
        header["adversary_view"] = trace.adversary_view
    yield header
    for t in range(trace.steps):
        yield {
            "schema_version": SCHEMA_VERSION,
            "kind": "step",
            "t": t,
            "real": trace.real_inputs[t],
            "adversary_view": trace.adversary_view[t] if per_step_view else None,
            "baseline": trace.outputs[t],
            "filtered": trace.filtered_outputs[t],
            "utility": trace.utility_per_step[t],
        }
    accuracy = trace.adversary_accuracy
    yield {
        "schema_version": SCHEMA_VERSION,
        "kind": "summary",
        "adversary_accuracy": None if math.isnan(accuracy) else accuracy,
        "utility_mean": sum(trace.utility_per_step) / len(trace.utility_per_step)
        if trace.utility_per_step
        else None,
    }


def write_trace_jsonl(
    trace: ScenarioTrace, path, digest: str, tool_version: str
) -> None:
    with open(path, "w") as fh:
        for record in trace_records(trace, digest, tool_version):
            fh.write(_canonical_json(record))
            fh.write("\n")


SUMMARY_COLUMNS = (
    "seed",
    "verdict",
    "utility_before",
    "utility_after",
    "privacy_before",
    "privacy_after",
    "adversary_accuracy",
)


def summary_row(trace: ScenarioTrace, verdict) -> dict:
    """One CSV row per run; f2 reports fill the utility columns only."""
    if isinstance(verdict, ObfuscationVerdict):
        return {
            "seed": trace.seed,
            "verdict": verdict.classification,
            "utility_before": repr(verdict.utility_before),
            "utility_after": repr(verdict.utility_after),
            "privacy_before": repr(verdict.privacy_before),
            "privacy_after": repr(verdict.privacy_after),
            "adversary_accuracy": repr(trace.adversary_accuracy),
        }
    report: PopulationUtilityReport = verdict
    return {
        "seed": trace.seed,
        "verdict": "",
        "utility_before": repr(report.total_baseline),
        "utility_after": repr(report.total_with_ot),
        "privacy_before": "",
        "privacy_after": "",
        "adversary_accuracy": "",
    }


def write_summary_csv(rows: Sequence[Mapping], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
