"""obfeval: evaluation toolkit for obfuscation mechanisms.

Models obfuscators as discrete noisy channels, computes mechanism-centred
(epsilon, mutual information, capacity, min-entropy leakage, g-leakage)
and attack-centred (information gain, expected estimation error) privacy
measures, and simulates chaff-based obfuscation scenarios with
utility/privacy accounting.
"""

__version__ = "0.1.0"

from .channel import (
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
from .mechanisms import (
    ChaffMechanism,
    Mechanism,
    Rng,
    chaff_injector,
    generalization,
    geometric_noise,
    identity_mechanism,
    mechanism_from_config,
    randomized_response,
    randomized_response_epsilon,
    suppression,
)
from .mca import (
    CapacityResult,
    EpsilonReport,
    GainFunction,
    NeighborRelation,
    capacity,
    central_epsilon,
    g_leakage,
    local_epsilon,
    marginal_guesswork,
    min_capacity,
    min_entropy_leakage,
    mutual_information,
    postprocess,
    replace_one_neighbors,
)
from .aca import (
    AdversaryModel,
    BeliefUpdate,
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
from .simulation import (
    FeatureFlags,
    FeatureModel,
    ObfuscationVerdict,
    PopulationUtilityReport,
    ScenarioTrace,
    UtilitySpec,
    classify_features,
    classify_mechanism,
    disclosure_ledger,
    exact_match_utility,
    run_scenario,
    run_scenario_f0,
    run_scenario_f1,
    run_scenario_f2,
)

__all__ = [name for name in dir() if not name.startswith("_")]
