"""Batch front-end.

Subcommands: evaluate, simulate, compare, list-measures,
list-mechanisms. Reports are line-delimited JSON (one record per line)
plus optional CSV; every record carries the tool version, the seed and a
digest of the config, and re-running a job with identical inputs
reproduces identical records.

Exit codes: 0 success, 2 configuration error, 3 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

from . import __version__, aca, mca, simulation
from .channel import Alphabet, ObfuscationChannel, ProbVec
from .errors import (
    ConfigurationError,
    NumericalError,
    ObfevalError,
    UnknownMeasureError,
)
from .mechanisms import SUPPORTED_MECHANISMS, mechanism_from_config
from .simulation import config_digest

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

MEASURES = {
    "local_epsilon": "multiplicative indistinguishability bound with witness",
    "mutual_information": "I(X;E) in bits under the configured prior",
    "capacity": "max leakage over all priors (params: tol, max_iter)",
    "min_entropy_leakage": "one-try vulnerability leakage under the prior",
    "min_capacity": "log2 sum of column maxima",
    "g_leakage": "gain-function leakage (params.gain: guesses + matrix)",
    "marginal_guesswork": "guesses needed to reach params.success_prob",
    "min_conditional_entropy": "MAP adversary uncertainty under the prior",
    "belief_min_conditional_entropy": "wrong-belief MAP uncertainty (adversary.belief)",
    "expected_information_gain": "mean belief update toward the truth (adversary.belief)",
    "expected_estimation_error": "distortion-weighted adversarial error (adversary spec)",
}


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise ConfigurationError(f"cannot read config: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"config is not valid JSON: {err}") from None


def _channel_from_config(config: dict) -> ObfuscationChannel:
    if "channel" in config:
        spec = config["channel"]
        if "alphabet" not in spec or "rows" not in spec:
            raise ConfigurationError(
                "channel needs alphabet and rows", field="channel"
            )
        return ObfuscationChannel.from_json(json.dumps(spec))
    if "mechanism" in config:
        return mechanism_from_config(config["mechanism"]).to_channel()
    raise ConfigurationError(
        "config must contain a channel or a mechanism", field="channel"
    )


def _prior_from_config(config: dict, alphabet: Alphabet) -> ProbVec:
    spec = config.get("prior")
    if spec is None:
        return ProbVec.uniform(alphabet)
    try:
        if isinstance(spec, dict):
            return ProbVec.from_mapping(alphabet, spec)
        return ProbVec(alphabet, spec)
    except ConfigurationError as err:
        raise ConfigurationError(str(err), field="prior") from None


def _adversary_from_config(config: dict, channel: ObfuscationChannel):
    spec = config.get("adversary")
    if spec is None:
        return None
    belief = spec.get("belief")
    if belief is None:
        raise ConfigurationError("adversary needs a belief", field="adversary.belief")
    try:
        if isinstance(belief, dict):
            belief_pv = ProbVec.from_mapping(channel.input_alphabet, belief)
        else:
            belief_pv = ProbVec(channel.input_alphabet, belief)
    except ConfigurationError as err:
        raise ConfigurationError(str(err), field="adversary.belief") from None
    return aca.AdversaryModel(belief_pv, spec.get("psi"))


def _strategy_from_config(config: dict, adversary, channel: ObfuscationChannel):
    spec = (config.get("adversary") or {}).get("strategy", "map")
    if spec == "map":
        return aca.map_strategy(adversary, channel)
    if isinstance(spec, dict) and "matrix" in spec:
        guesses = Alphabet(spec.get("guesses", adversary.profile_alphabet.labels))
        return aca.Strategy(channel.output_alphabet, guesses, spec["matrix"])
    raise ConfigurationError(
        'strategy must be "map" or {"guesses": [...], "matrix": [[...]]}',
        field="adversary.strategy",
    )


def _distortion_from_config(config: dict, strategy, adversary):
    spec = (config.get("adversary") or {}).get("distortion", "zero_one")
    if spec == "zero_one":
        return aca.DistortionFn.zero_one(adversary.profile_alphabet)
    if isinstance(spec, list):
        return aca.DistortionFn(
            strategy.guess_alphabet, adversary.profile_alphabet, spec
        )
    raise ConfigurationError(
        'distortion must be "zero_one" or a matrix',
        field="adversary.distortion",
    )


def _eval_measure(name: str, params: dict, channel, prior, adversary, config):
    if name == "local_epsilon":
        report = mca.local_epsilon(channel)
        return report.epsilon, report.witness
    if name == "mutual_information":
        return mca.mutual_information(prior, channel), None
    if name == "capacity":
        result = mca.capacity(
            channel,
            tol=params.get("tol", mca.DEFAULT_CAPACITY_TOL),
            max_iter=params.get("max_iter", mca.DEFAULT_CAPACITY_MAX_ITER),
        )
        return result.bits, {
            "achieving_prior": [float(p) for p in result.achieving_prior.mass],
            "iterations": result.iterations,
            "gap": result.gap,
        }
    if name == "min_entropy_leakage":
        return mca.min_entropy_leakage(prior, channel), None
    if name == "min_capacity":
        return mca.min_capacity(channel), None
    if name == "g_leakage":
        gain_spec = params.get("gain")
        if not gain_spec:
            raise ConfigurationError("g_leakage needs params.gain", field="params.gain")
        gain = mca.GainFunction(
            Alphabet(gain_spec["guesses"]),
            channel.input_alphabet,
            gain_spec["matrix"],
        )
        return mca.g_leakage(prior, channel, gain), None
    if name == "marginal_guesswork":
        if "success_prob" not in params:
            raise ConfigurationError(
                "marginal_guesswork needs params.success_prob",
                field="params.success_prob",
            )
        return mca.marginal_guesswork(prior, float(params["success_prob"])), None
    if name == "min_conditional_entropy":
        return aca.min_conditional_entropy(prior, channel), None
    if name == "belief_min_conditional_entropy":
        if adversary is None:
            raise ConfigurationError(
                "belief measures need an adversary spec", field="adversary"
            )
        return (
            aca.belief_min_conditional_entropy(prior, adversary.belief, channel),
            None,
        )
    if name == "expected_information_gain":
        if adversary is None:
            raise ConfigurationError(
                "belief measures need an adversary spec", field="adversary"
            )
        return aca.expected_information_gain(prior, adversary, channel), None
    if name == "expected_estimation_error":
        if adversary is None:
            raise ConfigurationError(
                "expected_estimation_error needs an adversary spec",
                field="adversary",
            )
        profile_prior, profile_ch = aca.profile_channel(prior, channel, adversary)
        strategy = _strategy_from_config(config, adversary, channel)
        distortion = _distortion_from_config(config, strategy, adversary)
        return (
            aca.expected_estimation_error(
                profile_prior, profile_ch, strategy, distortion
            ),
            None,
        )
    raise UnknownMeasureError(
        f"unknown measure {name!r}; supported: " + ", ".join(sorted(MEASURES))
    )


def _json_safe(value):
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
    return value


def _emit_records(records, out_path, fmt):
    if fmt == "csv":
        columns = sorted({key for record in records for key in record})
        def write(fh):
            writer = csv.DictWriter(fh, fieldnames=columns)
            writer.writeheader()
            for record in records:
                writer.writerow(
                    {k: json.dumps(v) if isinstance(v, (dict, list)) else v
                     for k, v in record.items()}
                )
    else:
        def write(fh):
            for record in records:
                fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
                fh.write("\n")
    if out_path:
        with open(out_path, "w", newline="") as fh:
            write(fh)
    else:
        write(sys.stdout)


def cmd_evaluate(args) -> int:
    config = _load_config(args.config)
    digest = config_digest(config)
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    channel = _channel_from_config(config)
    prior = _prior_from_config(config, channel.input_alphabet)
    adversary = _adversary_from_config(config, channel)
    measures = config.get("measures")
    if not measures:
        raise ConfigurationError("at least one measure is required", field="measures")

    records = []
    for i, spec in enumerate(measures):
        if isinstance(spec, str):
            spec = {"measure": spec}
        name = spec.get("measure")
        params = spec.get("params", {})
        try:
            value, witness = _eval_measure(
                name, params, channel, prior, adversary, config
            )
        except ConfigurationError as err:
            if err.field is None:
                raise ConfigurationError(str(err), field=f"measures[{i}]") from None
            raise ConfigurationError(
                str(err), field=f"measures[{i}].{err.field}"
            ) from None
        record = mca.measure_record(name, _json_safe(value), params)
        if witness is not None:
            record["witness"] = witness
        record.update(
            {"tool_version": __version__, "seed": seed, "config_digest": digest}
        )
        if "job_id" in config:
            record["job_id"] = config["job_id"]
        records.append(record)
    _emit_records(records, args.out, args.format)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = dict(config)
        config["seed"] = args.seed
    digest = config_digest(config)
    trace, outcome = simulation.run_scenario(config)

    base = args.out or f"{trace.scenario}_seed{trace.seed}"
    trace_path = f"{base}.trace.jsonl"
    summary_path = f"{base}.summary.csv"
    report_path = f"{base}.report.jsonl"
    simulation.write_trace_jsonl(trace, trace_path, digest, __version__)
    row = simulation.summary_row(trace, outcome)
    simulation.write_summary_csv([row], summary_path)

    common = {
        "tool_version": __version__,
        "seed": trace.seed,
        "config_digest": digest,
        "params": {"scenario": trace.scenario},
    }
    if "job_id" in config:
        common["job_id"] = config["job_id"]
    records = []
    if isinstance(outcome, simulation.ObfuscationVerdict):
        fields = {
            "verdict": outcome.classification,
            "utility_before": outcome.utility_before,
            "utility_after": outcome.utility_after,
            "privacy_before": outcome.privacy_before,
            "privacy_after": outcome.privacy_after,
            "adversary_accuracy": trace.adversary_accuracy,
        }
    else:
        fields = {
            "utility_before": outcome.total_baseline,
            "utility_after": outcome.total_with_ot,
            "ot_user_contribution": outcome.ot_user_contribution,
            "n_models": outcome.n_models,
            "cooperation_units": outcome.cooperation_units,
        }
    for name, value in fields.items():
        record = {"measure": name, "value": _json_safe(value)}
        record.update(common)
        records.append(record)
    with open(report_path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            fh.write("\n")
    _emit_records(records, None, args.format)
    return EXIT_OK


def _read_report(path: str) -> dict:
    records = {}
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                key = (record.get("measure"), json.dumps(record.get("params", {}), sort_keys=True))
                records[key] = record
    except OSError as err:
        raise ConfigurationError(f"cannot read report: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"report is not JSONL: {err}") from None
    return records


def cmd_compare(args) -> int:
    left = _read_report(args.report_a)
    right = _read_report(args.report_b)
    records = []
    for key in sorted(set(left) | set(right), key=str):
        name, params = key
        a = left.get(key, {}).get("value")
        b = right.get(key, {}).get("value")
        record = {"measure": name, "value_a": a, "value_b": b}
        if isinstance(a, (int, float)) and isinstance(b, (int, float)):
            record["delta"] = b - a
            record["changed"] = bool(record["delta"] != 0)
        else:
            record["delta"] = None
            record["changed"] = a != b
            if name == "verdict" and a != b:
                record["verdict_flip"] = True
        records.append(record)
    _emit_records(records, args.out, args.format)
    return EXIT_OK


def cmd_list_measures(args) -> int:
    for name in sorted(MEASURES):
        print(f"{name}\t{MEASURES[name]}")
    return EXIT_OK


def cmd_list_mechanisms(args) -> int:
    for name in SUPPORTED_MECHANISMS:
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obfeval",
        description="Evaluate obfuscation mechanisms: privacy measures and chaff scenarios.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    evaluate = sub.add_parser("evaluate", help="run measures from a config")
    evaluate.add_argument("--config", required=True)
    evaluate.add_argument("--seed", type=int, default=None)
    evaluate.add_argument("--out", default=None)
    evaluate.add_argument("--format", choices=("json", "csv"), default="json")
    evaluate.set_defaults(func=cmd_evaluate)

    simulate = sub.add_parser("simulate", help="run a scenario config")
    simulate.add_argument("--config", required=True)
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument("--out", default=None)
    simulate.add_argument("--format", choices=("json", "csv"), default="json")
    simulate.set_defaults(func=cmd_simulate)

    compare = sub.add_parser("compare", help="diff two report files")
    compare.add_argument("report_a")
    compare.add_argument("report_b")
    compare.add_argument("--out", default=None)
    compare.add_argument("--format", choices=("json", "csv"), default="json")
    compare.set_defaults(func=cmd_compare)

    lm = sub.add_parser("list-measures", help="supported measures")
    lm.set_defaults(func=cmd_list_measures)

    lmech = sub.add_parser("list-mechanisms", help="supported mechanisms")
    lmech.set_defaults(func=cmd_list_mechanisms)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ObfevalError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, KeyError, TypeError, ValueError) as err:
        print(f"error: {err!r}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
