"""Command-line entry point.

Subcommands: ``classify``, ``coefficients``, ``simulate``, ``verify``,
``nogo``.  Data outputs go to ``--out`` (default stdout) and are
deterministic given the flags and seed; progress lines go to stderr.

Exit codes: 0 success, 2 input error, 3 regime mismatch, 4 resource cap,
5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .channel import (
    classify_scenario,
    load_channel,
    povm_from_json,
    ScenarioClass,
    uniform_nontrivial_ptilde,
)
from .coding import (
    Codebook,
    ExperimentConfig,
    default_epsilon_target,
    nogo_experiment,
    run_experiment,
    select_best,
)
from .divergences import trace_distance
from .errors import InputError, ParseError, RegimeError, ResourceError, WrongRegime
from .scaling import (
    admissible_symbols,
    optimize_ptilde,
    product_measurement_coefficients,
    scaling_report,
    sqrtnlogn_coefficient,
)
from .verify import SUITES, run_suites

SIMULATE_HEADER = "n,gamma,seed,logM_nats,logK_nats,pe_bob,covert_D_nats,pe_willie"
NOGO_HEADER = "epsilon,c_min,pe_willie,bob_bound,admissible_fraction,pair_bound"


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            with open(out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise ParseError(f"cannot write {out}: {exc}") from exc


def _parse_floats(raw: str, flag: str) -> list[float]:
    try:
        return [float(v) for v in raw.split(",") if v != ""]
    except ValueError as exc:
        raise ParseError(f"{flag} expects a comma list of numbers: {exc}") from exc


def _parse_ints(raw: str, flag: str) -> list[int]:
    try:
        return [int(v) for v in raw.split(",") if v != ""]
    except ValueError as exc:
        raise ParseError(f"{flag} expects a comma list of integers: {exc}") from exc


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {what} file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {what} file {path}: {exc}") from exc


def _default_srl_ptilde(channel) -> np.ndarray:
    symbols = admissible_symbols(channel)
    p = np.zeros(channel.alphabet_size - 1)
    for x in symbols:
        p[x - 1] = 1.0 / len(symbols)
    return p


def cmd_classify(args) -> int:
    channel = load_channel(args.channel)
    report = classify_scenario(channel)
    doc = report.to_json()
    if args.format == "json":
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        refinements = ";".join(doc["refinements"])
        symbols = ";".join(str(s) for s in doc["sqrtnlogn_symbols"])
        text = ("class,refinements,sqrtnlogn_symbols\n"
                f"{doc['class']},{refinements},{symbols}\n")
    _write(text, args.out)
    return 0


def cmd_coefficients(args) -> int:
    channel = load_channel(args.channel)
    verdict = classify_scenario(channel)
    unit = "bits" if args.bits else "nats"
    scale = 1.0 / math.log(2.0) if args.bits else 1.0

    if verdict.scenario is ScenarioClass.SQUARE_ROOT_LAW:
        if args.optimize and args.povm:
            raise ParseError("--optimize and --povm cannot be combined; "
                             "optimize works on the joint-measurement coefficients")
        if args.optimize:
            objective, weight = args.optimize, 0.5
            if objective.startswith("tradeoff"):
                parts = objective.split(":")
                objective = "tradeoff"
                if len(parts) == 2:
                    weight = float(parts[1])
            ptilde, report = optimize_ptilde(channel, objective, weight=weight,
                                             seed=args.seed)
        else:
            if args.ptilde:
                ptilde = np.asarray(_parse_floats(args.ptilde, "--ptilde"))
            else:
                ptilde = _default_srl_ptilde(channel)
            if args.povm:
                povm = povm_from_json(_load_json(args.povm, "POVM"))
                report = product_measurement_coefficients(channel, povm, ptilde)
            else:
                report = scaling_report(channel, ptilde)
        doc = report.to_json(unit)
        doc["optimized"] = args.optimize or None
        if args.format == "json":
            text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        else:
            text = ("regime,message_coeff,key_coeff,kappa,unit,ptilde\n"
                    f"{doc['regime']},{_fmt(doc['message_coeff'])},"
                    f"{_fmt(doc['key_coeff'])},,{unit},"
                    f"{';'.join(_fmt(v) for v in doc['ptilde'])}\n")
        _write(text, args.out)
        return 0

    if verdict.scenario is ScenarioClass.SQRT_N_LOG_N:
        if args.ptilde:
            ptilde = np.asarray(_parse_floats(args.ptilde, "--ptilde"))
        else:
            ptilde = np.zeros(channel.alphabet_size - 1)
            for x in verdict.sqrtnlogn_symbols:
                ptilde[x - 1] = 1.0 / len(verdict.sqrtnlogn_symbols)
        report = sqrtnlogn_coefficient(channel, ptilde)
        doc = report.to_json()
        doc["unit"] = unit  # the leading constant is base-invariant
        if args.format == "json":
            text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        else:
            text = ("regime,message_coeff,key_coeff,kappa,unit,ptilde\n"
                    f"{doc['regime']},{_fmt(doc['leading_constant'])},,"
                    f"{_fmt(doc['kappa'])},{unit},"
                    f"{';'.join(_fmt(v) for v in doc['ptilde'])}\n")
        _write(text, args.out)
        return 0

    raise WrongRegime(f"channel classified {verdict.scenario.value}; scaling "
                      "coefficients require SquareRootLaw or SqrtNLogN "
                      f"(refinements: {list(verdict.refinements)})")


def cmd_simulate(args) -> int:
    channel = load_channel(args.channel)
    n_list = tuple(_parse_ints(args.n, "--n"))
    if not n_list:
        raise ParseError("--n needs at least one blocklength")
    knobs = _parse_floats(args.sigma_knobs, "--sigma-knobs")
    if len(knobs) != 3:
        raise ParseError("--sigma-knobs expects three values: varsigma,mu,nu")
    if args.ptilde:
        ptilde = np.asarray(_parse_floats(args.ptilde, "--ptilde"))
    else:
        ptilde = uniform_nontrivial_ptilde(channel)
    epsilon = args.epsilon
    if epsilon is None:
        epsilon = default_epsilon_target(channel, ptilde, args.gamma)
    config = ExperimentConfig(
        channel=channel, n_list=n_list, gamma=args.gamma,
        varsigma=knobs[0], mu=knobs[1], nu=knobs[2],
        trials=args.trials, seed=args.seed, ptilde=ptilde,
        delta_target=args.delta, epsilon_target=epsilon,
        workers=int(os.environ.get("CQCOVERT_WORKERS", "1")))
    print(f"simulate: n={list(n_list)} gamma={args.gamma} trials={args.trials}",
          file=sys.stderr)
    reports = run_experiment(config)

    summaries = []
    for n in n_list:
        group = [r for r in reports if r.n == n]
        summaries.append(select_best(group, config.delta_target, epsilon))

    if args.format == "json":
        doc = {"trials": [r.to_json() for r in reports],
               "summaries": [s.to_json() for s in summaries],
               "delta_target": config.delta_target,
               "epsilon_target": epsilon}
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        lines = [SIMULATE_HEADER]
        by_n = {n: [] for n in n_list}
        for r in reports:
            by_n[r.n].append(r)
        for n, summary in zip(n_list, summaries):
            for r in by_n[n]:
                lines.append(_trial_csv_row(r))
            lines.append(_trial_csv_row(summary))
        text = "\n".join(lines) + "\n"
    _write(text, args.out)
    return 0


def _trial_csv_row(r) -> str:
    return ",".join([str(r.n), _fmt(r.gamma), str(r.seed),
                     _fmt(r.log_m_nats), _fmt(r.log_k_nats), _fmt(r.pe_bob),
                     _fmt(r.covert_d), _fmt(r.pe_willie)])


def cmd_verify(args) -> int:
    names = [args.suite] if args.suite else None
    try:
        results = run_suites(names, trials=args.trials, seed=args.seed)
    except KeyError as exc:
        raise ParseError(str(exc)) from exc
    lines = []
    failed = False
    for r in results:
        lines.append(r.line())
        if not r.passed:
            failed = True
            for f in r.failures:
                lines.append(f"  failing case: {json.dumps(f, sort_keys=True)}")
    _write("\n".join(lines) + "\n", args.out)
    return 5 if failed else 0


def cmd_nogo(args) -> int:
    channel = load_channel(args.channel)
    n = _parse_ints(args.n, "--n")[0] if args.n else 2
    distances = [(trace_distance(channel.willie_states[x], channel.willie_states[0]), x)
                 for x in channel.non_innocent]
    _, x_star = max(distances)
    symbols = np.zeros((2, n), dtype=np.int64)
    symbols[0, 0] = x_star
    if n >= 2:
        symbols[1, 1] = x_star
    codebook = Codebook(n=n, m_count=2, k_count=1, gamma=0.0, seed=0,
                        ptilde=uniform_nontrivial_ptilde(channel), symbols=symbols)
    probe = nogo_experiment(channel, codebook, epsilon=1.0)
    if args.epsilon is not None:
        grid = [args.epsilon]
    else:
        grid = [probe.c_min / f for f in (64.0, 32.0, 16.0, 8.0)]
    rows = [nogo_experiment(channel, codebook, e) for e in grid]

    if args.format == "json":
        text = json.dumps([r.to_json() for r in rows], indent=2, sort_keys=True) + "\n"
    else:
        lines = [NOGO_HEADER]
        for r in rows:
            lines.append(",".join(_fmt(v) for v in (
                r.epsilon, r.c_min, r.pe_willie, r.bob_bound,
                r.admissible_fraction, r.pair_bound)))
        text = "\n".join(lines) + "\n"
    _write(text, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqcovert",
        description="Covert-communication numerics for classical-quantum channels")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, channel=True):
        if channel:
            p.add_argument("--channel", required=True, help="channel-pair JSON file")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("classify", help="place a channel in its scaling regime")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("coefficients", help="square-root-law scaling coefficients")
    common(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--ptilde", default=None,
                       help="comma list over non-innocent symbols")
    group.add_argument("--optimize", default=None,
                       help="max-message | min-key | tradeoff[:w]")
    p.add_argument("--povm", default=None, help="per-use POVM JSON (product measurement)")
    p.add_argument("--bits", action="store_true", help="report coefficients in bits")
    p.set_defaults(func=cmd_coefficients)

    p = sub.add_parser("simulate", help="exact random-coding simulation sweep")
    common(p)
    p.add_argument("--n", required=True, help="comma list of blocklengths")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--delta", type=float, default=0.1, help="reliability target")
    p.add_argument("--epsilon", type=float, default=None, help="covertness target")
    p.add_argument("--sigma-knobs", default="0.1,0.1,0.1",
                   help="varsigma,mu,nu constants")
    p.add_argument("--ptilde", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="randomized invariant suites")
    p.add_argument("--suite", default=None, choices=sorted(SUITES))
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("nogo", help="impossibility experiment on a leaking channel")
    common(p)
    p.add_argument("--n", default=None, help="blocklength (default 2)")
    p.add_argument("--epsilon", type=float, default=None,
                   help="single covertness level (default: grid from c_min)")
    p.set_defaults(func=cmd_nogo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RegimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
