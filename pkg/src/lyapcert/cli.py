"""Command-line front end.

Subcommands: ``analyze``, ``simulate``, ``admissibility-scan``,
``lyapunov-eval``, ``selftest``.  Exit codes: 0 success, 2 configuration
error, 3 an infeasibility finding (a result, not an error), 4 invariant
violation.  All numeric output is full double precision with '.' decimal
separators and LF line endings; a fixed seed makes outputs byte-identical.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys as _sys

from . import models
from .analysis import (
    AnalysisConfig,
    ConfigError,
    InvariantViolationError,
    run_analyze,
    run_simulate,
)
from .lyapunov import build_half_norm, build_v_half, build_w_plain, build_w_q
from .selftest import run_selftest, selftest_names

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FINDING = 3
EXIT_INVARIANT = 4


def _parse_float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _parse_int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def _parse_q(text):
    if text.strip().lower() == "inf":
        return math.inf
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("q must be 1, 2 or inf")
    if value not in (1.0, 2.0):
        raise argparse.ArgumentTypeError("q must be 1, 2 or inf")
    return value


def _add_common(parser):
    parser.add_argument("--model", choices=models.MODEL_NAMES, help="registered model name")
    parser.add_argument("--config", metavar="PATH", help="JSON config file")
    parser.add_argument("--modes", type=_parse_int_list, help="comma list of truncation sizes")
    parser.add_argument("--gamma", type=_parse_float_list, help="comma list of scan exponents")
    parser.add_argument("--q", type=_parse_q, help="input integrability exponent: 1, 2 or inf")
    parser.add_argument("--horizon", type=float, help="admissibility horizon T")
    parser.add_argument("--seed", type=int, help="random seed (fixes all outputs)")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--epsilon", type=float, help="similarity Lyapunov right-hand scale")
    parser.add_argument(
        "--delta-override", type=float, help="decay-rate override inside the spectral gap"
    )


def _build_config(args) -> AnalysisConfig:
    if args.config:
        config = AnalysisConfig.from_file(args.config)
    else:
        config = AnalysisConfig()
    overrides = {}
    if args.model is not None:
        overrides["model"] = args.model
    if args.modes is not None:
        overrides["modes"] = args.modes
    if args.gamma is not None:
        overrides["gammas"] = args.gamma
    if args.q is not None:
        overrides["q"] = args.q
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.epsilon is not None:
        overrides["epsilon"] = args.epsilon
    if args.delta_override is not None:
        overrides["delta_override"] = args.delta_override
    config = dataclasses.replace(config, **overrides)
    if config.model is None and config.system is None:
        raise ConfigError("nothing to analyze: give --model or a config with a system")
    return config


def _cmd_analyze(args) -> int:
    config = _build_config(args)
    report, artifacts = run_analyze(config)
    print(f"system: {report['system']}  modes: {report['modes']}")
    for name, slot in sorted(report["slots"].items()):
        value = slot.get("value")
        if isinstance(value, dict):
            value = {k: v.get("verdict") for k, v in value.items()}
        print(f"  slot {name}: {value}")
    for edge in report["edges"]:
        print(f"  edge {edge['id']}: {edge['status']}")
    for finding in report["findings"]:
        print(f"  finding: {finding}")
    for kind, path in artifacts.items():
        print(f"wrote {kind}: {path}")
    return EXIT_FINDING if report["findings"] else EXIT_OK


def _cmd_simulate(args) -> int:
    config = _build_config(args)
    doc, artifacts = run_simulate(config)
    envelope = doc["envelope"]
    if envelope:
        print(
            f"gain fit: overshoot {envelope['overshoot']!r}, rate {envelope['rate']!r}, "
            f"gain {envelope['gain']!r}, certified {doc['certified']}"
        )
    for kind, path in sorted(artifacts.items()):
        print(f"wrote {kind}: {path}")
    if doc["not_iss"]:
        print("finding: homogeneous ensemble does not decay")
        return EXIT_FINDING
    return EXIT_OK


def _cmd_admissibility_scan(args) -> int:
    config = _build_config(args)
    report, artifacts = run_analyze(dataclasses.replace(config, out_dir=None))
    scans = report["slots"]["gamma_scans"]["value"]
    adm = report["slots"]["two_admissibility"]
    verdict_doc = {
        "schema": "1",
        "system": report["system"],
        "scans": scans,
        "constants": adm["constants"],
        "constant_verdict": adm["value"],
        "l2_iss": report["slots"]["l2_iss"],
    }
    if config.out_dir:
        os.makedirs(config.out_dir, exist_ok=True)
        path = os.path.join(config.out_dir, "admissibility.json")
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(verdict_doc, handle, indent=2, sort_keys=True)
            handle.write("\n")
        print(f"wrote verdicts: {path}")
    for gamma, entry in sorted(scans.items(), key=lambda kv: float(kv[0])):
        print(f"  gamma={gamma}: {entry['verdict']} (exponent {entry['exponent']:.4g})")
    print(f"  q={args.q if args.q is not None else config.q}: {adm['value']}")
    print(f"  verdict: {report['slots']['l2_iss']['value']}")
    return EXIT_FINDING if report["slots"]["l2_iss"]["value"] == "not-ISS" else EXIT_OK


def _cmd_lyapunov_eval(args) -> int:
    config = _build_config(args)
    from .analysis import _family  # shares family construction with analyze

    label, family = _family(config)
    sys = family[-1]
    forms = {
        "v_half": build_v_half(sys),
        "half_norm": build_half_norm(sys),
        "w_quarter": build_w_q(sys, 0.25),
        "w_plain": build_w_plain(sys),
    }
    doc = {
        "schema": "1",
        "system": label,
        "modes": sys.dimension,
        "forms": {
            name: dict(form.to_config(), a1=form.a1, a2=form.a2)
            for name, form in forms.items()
        },
    }
    rendered = json.dumps(doc, indent=2, sort_keys=True)
    if config.out_dir:
        os.makedirs(config.out_dir, exist_ok=True)
        path = os.path.join(config.out_dir, "forms.json")
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(rendered + "\n")
        print(f"wrote forms: {path}")
    else:
        print(rendered)
    return EXIT_OK


def _cmd_selftest(args) -> int:
    ok = run_selftest(seed=args.seed if args.seed is not None else 0, fault=args.fault)
    print("selftest: all invariants hold" if ok else "selftest: FAILURES above")
    return EXIT_OK if ok else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lyapcert",
        description=(
            "Quadratic Lyapunov certificates and admissibility diagnostics for "
            "stable linear systems at spectral-truncation scale."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser("analyze", help="full analysis with implication report")
    _add_common(p_analyze)
    p_analyze.set_defaults(func=_cmd_analyze)

    p_sim = sub.add_parser("simulate", help="trajectory ensemble and gain fit")
    _add_common(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_scan = sub.add_parser(
        "admissibility-scan", help="extrapolation scans and empirical constants"
    )
    _add_common(p_scan)
    p_scan.set_defaults(func=_cmd_admissibility_scan)

    p_forms = sub.add_parser("lyapunov-eval", help="construct and serialize the candidate forms")
    _add_common(p_forms)
    p_forms.set_defaults(func=_cmd_lyapunov_eval)

    p_self = sub.add_parser("selftest", help="run the invariant suite")
    p_self.add_argument("--seed", type=int, default=0)
    p_self.add_argument(
        "--fault", choices=selftest_names(), help="deliberately corrupt one check"
    )
    p_self.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except InvariantViolationError as exc:
        print(f"invariant violation: {exc}", file=_sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    raise SystemExit(main())
