"""Command-line front end: ``archring <subcommand> ...``.

Exit codes: 0 success, 2 bad input or configuration, 3 invariant fault.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from fractions import Fraction
from typing import Optional

from . import bounds as B
from .protocol import (
    PolicyError,
    Power2,
    ProtocolViolation,
    Relative,
    ScaledPower,
    Table,
    is_id_only,
)
from .scenarios import (
    COMPARE_COLUMNS,
    UnsupportedMode,
    adversarial_config,
    average_case_experiment,
    compare_protocols,
    ring_size_of,
)
from .simulator import (
    ConfigError,
    InvariantFault,
    RingConfig,
    derive_params,
    run_election,
    validate_config,
)

RECORD_SCHEMA = "archring.result/1"

AVERAGE_COLUMNS = (
    "trial", "seed", "n", "policy", "winner", "election_passes", "total_passes",
    "total_bits", "duration", "eq5_exact", "eq5_decimal", "within_eq5",
)


class ScenarioError(ConfigError):
    pass


# --------------------------------------------------------------------------
# Scenario files


def policy_to_json(policy) -> dict:
    if isinstance(policy, Power2):
        return {"kind": "power2"}
    if isinstance(policy, Relative):
        return {"kind": "relative"}
    if isinstance(policy, ScaledPower):
        return {"kind": "scaled", "rho_num": policy.rho.numerator, "rho_den": policy.rho.denominator}
    if isinstance(policy, Table):
        return {"kind": "table", "map": {str(k): v for k, v in policy.delays.items()}}
    raise TypeError(policy)


def _policy_from_json(obj) -> object:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ScenarioError("policy: expected an object with a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "power2":
            return Power2()
        if kind == "relative":
            return Relative()
        if kind == "scaled":
            return ScaledPower(Fraction(int(obj["rho_num"]), int(obj.get("rho_den", 1))))
        if kind == "table":
            return Table({int(k): int(v) for k, v in obj["map"].items()})
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ScenarioError(f"policy ({kind}): {exc}") from None
    raise ScenarioError(f"policy.kind: unknown kind {kind!r}")


def scenario_to_json(config: RingConfig) -> dict:
    out = {
        "names": list(config.names),
        "tick_len": list(config.tick_len),
        "link_delay": list(config.link_delay),
        "wake": [{"pos": p, "time": t} for p, t in config.wake],
        "policy": policy_to_json(config.policy),
    }
    if config.declared_s is not None:
        out["declared_s"] = config.declared_s
    return out


def _int_list(data, key):
    if key not in data:
        raise ScenarioError(f"{key}: missing field")
    value = data[key]
    if not isinstance(value, list) or not all(
        isinstance(x, int) and not isinstance(x, bool) for x in value
    ):
        raise ScenarioError(f"{key}: expected an array of integers")
    return value


def scenario_from_json(data) -> RingConfig:
    if not isinstance(data, dict):
        raise ScenarioError("scenario: expected a JSON object at top level")
    names = _int_list(data, "names")
    tick_len = _int_list(data, "tick_len")
    link_delay = _int_list(data, "link_delay")
    for key, arr in (("tick_len", tick_len), ("link_delay", link_delay)):
        if len(arr) != len(names):
            raise ScenarioError(
                f"{key}: has {len(arr)} entries but names has {len(names)}"
            )
    wake_raw = data.get("wake")
    if not isinstance(wake_raw, list):
        raise ScenarioError("wake: expected an array of {pos, time} objects")
    wake = []
    for idx, w in enumerate(wake_raw):
        try:
            wake.append((int(w["pos"]), int(w["time"])))
        except (KeyError, TypeError, ValueError):
            raise ScenarioError(f"wake[{idx}]: expected {{pos, time}} integers") from None
    policy = _policy_from_json(data.get("policy", {"kind": "power2"}))
    declared_s = data.get("declared_s")
    if declared_s is not None and (not isinstance(declared_s, int) or isinstance(declared_s, bool)):
        raise ScenarioError("declared_s: expected an integer")
    return RingConfig(names, tick_len, link_delay, wake, policy, declared_s)


def parse_scenario(text: str) -> RingConfig:
    """Parse and validate a scenario document (JSON)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        config = scenario_from_json(data)
    except PolicyError as exc:
        raise ScenarioError(f"policy: {exc}") from None
    problems = validate_config(config)
    if problems:
        raise ScenarioError(problems)
    return config


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def scenario_digest(config: RingConfig) -> str:
    return hashlib.sha256(canonical_json(scenario_to_json(config)).encode()).hexdigest()


# --------------------------------------------------------------------------
# Result records


def _ceil(x: Fraction) -> int:
    return -(-x.numerator // x.denominator)


def bound_checks(config: RingConfig, outcome) -> dict:
    """Bound-satisfaction flags for one run (id-only policies only)."""
    p = derive_params(config)
    n = config.n
    flags = {}
    if is_id_only(config.policy):
        closed = 2 * n + 3 * n * p.s
        flags["eq2_closed_exact"] = outcome.total_passes <= closed
        flags["eq2_closed_slack2"] = outcome.total_passes <= 2 * closed
        flags["eq2_total"] = outcome.total_passes <= B.eq2_bound(config)
        flags["eq4_total"] = outcome.total_passes <= B.eq4_bound(config)
        flags["eq3_bits"] = outcome.total_bits <= B.eq3_bits_bound(config)
        flags["eq1_slack2"] = all(
            cnt <= 2 * _ceil(B.eq1_bound(config, origin))
            for origin, cnt in outcome.election_passes_by_origin.items()
            if origin != config.winner
        )
        t = B.time_bounds(config)
        flags["time_abs_exact"] = outcome.duration <= t["time_abs"]
        flags["time_abs_slack2"] = outcome.duration <= 2 * t["time_abs"]
    else:
        flags["time_relative_total"] = (
            outcome.duration <= B.time_bounds(config)["time_relative_total"]
        )
    return flags


def result_record(config: RingConfig, outcome, *, command: str, seed=None,
                  duration_s: Optional[float] = None, trace: bool = False) -> dict:
    rec = {
        "schema": RECORD_SCHEMA,
        "command": command,
        "scenario_digest": scenario_digest(config),
        "seed": seed,
        "scenario": scenario_to_json(config),
        "outcome": outcome.summary(),
        "bounds": B.bound_report(config).to_json(),
        "checks": bound_checks(config, outcome),
        "wall_clock_s": duration_s,
    }
    if trace:
        rec["trace"] = list(outcome.trace)
    return rec


def verify_record(record: dict) -> list[str]:
    """Replay a record; return the fields whose replay differs (empty = reproduced)."""
    config = scenario_from_json(record["scenario"])
    mismatches = []
    if scenario_digest(config) != record["scenario_digest"]:
        mismatches.append("scenario_digest")
    outcome = run_election(config)
    for key, value in outcome.summary().items():
        if record["outcome"].get(key) != value:
            mismatches.append(f"outcome.{key}")
    return mismatches


# --------------------------------------------------------------------------
# Output helpers


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: row[c] for c in columns})
    return buf.getvalue()


def _read_config(path: str) -> RingConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    return parse_scenario(text)


# --------------------------------------------------------------------------
# Subcommands


def _run_and_record(config, args, command, seed=None):
    started = time.perf_counter()
    outcome = run_election(config, trace=getattr(args, "trace", False))
    elapsed = time.perf_counter() - started if args.timing else None
    rec = result_record(config, outcome, command=command, seed=seed, duration_s=elapsed,
                        trace=getattr(args, "trace", False))
    _emit(_json_text(rec), args.out)
    return 0


def cmd_simulate(args) -> int:
    if args.verify:
        with open(args.verify, encoding="utf-8") as fh:
            record = json.load(fh)
        mismatches = verify_record(record)
        if mismatches:
            print("replay differs: " + ", ".join(mismatches), file=sys.stderr)
            return 3
        print("replay reproduced record " + record["scenario_digest"])
        return 0
    if not args.config:
        raise ScenarioError("simulate needs --config (or --verify)")
    return _run_and_record(_read_config(args.config), args, "simulate")


def cmd_adversary(args) -> int:
    return _run_and_record(adversarial_config(args.n), args, "adversary")


def cmd_average(args) -> int:
    stats = average_case_experiment(args.n, args.trials, args.seed, args.policy, delta=args.delta)
    rows = []
    for r in stats.rows:
        rendered = B.render_rational(r["eq5_bound"]) or {"exact": "", "decimal": ""}
        rows.append({
            **r,
            "seed": args.seed,
            "n": args.n,
            "policy": stats.policy,
            "eq5_exact": rendered["exact"],
            "eq5_decimal": rendered["decimal"],
            "within_eq5": int(r["within_eq5"]),
        })
    _emit(_csv_text(AVERAGE_COLUMNS, rows), args.out)
    return 0


def cmd_compare(args) -> int:
    try:
        n_list = [int(x) for x in args.n_list.split(",") if x.strip()]
    except ValueError:
        raise ScenarioError(f"--n-list: expected comma-separated integers, got {args.n_list!r}")
    rows = compare_protocols(n_list, args.trials, args.seed)
    for row in rows:
        for key in ("power2_mean", "relative_mean", "baseline_mean", "eq5_mean",
                    "power2_per_n", "relative_per_n", "baseline_per_n"):
            row[key] = f"{row[key]:.6f}"
    _emit(_csv_text(COMPARE_COLUMNS, rows), args.out)
    return 0


def cmd_bounds(args) -> int:
    report = B.bound_report(_read_config(args.config))
    text = _json_text(report.to_json()) if args.format == "json" else report.to_text() + "\n"
    _emit(text, args.out)
    return 0


def cmd_ringsize(args) -> int:
    config = _read_config(args.config)
    outcome = run_election(config)
    n = ring_size_of(config, outcome)
    _emit(_json_text({"n": n, "winner": outcome.winner,
                      "winner_round_trip": outcome.winner_round_trip}), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="archring", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario file")
    p.add_argument("--config")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--out")
    p.add_argument("--verify", metavar="RECORD", help="replay a result record")
    p.add_argument("--timing", action="store_true", help="record wall-clock seconds")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("adversary", help="run the ascending slow-to-fast adversary")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("average", help="random-permutation lockstep experiment (CSV)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--policy", choices=("power2", "scaled", "relative"), default="power2")
    p.add_argument("--delta", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_average)

    p = sub.add_parser("compare", help="delayed vs relative vs filter protocols (CSV)")
    p.add_argument("--n-list", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bounds", help="evaluate every bound for a scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("ringsize", help="recover N from the winner's clock (lockstep)")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ringsize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, UnsupportedMode, PolicyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InvariantFault, ProtocolViolation, ArithmeticError) as exc:
        print(f"invariant fault: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
