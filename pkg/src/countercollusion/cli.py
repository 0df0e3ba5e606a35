"""Command-line interface.

Subcommands:

* ``check-params``    validate the monetary parameters (exit 0 ok / 2 violated)
* ``run``             play one full contract scenario from a JSON config
* ``analyze``         build a game, machine-check its reference equilibrium,
                      and replay every terminal against the contracts
* ``crypto-selftest`` exercise the commitment and proof layer
* ``batch``           run a list of scenarios and write one combined report

Exit codes: 0 success; 2 malformed input; 3 scenario failure; 4 a
verification check failed.  All reports are JSON with sorted keys, so equal
inputs produce byte-identical output.  The commitment group defaults to the
fast toy group; select with ``--group`` or ``COUNTERCOLLUSION_GROUP``.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from fractions import Fraction
from typing import Optional

from .crypto import (
    CryptoError,
    EqProof,
    Opening,
    commit,
    deserialize_commitment,
    deserialize_eq_proof,
    deserialize_neq_proof,
    prove_eq,
    prove_neq,
    serialize_commitment,
    serialize_eq_proof,
    serialize_neq_proof,
    setup,
    verify_eq,
    verify_neq,
)
from .gametheory import GAME_IDS, analyze_reference, payoff_crosscheck
from .ledger import Params, validate_params
from .protocol import (
    CloudStrategy,
    CtpAction,
    ReportChoice,
    Role,
    Schedule,
    ScenarioError,
    Task,
    run_scenario,
)

__all__ = ["main", "ConfigError"]

DEFAULT_PARAMS = Params(w=100, c=10, ch=201, d=212, t=309, b=5)
_PARAM_KEYS = ("w", "c", "ch", "d", "t", "b")
_GROUPS = ("toy", "secp256k1")


class ConfigError(Exception):
    """Malformed configuration input."""


# ---------------------------------------------------------------------------
# Config parsing (strict: unknown keys are rejected)
# ---------------------------------------------------------------------------


def _check_keys(d: dict, allowed: tuple[str, ...], what: str) -> None:
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys in {what}: {', '.join(unknown)}")


def _int_field(d: dict, key: str, what: str) -> int:
    value = d[key]
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{what}.{key} must be an integer (got {value!r})")
    return value


def _params_from_dict(d: dict) -> Params:
    if not isinstance(d, dict):
        raise ConfigError("params must be an object")
    _check_keys(d, _PARAM_KEYS, "params")
    missing = sorted(set(_PARAM_KEYS) - set(d))
    if missing:
        raise ConfigError(f"params missing keys: {', '.join(missing)}")
    return Params(**{k: _int_field(d, k, "params") for k in _PARAM_KEYS})


def _enum_field(cls, raw, what: str):
    try:
        return cls(raw)
    except ValueError:
        valid = ", ".join(member.value for member in cls)
        raise ConfigError(f"{what} must be one of: {valid} (got {raw!r})") from None


def _strategy_from_dict(d: dict, what: str) -> CloudStrategy:
    if not isinstance(d, dict):
        raise ConfigError(f"{what} must be an object")
    _check_keys(d, ("coalition_role", "report_choice", "ctp_action"), what)
    return CloudStrategy(
        coalition_role=_enum_field(Role, d.get("coalition_role", "honest"),
                                   f"{what}.coalition_role"),
        report_choice=_enum_field(ReportChoice, d.get("report_choice", "no_report"),
                                  f"{what}.report_choice"),
        ctp_action=_enum_field(CtpAction, d.get("ctp_action", "fx"), f"{what}.ctp_action"),
    )


def _task_from_dict(d: dict) -> Task:
    if not isinstance(d, dict):
        raise ConfigError("task must be an object")
    _check_keys(d, ("kind", "x", "rounds", "expr", "cost"), "task")
    kwargs = {}
    for key in ("kind", "x", "expr"):
        if key in d:
            if not isinstance(d[key], str):
                raise ConfigError(f"task.{key} must be a string")
            kwargs[key] = d[key]
    for key in ("rounds", "cost"):
        if key in d:
            kwargs[key] = _int_field(d, key, "task")
    return Task(**kwargs)


def _schedule_from_dict(d: dict) -> Schedule:
    if not isinstance(d, dict):
        raise ConfigError("schedule must be an object")
    keys = ("T1", "T2", "T3", "T4", "T5")
    _check_keys(d, keys, "schedule")
    return Schedule(**{k: _int_field(d, k, "schedule") for k in keys if k in d})


_SCENARIO_KEYS = ("params", "task", "cloud1", "cloud2", "seed", "traitor_enabled", "schedule")


def _scenario_from_dict(d: dict) -> dict:
    if not isinstance(d, dict):
        raise ConfigError("scenario config must be an object")
    _check_keys(d, _SCENARIO_KEYS, "scenario")
    scenario = {
        "params": _params_from_dict(d["params"]) if "params" in d else DEFAULT_PARAMS,
        "task": _task_from_dict(d.get("task", {})),
        "strat1": _strategy_from_dict(d.get("cloud1", {}), "cloud1"),
        "strat2": _strategy_from_dict(d.get("cloud2", {}), "cloud2"),
        "seed": d.get("seed", 0),
        "traitor_enabled": d.get("traitor_enabled"),
        "schedule": _schedule_from_dict(d["schedule"]) if "schedule" in d else None,
    }
    if not isinstance(scenario["seed"], int) or isinstance(scenario["seed"], bool):
        raise ConfigError("seed must be an integer")
    if scenario["traitor_enabled"] not in (None, True, False):
        raise ConfigError("traitor_enabled must be true, false, or null")
    return scenario


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def _params_from_args(args) -> Params:
    base = DEFAULT_PARAMS
    if getattr(args, "config", None):
        config = _load_config(args.config)
        base = _params_from_dict(config)
    overrides = {
        k: getattr(args, k) for k in _PARAM_KEYS if getattr(args, k, None) is not None
    }
    if overrides:
        merged = {k: getattr(base, k) for k in _PARAM_KEYS}
        merged.update(overrides)
        base = Params(**merged)
    return base


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"not JSON serializable: {obj!r}")


def _emit(report: dict, out: Optional[str]) -> None:
    text = json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _params_dict(params: Params) -> dict:
    return {k: getattr(params, k) for k in _PARAM_KEYS}


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_check_params(args) -> int:
    params = _params_from_args(args)
    violations = validate_params(params)
    _emit({
        "params": _params_dict(params),
        "z": params.z,
        "violations": violations,
        "ok": not violations,
    }, args.out)
    return 0 if not violations else 2


def _run_one(scenario: dict, group: str) -> dict:
    outcome = run_scenario(group=group, **scenario)
    return {
        "group": group,
        "seed": scenario["seed"],
        "params": _params_dict(scenario["params"]),
        "strategies": {
            name: {
                "coalition_role": strat.coalition_role.value,
                "report_choice": strat.report_choice.value,
                "ctp_action": strat.ctp_action.value,
            }
            for name, strat in (("cloud1", scenario["strat1"]), ("cloud2", scenario["strat2"]))
        },
        "terminal_label": outcome.terminal_label,
        "game_family": outcome.game_family,
        "roles": outcome.roles,
        "deltas": outcome.deltas,
        "settlement_clauses": sorted(set(outcome.settlement_clauses)),
        "transcript": list(outcome.transcript),
    }


def cmd_run(args) -> int:
    config = _load_config(args.config) if args.config else {}
    scenario = _scenario_from_dict(config)
    if args.seed is not None:
        scenario["seed"] = args.seed
    report = _run_one(scenario, args.group)
    if not args.transcript:
        del report["transcript"]
    _emit(report, args.out)
    return 0


def cmd_batch(args) -> int:
    config = _load_config(args.config)
    if isinstance(config, dict):
        _check_keys(config, ("scenarios",), "batch config")
        entries = config.get("scenarios")
    else:
        entries = config
    if not isinstance(entries, list) or not entries:
        raise ConfigError("batch config must hold a non-empty list of scenarios")
    results, failed = [], 0
    for idx, entry in enumerate(entries):
        scenario = _scenario_from_dict(entry)
        try:
            report = _run_one(scenario, args.group)
            del report["transcript"]
            results.append(report)
        except ScenarioError as exc:
            failed += 1
            results.append({"scenario_index": idx, "error": exc.code, "detail": str(exc)})
    _emit({"count": len(entries), "failures": failed, "ok": failed == 0, "results": results},
          args.out)
    return 0 if failed == 0 else 3


def _serialize_rationality(report) -> dict:
    info_sets = []
    for check in report.checks:
        flags = [
            {
                "node": nc.node_id,
                "action": nc.action,
                "relation": nc.relation,
                "value": nc.value,
                "equilibrium_value": nc.eq_value,
            }
            for nc in check.node_checks if nc.relation != "worse"
        ]
        info_sets.append({
            "set_id": check.set_id,
            "player": check.player,
            "equilibrium_value": check.eq_value,
            "one_shot_values": dict(check.one_shot_values),
            "full_deviation_max_gain": check.full_deviation_max_gain,
            "weak_ok": check.weak_ok,
            "strict_ok": check.strict_ok,
            "nodes_ok": check.nodes_ok,
            "node_flags": flags,
        })
    return {
        "weak_ok": report.weak_ok,
        "strict_ok": report.strict_ok,
        "nodes_ok": report.nodes_ok,
        "ok": report.ok,
        "info_sets": info_sets,
    }


def cmd_analyze(args) -> int:
    params = _params_from_args(args)
    if args.kmax < 10:
        raise ConfigError("--kmax must be at least 10")
    ks = (10, 100, 1000, args.kmax) if args.kmax > 1000 else (10, 100, args.kmax)
    analysis = analyze_reference(args.game, params, ks=ks)
    if analysis.params_violations:
        crosscheck = {"skipped": "parameters are invalid", "cells": 0, "mismatches": []}
        crosscheck_ok = True
    else:
        cells, mismatches = payoff_crosscheck(args.game, params, group=args.group,
                                              seed=args.seed if args.seed is not None else 7)
        crosscheck = {"cells": cells, "mismatches": mismatches}
        crosscheck_ok = not mismatches
    ok = analysis.ok and crosscheck_ok
    _emit({
        "game": args.game,
        "params": _params_dict(params),
        "z": params.z,
        "params_violations": list(analysis.params_violations),
        "rationality": _serialize_rationality(analysis.rationality),
        "consistency": {
            "residuals": {str(k): residual for k, residual in analysis.residuals.items()},
            "ok": analysis.consistency_ok,
        },
        "outcome": dict(analysis.outcome),
        "crosscheck": crosscheck,
        "notes": list(analysis.notes),
        "equilibrium_ok": analysis.equilibrium_ok,
        "ok": ok,
    }, args.out)
    return 0 if ok else 4


def _selftest_group(group_id: str) -> dict:
    gp = setup(group_id, b"\x01")
    rng = random.Random(0xC0FFEE)
    completeness_trials = 400 if group_id == "toy" else 20
    completeness_failures = 0
    for _ in range(completeness_trials):
        m1 = rng.randrange(gp.q)
        m2 = (m1 + 1 + rng.randrange(gp.q - 1)) % gp.q
        s1, s2 = rng.randrange(gp.q), rng.randrange(gp.q)
        c1, c1b = commit(gp, m1, s1), commit(gp, m1, s2)
        eq = prove_eq(gp, c1, c1b, Opening(m1, s1), Opening(m1, s2), rng)
        if not verify_eq(gp, c1, c1b, eq):
            completeness_failures += 1
        c2 = commit(gp, m2, s2)
        neq = prove_neq(gp, c1, c2, Opening(m1, s1), Opening(m2, s2), rng)
        if not verify_neq(gp, c1, c2, neq):
            completeness_failures += 1

    forgery_trials = 2000 if group_id == "toy" else 150
    accepts = 0
    backend = gp.backend
    for i in range(forgery_trials):
        c1 = commit(gp, 1, rng.randrange(gp.q))
        c2 = commit(gp, 2, rng.randrange(gp.q))
        forged = EqProof(
            t=backend.hash_to_group(b"countercollusion/selftest", i.to_bytes(4, "big")),
            eta=rng.randrange(gp.q),
        )
        if verify_eq(gp, c1, c2, forged):
            accepts += 1
    # the tiny group has ~1/509 per-trial false-accept odds; the big group
    # must never accept a forgery
    accept_bound = (forgery_trials // 100) + 10 if group_id == "toy" else 0

    c = commit(gp, 3, 4)
    roundtrip_ok = deserialize_commitment(gp, serialize_commitment(gp, c)) == c
    o3, o4 = rng.randrange(gp.q), rng.randrange(gp.q)
    ca, cb = commit(gp, 9, o3), commit(gp, 9, o4)
    eq = prove_eq(gp, ca, cb, Opening(9, o3), Opening(9, o4), rng)
    roundtrip_ok &= deserialize_eq_proof(gp, serialize_eq_proof(gp, eq)) == eq
    cc = commit(gp, 10, o4)
    neq = prove_neq(gp, ca, cc, Opening(9, o3), Opening(10, o4), rng)
    roundtrip_ok &= deserialize_neq_proof(gp, serialize_neq_proof(gp, neq)) == neq
    setup_deterministic = setup(group_id, b"\x01") == gp

    return {
        "group": group_id,
        "completeness_trials": completeness_trials,
        "completeness_failures": completeness_failures,
        "forgery_trials": forgery_trials,
        "forgery_accepts": accepts,
        "forgery_accept_bound": accept_bound,
        "sizes_bits": {
            "commitment": gp.elem_size * 8,
            "equality_proof": (gp.elem_size + gp.scalar_size) * 8,
            "inequality_proof": 2 * (gp.elem_size + gp.scalar_size) * 8,
        },
        "roundtrip_ok": roundtrip_ok,
        "setup_deterministic": setup_deterministic,
        "ok": (
            completeness_failures == 0
            and accepts <= accept_bound
            and roundtrip_ok
            and setup_deterministic
        ),
    }


def cmd_crypto_selftest(args) -> int:
    groups = _GROUPS if args.group == "both" else (args.group,)
    reports = [_selftest_group(g) for g in groups]
    ok = all(r["ok"] for r in reports)
    _emit({"groups": reports, "ok": ok}, args.out)
    return 0 if ok else 4


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with the monetary parameters")
    for key in _PARAM_KEYS:
        parser.add_argument(f"--{key}", type=int, help=f"override parameter {key}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="countercollusion",
        description="Contract-based counter-collusion simulator and verifier",
    )
    default_group = os.environ.get("COUNTERCOLLUSION_GROUP", "toy")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-params", help="validate monetary parameters")
    _add_param_flags(p)
    p.add_argument("--out", help="write the JSON report to this file")
    p.set_defaults(func=cmd_check_params)

    p = sub.add_parser("run", help="run one contract scenario")
    p.add_argument("--config", help="JSON scenario config")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--group", choices=_GROUPS, default=default_group)
    p.add_argument("--transcript", action="store_true", help="include the ledger log")
    p.add_argument("--out", help="write the JSON report to this file")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="machine-check a game's reference equilibrium")
    p.add_argument("--game", choices=GAME_IDS, required=True)
    _add_param_flags(p)
    p.add_argument("--seed", type=int, help="seed for the protocol crosscheck")
    p.add_argument("--group", choices=_GROUPS, default=default_group)
    p.add_argument("--kmax", type=int, default=10**7,
                   help="largest k in the consistency ladder")
    p.add_argument("--out", help="write the JSON report to this file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("crypto-selftest", help="exercise commitments and proofs")
    p.add_argument("--group", choices=_GROUPS + ("both",), default="both")
    p.add_argument("--out", help="write the JSON report to this file")
    p.set_defaults(func=cmd_crypto_selftest)

    p = sub.add_parser("batch", help="run many scenarios from one config")
    p.add_argument("--config", required=True, help="JSON file with a scenario list")
    p.add_argument("--group", choices=_GROUPS, default=default_group)
    p.add_argument("--out", help="write the JSON report to this file")
    p.set_defaults(func=cmd_batch)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print(f"scenario error [{exc.code}]: {exc}", file=sys.stderr)
        return 3
    except CryptoError as exc:
        print(f"crypto error [{exc.code}]: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
