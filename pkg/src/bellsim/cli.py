"""Command-line front end: run protocols, emit reports, verify invariants.

``bellsim run`` samples a protocol and prints a JSON or CSV report with the
per-label counts, the analytic probabilities, a chi-square statistic, the
worst post-state fidelity (Bell filter only) and the ebit ledger.
``bellsim verify`` sweeps every invariant group and reports pass/fail.

Exit codes: 0 success, 1 failed verification, 2 invalid configuration,
3 invariant breach or internal error during a run.

Reports are bit-identical for identical (config, seed) except for the
``duration_ms`` field, which is wall-clock.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from .bellcore import BellCoefficients, BellLabel, bell_state, from_bell, to_bell
from .measure import RngStream
from .protocols import (
    analytic_label_distribution,
    iterate_runs,
    outcome_distribution,
    run_fig1,
    run_scheme_a,
    run_scheme_b,
    trace_to_jsonl,
)
from .qstate import fidelity, haar_random_state

SCHEMES = ("fig1", "scheme_a", "scheme_b", "photonic")
MAX_TRIALS = 1_000_000

# ebits (granted, consumed) per single run of each scheme; the photonic run
# spends its path-entangled pair, which is the same one-ebit meter resource
_EBITS_PER_RUN = {"fig1": 0, "scheme_a": 1, "scheme_b": 2, "photonic": 1}

_NAMED_STATES = {label.value: label for label in BellLabel}

_TRACED_RUNNERS = {"fig1": run_fig1, "scheme_a": run_scheme_a, "scheme_b": run_scheme_b}


@dataclass
class RunConfig:
    scheme: str
    state: str
    trials: int
    seed: int
    output: str = "json"
    emit_trace: str | None = None


def _parse_complex(token: str) -> complex:
    """Parse one coefficient in re[+im i] form, e.g. '0.6', '0.8i', '1-2i'."""
    text = token.strip().replace(" ", "").replace("i", "j")
    if not text:
        raise ValueError("empty coefficient")
    try:
        return complex(text)
    except ValueError:
        raise ValueError(f"bad complex component {token!r}") from None


def resolve_state(spec: str, seed: int):
    """Turn a --state spec into (state, renormalized, bell coefficients).

    Accepts a Bell label name, 'random' (Haar-uniform, derived from the run
    seed) or four comma-separated complex coefficients in Bell order c1..c4.
    """
    if spec in _NAMED_STATES:
        label = _NAMED_STATES[spec]
        coefficients = tuple(1.0 + 0j if k == label.index else 0j for k in range(4))
        return bell_state(label), False, coefficients
    if spec == "random":
        gen = np.random.default_rng((seed, 0xB311))
        state = haar_random_state(2, gen)
        return state, False, to_bell(state).as_tuple()
    tokens = spec.split(",")
    if len(tokens) != 4:
        raise ValueError(
            "state must be a Bell label, 'random', or four comma-separated coefficients c1..c4"
        )
    values = np.array([_parse_complex(t) for t in tokens])
    norm = float(np.linalg.norm(values))
    if norm < 1e-12:
        raise ValueError("null state")
    renormalized = abs(norm - 1.0) > 1e-12
    values = values / norm
    return from_bell(BellCoefficients(*values)), renormalized, tuple(values)


def _format_complex(value: complex) -> str:
    return f"{value.real:.12g}{value.imag:+.12g}i"


def _chi_square(counts: dict, probs: np.ndarray, trials: int) -> float:
    stat = 0.0
    for label in BellLabel:
        p = float(probs[label.index])
        observed = counts[label]
        if p > 1e-15:
            expected = trials * p
            stat += (observed - expected) ** 2 / expected
        elif observed:
            return float("inf")
    return stat


def _run_trials(state, config: RunConfig):
    """Sample all trials; track the worst filter fidelity for scheme_b."""
    if config.scheme != "scheme_b":
        return outcome_distribution(state, config.scheme, config.trials, config.seed), None
    counts = {label: 0 for label in BellLabel}
    worst = 1.0
    for result in iterate_runs(state, "scheme_b", config.trials, config.seed):
        counts[result.label] += 1
        worst = min(worst, fidelity(result.post_state, bell_state(result.label)))
    return counts, worst


def _write_first_trial_trace(state, config: RunConfig) -> None:
    runner = _TRACED_RUNNERS[config.scheme]
    result = runner(state, RngStream(config.seed).substream(0), record_trace=True)
    with open(config.emit_trace, "w", encoding="utf-8") as fh:
        fh.write(trace_to_jsonl(result.trace))
        fh.write("\n")


def _flatten(prefix: str, value, rows: list) -> None:
    if isinstance(value, dict):
        for key, inner in value.items():
            _flatten(f"{prefix}.{key}" if prefix else str(key), inner, rows)
    elif isinstance(value, (list, tuple)):
        for index, inner in enumerate(value):
            _flatten(f"{prefix}.{index}", inner, rows)
    else:
        rows.append((prefix, value))


def _emit_report(report: dict, output: str) -> None:
    if output == "json":
        print(json.dumps(report, sort_keys=True, indent=2))
        return
    rows: list = []
    _flatten("", report, rows)
    writer = csv.writer(sys.stdout)
    writer.writerow(["key", "value"])
    for key, value in sorted(rows):
        writer.writerow([key, value])


def cmd_run(config: RunConfig) -> int:
    """Execute one Monte Carlo run and print the report. Exit status 0/2/3."""
    if config.trials < 1:
        print("error: trials must be >= 1", file=sys.stderr)
        return 2
    if config.trials > MAX_TRIALS:
        print(f"error: trials capped at {MAX_TRIALS} to keep runs short", file=sys.stderr)
        return 2
    if config.emit_trace and config.scheme == "photonic":
        print("error: --emit-trace is only available for the protocol schemes", file=sys.stderr)
        return 2
    try:
        state, renormalized, coefficients = resolve_state(config.state, config.seed)
    except ValueError as exc:
        print(f"error: invalid state spec: {exc}", file=sys.stderr)
        return 2
    if renormalized:
        print("warning: state coefficients were renormalized", file=sys.stderr)

    started = time.perf_counter()
    try:
        analytic = analytic_label_distribution(state, config.scheme)
        counts, worst_fidelity = _run_trials(state, config)
        if config.emit_trace:
            _write_first_trial_trace(state, config)
    except Exception as exc:  # invariant breach inside the run
        print(f"error: run failed: {exc}", file=sys.stderr)
        return 3
    duration_ms = (time.perf_counter() - started) * 1000.0

    per_run = _EBITS_PER_RUN[config.scheme]
    report = {
        "config": {
            "scheme": config.scheme,
            "state": config.state,
            "state_coefficients": [_format_complex(c) for c in coefficients],
            "renormalized": renormalized,
            "trials": config.trials,
            "seed": config.seed,
            "output": config.output,
            "emit_trace": config.emit_trace,
        },
        "analytic": {f"p{k + 1}": float(analytic[k]) for k in range(4)},
        "empirical": {"counts": {label.value: counts[label] for label in BellLabel}},
        "chi_square": _chi_square(counts, analytic, config.trials),
        "ledger": {
            "ebits_granted": per_run * config.trials,
            "ebits_consumed": per_run * config.trials,
        },
        "duration_ms": duration_ms,
    }
    if worst_fidelity is not None:
        report["fidelity"] = worst_fidelity
    _emit_report(report, config.output)
    return 0


def cmd_verify() -> int:
    """Run every invariant group; print one PASS/FAIL line per group."""
    from .verify import run_verification

    results = run_verification()
    failed = [r for r in results if not r.passed]
    for result in results:
        if result.passed:
            print(f"PASS {result.name}")
        else:
            print(f"FAIL {result.name}: {result.detail}")
    if failed:
        print(json.dumps(failed[0].counterexample, sort_keys=True, default=str), file=sys.stderr)
        return 1
    return 0


def _default_seed() -> int:
    raw = os.environ.get("BELLSIM_SEED")
    if raw is None:
        return 0
    return int(raw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellsim",
        description="Bell state measurement protocols built from nonlocal spin products",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sample a protocol and print a report")
    run.add_argument("--scheme", choices=SCHEMES, required=True)
    run.add_argument(
        "--state",
        required=True,
        help="PhiPlus|PhiMinus|PsiPlus|PsiMinus, 'random', or c1,c2,c3,c4 (e.g. 0.6,0.8i,0,0)",
    )
    run.add_argument("--trials", type=int, default=1000)
    run.add_argument("--seed", type=int, default=None, help="defaults to $BELLSIM_SEED, then 0")
    run.add_argument("--output", choices=("json", "csv"), default="json")
    run.add_argument("--emit-trace", metavar="PATH", default=None,
                     help="write the first trial's event trace as JSON lines")

    sub.add_parser("verify", help="run the invariant suite")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        return cmd_verify()
    try:
        seed = args.seed if args.seed is not None else _default_seed()
    except ValueError:
        print("error: BELLSIM_SEED must be an integer", file=sys.stderr)
        return 2
    config = RunConfig(
        scheme=args.scheme,
        state=args.state,
        trials=args.trials,
        seed=seed,
        output=args.output,
        emit_trace=args.emit_trace,
    )
    return cmd_run(config)


if __name__ == "__main__":
    sys.exit(main())
