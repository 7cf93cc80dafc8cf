"""Command-line interface. Exit codes: 0 success, 1 validation error, 2 internal.

Engine-backed subcommands (ingest, posterior, report, privacy-contribute,
register-patient, start-trial) operate on the event-sourced data directory;
the rest are thin wrappers over the library and touch no state.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import data as _data
from ..errors import EngineError, ValidationError
from ..priors import InterventionCandidate, PatientProfile, PriorModel, rank_candidates
from ..trial import TrialDesign, design_trial
from ..trigger import DecisionKind, TriggerPolicy, decide
from .config import ServiceConfig
from .engine import Engine


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract is usage text + exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def print_table(rows, stream=None):
    stream = stream or sys.stdout
    if not rows:
        return
    headers = list(rows[0])
    cells = [[_fmt(r.get(h, "")) for h in headers] for r in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(headers)]
    stream.write("  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip() + "\n")
    for row in cells:
        stream.write("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() + "\n")


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.4f}"
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def _engine(args) -> Engine:
    config = ServiceConfig.load(
        getattr(args, "config", None),
        mode="device",
        data_dir=getattr(args, "data_dir", None),
        model_path=getattr(args, "model", None),
        seed=getattr(args, "seed", None),
    )
    return Engine(config)


def cmd_rank(args) -> int:
    model = PriorModel.from_file(args.model) if args.model else _data.demo_prior_model()
    profile = (
        PatientProfile.from_dict(json.loads(Path(args.profile).read_text(encoding="utf-8")))
        if args.profile
        else _data.demo_profile()
    )
    candidates = rank_candidates(model, profile, args.samples, args.seed)
    print_table([c.to_dict() for c in candidates])
    return 0


def _load_candidates(path: str | None):
    source = Path(path) if path else Path(_data.demo_candidates_path())
    payload = json.loads(source.read_text(encoding="utf-8"))
    rows = payload["candidates"] if isinstance(payload, dict) else payload
    return [InterventionCandidate.from_dict(c) for c in rows]


def cmd_decide(args) -> int:
    candidates = _load_candidates(args.candidates)
    profile = (
        PatientProfile.from_dict(json.loads(Path(args.profile).read_text(encoding="utf-8")))
        if args.profile
        else _data.demo_profile()
    )
    policy = TriggerPolicy(
        tau_include=args.tau_include,
        tau_direct=args.tau_direct,
        max_active_arms=args.max_arms,
        include_placebo=not args.no_placebo,
    )
    decision = decide(candidates, policy, profile)
    if decision.kind is DecisionKind.VALIDATE:
        arms = ", ".join(decision.validate_arms)
        suffix = " + placebo" if decision.include_placebo else ""
        print(f"Validate{{{arms}}}{suffix}")
    elif decision.kind is DecisionKind.DIRECT_RECOMMEND:
        print(f"DirectRecommend{{{decision.intervention_id}}}")
    else:
        print("NoAction")
    for arm, sigma in decision.survivor_sigmas.items():
        print(f"  sigma[{arm}] = {sigma:.4f}")
    for flag in decision.flags:
        print(f"  flag: {flag}")
    return 0


def cmd_design(args) -> int:
    design = TrialDesign(
        arms=tuple(a.strip() for a in args.arms.split(",") if a.strip()),
        n_periods=args.periods,
        period_len_days=args.period_len,
        baseline_periods=args.baseline,
        washout_days=args.washout,
        adaptive=args.adaptive,
        seed=args.seed,
    )
    schedule = design_trial(design)
    print_table([p.to_dict() for p in schedule.phases])
    return 0


def cmd_register_patient(args) -> int:
    engine = _engine(args)
    profile = json.loads(Path(args.profile).read_text(encoding="utf-8")) if args.profile else json.loads(
        Path(_data.demo_profile_path()).read_text(encoding="utf-8")
    )
    result = engine.register_patient(profile)
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def cmd_start_trial(args) -> int:
    engine = _engine(args)
    design = {
        "arms": [a.strip() for a in args.arms.split(",") if a.strip()],
        "n_periods": args.periods,
        "period_len_days": args.period_len,
        "baseline_periods": args.baseline,
        "washout_days": args.washout,
    }
    if args.design_seed is not None:
        design["seed"] = args.design_seed
    result = engine.create_trial({"patient_id": args.patient_id, "design": design})
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def cmd_ingest(args) -> int:
    engine = _engine(args)
    record = {
        "trial_id": args.trial_id,
        "day": args.day,
        "primary_event": args.event,
        "pain": args.pain,
        "source": args.source,
    }
    result = engine.ingest(args.trial_id, {"record": record, "idempotency_key": args.idempotency_key})
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def cmd_posterior(args) -> int:
    engine = _engine(args)
    result = engine.posterior(args.trial_id, carryover=args.carryover)
    post = result["posterior"]
    rows = [
        {
            "arm": arm,
            "effect_mean": g["mean"],
            "effect_sd": g["sd"],
            "prob_optimal": (result["prob_optimal"] or {}).get(arm, ""),
        }
        for arm, g in post["effects"].items()
    ]
    rows.append(
        {
            "arm": post["reference_arm"] + " (reference)",
            "effect_mean": 0.0,
            "effect_sd": 0.0,
            "prob_optimal": (result["prob_optimal"] or {}).get(post["reference_arm"], ""),
        }
    )
    print_table(rows)
    if post.get("carryover"):
        print(f"carryover: mean={post['carryover']['mean']:.4f} sd={post['carryover']['sd']:.4f}")
    return 0


def cmd_report(args) -> int:
    from ..figures import save_report_outputs
    from ..inference import generate_report

    engine = _engine(args)
    record = engine.state.trials.get(args.trial_id)
    if record is None:
        raise ValidationError(f"unknown trial {args.trial_id!r}", field="trial_id")
    report = generate_report(engine._posterior_state(record), record.state)
    paths = save_report_outputs(report, Path(args.out_dir))
    print_table(report.arm_rows())
    for path in paths:
        print(f"wrote {path}")
    return 0


def cmd_simulate(args) -> int:
    from ..figures import fig_auc, fig_case_study, fig_policy_comparison, save_figures, write_json, write_tsv
    from ..sim import (
        CaseStudyConfig,
        GeneralizabilityConfig,
        PopulationSpec,
        SimConfig,
        compare_policies,
        generalizability_scenario,
        replicate_case_study,
    )

    scenario = _data.scenario(args.scenario)
    if args.config:
        scenario = {**scenario, **json.loads(Path(args.config).read_text(encoding="utf-8"))}
    seed = args.seed if args.seed is not None else int(scenario.get("seed", 0))
    out_dir = Path(args.out_dir) if args.out_dir else None
    figures = {}

    if args.scenario == "case_study":
        config = CaseStudyConfig.from_dict(scenario.get("config", {}))
        replicates = args.replicates or int(scenario.get("n_replicates", 200))
        result = replicate_case_study(config, n_replicates=replicates, seed=seed)
        rows = result.to_rows()
        payload = {
            "scenario": "case_study",
            "seed": seed,
            "n_replicates": replicates,
            "rows": rows,
            "validate_sets": [list(v) for v in result.validate_sets()],
        }
        figures["case_study_probabilities"] = fig_case_study(rows, result.delta_per_month)
    elif args.scenario == "policy_comparison":
        spec = PopulationSpec(seed=seed, **{k: v for k, v in scenario["population"].items()})
        config = SimConfig(**{k: v for k, v in scenario.get("config", {}).items()})
        policies = tuple(scenario.get("policies", ("prior_only", "hybrid", "oracle")))
        result = compare_policies(spec, policies, config)
        rows = result.to_rows()
        payload = dict(result.to_dict(), scenario="policy_comparison", seed=seed)
        figures["policy_comparison"] = fig_policy_comparison(result.to_dict())
    else:
        config = GeneralizabilityConfig.from_dict(scenario.get("config", {}))
        result = generalizability_scenario(config, seed=seed)
        rows = result.to_rows()
        payload = dict(result.to_dict(), scenario="generalizability", seed=seed)
        figures["cohort_auc"] = fig_auc(result.to_dict())

    print_table(rows)
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_tsv(out_dir / f"{args.scenario}.tsv", rows)
        write_json(out_dir / f"{args.scenario}.json", payload)
        for path in save_figures(figures, out_dir):
            print(f"wrote {path}")
        print(f"wrote {out_dir / (args.scenario + '.tsv')}")
        print(f"wrote {out_dir / (args.scenario + '.json')}")
    return 0


def cmd_privacy_contribute(args) -> int:
    engine = _engine(args)
    result = engine.contribute(
        {
            "patient_id": args.patient_id,
            "trial_id": args.trial_id,
            "intervention_id": args.intervention,
            "epsilon": args.epsilon,
            "delta": args.delta,
            "seed": args.contribution_seed,
        }
    )
    print(json.dumps(result, indent=2, sort_keys=True))
    if args.aggregate_url:
        import urllib.request

        body = json.dumps(result["contribution"]).encode("utf-8")
        request = urllib.request.Request(
            args.aggregate_url.rstrip("/") + "/v1/aggregate/contributions",
            data=body,
            headers={"content-type": "application/json"},
        )
        with urllib.request.urlopen(request) as response:
            print(response.read().decode("utf-8"))
    return 0


def cmd_serve(args) -> int:
    from .app import serve

    config = ServiceConfig.load(
        args.config,
        mode=args.mode,
        data_dir=args.data_dir,
        model_path=args.model,
        port=args.port,
        host=args.host,
        seed=args.seed,
    )
    serve(Engine(config))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="nof1", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_engine_flags(p):
        p.add_argument("--config", help="service config JSON")
        p.add_argument("--data-dir", help="event-log data directory (env NOF1_DATA_DIR overrides)")
        p.add_argument("--model", help="prior model JSON path")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("rank", help="rank intervention candidates for a profile")
    p.add_argument("--model")
    p.add_argument("--profile")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("decide", help="trigger decision from ranked candidates")
    p.add_argument("--candidates", help="candidates JSON (default: bundled fixture)")
    p.add_argument("--profile")
    p.add_argument("--tau-include", type=float, default=0.25)
    p.add_argument("--tau-direct", type=float, default=0.95)
    p.add_argument("--max-arms", type=int, default=2)
    p.add_argument("--no-placebo", action="store_true")
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("design", help="generate a block-randomized schedule")
    p.add_argument("--arms", required=True, help="comma-separated arm ids")
    p.add_argument("--periods", type=int, required=True)
    p.add_argument("--period-len", type=int, default=14)
    p.add_argument("--baseline", type=int, default=1)
    p.add_argument("--washout", type=int, default=0)
    p.add_argument("--adaptive", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("register-patient", help="register a patient profile in the data dir")
    add_engine_flags(p)
    p.add_argument("--profile", help="profile JSON path (default: bundled demo)")
    p.set_defaults(func=cmd_register_patient)

    p = sub.add_parser("start-trial", help="create a trial for a registered patient")
    add_engine_flags(p)
    p.add_argument("--patient-id", required=True)
    p.add_argument("--arms", required=True)
    p.add_argument("--periods", type=int, default=6)
    p.add_argument("--period-len", type=int, default=14)
    p.add_argument("--baseline", type=int, default=1)
    p.add_argument("--washout", type=int, default=0)
    p.add_argument("--design-seed", type=int, default=None)
    p.set_defaults(func=cmd_start_trial)

    p = sub.add_parser("ingest", help="append one daily outcome record")
    add_engine_flags(p)
    p.add_argument("--trial-id", required=True)
    p.add_argument("--day", type=int, required=True)
    p.add_argument("--event", action="store_true", help="primary event occurred")
    p.add_argument("--pain", type=int, default=None)
    p.add_argument("--source", choices=("self_report", "wearable"), default="self_report")
    p.add_argument("--idempotency-key")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("posterior", help="current per-arm effect posterior")
    add_engine_flags(p)
    p.add_argument("--trial-id", required=True)
    p.add_argument("--carryover", action="store_true")
    p.set_defaults(func=cmd_posterior)

    p = sub.add_parser("report", help="end-of-trial report: JSON + TSV + figures")
    add_engine_flags(p)
    p.add_argument("--trial-id", required=True)
    p.add_argument("--out-dir", default="reports")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", help="run a bundled simulation scenario")
    p.add_argument("--scenario", choices=_data.SCENARIOS, required=True)
    p.add_argument("--config", help="JSON overriding the bundled scenario")
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", help="write TSV/JSON/figures here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("privacy-contribute", help="release a DP-noised effect estimate")
    add_engine_flags(p)
    p.add_argument("--patient-id", required=True)
    p.add_argument("--trial-id", required=True)
    p.add_argument("--intervention", default=None)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=1e-5)
    p.add_argument("--contribution-seed", type=int, default=None)
    p.add_argument("--aggregate-url", help="also POST the contribution to an aggregate-mode service")
    p.set_defaults(func=cmd_privacy_contribute)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config")
    p.add_argument("--mode", choices=("device", "aggregate"), default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except EngineError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 0
    except Exception as exc:  # pragma: no cover - internal failure path
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
