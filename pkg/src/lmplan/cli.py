"""Command-line harness tying the pipeline together.

Subcommands:

- ``synth``: generate a deterministic scenario file from the built-in
  archetypes.
- ``split``: seeded fractional subset; writes a manifest of chosen ids and
  optionally the subset scenario file. Smaller fractions at the same seed
  are prefixes of larger ones.
- ``export-finetune``: supervision dataset as chat-format JSONL, plus a
  sidecar ``<out>.meta.json`` recording the prompt template hash.
- ``plan``: run a backend over every scenario and write one result line per
  scenario: ``{"scenario_id", "raw_text", "parse_quality", "trajectory"}``.
- ``evaluate``: join results to scenarios by id, compute open-loop metrics,
  write ``report.md`` and ``report.csv``.

Exit codes: 0 success; 1 evaluate's parse-failure rate exceeded the
threshold; 2 bad input or configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .backend import (
    BackendConfig,
    BackendError,
    BackendMode,
    complete,
    export_finetune_jsonl,
)
from .codec import CodecConfig
from .metrics import (
    EvalConfig,
    PlanRecord,
    evaluate_dataset,
    render_csv,
    render_markdown,
)
from .parsing import ParseQuality, parse_plan_output
from .prompts import MAX_EXEMPLARS, build_prompt, pack_exemplars, template_hash
from .reasoning import make_finetune_example
from .scenario import (
    DEFAULT_DT,
    DEFAULT_HORIZON_STEPS,
    SYNTH_KINDS,
    ScenarioSchemaError,
    Trajectory,
    Waypoint,
    load_scenarios,
    sample_split,
    save_scenarios,
    synth_scenario,
)


def _fail(msg: str) -> int:
    print(f"lmplan: error: {msg}", file=sys.stderr)
    return 2


def _load_nonempty(path: str, horizon_steps: int | None = None):
    kwargs = {} if horizon_steps is None else {"horizon_steps": horizon_steps}
    scenarios = load_scenarios(path, **kwargs)
    if not scenarios:
        raise ValueError(f"no scenarios in {path}")
    return scenarios


def cmd_synth(args) -> int:
    kinds = args.kinds.split(",") if args.kinds else list(SYNTH_KINDS)
    for k in kinds:
        if k not in SYNTH_KINDS:
            return _fail(f"unknown kind {k!r}; choose from {', '.join(SYNTH_KINDS)}")
    if args.count < 1:
        return _fail("--count must be >= 1")
    scenarios = [
        synth_scenario(kinds[i % len(kinds)], args.seed + i, args.horizon_steps, args.dt)
        for i in range(args.count)
    ]
    save_scenarios(scenarios, args.out)
    print(f"wrote {len(scenarios)} scenarios to {args.out}")
    return 0


def cmd_split(args) -> int:
    scenarios = _load_nonempty(args.scenarios)
    subset = sample_split(scenarios, args.fraction, args.seed)
    manifest = {
        "fraction": args.fraction,
        "seed": args.seed,
        "count": len(subset),
        "ids": [s.id for s in subset],
    }
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=1)
        f.write("\n")
    if args.scenarios_out:
        save_scenarios(subset, args.scenarios_out)
    print(f"selected {len(subset)} of {len(scenarios)} scenarios -> {args.out}")
    return 0


def cmd_export_finetune(args) -> int:
    scenarios = _load_nonempty(args.scenarios)
    examples = (make_finetune_example(s) for s in scenarios)
    n = export_finetune_jsonl(examples, args.out)
    meta_path = args.out + ".meta.json"
    with open(meta_path, "w", encoding="utf-8") as f:
        json.dump({"count": n, "template_hash": template_hash()}, f, indent=1, sort_keys=True)
        f.write("\n")
    print(f"wrote {n} examples to {args.out} (meta: {meta_path})")
    return 0


def cmd_plan(args) -> int:
    scenarios = _load_nonempty(args.scenarios)
    codec = CodecConfig()
    cfg = BackendConfig(
        mode=args.mode,
        endpoint_url=args.endpoint,
        model=args.model,
        temperature=args.temperature,
        timeout_s=args.timeout,
        max_retries=args.max_retries,
        retry_backoff_s=args.backoff,
        max_in_flight=args.max_in_flight,
    )

    exemplar_pool = []
    if args.exemplars:
        if args.exemplars > MAX_EXEMPLARS:
            return _fail(f"--exemplars above the cap of {MAX_EXEMPLARS}")
        if not args.exemplar_scenarios:
            return _fail("--exemplars needs --exemplar-scenarios")
        exemplar_pool = [
            make_finetune_example(s) for s in _load_nonempty(args.exemplar_scenarios)
        ]

    def plan_one(s):
        horizon, dt = len(s.human_trajectory), s.human_trajectory.dt
        prompt = build_prompt(s, codec, horizon, dt)
        if exemplar_pool:
            prompt = pack_exemplars(prompt, exemplar_pool, args.exemplars)
        raw, out = "", None
        # a fresh completion per attempt; stubs and deterministic endpoints
        # return the same text, so a repeat failure falls through quickly
        for _ in range(cfg.max_retries + 1):
            try:
                raw = complete(cfg, prompt, s, codec)
            except BackendError as e:
                print(f"lmplan: warning: {s.id}: {e}", file=sys.stderr)
                raw = ""
                out = None
                break
            out = parse_plan_output(raw, horizon, codec, dt)
            if out.quality is not ParseQuality.FAILED:
                break
        return s, raw, out

    if cfg.mode is BackendMode.REMOTE and len(scenarios) > 1:
        with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:
            outcomes = list(pool.map(plan_one, scenarios))
    else:
        outcomes = [plan_one(s) for s in scenarios]

    counts = {"clean": 0, "recovered": 0, "failed": 0}
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        for s, raw, out in outcomes:
            quality = out.quality.value if out is not None else "failed"
            traj = (
                [[w.x, w.y] for w in out.trajectory.waypoints]
                if out is not None and out.trajectory is not None
                else None
            )
            counts[quality] += 1
            f.write(
                json.dumps(
                    {
                        "scenario_id": s.id,
                        "raw_text": raw,
                        "parse_quality": quality,
                        "trajectory": traj,
                    },
                    separators=(",", ":"),
                    ensure_ascii=False,
                )
                + "\n"
            )
    print(
        f"planned {len(outcomes)} scenarios -> {args.out} "
        f"(clean {counts['clean']}, recovered {counts['recovered']}, "
        f"failed {counts['failed']})"
    )
    return 0


def _read_results(path: str) -> list[PlanRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                sid = obj["scenario_id"]
                quality = obj.get("parse_quality", "failed")
                raw_traj = obj.get("trajectory")
            except (ValueError, KeyError, TypeError) as e:
                raise ValueError(f"{path}:{lineno}: bad result line: {e}") from None
            traj = None
            if raw_traj is not None:
                traj = Trajectory(tuple(Waypoint(float(x), float(y)) for x, y in raw_traj))
            records.append(PlanRecord(scenario_id=sid, trajectory=traj, parse_quality=quality))
    return records


def cmd_evaluate(args) -> int:
    scenarios = _load_nonempty(args.scenarios)
    records = _read_results(args.results)
    cfg = EvalConfig(
        fallback_policy=args.fallback,
        exclude_gt_collisions=args.exclude_gt_collisions,
    )
    report = evaluate_dataset(scenarios, records, cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    md = render_markdown(report)
    (out_dir / "report.md").write_text(md, encoding="utf-8")
    (out_dir / "report.csv").write_text(render_csv(report), encoding="utf-8")
    print(md, end="")
    print(f"reports written to {out_dir}/report.md and {out_dir}/report.csv")
    rate = report.parse_failures / report.total
    if rate > args.fail_threshold:
        print(
            f"lmplan: parse-failure rate {rate:.3f} exceeds threshold "
            f"{args.fail_threshold:.3f}",
            file=sys.stderr,
        )
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lmplan",
        description="Motion planning as text: synth, split, export, plan, evaluate.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate deterministic scenarios")
    sp.add_argument("--out", required=True)
    sp.add_argument("--count", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--kinds", default="", help="comma-separated archetype names")
    sp.add_argument("--horizon-steps", type=int, default=DEFAULT_HORIZON_STEPS)
    sp.add_argument("--dt", type=float, default=DEFAULT_DT)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("split", help="seeded fractional subset")
    sp.add_argument("--scenarios", required=True)
    sp.add_argument("--fraction", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="manifest JSON path")
    sp.add_argument("--scenarios-out", default="", help="also write the subset scenarios")
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("export-finetune", help="write chat-format JSONL supervision")
    sp.add_argument("--scenarios", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_export_finetune)

    sp = sub.add_parser("plan", help="run a backend over scenarios")
    sp.add_argument("--scenarios", required=True)
    sp.add_argument("--out", required=True, help="results JSONL path")
    sp.add_argument("--mode", default="stub_hypothetical", choices=[m.value for m in BackendMode])
    sp.add_argument("--endpoint", default="", help="base URL for remote mode")
    sp.add_argument("--model", default="planner-v1")
    sp.add_argument("--temperature", type=float, default=0.0)
    sp.add_argument("--timeout", type=float, default=30.0)
    sp.add_argument("--max-retries", type=int, default=3)
    sp.add_argument("--backoff", type=float, default=0.5, help="initial retry delay, seconds")
    sp.add_argument("--max-in-flight", type=int, default=4)
    sp.add_argument("--exemplars", type=int, default=0, help="in-context examples per prompt")
    sp.add_argument("--exemplar-scenarios", default="", help="scenario file the exemplars come from")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("evaluate", help="score results against ground truth")
    sp.add_argument("--scenarios", required=True)
    sp.add_argument("--results", required=True)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument(
        "--fallback",
        default="substitute_hypothetical",
        choices=["substitute_hypothetical", "exclude"],
    )
    sp.add_argument(
        "--fail-threshold",
        type=float,
        default=1.0,
        help="exit 1 when the parse-failure rate exceeds this fraction",
    )
    sp.add_argument("--exclude-gt-collisions", action="store_true")
    sp.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        return _fail(str(e))
    except (ScenarioSchemaError, ValueError) as e:
        return _fail(str(e))


if __name__ == "__main__":
    sys.exit(main())
