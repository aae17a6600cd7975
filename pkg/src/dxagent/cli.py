"""Command-line entry point.

Subcommands: gen-kb, validate, simulate, train, eval, sweep-fixed,
sweep-init, consult, serve.  Logs go to stderr, data to files or stdout.
Exit codes: 0 success, 2 usage, 3 data error, 4 runtime error.  Failures
print one machine-readable JSON line to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .config import PRESETS, TrainConfig, apply_preset, load_train_config, save_train_config
from .errors import (
    CheckpointError,
    DimensionError,
    ExhaustionError,
    KbFormatError,
    KbValidationError,
    SimulationError,
    UpdateError,
)
from .evaluate import (
    evaluate,
    fixed_threshold_sweep,
    init_robustness,
    repeat_evaluate,
    sweep_table_csv,
    write_metrics,
    write_thresholds_csv,
)
from .kb import Flavor, ToyKbSpec, gen_toy_kb, load_kb, save_kb, validate
from .patients import SetValuedSimConfig, dump_patients, make_sampler, patient_to_obj
from .session import Answer, ConsultEngine
from .thresholds import ThresholdInit
from .trainer import curves_to_csv, episode_rng, train, STREAM_TRAIN_EPISODE

log = logging.getLogger("dxagent")

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

DATA_ERRORS = (KbFormatError, KbValidationError, CheckpointError, SimulationError, DimensionError, ValueError)
RUNTIME_ERRORS = (UpdateError, ExhaustionError, RuntimeError, OSError, EOFError, KeyboardInterrupt)


def _fail(kind: str, exc: Exception, code: int) -> int:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dxagent", description=__doc__)
    parser.add_argument("--version", action="version", version=f"dxagent {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-kb", help="generate a toy knowledge base")
    p.add_argument("--out", required=True, help="output KB JSON path")
    p.add_argument("--diseases", type=int, default=20)
    p.add_argument("--shared", type=int, default=10, help="number of shared noise findings")
    p.add_argument("--signature-prob", type=float, default=1.0)
    p.add_argument("--noise-prob", type=float, default=0.3)
    p.add_argument("--flavor", choices=[f.value for f in Flavor], default=Flavor.PROBABILISTIC.value)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate", help="validate a knowledge base file")
    p.add_argument("--kb", required=True)

    p = sub.add_parser("simulate", help="sample synthetic patients to JSONL")
    p.add_argument("--kb", required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output JSONL path (stdout when omitted)")
    p.add_argument("--symptom-mean", type=float, default=6.5, help="set-valued flavor only")
    p.add_argument("--exam-mean", type=float, default=5.3, help="set-valued flavor only")
    p.add_argument("--self-report-mean", type=float, default=2.9, help="set-valued flavor only")

    p = sub.add_parser("train", help="train policy, classifier, and thresholds")
    p.add_argument("--kb", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="TrainConfig JSON/TOML file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named hyperparameter preset")
    p.add_argument("--seed", type=int, help="override master seed")
    p.add_argument("--episodes", type=int, help="override total episodes")

    p = sub.add_parser("eval", help="evaluate a checkpoint on held-out patients")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--kb", required=True)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="metrics JSON path (stdout when omitted)")
    p.add_argument("--thresholds-csv", help="per-disease threshold CSV path")
    p.add_argument("--sampled", action="store_true", help="sample actions instead of greedy argmax")
    p.add_argument("--repeat", type=int, default=1,
                   help="evaluate over N independent held-out draws and report mean and std")
    p.add_argument("--ignore-kb-hash", action="store_true")

    p = sub.add_parser("sweep-fixed", help="fixed-threshold ablation: train per fixed value plus adaptive")
    p.add_argument("--kb", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="TrainConfig JSON/TOML file")
    p.add_argument("--values", default="2,1,0.1,0.01", help="comma-separated fixed thresholds")
    p.add_argument("--seed", type=int, help="override master seed")
    p.add_argument("--episodes", type=int, help="override total episodes")
    p.add_argument("--n-eval", type=int, default=2000)
    p.add_argument("--eval-seed", type=int, default=10_000)

    p = sub.add_parser("sweep-init", help="threshold-init robustness: train once per starting value")
    p.add_argument("--kb", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="TrainConfig JSON/TOML file")
    p.add_argument("--inits", default="0.1,1,2,4,random:1",
                   help="comma-separated uniform values and random:SEED entries")
    p.add_argument("--seed", type=int, help="override master seed")
    p.add_argument("--episodes", type=int, help="override total episodes")
    p.add_argument("--n-eval", type=int, default=2000)
    p.add_argument("--eval-seed", type=int, default=10_000)

    p = sub.add_parser("consult", help="interactive terminal consultation")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--kb", required=True)
    p.add_argument("--self-reports", help="comma-separated finding ids; prompted when omitted")
    p.add_argument("--ignore-kb-hash", action="store_true")

    p = sub.add_parser("serve", help="run the HTTP consultation service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--kb", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static-dir", help="directory of UI static files to serve at /")
    p.add_argument("--session-timeout", type=float, default=1800.0, help="idle session timeout in seconds")
    p.add_argument("--ignore-kb-hash", action="store_true")

    return parser


def _load_config(args) -> TrainConfig:
    cfg = load_train_config(args.config) if args.config else TrainConfig()
    if getattr(args, "preset", None):
        cfg = apply_preset(cfg, args.preset)
    if args.seed is not None:
        cfg = cfg.with_overrides(master_seed=args.seed)
    if args.episodes is not None:
        cfg = cfg.with_overrides(total_episodes=args.episodes)
    return cfg


def _progress(window: int, total: int, row: dict) -> None:
    if window % 25 == 0 or window == total - 1:
        log.info(
            "window %d/%d acc=%.3f turns=%.2f return=%.3f K_mean=%.3f",
            window + 1, total, row["accuracy"], row["mean_turns"], row["mean_return"], row["threshold_mean"],
        )


def cmd_gen_kb(args) -> int:
    spec = ToyKbSpec(
        n_diseases=args.diseases,
        n_shared_findings=args.shared,
        signature_prob=args.signature_prob,
        noise_prob=args.noise_prob,
        flavor=Flavor(args.flavor),
    )
    kb = gen_toy_kb(spec, seed=args.seed)
    save_kb(kb, args.out)
    log.info("wrote %s (M=%d, N=%d)", args.out, kb.n_diseases, kb.n_findings)
    return 0


def cmd_validate(args) -> int:
    try:
        kb = load_kb(args.kb)
    except KbValidationError as exc:
        print(exc.report.describe())
        return EXIT_DATA
    report = validate(kb)
    print(report.describe())
    return 0


def cmd_simulate(args) -> int:
    kb = load_kb(args.kb)
    sv = SetValuedSimConfig(args.symptom_mean, args.exam_mean, args.self_report_mean)
    sampler = make_sampler(kb, sv)
    patients = [sampler(episode_rng(args.seed, STREAM_TRAIN_EPISODE, i)) for i in range(args.n)]
    if args.out:
        dump_patients(patients, args.out)
        log.info("wrote %d patients to %s", len(patients), args.out)
    else:
        for p in patients:
            print(json.dumps(patient_to_obj(p)))
    return 0


def cmd_train(args) -> int:
    kb = load_kb(args.kb)
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = train(kb, cfg, progress=_progress)
    save_checkpoint(result.to_checkpoint(), out / "checkpoint.json")
    (out / "curves.csv").write_text(curves_to_csv(result.curves), encoding="utf-8")
    save_train_config(cfg, out / "config.json")
    log.info("wrote checkpoint and curves to %s", out)
    return 0


def cmd_eval(args) -> int:
    kb = load_kb(args.kb)
    bundle = load_checkpoint(args.checkpoint)
    if args.repeat > 1:
        summary = repeat_evaluate(
            bundle, kb, args.n, args.seed, args.repeat,
            greedy=not args.sampled, override_kb_hash=args.ignore_kb_hash,
        )
        payload = json.dumps(summary, indent=2) + "\n"
        if args.out:
            Path(args.out).write_text(payload, encoding="utf-8")
            log.info("wrote repeated metrics to %s", args.out)
        else:
            sys.stdout.write(payload)
        return 0
    metrics = evaluate(
        bundle, kb, args.n, args.seed,
        greedy=not args.sampled,
        override_kb_hash=args.ignore_kb_hash,
    )
    if args.out:
        write_metrics(metrics, args.out)
        log.info("wrote metrics to %s", args.out)
    else:
        sys.stdout.write(metrics.to_json())
    if args.thresholds_csv:
        write_thresholds_csv(kb, metrics.per_disease_thresholds, args.thresholds_csv)
    return 0


def _write_sweep(rows, out: Path, kb) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(sweep_table_csv(rows), encoding="utf-8")
    for row in rows:
        run_dir = out / row.label
        run_dir.mkdir(exist_ok=True)
        save_checkpoint(row.result.to_checkpoint(), run_dir / "checkpoint.json")
        (run_dir / "curves.csv").write_text(curves_to_csv(row.result.curves), encoding="utf-8")
        write_metrics(row.metrics, run_dir / "metrics.json")
        write_thresholds_csv(kb, row.metrics.per_disease_thresholds, run_dir / "thresholds.csv")


def cmd_sweep_fixed(args) -> int:
    kb = load_kb(args.kb)
    cfg = _load_config(args)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    rows = fixed_threshold_sweep(kb, cfg, values, n_eval=args.n_eval, eval_seed=args.eval_seed)
    _write_sweep(rows, Path(args.out), kb)
    print(sweep_table_csv(rows), end="")
    return 0


def _parse_inits(raw: str) -> list[tuple[str, ThresholdInit]]:
    out = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        if item.startswith("random"):
            seed = int(item.split(":", 1)[1]) if ":" in item else 0
            out.append((f"random_{seed}", ThresholdInit(kind="random", low=0.0, high=1.0, seed=seed)))
        else:
            out.append((f"uniform_{item}", ThresholdInit(kind="uniform", value=float(item))))
    return out


def cmd_sweep_init(args) -> int:
    kb = load_kb(args.kb)
    cfg = _load_config(args)
    rows = init_robustness(kb, cfg, _parse_inits(args.inits), n_eval=args.n_eval, eval_seed=args.eval_seed)
    _write_sweep(rows, Path(args.out), kb)
    print(sweep_table_csv(rows), end="")
    return 0


def cmd_consult(args) -> int:
    kb = load_kb(args.kb)
    bundle = load_checkpoint(args.checkpoint)
    from .checkpoint import check_kb_compatibility

    check_kb_compatibility(bundle, kb, override=args.ignore_kb_hash)
    engine = ConsultEngine(bundle, kb)

    if args.self_reports:
        reports = [int(x) for x in args.self_reports.split(",") if x.strip()]
    else:
        print("Findings:", file=sys.stderr)
        for f in kb.findings:
            print(f"  [{f.id}] {f.name} ({f.kind.value})", file=sys.stderr)
        raw = input("Enter self-reported finding ids (comma-separated): ")
        reports = [int(x) for x in raw.split(",") if x.strip()]

    session = engine.start_session(reports)
    print(f"Initial entropy {session.entropy:.4f} over {kb.n_diseases} diseases")
    while session.status.value == "awaiting_answer":
        fid = session.pending_inquiry
        finding = kb.findings[fid]
        raw = input(f"[turn {session.turn + 1}/{engine.max_turns}] {finding.name} ({finding.kind.value})? [p/n/u] ")
        raw = raw.strip().lower()
        answer = {"p": Answer.POSITIVE, "n": Answer.NEGATIVE, "u": Answer.CANT_SAY}.get(raw)
        if answer is None:
            print("please answer p (positive), n (negative) or u (can't say)", file=sys.stderr)
            continue
        engine.submit_answer(session, answer)
        top = int(np.argmax(session.probs))
        print(f"  entropy {session.entropy:.4f}; top: {kb.disease_name(top)} "
              f"(p={session.probs[top]:.3f}, K={engine.threshold_of(top):.4f})")
    print(f"Diagnosis: {kb.disease_name(session.diagnosis)} "
          f"(entropy {session.entropy:.4f} after {session.turn} turns)")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .checkpoint import check_kb_compatibility
    from .service import create_app

    kb = load_kb(args.kb)
    bundle = load_checkpoint(args.checkpoint)
    check_kb_compatibility(bundle, kb, override=args.ignore_kb_hash)
    engine = ConsultEngine(bundle, kb)
    app = create_app(engine, static_dir=args.static_dir, session_timeout_s=args.session_timeout)
    log.info("serving on http://%s:%d", args.host, args.port)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


COMMANDS = {
    "gen-kb": cmd_gen_kb,
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep-fixed": cmd_sweep_fixed,
    "sweep-init": cmd_sweep_init,
    "consult": cmd_consult,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = COMMANDS[args.command]
    try:
        return handler(args)
    except KbValidationError as exc:
        return _fail("data", exc, EXIT_DATA)
    except DATA_ERRORS as exc:
        return _fail("data", exc, EXIT_DATA)
    except RUNTIME_ERRORS as exc:
        return _fail("runtime", exc, EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
