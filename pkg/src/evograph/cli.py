"""Command-line entry point: analyze-tdiff, generate, run, report.

Exit codes: 0 success, 1 runtime error, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    MODE_SEQUENCE,
    RunSpec,
    load_config,
    load_manifest,
    write_manifest,
)
from .dataio import dataset_fingerprint, load_dataset, save_dataset
from .errors import ConfigError, EvographError
from .graph import UNLABELED, induced_subgraph
from .lifelong import run_sequence_with_model, two_task_experiment
from .metrics import MetricsReport, drift_magnitude, forward_transfer, mean_ci95
from .models import save_checkpoint
from .synth import SynthConfig, generate
from .tdiff import k_hop_time_diffs, percentile


def _build_parser() -> argparse.ArgumentParser:
    # global flags are accepted both before and after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS,
                        help="parallel worker slots for seeds")
    common.add_argument("--output-dir", default=argparse.SUPPRESS,
                        help="directory for emitted files")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                        help="suppress stdout reports")

    parser = argparse.ArgumentParser(prog="evograph", parents=[common])
    parser.set_defaults(jobs=1, output_dir=".", quiet=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analyze-tdiff", parents=[common],
                          help="time-difference and drift analysis of a dataset")
    p_an.add_argument("dataset")
    p_an.add_argument("--k", type=int, default=2)
    p_an.add_argument("--percentiles", default="25,50,75,100")

    p_gen = sub.add_parser("generate", parents=[common], help="write a synthetic dataset")
    p_gen.add_argument("out_dir")
    p_gen.add_argument("--num-timestamps", type=int, default=10)
    p_gen.add_argument("--vertices-per-timestamp", type=int, default=30)
    p_gen.add_argument("--initial-classes", type=int, default=4)
    p_gen.add_argument("--new-class-schedule", default="", help="e.g. 5:1,7:1")
    p_gen.add_argument("--class-skew", type=float, default=1.0)
    p_gen.add_argument("--feature-dim", type=int, default=16)
    p_gen.add_argument("--feature-noise", type=float, default=0.5)
    p_gen.add_argument("--intra-class-edge-prob", type=float, default=0.08)
    p_gen.add_argument("--inter-class-edge-prob", type=float, default=0.01)
    p_gen.add_argument("--window-back", type=int, default=3)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--features-format", choices=["bin", "csv"], default="bin")

    p_run = sub.add_parser("run", parents=[common], help="execute an experiment config over its seeds")
    src = p_run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="experiment config file")
    src.add_argument("--from-manifest", help="re-run the config snapshot of a manifest")
    p_run.add_argument(
        "--detector",
        choices=["none", "doc", "gdoc"],
        help="override the config's detector block",
    )
    p_run.add_argument("--tau-min", type=float, help="override detector tau_min")
    p_run.add_argument("--alpha", type=float, help="override detector alpha")
    p_run.add_argument(
        "--risk-reduction",
        choices=["true", "false"],
        help="override detector risk reduction",
    )

    p_rep = sub.add_parser("report", parents=[common], help="tabulate one or more completed runs")
    p_rep.add_argument("reports", nargs="+", help="manifest.json files or run directories")
    p_rep.add_argument("--mode", choices=["accuracy-table", "fwt", "open"], default="accuracy-table")
    return parser


def _class_distribution(g, ts) -> dict:
    sel = (g.time == ts) & (g.labels != UNLABELED)
    labels = g.labels[sel]
    if labels.size == 0:
        return {}
    values, counts = np.unique(labels, return_counts=True)
    return {int(v): float(c) / labels.size for v, c in zip(values, counts)}


def cmd_analyze(args) -> int:
    g = load_dataset(args.dataset)
    ps = [float(p) for p in args.percentiles.split(",") if p.strip()]
    hist = k_hop_time_diffs(g, args.k)
    pct = {p: (percentile(hist, p) if hist.counts else 0) for p in ps}
    suggestions = []
    for p in ps:
        size = max(1, pct[p])
        if size not in suggestions:
            suggestions.append(size)

    drift = []
    ts = [int(t) for t in g.timestamps()]
    for prev, curr in zip(ts, ts[1:]):
        p_prev = _class_distribution(g, prev)
        p_curr = _class_distribution(g, curr)
        if p_prev and p_curr:
            drift.append({"from": prev, "to": curr, "sigma": drift_magnitude(p_prev, p_curr)})

    report = {
        "dataset": str(args.dataset),
        "num_vertices": g.num_vertices,
        "num_edges": g.num_edges,
        "feature_dim": g.feature_dim,
        "num_classes": g.num_classes,
        "per_timestamp_counts": {str(t): int((g.time == t).sum()) for t in ts},
        "k": args.k,
        "histogram": {str(d): c for d, c in hist.as_sorted_items()},
        "percentiles": {str(p): pct[p] for p in ps},
        "suggested_history_sizes": suggestions,
        "drift": drift,
    }
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "tdiff.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    csv_lines = ["difference,count"] + [f"{d},{c}" for d, c in hist.as_sorted_items()]
    (out_dir / "tdiff.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    if not args.quiet:
        print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _parse_schedule(text: str) -> dict:
    schedule = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            ts, count = part.split(":")
            schedule[int(ts)] = int(count)
        except ValueError:
            raise ConfigError(f"new-class-schedule: cannot parse {part!r}") from None
    return schedule


def cmd_generate(args) -> int:
    cfg = SynthConfig(
        num_timestamps=args.num_timestamps,
        vertices_per_timestamp=args.vertices_per_timestamp,
        num_initial_classes=args.initial_classes,
        new_class_schedule=_parse_schedule(args.new_class_schedule),
        class_skew=args.class_skew,
        feature_dim=args.feature_dim,
        feature_noise=args.feature_noise,
        intra_class_edge_prob=args.intra_class_edge_prob,
        inter_class_edge_prob=args.inter_class_edge_prob,
        window_back=args.window_back,
        seed=args.seed,
    )
    g = generate(cfg)
    save_dataset(g, args.out_dir, features_format=args.features_format)
    if not args.quiet:
        print(
            f"wrote {g.num_vertices} vertices, {g.num_edges} edges, "
            f"{g.num_classes} classes to {args.out_dir}"
        )
    return 0


def _two_task_split(g):
    """Labeled induced subgraph of everything before the final snapshot."""
    split_time = int(g.timestamps()[-1])
    keep = np.nonzero((g.time < split_time) & (g.labels != UNLABELED))[0]
    return induced_subgraph(g, keep)


def _seed_job(payload):
    """Run one seed; top-level so process pools can pickle it."""
    snapshot, seed = payload
    spec = RunSpec(snapshot)
    g = load_dataset(spec.dataset)
    if spec.mode == MODE_SEQUENCE:
        report, model = run_sequence_with_model(g, spec.experiment, seed=seed)
        return seed, report.to_jsonl(), model
    trace = two_task_experiment(
        _two_task_split(g), g, spec.experiment,
        spec.pretrain_epochs, spec.inference_epochs, seed=seed,
    )
    lines = [
        json.dumps({"kind": "epoch", "epoch": i, "accuracy": a}, sort_keys=True)
        for i, a in enumerate(trace)
    ]
    lines.append(
        json.dumps(
            {"kind": "summary", "initial_accuracy": trace[0], "final_accuracy": trace[-1]},
            sort_keys=True,
        )
    )
    return seed, "\n".join(lines) + "\n", None


def _two_task_traces(texts: dict) -> dict:
    traces = {}
    for seed, text in texts.items():
        acc = []
        for line in text.splitlines():
            obj = json.loads(line)
            if obj.get("kind") == "epoch":
                acc.append(obj["accuracy"])
        traces[seed] = acc
    return traces


def _apply_detector_overrides(snapshot: dict, args) -> dict:
    snapshot = dict(snapshot)
    if args.detector is not None:
        snapshot["detector"] = args.detector
    if args.tau_min is not None:
        snapshot["tau_min"] = repr(args.tau_min)
    if args.alpha is not None:
        snapshot["alpha"] = repr(args.alpha)
    if args.risk_reduction is not None:
        snapshot["risk_reduction"] = args.risk_reduction
    return snapshot


def cmd_run(args) -> int:
    if args.config:
        spec = load_config(args.config)
    else:
        manifest = load_manifest(args.from_manifest)
        spec = RunSpec(manifest["config"])
    snapshot = _apply_detector_overrides(spec.snapshot(), args)
    spec = RunSpec(snapshot)

    fingerprint = dataset_fingerprint(spec.dataset)
    if args.from_manifest:
        recorded = load_manifest(args.from_manifest)["dataset_fingerprint"]
        if recorded != fingerprint:
            raise EvographError(
                f"dataset at {spec.dataset} changed since the manifest was written"
            )

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(snapshot, seed) for seed in spec.experiment.seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_seed_job, jobs))
    else:
        results = [_seed_job(j) for j in jobs]
    texts = {seed: text for seed, text, _ in results}
    models = {seed: model for seed, _, model in results}

    reports = {}
    for seed in spec.experiment.seeds:
        name = f"report_seed{seed}.jsonl"
        (out_dir / name).write_text(texts[seed], encoding="utf-8")
        reports[str(seed)] = name
        # final-task model, reusable for warm starts across invocations
        if models[seed] is not None:
            save_checkpoint(models[seed], out_dir / f"model_seed{seed}")

    if spec.mode == MODE_SEQUENCE:
        parsed = {seed: MetricsReport.from_jsonl(texts[seed]) for seed in spec.experiment.seeds}
        acc_mean, acc_ci = mean_ci95([r.avg_accuracy() for r in parsed.values()])
        mcc_mean, mcc_ci = mean_ci95([r.mcc() for r in parsed.values()])
        f1_mean, f1_ci = mean_ci95([r.open_macro_f1() for r in parsed.values()])
        traces = np.array([[rec.accuracy for rec in r.records] for r in parsed.values()])
        summary = {
            "mode": spec.mode,
            "n_seeds": len(spec.experiment.seeds),
            "dataset_fingerprint": fingerprint,
            "avg_accuracy": {"mean": acc_mean, "ci95": acc_ci},
            "mcc": {"mean": mcc_mean, "ci95": mcc_ci},
            "open_macro_f1": {"mean": f1_mean, "ci95": f1_ci},
            "per_task_accuracy_mean": [float(x) for x in traces.mean(axis=0)],
        }
    else:
        traces = _two_task_traces(texts)
        arr = np.array([traces[s] for s in spec.experiment.seeds])
        init_mean, init_ci = mean_ci95(arr[:, 0])
        final_mean, final_ci = mean_ci95(arr[:, -1])
        summary = {
            "mode": spec.mode,
            "n_seeds": len(spec.experiment.seeds),
            "dataset_fingerprint": fingerprint,
            "initial_accuracy": {"mean": init_mean, "ci95": init_ci},
            "final_accuracy": {"mean": final_mean, "ci95": final_ci},
            "trace_mean": [float(x) for x in arr.mean(axis=0)],
        }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    write_manifest(
        out_dir / "manifest.json",
        snapshot=snapshot,
        dataset_fingerprint=fingerprint,
        reports=reports,
        summary="summary.json",
        version=__version__,
    )
    if not args.quiet:
        print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _load_run(path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    manifest = load_manifest(p)
    summary = json.loads((p.parent / manifest["summary"]).read_text(encoding="utf-8"))
    return {"manifest": manifest, "summary": summary, "dir": p.parent}


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def cmd_report(args) -> int:
    runs = [_load_run(p) for p in args.reports]
    fingerprints = {r["manifest"]["dataset_fingerprint"] for r in runs}
    if len(fingerprints) > 1:
        raise EvographError("reports mix incompatible dataset fingerprints")
    rows = []
    if args.mode == "accuracy-table":
        cells = {}
        for r in runs:
            cfg = r["manifest"]["config"]
            key = (cfg["model"], cfg["history_size"])
            cells.setdefault(key, {})[cfg["restart"]] = r["summary"]["avg_accuracy"]
        rows.append("model,history_size,accuracy_cold,ci_cold,accuracy_warm,ci_warm")
        for (model, history), by_restart in sorted(cells.items()):
            cold = by_restart.get("cold")
            warm = by_restart.get("warm")
            rows.append(
                ",".join(
                    [
                        model,
                        history,
                        _fmt(cold["mean"]) if cold else "",
                        _fmt(cold["ci95"]) if cold else "",
                        _fmt(warm["mean"]) if warm else "",
                        _fmt(warm["ci95"]) if warm else "",
                    ]
                )
            )
    elif args.mode == "fwt":
        pairs = {}
        for r in runs:
            cfg = dict(r["manifest"]["config"])
            restart = cfg.pop("restart")
            key = json.dumps(cfg, sort_keys=True)
            pairs.setdefault(key, {})[restart] = r
        rows.append("model,history_size,fwt")
        for key in sorted(pairs):
            sides = pairs[key]
            if "warm" not in sides or "cold" not in sides:
                continue
            cfg = json.loads(key)
            warm_trace = sides["warm"]["summary"]["per_task_accuracy_mean"]
            cold_trace = sides["cold"]["summary"]["per_task_accuracy_mean"]
            fwt = forward_transfer(warm_trace, cold_trace)
            rows.append(f"{cfg['model']},{cfg['history_size']},{_fmt(fwt)}")
    else:  # open
        rows.append("model,history_size,restart,detector,tau_min,alpha,mcc,mcc_ci,open_f1,open_f1_ci")
        entries = []
        for r in runs:
            cfg = r["manifest"]["config"]
            entries.append(
                (
                    cfg["model"], cfg["history_size"], cfg["restart"], cfg["detector"],
                    cfg["tau_min"], cfg["alpha"],
                    r["summary"]["mcc"], r["summary"]["open_macro_f1"],
                )
            )
        for model, history, restart, det, tau, alpha, m, f in sorted(entries, key=lambda e: e[:6]):
            rows.append(
                f"{model},{history},{restart},{det},{tau},{alpha},"
                f"{_fmt(m['mean'])},{_fmt(m['ci95'])},{_fmt(f['mean'])},{_fmt(f['ci95'])}"
            )
    print("\n".join(rows))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze-tdiff":
            return cmd_analyze(args)
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "run":
            return cmd_run(args)
        return cmd_report(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EvographError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
