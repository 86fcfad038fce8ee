"""Command-line front end.

Subcommands::

    mcudi synth        --spec SPEC.json --output-dir DIR [--seed N]
    mcudi ground-truth --config CFG.json --csv DATA.csv [--output-dir DIR] [--seeds 0,1,2]
    mcudi evaluate     --config CFG.json --csv DATA.csv [--detectors mcudi,ks]
                       [--ground-truth DIR/ground_truth.jsonl]
    mcudi label-cost   --config CFG.json --csv DATA.csv

Every command writes ``run_config.json`` (the full effective configuration)
next to its reports. Reports are JSON-lines plus a text table and contain no
timestamps, so re-running on the same inputs rewrites identical bytes.

Exit codes: 0 success, 2 usage or configuration error, 3 schema error
(CSV columns do not match the schema), 4 data error (empty, unusable or
unreadable input).
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config
from .data import read_csv_batches, scale_batches
from .detectors import DETECTOR_NAMES, count_changed_features
from .evaluation import evaluate_detector, run_label_cost_pipeline, run_strategy
from .exceptions import ConfigError, DataError, McudiError, SchemaError
from .ground_truth import GroundTruthLabel, label_all_batches
from .reports import read_jsonl, write_json, write_jsonl, write_table
from .synthetic import SyntheticConfig, churn_fixture_config, generate_synthetic_stream

logger = logging.getLogger("mcudi")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCHEMA = 3
EXIT_DATA = 4

PRESETS = {"churn": churn_fixture_config}


def _load_batches(cfg, csv_path, out):
    schema = cfg.require_schema()
    batches, ingest = read_csv_batches(csv_path, schema)
    write_json(out / "ingestion.json", ingest.to_dict())
    if ingest.rows_dropped:
        logger.warning("dropped %d row(s) during ingestion", ingest.rows_dropped)
    scaled, scaler = scale_batches(batches)
    logger.info("loaded %d period(s) from %s", len(scaled), csv_path)
    return scaled


def _output_dir(cfg, args):
    out = Path(args.output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _effective_config(args):
    cfg = load_config(args.config)
    seeds = None
    if getattr(args, "seeds", None):
        try:
            seeds = tuple(int(s) for s in args.seeds.split(","))
        except ValueError:
            raise ConfigError(f"--seeds must be comma-separated integers, got {args.seeds!r}")
    cfg = cfg.with_overrides(seeds=seeds, output_dir=args.output_dir)
    return RunConfig.from_dict(cfg.to_dict())  # re-validate overrides


def _ground_truth(cfg, batches):
    return label_all_batches(batches, cfg.hyperparams, cfg.seeds, cfg.folds, cfg.alpha)


def _write_ground_truth(out, cfg, batches, truth):
    write_jsonl(out / "ground_truth.jsonl", [g.to_record() for g in truth])
    rows = [{**g.to_record(), "status": _status(g)} for g in truth]
    write_table(out / "ground_truth.txt", rows,
                [("period_id", "period"), ("period_label", "label"), ("drift_votes", "votes"),
                 ("n_seeds", "seeds"), ("status", "status"),
                 ("mean_severity", "severity"), ("drift_severity", "drift severity"),
                 ("reason", "note")],
                title="Ground truth (drift when votes > seeds / 2)")

    # plot-ready series: severity per period and share of features whose
    # distribution changed against the previous period
    series = []
    for g, prev, cur in zip(truth, batches[:-1], batches[1:]):
        changed = count_changed_features(prev, cur, cfg.alpha)
        series.append({
            "period_id": g.period_id,
            "period_label": g.period_label,
            "is_drift": g.is_drift,
            "excluded": g.excluded,
            "mean_severity": g.mean_severity,
            "drift_severity": g.drift_severity,
            "changed_features": changed.changed_count,
            "changed_fraction": changed.changed_fraction,
        })
    write_jsonl(out / "severity_series.jsonl", series)


def _status(g):
    if g.excluded:
        return "excluded"
    return "drift" if g.is_drift else "non-drift"


def cmd_ground_truth(args):
    cfg = _effective_config(args)
    out = _output_dir(cfg, args)
    write_json(out / "run_config.json", cfg.to_dict())
    batches = _load_batches(cfg, args.csv, out)
    truth = _ground_truth(cfg, batches)
    _write_ground_truth(out, cfg, batches, truth)
    n_drift = sum(1 for g in truth if g.is_drift)
    print(f"ground truth: {n_drift} drift period(s) out of {len(truth)}; reports in {out}")
    return EXIT_OK


def _parse_detectors(text):
    names = [n.strip().lower() for n in text.split(",") if n.strip()]
    bad = [n for n in names if n not in DETECTOR_NAMES]
    if bad:
        raise ConfigError(f"unknown detector(s) {bad}; choose from {list(DETECTOR_NAMES)}")
    # baselines always included; keep a fixed order for stable reports
    wanted = set(names) | {"static", "periodic"}
    return [n for n in DETECTOR_NAMES if n in wanted]


def _read_ground_truth(path, batches):
    try:
        records = read_jsonl(path)
    except OSError as exc:
        raise DataError(f"cannot read ground truth {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"ground truth {path} is not valid JSON lines: {exc}") from None
    try:
        truth = [GroundTruthLabel.from_record(r) for r in records]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed ground-truth record in {path}: {exc}") from None
    return truth


def cmd_evaluate(args):
    cfg = _effective_config(args)
    detectors = _parse_detectors(args.detectors)
    out = _output_dir(cfg, args)
    write_json(out / "run_config.json", {**cfg.to_dict(), "detectors": detectors})
    batches = _load_batches(cfg, args.csv, out)
    if args.ground_truth:
        truth = _read_ground_truth(args.ground_truth, batches)
    else:
        truth = _ground_truth(cfg, batches)
        _write_ground_truth(out, cfg, batches, truth)

    accuracy, verdicts = [], []
    for name in detectors:
        ev = evaluate_detector(batches, truth, name, cfg.hyperparams, cfg.seeds, cfg.alpha)
        accuracy.append(ev.to_record())
        for seed, per_period in zip(ev.seeds, ev.verdicts):
            for pid in sorted(per_period):
                verdicts.append(per_period[pid].to_record(seed=seed, period_id=pid))
    write_jsonl(out / "detection_accuracy.jsonl", accuracy)
    write_jsonl(out / "detection_verdicts.jsonl", verdicts)
    write_table(out / "detection_accuracy.txt", accuracy,
                [("detector", "detector"), ("balanced_accuracy", "balanced acc."),
                 ("specificity", "specificity (drifts)"),
                 ("sensitivity", "sensitivity (non-drifts)")],
                title="Drift detection accuracy (mean over seeds)")

    runs, log, series = [], [], []
    for name in detectors:
        rep = run_strategy(batches, name, cfg.hyperparams, cfg.seeds, cfg.window, cfg.alpha,
                           cfg.accumulate)
        rec = rep.to_record()
        rec["retrains"] = f"{rep.retrain_count:.1f}/{rep.total_periods}"
        runs.append(rec)
        log.extend({"strategy": name, **v} for v in rep.verdict_log)
        for seed, aucs in zip(rep.seeds, rep.period_aucs):
            for pid in sorted(aucs):
                series.append({"strategy": name, "seed": seed, "period_id": pid,
                               "roc_auc": aucs[pid]})
    write_jsonl(out / "strategies.jsonl", runs)
    write_jsonl(out / "strategy_verdicts.jsonl", log)
    write_jsonl(out / "auc_series.jsonl", series)
    write_table(out / "strategies.txt", runs,
                [("strategy", "strategy"), ("mean_roc_auc", "ROC AUC"),
                 ("weighted_roc_auc", "ROC AUC (sample-weighted)"),
                 ("retrains", "retrains"), ("label_cost", "label cost")],
                title=f"Retraining strategies (window={cfg.window})")

    for rec in accuracy:
        print(f"{rec['detector']:>9}: balanced accuracy {_fmt(rec['balanced_accuracy'])}")
    print(f"reports in {out}")
    return EXIT_OK


def _fmt(v):
    return "n/a" if v != v else f"{v:.3f}"


def cmd_label_cost(args):
    cfg = _effective_config(args)
    out = _output_dir(cfg, args)
    write_json(out / "run_config.json", cfg.to_dict())
    batches = _load_batches(cfg, args.csv, out)
    rep = run_label_cost_pipeline(batches, cfg.hyperparams, cfg.seeds, cfg.window, cfg.alpha,
                                  cfg.accumulate)
    record = rep.to_record()
    write_json(out / "label_cost.json", record)
    rows = [{"pipeline": "periodic", **rep.periodic.to_record()},
            {"pipeline": "mcudi", **rep.mcudi.to_record()}]
    write_jsonl(out / "label_cost.jsonl", rows)
    write_jsonl(out / "label_cost_verdicts.jsonl",
                [{"pipeline": "mcudi", **v} for v in rep.mcudi.verdict_log])
    write_table(out / "label_cost.txt", rows,
                [("pipeline", "pipeline"), ("mean_roc_auc", "ROC AUC"),
                 ("label_cost", "label cost")],
                title=f"Label costs (savings {rep.savings:.1f} samples, "
                      f"AUC gap {_fmt(rep.auc_gap)})")
    print(f"label cost: periodic {rep.periodic.label_cost}, mcudi {rep.mcudi.label_cost}; "
          f"reports in {out}")
    return EXIT_OK


def _synthetic_config(spec):
    if not isinstance(spec, dict):
        raise ConfigError("synthetic spec must be a JSON object")
    spec = dict(spec)
    seed = spec.pop("seed", 0)
    preset = spec.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        try:
            config = PRESETS[preset](**spec)
        except TypeError as exc:
            raise ConfigError(f"bad preset arguments: {exc}") from None
    else:
        config = SyntheticConfig.from_dict(spec)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    return config, seed


def cmd_synth(args):
    try:
        spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read spec {args.spec}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"spec {args.spec} is not valid JSON: {exc}") from None
    config, seed = _synthetic_config(spec)
    if args.seed is not None:
        seed = args.seed
    stream = generate_synthetic_stream(config, seed)

    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "synthetic.csv"
    stream.to_frame().to_csv(csv_path, index=False, lineterminator="\n")
    write_json(out / "ledger.json", stream.ledger())
    # a run config that the other commands can use on this CSV as-is
    write_json(out / "run_config.json",
               RunConfig(schema=stream.schema(), output_dir=str(out)).to_dict())
    print(f"wrote {sum(stream.rows_per_period)} rows over {config.n_periods} period(s) "
          f"to {csv_path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mcudi",
        description="Model-centric drift detection for failure-prediction models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="more logging on stderr (repeat for debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_command(name, help_text, func):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--csv", required=True, help="input CSV")
        p.add_argument("--output-dir", help="report directory (overrides config)")
        p.add_argument("--seeds", help="comma-separated seeds (overrides config)")
        p.set_defaults(func=func)
        return p

    data_command("ground-truth", "label every period drift / non-drift", cmd_ground_truth)
    p = data_command("evaluate", "score detectors and simulate retraining strategies",
                     cmd_evaluate)
    p.add_argument("--detectors", default="mcudi,ks",
                   help="comma-separated subset of %s; static and periodic are always added"
                        % ",".join(DETECTOR_NAMES))
    p.add_argument("--ground-truth", help="reuse a ground_truth.jsonl instead of recomputing")
    data_command("label-cost", "compare McUDI-gated labeling with periodic retraining",
                 cmd_label_cost)

    p = sub.add_parser("synth", help="write a synthetic drift stream as CSV")
    p.add_argument("--spec", required=True, help="JSON drift-injection spec")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--seed", type=int, help="overrides the seed given in SPEC.json")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"mcudi: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as exc:
        print(f"mcudi: schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except DataError as exc:
        print(f"mcudi: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except McudiError as exc:
        print(f"mcudi: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"mcudi: data error: {exc.filename}: file not found", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
