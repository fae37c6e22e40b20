"""Command-line front end.

Subcommands mirror the pipeline stages (extract, label, rank, universal,
train, evaluate) plus the all-in-one ``pipeline`` driver and ``synth`` for
generating synthetic captures.  Every stage reads the files the previous
stage wrote, so runs can enter anywhere.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import classifiers, demo, selection
from .dataset import (parse_manifest, read_feature_csv, read_flow_csv,
                      train_test_split, write_flow_csv)
from .errors import BotmeterError
from .evaluation import evaluate_predictions, render_report
from .labeling import label_flows, parse_rules
from .meter import MeterConfig, ingest_capture_detailed
from .selection import RankedFeatureList, derive_universal_set, rank_features_lr
from .synth import FlowBlueprint, PacketBlueprint, write_synthetic_capture

logger = logging.getLogger(__name__)

MODEL_KINDS = classifiers.KINDS


@dataclass(frozen=True)
class PipelineConfig:
    manifests: tuple
    meter: MeterConfig
    out_dir: Path
    seed: int = 0
    ratio: float = 0.8
    top_k: int = 10
    threshold: int = 2
    model_overrides: dict | None = None

    def __post_init__(self):
        if not self.manifests:
            raise BotmeterError("pipeline config needs at least one dataset")
        if not 0 < self.ratio < 1:
            raise BotmeterError(f"ratio must be in (0, 1), got {self.ratio}")


def load_pipeline_config(path, args=None) -> PipelineConfig:
    """JSON config (see README for the schema); CLI flags override."""
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent

    def pick(flag, key, default):
        value = getattr(args, flag, None) if args is not None else None
        if value is not None:
            return value
        return doc.get(key, default)

    manifests = tuple(parse_manifest(base / m) for m in doc.get("datasets", []))
    meter = MeterConfig(
        flow_timeout_us=int(float(pick("timeout_s", "flow_timeout_s", 120.0)) * 1e6),
        activity_timeout_us=int(float(pick("activity_timeout_s",
                                           "activity_timeout_s", 5.0)) * 1e6))
    out_dir = Path(pick("out", "out_dir", "pipeline_out"))
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    return PipelineConfig(
        manifests=manifests,
        meter=meter,
        out_dir=out_dir,
        seed=int(pick("seed", "seed", 0)),
        ratio=float(pick("ratio", "ratio", 0.8)),
        top_k=int(pick("top_k", "top_k", 10)),
        threshold=int(pick("threshold", "threshold", 2)),
        model_overrides=doc.get("models"),
    )


def build_model_specs(seed: int, overrides: dict | None) -> list[classifiers.ModelSpec]:
    specs = []
    for kind in MODEL_KINDS:
        params = dict(overrides.get(kind, {})) if overrides else {}
        specs.append(classifiers.ModelSpec(kind=kind, seed=seed, **params))
    return specs


# --- pipeline stages ----------------------------------------------------------

def extract_and_label(manifest, meter: MeterConfig, out_path: Path):
    """pcaps + rules -> labeled flow CSV; returns the label report."""
    manifest.validate()
    flows = []
    for capture in manifest.captures:
        metered, stats = ingest_capture_detailed(str(capture), meter)
        logger.info("%s: %d records -> %d flows (%d skipped)",
                    capture, stats.records, stats.flows, stats.skipped)
        flows.extend(metered)
    rules = parse_rules(str(manifest.rules))
    labeled, report = label_flows(flows, rules, manifest.default_label)
    write_flow_csv(out_path, labeled)
    return report


def rank_dataset(labeled_csv: Path, top_k: int, seed: int,
                 dataset: str) -> RankedFeatureList:
    table = read_feature_csv(labeled_csv)
    std_table, _ = selection.standardize(table)
    spec = classifiers.ModelSpec(kind="LR", seed=seed)
    return rank_features_lr(std_table, k=top_k, spec=spec, dataset=dataset)


def write_ranked_csv(ranked: RankedFeatureList, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "score"])
        for name, score in ranked.ranked:
            writer.writerow([name, f"{score:.9f}"])


def read_ranked_csv(path) -> RankedFeatureList:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["name", "score"]:
            raise BotmeterError(f"{path}: not a ranked-list CSV")
        ranked = tuple((row[0], float(row[1])) for row in reader if row)
    return RankedFeatureList(Path(path).stem, ranked)


def write_universal_csv(universal, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "count"])
        for name, count in universal.counts:
            writer.writerow([name, count])


def read_universal_features(path) -> list[str]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:1] != ["name"]:
            raise BotmeterError(f"{path}: not a universal-set CSV")
        return [row[0] for row in reader if row]


def train_models(labeled_csv: Path, feature_names: list[str], seed: int,
                 ratio: float, out_dir: Path, dataset: str,
                 overrides: dict | None = None) -> list[Path]:
    table = read_feature_csv(labeled_csv).select(feature_names)
    train, _ = train_test_split(table, ratio, seed)
    paths = []
    for spec in build_model_specs(seed, overrides):
        model = classifiers.fit(spec, train.rows, train.labels)
        path = out_dir / f"model_{dataset}_{spec.kind}.json"
        classifiers.save_model(model, path)
        paths.append(path)
    return paths


def evaluate_models(labeled_csv: Path, feature_names: list[str], seed: int,
                    ratio: float, models_dir: Path, dataset: str):
    table = read_feature_csv(labeled_csv).select(feature_names)
    _, test = train_test_split(table, ratio, seed)
    reports = []
    for kind in MODEL_KINDS:
        model = classifiers.load_model(models_dir / f"model_{dataset}_{kind}.json")
        y_pred = classifiers.predict(model, test.rows)
        reports.append(evaluate_predictions(test.labels, y_pred, dataset, kind))
    return reports


def run_pipeline(config: PipelineConfig) -> int:
    """extract -> label -> rank -> universal -> train -> evaluate.

    Artifacts land in config.out_dir; a FAILED marker naming the stage is
    written (and partial artifacts kept) if any stage errors out.
    """
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    marker = out / "FAILED"
    if marker.exists():
        marker.unlink()
    stage = "setup"
    try:
        labeled_paths = {}
        stage = "extract"
        for manifest in config.manifests:
            path = out / f"labeled_{manifest.name}.csv"
            report = extract_and_label(manifest, config.meter, path)
            labeled_paths[manifest.name] = path
            logger.info("dataset %s: %s flows labeled %s", manifest.name,
                        report.total, dict(report.counts))

        stage = "rank"
        ranked_lists = []
        for name, path in labeled_paths.items():
            ranked = rank_dataset(path, config.top_k, config.seed, name)
            write_ranked_csv(ranked, out / f"ranked_{name}.csv")
            ranked_lists.append(ranked)

        stage = "universal"
        universal = derive_universal_set(ranked_lists, threshold=config.threshold)
        if not universal.features:
            raise BotmeterError(
                f"no feature reached selection count {config.threshold}")
        write_universal_csv(universal, out / "universal.csv")

        stage = "train"
        for name, path in labeled_paths.items():
            train_models(path, list(universal.features), config.seed,
                         config.ratio, out, name, config.model_overrides)

        stage = "evaluate"
        all_reports = []
        for name, path in labeled_paths.items():
            all_reports.extend(evaluate_models(
                path, list(universal.features), config.seed, config.ratio,
                out, name))
        (out / "metrics.csv").write_text(render_report(all_reports, "csv"),
                                         encoding="utf-8")
        report_text = _run_report(ranked_lists, universal, all_reports)
        (out / "report.txt").write_text(report_text, encoding="utf-8")
        print(report_text, end="")
        return 0
    except (BotmeterError, OSError) as exc:
        marker.write_text(f"stage: {stage}\n{exc}\n", encoding="utf-8")
        logger.error("pipeline failed at stage %r: %s", stage, exc)
        print(f"pipeline failed at stage {stage!r}: {exc}", file=sys.stderr)
        return 1


def _run_report(ranked_lists, universal, reports) -> str:
    lines = []
    for ranked in ranked_lists:
        lines.append(f"top {len(ranked.ranked)} features [{ranked.dataset}]")
        for name, score in ranked.ranked:
            lines.append(f"  {score:12.6f}  {name}")
        lines.append("")
    lines.append(f"universal feature set (selected by >= {universal.threshold} datasets)")
    for name, count in universal.counts:
        lines.append(f"  {count}  {name}")
    lines.append("")
    lines.append(render_report(reports, "text"))
    return "\n".join(lines)


# --- synth helpers -------------------------------------------------------------

def blueprints_from_json(doc: dict) -> tuple[list[FlowBlueprint], int]:
    flows = []
    for item in doc.get("flows", []):
        packets = tuple(PacketBlueprint(
            direction=p.get("dir", "fwd"),
            payload_len=int(p.get("payload", 0)),
            gap_us=int(p.get("gap_us", 0)),
            flags=p.get("flags", ""),
            window=int(p.get("window", 8192)),
        ) for p in item.get("packets", []))
        flows.append(FlowBlueprint(
            src_ip=item["src_ip"], dst_ip=item["dst_ip"],
            src_port=int(item["src_port"]), dst_port=int(item["dst_port"]),
            protocol=int(item["protocol"]), packets=packets,
            start_us=int(item.get("start_us", 0)),
            label=item.get("label")))
    return flows, int(doc.get("seed", 0))


def _write_rules_for_blueprints(flows, path: Path) -> None:
    lines = ["src_ip,src_port,dst_ip,dst_port,protocol,label"]
    for bp in flows:
        if bp.label:
            lines.append(f"{bp.src_ip},{bp.src_port},{bp.dst_ip},"
                         f"{bp.dst_port},{bp.protocol},{bp.label}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="botmeter",
        description="Flow metering, labeling, feature selection and "
                    "botnet-detection models for packet captures.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="meter pcaps into a feature CSV")
    p.add_argument("captures", nargs="+", help="classic pcap files")
    p.add_argument("--out", required=True, help="output feature CSV")
    p.add_argument("--timeout-s", type=float, default=120.0)
    p.add_argument("--activity-timeout-s", type=float, default=5.0)

    p = sub.add_parser("label", help="attach ground-truth labels to flows")
    p.add_argument("features", help="feature CSV from extract")
    p.add_argument("--rules", required=True, help="rule CSV")
    p.add_argument("--default-label", default="Normal")
    p.add_argument("--out", required=True, help="labeled CSV")

    p = sub.add_parser("rank", help="rank features by LR weight")
    p.add_argument("labeled", help="labeled CSV")
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default=None, help="dataset name for the list")
    p.add_argument("--out", required=True, help="ranked CSV")

    p = sub.add_parser("universal", help="derive the cross-dataset feature set")
    p.add_argument("ranked", nargs="+", help="ranked CSVs (>= 2)")
    p.add_argument("--threshold", type=int, default=2)
    p.add_argument("--out", required=True, help="universal-set CSV")

    p = sub.add_parser("train", help="train the four classifiers")
    p.add_argument("labeled", help="labeled CSV")
    p.add_argument("--universal", required=True, help="universal-set CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--name", default=None, help="dataset name for model files")
    p.add_argument("--out", required=True, help="directory for model files")

    p = sub.add_parser("evaluate", help="evaluate trained models on the holdout")
    p.add_argument("labeled", help="labeled CSV")
    p.add_argument("--universal", required=True)
    p.add_argument("--models", required=True, help="directory with model files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--name", default=None)
    p.add_argument("--out", default=None, help="optional metrics CSV path")

    p = sub.add_parser("pipeline", help="run every stage from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--ratio", type=float, default=None)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--threshold", type=int, default=None)
    p.add_argument("--timeout-s", type=float, default=None)
    p.add_argument("--activity-timeout-s", type=float, default=None)

    p = sub.add_parser("synth", help="generate synthetic captures")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--blueprint", help="blueprint JSON file")
    group.add_argument("--demo", action="store_true",
                       help="emit the 3-dataset demo corpus")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True,
                   help="output pcap (blueprint) or directory (demo)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except BotmeterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "extract":
        meter = MeterConfig(
            flow_timeout_us=int(args.timeout_s * 1e6),
            activity_timeout_us=int(args.activity_timeout_s * 1e6))
        flows = []
        for capture in args.captures:
            metered, stats = ingest_capture_detailed(capture, meter)
            logger.info("%s: %d records -> %d flows (%d skipped)",
                        capture, stats.records, stats.flows, stats.skipped)
            flows.extend(metered)
        write_flow_csv(args.out, flows)
        print(f"wrote {len(flows)} flows to {args.out}")
        return 0

    if args.command == "label":
        flows, _ = read_flow_csv(args.features)
        rules = parse_rules(args.rules)
        labeled, report = label_flows(flows, rules, args.default_label)
        write_flow_csv(args.out, labeled)
        counts = ", ".join(f"{k}={v}" for k, v in sorted(report.counts.items()))
        print(f"labeled {report.total} flows ({counts}; "
              f"{report.unmatched} unmatched)")
        return 0

    if args.command == "rank":
        name = args.name or Path(args.labeled).stem
        ranked = rank_dataset(Path(args.labeled), args.top_k, args.seed, name)
        write_ranked_csv(ranked, Path(args.out))
        for feat, score in ranked.ranked:
            print(f"{score:12.6f}  {feat}")
        return 0

    if args.command == "universal":
        lists = [read_ranked_csv(p) for p in args.ranked]
        universal = derive_universal_set(lists, threshold=args.threshold)
        write_universal_csv(universal, Path(args.out))
        for feat, count in universal.counts:
            print(f"{count}  {feat}")
        return 0

    if args.command == "train":
        name = args.name or Path(args.labeled).stem
        features = read_universal_features(args.universal)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = train_models(Path(args.labeled), features, args.seed,
                             args.ratio, out_dir, name)
        print("\n".join(str(p) for p in paths))
        return 0

    if args.command == "evaluate":
        name = args.name or Path(args.labeled).stem
        features = read_universal_features(args.universal)
        reports = evaluate_models(Path(args.labeled), features, args.seed,
                                  args.ratio, Path(args.models), name)
        print(render_report(reports, "text"), end="")
        if args.out:
            Path(args.out).write_text(render_report(reports, "csv"),
                                      encoding="utf-8")
        return 0

    if args.command == "pipeline":
        config = load_pipeline_config(args.config, args)
        return run_pipeline(config)

    if args.command == "synth":
        if args.demo:
            config_path = demo.make_demo_corpus(args.out, seed=args.seed or 0)
            print(f"demo corpus ready; run: botmeter pipeline --config {config_path}")
            return 0
        doc = json.loads(Path(args.blueprint).read_text(encoding="utf-8"))
        flows, doc_seed = blueprints_from_json(doc)
        seed = args.seed if args.seed is not None else doc_seed
        out = Path(args.out)
        write_synthetic_capture(flows, seed, out)
        if any(bp.label for bp in flows):
            _write_rules_for_blueprints(flows, out.with_suffix(".rules.csv"))
        print(f"wrote {out}")
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
