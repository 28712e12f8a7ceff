"""Command-line interface.

Subcommands: synth, ingest, lda, featurize, label, train, eval, sweep, plot.
Global flags ``--config``, ``--seed``, ``--out`` may appear before or after
the subcommand; ``--seed`` overrides the seed from the config file.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 sweep finished
with some failed rows.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from typing import Optional, Sequence

from . import harness, kernels, synth
from .classify import ClassifyError, save_classifier, train_classifier
from .config import ConfigError, ExperimentConfig, classifier_params, load_config
from .corpus import CorpusError
from .features import FeatureError
from .geo import GeoError
from .labels import LabelError, write_suppression_csv
from .classify import accuracy, write_predictions_csv
from .labels import ordinal_mse
from .plotting import PlotError, emit_plot
from .synth import SynthError
from .topics import TopicModelError, perplexity, save_model, write_thetas_csv

_DATA_ERRORS = (
    harness.DataError,
    CorpusError,
    GeoError,
    LabelError,
    TopicModelError,
    ClassifyError,
    FeatureError,
    PlotError,
    OSError,
)


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so errors map onto exit code 1."""

    def error(self, message: str):
        raise ConfigError(message)


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(v) for v in raw.split(",") if v.strip())


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="experiment config file")
    parser.add_argument(
        "--seed", type=int, default=default, help="override the config seed"
    )
    parser.add_argument(
        "--out", default=default, help="output directory (default: current)"
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="geotopics", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="cmd")

    def add(name: str, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_, parents=[], add_help=True)
        _global_flags(p, suppress=True)
        return p

    p = add("synth", "generate a synthetic world with records, rates, config")
    p.add_argument("--rows", type=int, default=6)
    p.add_argument("--cols", type=int, default=6)
    p.add_argument("--topics", type=int, default=5)
    p.add_argument("--vocab", type=int, default=50)
    p.add_argument("--docs-per-region", type=int, default=20)
    p.add_argument("--tokens-per-doc", type=int, default=30)
    p.add_argument("--train-years", type=_int_list, default=(2014, 2015))
    p.add_argument("--test-years", type=_int_list, default=(2016,))
    p.add_argument("--unlocated-fraction", type=float, default=0.05)
    p.add_argument("--sparse-fraction", type=float, default=0.0)
    p.add_argument("--sparse-docs", type=int, default=None)
    p.add_argument("--smoothness", type=float, default=0.4)
    p.add_argument("--theta-concentration", type=float, default=1.0)
    p.add_argument("--slang-mode", choices=("mirror", "noise"), default="mirror")
    p.add_argument("--rate-noise", type=float, default=0.0)
    p.add_argument("--suppressed-fraction", type=float, default=0.1)

    add("ingest", "load and tokenize records; write vocabulary and counts")

    p = add("lda", "train the topic model on the training years")
    p.add_argument("--k", type=int, default=None, help="topic count (default: first of k_list)")

    def add_overrides(p: argparse.ArgumentParser) -> None:
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--radius", type=float, default=None)
        p.add_argument("--multiplier", type=float, default=None)
        p.add_argument("--feature-set", default=None)

    p = add("featurize", "write feature matrices for one configuration")
    add_overrides(p)

    add("label", "write rate labels and suppression diagnostics")

    add_overrides(add("train", "train one classifier and save it"))
    add_overrides(add("eval", "run one configuration and write test predictions"))
    add("sweep", "run the full configuration sweep and write the report")

    p = add("plot", "render plot CSV + SVG from a report")
    p.add_argument("--report", required=True, help="report.csv from a sweep")
    p.add_argument("--x", default="multiplier", choices=("multiplier", "radius_km", "k"))
    p.add_argument("--metric", default="mse", choices=("mse", "accuracy"))

    return parser


def _out_dir(args: argparse.Namespace) -> str:
    out = getattr(args, "out", None) or "."
    os.makedirs(out, exist_ok=True)
    return out


def _load_cfg(args: argparse.Namespace) -> ExperimentConfig:
    path = getattr(args, "config", None)
    if not path:
        raise ConfigError("this command requires --config")
    cfg = load_config(path)
    seed = getattr(args, "seed", None)
    if seed is not None:
        cfg.seed = seed
    return cfg


def _singleton(cfg: ExperimentConfig, args: argparse.Namespace) -> tuple:
    """Resolve one (feature_set, k, radius, multiplier, classifier) combo."""
    fs = getattr(args, "feature_set", None) or cfg.feature_sets[0]
    k = getattr(args, "k", None) or cfg.k_list[0]
    radius = getattr(args, "radius", None) or cfg.radius_km_list[0]
    multiplier = getattr(args, "multiplier", None)
    if multiplier is None:
        multiplier = cfg.multiplier_list[0]
    return fs, int(k), float(radius), float(multiplier), cfg.classifiers[0]


def _cmd_synth(args: argparse.Namespace) -> int:
    seed = getattr(args, "seed", None) or 0
    wc = synth.WorldConfig(
        n_rows=args.rows,
        n_cols=args.cols,
        n_topics=args.topics,
        vocab_size=args.vocab,
        smoothness=args.smoothness,
        theta_concentration=args.theta_concentration,
        slang_mode=args.slang_mode,
        rate_noise=args.rate_noise,
        suppressed_fraction=args.suppressed_fraction,
    )
    world = synth.generate_world(wc, seed)
    years = sorted(set(args.train_years) | set(args.test_years))
    records = synth.generate_corpus(
        world,
        docs_per_region=args.docs_per_region,
        tokens_per_doc=args.tokens_per_doc,
        years=years,
        seed=synth.derive_seed(seed, "corpus"),
        unlocated_fraction=args.unlocated_fraction,
        sparse_fraction=args.sparse_fraction,
        sparse_docs=args.sparse_docs,
    )
    rates = synth.generate_rates(world, years, synth.derive_seed(seed, "rates"))
    paths = synth.emit_world(
        _out_dir(args), world, records, rates,
        train_years=args.train_years, test_years=args.test_years,
    )
    print(f"wrote {len(records)} records across {len(world.regions)} regions")
    for name in ("records", "regions", "rates", "lexicon", "truth", "config"):
        print(f"  {name}: {paths[name]}")
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    pipeline = harness.Pipeline(cfg)
    vocab_path = os.path.join(out, "vocabulary.csv")
    pipeline.vocab.save_csv(vocab_path)
    years = sorted({rec.year for rec in pipeline.located})
    summary = {
        "n_located": len(pipeline.located),
        "n_unlocated": len(pipeline.unlocated),
        "n_regions": len(pipeline.regions),
        "n_region_year_documents": len(pipeline.buckets),
        "vocab_size": len(pipeline.vocab),
        "vocab_hash": pipeline.vocab.content_hash(),
        "years": years,
        "rates_kept": len(pipeline.rates_kept),
        "rates_suppressed": len(pipeline.rates_suppressed),
    }
    summary_path = os.path.join(out, "ingest.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1)
    print(
        f"{summary['n_located']} located + {summary['n_unlocated']} unlocated "
        f"records, vocabulary {summary['vocab_size']} tokens"
    )
    print(f"  vocabulary: {vocab_path}")
    print(f"  summary: {summary_path}")
    return 0


def _cmd_lda(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    k = args.k or cfg.k_list[0]
    pipeline = harness.Pipeline(cfg)
    bundle = pipeline.bundle(k)
    model_path = os.path.join(out, f"lda_k{k}.npz")
    save_model(bundle.model, model_path)
    thetas_path = os.path.join(out, f"thetas_k{k}.csv")
    write_thetas_csv(
        {f"{rid}@{year}": theta for (rid, year), theta in bundle.thetas.items()},
        thetas_path,
    )
    pp = perplexity(bundle.model, pipeline.train_bags(), sweeps=cfg.infer_sweeps,
                    seed=cfg.seed)
    summary = {
        "k": k,
        "backend": kernels.BACKEND,
        "train_perplexity": pp,
        "n_documents": len(pipeline.train_bags()),
        "n_assigned_unlocated": bundle.n_assigned,
        "model": model_path,
    }
    with open(os.path.join(out, f"lda_k{k}.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1)
    print(f"k={k} perplexity={pp:.2f} ({kernels.BACKEND} backend)")
    print(f"  model: {model_path}")
    print(f"  thetas: {thetas_path}")
    return 0


def _write_table(path: str, ids, columns, matrix) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region_id"] + list(columns))
        for i, rid in enumerate(ids):
            writer.writerow([rid] + [f"{x:.10f}" for x in matrix[i]])


def _cmd_featurize(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    fs, k, radius, multiplier, _ = _singleton(cfg, args)
    pipeline = harness.Pipeline(cfg)
    for split in ("train", "test"):
        data, columns = pipeline.feature_table(fs, k, radius, multiplier, split)
        path = os.path.join(out, f"features_{split}.csv")
        _write_table(path, data.region_ids, columns, data.X)
        print(f"  {split}: {path} ({len(data)} x {len(columns)})")
    return 0


def _cmd_label(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    pipeline = harness.Pipeline(cfg)
    labels_path = os.path.join(out, "labels.csv")
    with open(labels_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region_id", "year", "rate", "label"])
        for row in pipeline.rates_kept.rows:
            writer.writerow(
                [
                    row.region_id,
                    row.year,
                    f"{row.rate:.6f}",
                    pipeline.labels[(row.region_id, row.year)],
                ]
            )
    supp_path = os.path.join(out, "suppression.csv")
    write_suppression_csv(pipeline.rates_all, supp_path)
    stats = pipeline.binning
    print(
        f"binning mean={stats.mean:.4f} std={stats.std:.4f} over "
        f"{stats.n_values} training rates"
    )
    print(f"  labels: {labels_path}")
    print(f"  suppression diagnostics: {supp_path}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    fs, k, radius, multiplier, clf_kind = _singleton(cfg, args)
    pipeline = harness.Pipeline(cfg)
    data, _ = pipeline.feature_table(fs, k, radius, multiplier, "train")
    params = dict(classifier_params(cfg, clf_kind, k))
    if clf_kind == "random_forest":
        params["seed"] = synth.derive_seed(cfg.seed, "rf|train")
    clf = train_classifier(clf_kind, data, params)
    model_path = os.path.join(out, "model.json")
    save_classifier(clf, model_path)
    train_acc = accuracy(clf.predict(data.X), data.y)
    summary = {
        "classifier": clf_kind,
        "feature_set": fs,
        "k": k,
        "radius_km": radius,
        "multiplier": multiplier,
        "params": {p: v for p, v in params.items()},
        "n_train": len(data),
        "train_accuracy": train_acc,
        "model": model_path,
    }
    with open(os.path.join(out, "train.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1)
    print(f"{clf_kind} on {fs}: train accuracy {train_acc:.4f} ({len(data)} examples)")
    print(f"  model: {model_path}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    fs, k, radius, multiplier, clf_kind = _singleton(cfg, args)
    pipeline = harness.Pipeline(cfg)
    ids, true_labels, predicted = pipeline.predictions(
        fs, k, radius, multiplier, clf_kind
    )
    acc = accuracy(predicted, true_labels)
    mse = ordinal_mse(predicted, true_labels)
    pred_path = os.path.join(out, "predictions.csv")
    write_predictions_csv(ids, true_labels, predicted, pred_path)
    summary = {
        "feature_set": fs,
        "k": k,
        "radius_km": radius,
        "multiplier": multiplier,
        "classifier": clf_kind,
        "accuracy": acc,
        "mse": mse,
        "n_regions": len(ids),
        "predictions": pred_path,
    }
    with open(os.path.join(out, "eval.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1)
    print(
        f"{fs} k={k} r={radius:g} m={multiplier:g} {clf_kind}: "
        f"accuracy={acc:.6f} mse={mse:.6f} n={len(ids)}"
    )
    print(f"  predictions: {pred_path}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    report = harness.sweep(cfg)
    csv_path = os.path.join(out, "report.csv")
    json_path = os.path.join(out, "report.json")
    harness.write_report_csv(report, csv_path, timing=cfg.timing_in_report)
    harness.write_report_json(report, cfg, json_path)
    ok = len(report.rows) - report.n_failed
    print(
        f"{len(report.rows)} rows ({ok} ok, {report.n_failed} failed) in "
        f"{report.total_runtime_ms:.0f} ms [{report.backend} backend]"
    )
    print(f"  report: {csv_path}")
    print(f"  sidecar: {json_path}")
    if report.n_failed:
        for row in report.rows:
            if row.error is not None:
                print(f"  FAILED {row.feature_set}/k={row.k}: {row.error}",
                      file=sys.stderr)
        return 3
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    rows = harness.read_report_csv(args.report)
    csv_path = os.path.join(out, "plot.csv")
    svg_path = os.path.join(out, "plot.svg")
    emit_plot(rows, csv_path, svg_path, x_axis=args.x, metric=args.metric)
    print(f"  plot data: {csv_path}")
    print(f"  chart: {svg_path}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "lda": _cmd_lda,
    "featurize": _cmd_featurize,
    "label": _cmd_label,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "plot": _cmd_plot,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.cmd is None:
            parser.print_help()
            return 1
        return _COMMANDS[args.cmd](args)
    except (ConfigError, SynthError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
