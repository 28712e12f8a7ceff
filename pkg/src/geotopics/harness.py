"""Experiment orchestration: year-split runs, parameter sweeps, and reports.

A run ingests records, trains topic models on the training years only,
optionally folds unlocated records into their best-matching regions, builds
the selected feature set, bins rates with training-year statistics, trains a
classifier, and scores the held-out years. ``sweep`` walks the Cartesian
product of (feature set, K, radius, multiplier, classifier), training each
LDA model once per K and memoizing metrics for configurations that ignore an
axis (the baseline never sees radius or multiplier, so its metrics repeat
across those columns).

Train/test isolation is structural: vocabulary, topic models, binning
statistics, and classifier parameters are computed from training years only.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .classify import ClassifyError, Dataset, accuracy, train_classifier
from .config import ConfigError, ExperimentConfig, classifier_params
from .corpus import (
    CorpusError,
    SlangLexicon,
    TokenizedRecord,
    Vocabulary,
    load_slang_lexicon,
    read_records_jsonl,
    split_located,
    strip_to_slang,
    tokenize_record,
)
from .features import (
    FeatureError,
    assemble,
    baseline_block,
    slang_ratio_block,
    slang_topic_block,
    smooth_avg_block,
    smooth_concat_block,
)
from .geo import AdjacencyGraph, GeoError, build_adjacency, load_regions_csv
from .labels import (
    BinningStats,
    LabelError,
    RateTable,
    apply_suppression,
    bin_value,
    fit_binning,
    load_rates_csv,
    ordinal_mse,
)
from .synth import derive_seed
from .topics import (
    LdaModel,
    TopicModelError,
    cosine_similarity,
    infer_theta_ids,
    train_lda,
)

MIN_REGIONS = 10

REPORT_HEADER = [
    "feature_set",
    "k",
    "radius_km",
    "multiplier",
    "classifier",
    "accuracy",
    "mse",
    "n_regions",
    "runtime_ms",
]

_STAGE_ERRORS = (
    CorpusError,
    GeoError,
    LabelError,
    TopicModelError,
    ClassifyError,
    FeatureError,
    OSError,
    KeyError,
)


class DataError(Exception):
    """Input data missing, malformed, or insufficient for the experiment."""


@dataclass
class ReportRow:
    feature_set: str
    k: int
    radius_km: float
    multiplier: float
    classifier: str
    accuracy: float
    mse: float
    n_regions: int
    runtime_ms: float
    error: Optional[str] = None


@dataclass
class ExperimentReport:
    rows: list[ReportRow]
    config_hash: str
    total_runtime_ms: float
    backend: str = kernels.BACKEND

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.rows if r.error is not None)


Bucket = tuple[str, int]  # (region_id, year): the example unit


@dataclass
class _KBundle:
    """Everything derived from one LDA width K, shared across sweep rows."""

    model: LdaModel
    thetas: dict[Bucket, np.ndarray]
    records: dict[Bucket, list[TokenizedRecord]]  # after unlocated assignment
    n_assigned: int
    slang_thetas: dict[Bucket, np.ndarray] = field(default_factory=dict)
    no_slang: set[Bucket] = field(default_factory=set)


class Pipeline:
    """Loads inputs once and serves metric computations for sweep rows."""

    def __init__(self, cfg: ExperimentConfig):
        cfg.validate()
        self.cfg = cfg
        self._k_cache: dict[int, _KBundle] = {}
        self._adj_cache: dict[float, AdjacencyGraph] = {}
        self._metric_cache: dict[tuple, tuple[float, float, int]] = {}
        try:
            self._load()
            self._prepare()
        except ConfigError:
            raise
        except _STAGE_ERRORS as exc:
            raise DataError(f"stage ingest: {exc}") from exc

    # ------------------------------------------------------------------ load

    def _load(self) -> None:
        cfg = self.cfg
        self.regions = load_regions_csv(cfg.regions)
        self.lexicon: Optional[SlangLexicon] = (
            load_slang_lexicon(cfg.lexicon) if cfg.lexicon else None
        )
        raw_records = list(read_records_jsonl(cfg.records))
        self.rates_all = load_rates_csv(cfg.rates).filter(
            years=set(cfg.train_years) | set(cfg.test_years), outcome=cfg.outcome
        )
        self.rates_kept, self.rates_suppressed = apply_suppression(self.rates_all)
        years = set(cfg.train_years) | set(cfg.test_years)
        tokenized = [
            tokenize_record(r, self.lexicon)
            for r in raw_records
            if r.timestamp.year in years
        ]
        self.located, self.unlocated = split_located(
            tokenized, known_regions=set(self.regions)
        )

    def _prepare(self) -> None:
        cfg = self.cfg
        buckets: dict[Bucket, list[TokenizedRecord]] = {}
        for rec in self.located:
            buckets.setdefault((rec.region, rec.year), []).append(rec)
        self.buckets = buckets

        train_token_lists = [
            rec.tokens
            for (rid, year), recs in sorted(buckets.items())
            if year in cfg.train_years
            for rec in recs
        ]
        if not train_token_lists:
            raise DataError("no located training-year records")
        self.vocab = Vocabulary.build(
            train_token_lists, min_df=cfg.min_df, max_df_fraction=cfg.max_df_fraction
        )
        if len(self.vocab) == 0:
            raise DataError(
                "vocabulary is empty after document-frequency pruning; "
                "lower min_df or raise max_df_fraction"
            )

        rate_by_bucket = {
            (r.region_id, r.year): r.rate for r in self.rates_kept.rows
        }
        train_rates = [
            r.rate for r in self.rates_kept.rows if r.year in cfg.train_years
        ]
        if len(train_rates) < 2:
            raise DataError("fewer than 2 retained training-year rate rows")
        self.binning: BinningStats = fit_binning(
            train_rates, years=cfg.train_years, outcome=cfg.outcome
        )
        self.labels = {
            bucket: bin_value(rate, self.binning)
            for bucket, rate in rate_by_bucket.items()
        }

        # examples: region-years with at least one located record and a
        # retained rate row; assignment can enrich them but never create one
        self.train_examples = sorted(
            b
            for b in self.labels
            if b[1] in cfg.train_years and b in buckets
        )
        self.test_examples = sorted(
            b for b in self.labels if b[1] in cfg.test_years and b in buckets
        )
        train_regions = {rid for rid, _ in self.train_examples}
        if len(train_regions) < MIN_REGIONS:
            raise DataError(
                f"only {len(train_regions)} regions survive suppression and "
                f"record matching; need at least {MIN_REGIONS}"
            )
        if not self.test_examples:
            raise DataError("no test-year examples after suppression")

    # ------------------------------------------------------------- per-K work

    def _adjacency(self, radius_km: float) -> AdjacencyGraph:
        if radius_km not in self._adj_cache:
            self._adj_cache[radius_km] = build_adjacency(self.regions, radius_km)
        return self._adj_cache[radius_km]

    def _bucket_ids(self, recs: Sequence[TokenizedRecord]) -> list[int]:
        ids: list[int] = []
        for rec in recs:
            ids.extend(self.vocab.map_tokens(rec.tokens))
        return ids

    def _infer_bucket_thetas(
        self, model: LdaModel, records: dict[Bucket, list[TokenizedRecord]]
    ) -> dict[Bucket, np.ndarray]:
        cfg = self.cfg
        out: dict[Bucket, np.ndarray] = {}
        for bucket in sorted(records):
            rid, year = bucket
            theta, _ = infer_theta_ids(
                model,
                self._bucket_ids(records[bucket]),
                sweeps=cfg.infer_sweeps,
                seed=derive_seed(cfg.seed, f"theta|k={model.n_topics}|{rid}|{year}"),
            )
            out[bucket] = theta
        return out

    def train_bags(self) -> list[dict[int, int]]:
        """Non-empty training bags in sorted (region, year) order."""
        bags = []
        for bucket in sorted(self.buckets):
            if bucket[1] not in self.cfg.train_years:
                continue
            bag: dict[int, int] = {}
            for idx in self._bucket_ids(self.buckets[bucket]):
                bag[idx] = bag.get(idx, 0) + 1
            if bag:
                bags.append(bag)
        return bags

    def bundle(self, k: int) -> _KBundle:
        """Train-or-fetch the LDA model and all K-dependent artifacts."""
        if k in self._k_cache:
            return self._k_cache[k]
        cfg = self.cfg
        bags = self.train_bags()
        if not bags:
            raise DataError(f"stage lda k={k}: no non-empty training documents")
        model = train_lda(
            bags,
            self.vocab,
            k,
            alpha=cfg.lda_alpha,
            beta=cfg.lda_beta,
            sweeps=cfg.lda_sweeps,
            seed=derive_seed(cfg.seed, f"lda|k={k}"),
        )
        thetas = self._infer_bucket_thetas(model, self.buckets)

        records = {b: list(recs) for b, recs in self.buckets.items()}
        n_assigned = 0
        if cfg.assign_unlocated and self.unlocated:
            by_year: dict[int, dict[str, np.ndarray]] = {}
            for (rid, year), theta in thetas.items():
                by_year.setdefault(year, {})[rid] = theta
            changed: set[Bucket] = set()
            for rec in self.unlocated:
                year = rec.year
                if year is None or year not in by_year:
                    continue
                ids = self.vocab.map_tokens(rec.tokens)
                if not ids:
                    continue
                theta, _ = infer_theta_ids(
                    model,
                    ids,
                    sweeps=cfg.infer_sweeps,
                    seed=derive_seed(cfg.seed, f"assign|k={k}|{rec.record_id}"),
                )
                best_rid, best_sim = None, -1.0
                for rid in sorted(by_year[year]):
                    sim = cosine_similarity(theta, by_year[year][rid])
                    if sim > best_sim:
                        best_rid, best_sim = rid, sim
                bucket = (best_rid, year)
                if bucket in records:
                    records[bucket].append(rec)
                    changed.add(bucket)
                    n_assigned += 1
            if changed:
                refreshed = self._infer_bucket_thetas(
                    model, {b: records[b] for b in changed}
                )
                thetas.update(refreshed)

        bundle = _KBundle(
            model=model, thetas=thetas, records=records, n_assigned=n_assigned
        )
        if any("slang" in fs for fs in cfg.feature_sets):
            self._attach_slang(bundle, k)
        self._k_cache[k] = bundle
        return bundle

    def _attach_slang(self, bundle: _KBundle, k: int) -> None:
        cfg = self.cfg
        assert self.lexicon is not None  # validated by the config
        slang_tokens = {
            bucket: [
                t for rec in recs for t in strip_to_slang(rec, self.lexicon)
            ]
            for bucket, recs in bundle.records.items()
        }
        train_lists = [
            toks
            for bucket, toks in sorted(slang_tokens.items())
            if bucket[1] in cfg.train_years and toks
        ]
        if not train_lists:
            raise DataError("stage slang: no slang tokens in any training record")
        # slang vocabularies are tiny, so no document-frequency pruning
        slang_vocab = Vocabulary.build(train_lists, min_df=1, max_df_fraction=1.0)
        k_s = cfg.slang_k if cfg.slang_k is not None else k
        bags = []
        for toks in train_lists:
            bag: dict[int, int] = {}
            for idx in slang_vocab.map_tokens(toks):
                bag[idx] = bag.get(idx, 0) + 1
            if bag:
                bags.append(bag)
        model = train_lda(
            bags,
            slang_vocab,
            k_s,
            alpha=cfg.lda_alpha,
            beta=cfg.lda_beta,
            sweeps=cfg.lda_sweeps,
            seed=derive_seed(cfg.seed, f"slang_lda|k={k_s}"),
        )
        for bucket in sorted(bundle.records):
            rid, year = bucket
            ids = slang_vocab.map_tokens(slang_tokens[bucket])
            if not ids:
                bundle.no_slang.add(bucket)
                continue
            theta, _ = infer_theta_ids(
                model,
                ids,
                sweeps=cfg.infer_sweeps,
                seed=derive_seed(cfg.seed, f"slang_theta|k={k_s}|{rid}|{year}"),
            )
            bundle.slang_thetas[bucket] = theta

    # ------------------------------------------------------------- datasets

    def _year_matrix(
        self,
        bundle: _KBundle,
        feature_set: str,
        year: int,
        radius_km: float,
        multiplier: float,
    ):
        """Assembled matrix over every bucket of one year, sorted by region."""
        cfg = self.cfg
        thetas_y = {
            rid: theta for (rid, y), theta in bundle.thetas.items() if y == year
        }
        if not thetas_y:
            return None
        blocks = []
        if feature_set in ("smooth", "smooth+slang"):
            adjacency = self._adjacency(radius_km)
            smoother = (
                smooth_avg_block if cfg.smooth_method == "avg" else smooth_concat_block
            )
            blocks.append(smoother(thetas_y, adjacency, multiplier))
        else:
            blocks.append(baseline_block(thetas_y))
        weights = None
        if feature_set in ("slang", "smooth+slang"):
            slang_y = {
                rid: theta
                for (rid, y), theta in bundle.slang_thetas.items()
                if y == year
            }
            missing = [
                rid for rid in thetas_y if rid not in slang_y
            ]
            blocks.append(slang_topic_block(slang_y, no_slang_regions=missing))
            blocks.append(
                slang_ratio_block(
                    {
                        rid: bundle.records[(rid, year)]
                        for rid in thetas_y
                    }
                )
            )
            weights = {
                "slang_topics": cfg.slang_weight,
                "slang_ratio": cfg.slang_weight,
            }
        return assemble(blocks, weights)

    def _dataset(
        self,
        bundle: _KBundle,
        feature_set: str,
        examples: Sequence[Bucket],
        radius_km: float,
        multiplier: float,
    ) -> tuple[Dataset, list[str]]:
        rows = []
        y = []
        ids = []
        columns: list[str] = []
        for year in sorted({b[1] for b in examples}):
            fm = self._year_matrix(bundle, feature_set, year, radius_km, multiplier)
            if fm is None:
                continue
            columns = fm.columns
            index = {rid: i for i, rid in enumerate(fm.region_ids)}
            for rid, b_year in examples:
                if b_year != year:
                    continue
                rows.append(fm.matrix[index[rid]])
                y.append(self.labels[(rid, year)])
                ids.append(f"{rid}@{year}")
        if not rows:
            raise DataError(f"stage features: no {feature_set} examples produced")
        return Dataset(np.asarray(rows), np.asarray(y), ids), columns

    def feature_table(
        self,
        feature_set: str,
        k: int,
        radius_km: float,
        multiplier: float,
        split: str = "train",
    ) -> tuple[Dataset, list[str]]:
        """(dataset, column names) for the train or test examples."""
        if split not in ("train", "test"):
            raise ConfigError(f"split must be 'train' or 'test', got {split!r}")
        examples = self.train_examples if split == "train" else self.test_examples
        return self._dataset(
            self.bundle(k), feature_set, examples, radius_km, multiplier
        )

    # --------------------------------------------------------------- metrics

    def _canonical_key(
        self, feature_set: str, k: int, radius_km: float, multiplier: float,
        classifier: str,
    ) -> tuple:
        """Collapse axes a feature set ignores, so repeats share metrics."""
        if feature_set in ("baseline", "slang"):
            return (feature_set, k, None, None, classifier)
        return (feature_set, k, float(radius_km), float(multiplier), classifier)

    def row_metrics(
        self,
        feature_set: str,
        k: int,
        radius_km: float,
        multiplier: float,
        classifier: str,
    ) -> tuple[float, float, int]:
        """(accuracy, ordinal MSE, n test examples) for one configuration."""
        key = self._canonical_key(feature_set, k, radius_km, multiplier, classifier)
        if key in self._metric_cache:
            return self._metric_cache[key]
        try:
            bundle = self.bundle(k)
            train, _ = self._dataset(
                bundle, feature_set, self.train_examples, radius_km, multiplier
            )
            test, _ = self._dataset(
                bundle, feature_set, self.test_examples, radius_km, multiplier
            )
            params = dict(classifier_params(self.cfg, classifier, k))
            if classifier == "random_forest":
                params["seed"] = derive_seed(
                    self.cfg.seed, f"rf|{'|'.join(str(p) for p in key)}"
                )
            clf = train_classifier(classifier, train, params)
            predicted = clf.predict(test.X)
        except DataError:
            raise
        except _STAGE_ERRORS as exc:
            raise DataError(
                f"stage {feature_set}/k={k}/r={radius_km:g}/m={multiplier:g}"
                f"/{classifier}: {exc}"
            ) from exc
        result = (
            accuracy(predicted, test.y),
            ordinal_mse(predicted, test.y),
            len(test),
        )
        self._metric_cache[key] = result
        return result

    def predictions(
        self,
        feature_set: str,
        k: int,
        radius_km: float,
        multiplier: float,
        classifier: str,
    ) -> tuple[list[str], np.ndarray, np.ndarray]:
        """(example ids, true labels, predicted labels) on the test years."""
        bundle = self.bundle(k)
        train, _ = self._dataset(
            bundle, feature_set, self.train_examples, radius_km, multiplier
        )
        test, _ = self._dataset(
            bundle, feature_set, self.test_examples, radius_km, multiplier
        )
        params = dict(classifier_params(self.cfg, classifier, k))
        if classifier == "random_forest":
            key = self._canonical_key(feature_set, k, radius_km, multiplier, classifier)
            params["seed"] = derive_seed(
                self.cfg.seed, f"rf|{'|'.join(str(p) for p in key)}"
            )
        clf = train_classifier(classifier, train, params)
        return list(test.region_ids), test.y.copy(), clf.predict(test.X)


def sweep(cfg: ExperimentConfig) -> ExperimentReport:
    """Run the full Cartesian product; partial row failures do not abort."""
    t_start = time.perf_counter()
    pipeline = Pipeline(cfg)
    rows: list[ReportRow] = []
    for feature_set in cfg.feature_sets:
        for k in cfg.k_list:
            for radius_km in cfg.radius_km_list:
                for multiplier in cfg.multiplier_list:
                    for classifier in cfg.classifiers:
                        t0 = time.perf_counter()
                        error = None
                        try:
                            acc, mse, n = pipeline.row_metrics(
                                feature_set, k, radius_km, multiplier, classifier
                            )
                        except (DataError, ConfigError) as exc:
                            acc, mse, n = math.nan, math.nan, 0
                            error = str(exc)
                        rows.append(
                            ReportRow(
                                feature_set=feature_set,
                                k=k,
                                radius_km=float(radius_km),
                                multiplier=float(multiplier),
                                classifier=classifier,
                                accuracy=acc,
                                mse=mse,
                                n_regions=n,
                                runtime_ms=(time.perf_counter() - t0) * 1000.0,
                                error=error,
                            )
                        )
    total_ms = (time.perf_counter() - t_start) * 1000.0
    return ExperimentReport(
        rows=rows, config_hash=cfg.content_hash(), total_runtime_ms=total_ms
    )


def run_pipeline(cfg: ExperimentConfig) -> ReportRow:
    """Single-configuration run; every sweep axis must be a singleton."""
    for name in ("feature_sets", "k_list", "radius_km_list", "multiplier_list",
                 "classifiers"):
        if len(getattr(cfg, name)) != 1:
            raise ConfigError(
                f"run_pipeline needs exactly one value for {name}; use sweep"
            )
    report = sweep(cfg)
    row = report.rows[0]
    if row.error is not None:
        raise DataError(row.error)
    return row


def write_report_csv(
    report: ExperimentReport, path: str, timing: bool = False
) -> None:
    """Write the report table.

    With timing disabled (the default) runtime_ms is written as 0 so reruns of
    the same configuration produce byte-identical files; real timings always
    live in the JSON sidecar.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_HEADER)
        for r in report.rows:
            writer.writerow(
                [
                    r.feature_set,
                    r.k,
                    f"{r.radius_km:g}",
                    f"{r.multiplier:g}",
                    r.classifier,
                    f"{r.accuracy:.6f}",
                    f"{r.mse:.6f}",
                    r.n_regions,
                    int(round(r.runtime_ms)) if timing else 0,
                ]
            )


def write_report_json(
    report: ExperimentReport, cfg: ExperimentConfig, path: str
) -> None:
    """Sidecar with the full config, seed, backend, timings, and row errors."""
    doc = {
        "config": asdict(cfg),
        "config_hash": report.config_hash,
        "seed": cfg.seed,
        "backend": report.backend,
        "total_runtime_ms": report.total_runtime_ms,
        "n_failed_rows": report.n_failed,
        "rows": [asdict(r) for r in report.rows],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def read_report_csv(path: str) -> list[ReportRow]:
    rows: list[ReportRow] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != REPORT_HEADER:
            raise DataError(f"bad report header in {path}")
        for raw in reader:
            rows.append(
                ReportRow(
                    feature_set=raw["feature_set"],
                    k=int(raw["k"]),
                    radius_km=float(raw["radius_km"]),
                    multiplier=float(raw["multiplier"]),
                    classifier=raw["classifier"],
                    accuracy=float(raw["accuracy"]),
                    mse=float(raw["mse"]),
                    n_regions=int(raw["n_regions"]),
                    runtime_ms=float(raw["runtime_ms"]),
                )
            )
    return rows
