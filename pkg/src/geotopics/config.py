"""Flat key = value experiment configuration.

One assignment per line, ``#`` starts a comment, blank lines ignored.
Unknown keys are rejected so typos fail loudly. List values are
comma-separated. Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

FEATURE_SETS = ("baseline", "slang", "smooth", "smooth+slang")
SMOOTH_METHODS = ("avg", "concat")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    # input files
    records: str = ""
    regions: str = ""
    rates: str = ""
    lexicon: str = ""
    outcome: str = "synthetic"
    # year split
    train_years: tuple[int, ...] = (2014, 2015)
    test_years: tuple[int, ...] = (2016,)
    # sweep axes
    k_list: tuple[int, ...] = (5, 10, 20, 50, 100, 200)
    radius_km_list: tuple[float, ...] = (25.0, 50.0, 100.0)
    multiplier_list: tuple[float, ...] = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0)
    feature_sets: tuple[str, ...] = ("baseline", "smooth")
    classifiers: tuple[str, ...] = ("gaussian_nb",)
    # feature construction
    smooth_method: str = "concat"
    slang_weight: float = 1.0
    slang_k: Optional[int] = None  # defaults to the swept K
    min_df: int = 2
    max_df_fraction: float = 0.5
    assign_unlocated: bool = True
    # topic model
    lda_alpha: Optional[float] = None  # None -> 50/K
    lda_beta: float = 0.01
    lda_sweeps: int = 300
    infer_sweeps: int = 100
    # classifier params
    knn_k: int = 5
    rf_trees: int = 50
    rf_max_depth: Optional[int] = None
    rf_min_leaf: int = 1
    nb_threshold: Optional[float] = None  # None -> 1/K
    mnb_count_scale: float = 1000.0
    # reproducibility / reporting
    seed: int = 0
    timing_in_report: bool = False

    def validate(self) -> None:
        for name in ("records", "regions", "rates"):
            if not getattr(self, name):
                raise ConfigError(f"missing required path {name!r}")
        if not self.train_years or not self.test_years:
            raise ConfigError("train_years and test_years must be non-empty")
        overlap = set(self.train_years) & set(self.test_years)
        if overlap:
            raise ConfigError(f"train/test years overlap: {sorted(overlap)}")
        for name in ("k_list", "radius_km_list", "multiplier_list",
                     "feature_sets", "classifiers"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be non-empty")
        if any(k < 1 for k in self.k_list):
            raise ConfigError("k_list entries must be >= 1")
        if any(r <= 0 for r in self.radius_km_list):
            raise ConfigError("radius_km_list entries must be > 0")
        if any(m < 0 for m in self.multiplier_list):
            raise ConfigError("multiplier_list entries must be >= 0")
        bad = [f for f in self.feature_sets if f not in FEATURE_SETS]
        if bad:
            raise ConfigError(
                f"unknown feature sets {bad}; expected subset of {FEATURE_SETS}"
            )
        from .classify import CLASSIFIER_KINDS

        bad = [c for c in self.classifiers if c not in CLASSIFIER_KINDS]
        if bad:
            raise ConfigError(
                f"unknown classifiers {bad}; expected subset of {CLASSIFIER_KINDS}"
            )
        if self.smooth_method not in SMOOTH_METHODS:
            raise ConfigError(
                f"smooth_method must be one of {SMOOTH_METHODS}"
            )
        if self.slang_weight < 0:
            raise ConfigError("slang_weight must be >= 0")
        needs_slang = any("slang" in f for f in self.feature_sets)
        if needs_slang and not self.lexicon:
            raise ConfigError("slang feature sets require a lexicon path")
        if self.lda_sweeps < 1 or self.infer_sweeps < 1:
            raise ConfigError("sweep counts must be >= 1")
        if self.min_df < 1:
            raise ConfigError("min_df must be >= 1")
        if not 0 < self.max_df_fraction <= 1:
            raise ConfigError("max_df_fraction must be in (0, 1]")

    def content_hash(self) -> str:
        doc = asdict(self)
        canon = "\n".join(f"{k}={doc[k]!r}" for k in sorted(doc))
        return hashlib.sha256(canon.encode()).hexdigest()


_PATH_KEYS = ("records", "regions", "rates", "lexicon")


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _split_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def parse_config(text: str, base_dir: str = ".") -> ExperimentConfig:
    """Parse flat key = value text into a validated ExperimentConfig."""
    cfg = ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)}
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            _assign(cfg, key, raw, base_dir)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from exc
    cfg.validate()
    return cfg


def _assign(cfg: ExperimentConfig, key: str, raw: str, base_dir: str) -> None:
    none_like = raw == "" or raw.lower() == "none"
    if key in _PATH_KEYS:
        value = raw if (none_like or os.path.isabs(raw)) else os.path.normpath(
            os.path.join(base_dir, raw)
        )
        setattr(cfg, key, "" if none_like else value)
    elif key in ("outcome", "smooth_method"):
        setattr(cfg, key, raw)
    elif key in ("train_years", "test_years"):
        setattr(cfg, key, tuple(int(v) for v in _split_list(raw)))
    elif key == "k_list":
        cfg.k_list = tuple(int(v) for v in _split_list(raw))
    elif key in ("radius_km_list", "multiplier_list"):
        setattr(cfg, key, tuple(float(v) for v in _split_list(raw)))
    elif key in ("feature_sets", "classifiers"):
        setattr(cfg, key, tuple(_split_list(raw)))
    elif key in ("min_df", "lda_sweeps", "infer_sweeps", "knn_k", "rf_trees",
                 "rf_min_leaf", "seed"):
        setattr(cfg, key, int(raw))
    elif key in ("slang_weight", "max_df_fraction", "lda_beta", "mnb_count_scale"):
        setattr(cfg, key, float(raw))
    elif key in ("slang_k", "rf_max_depth"):
        setattr(cfg, key, None if none_like else int(raw))
    elif key in ("lda_alpha", "nb_threshold"):
        setattr(cfg, key, None if none_like else float(raw))
    elif key in ("assign_unlocated", "timing_in_report"):
        setattr(cfg, key, _parse_bool(raw, key))
    else:  # pragma: no cover - kept in sync with the dataclass
        raise ConfigError(f"unhandled key {key!r}")


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


def classifier_params(cfg: ExperimentConfig, kind: str, k: int) -> dict:
    """Per-classifier keyword arguments for classify.train_classifier."""
    if kind == "knn":
        return {"k": cfg.knn_k}
    if kind == "random_forest":
        return {
            "n_trees": cfg.rf_trees,
            "max_depth": cfg.rf_max_depth,
            "min_leaf": cfg.rf_min_leaf,
        }
    if kind == "bernoulli_nb":
        threshold = cfg.nb_threshold if cfg.nb_threshold is not None else 1.0 / k
        return {"binarize_threshold": threshold}
    if kind == "multinomial_nb":
        return {"count_scale": cfg.mnb_count_scale}
    return {}
