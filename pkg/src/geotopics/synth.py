"""Synthetic world generator: regions, planted topics, corpora, and rates.

Builds a grid of regions with a spatially autocorrelated topic field, then
samples geotagged documents and outcome rates from the planted parameters.
Every pipeline claim can be tested against this ground truth without any
private dataset. All sampling is deterministic from one master seed;
sub-streams are derived by hashing (seed, purpose) so stages can run in any
order or in parallel without changing output.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass
from datetime import datetime, timedelta, timezone
from typing import Optional, Sequence

import numpy as np

from .corpus import RawRecord, write_records_jsonl
from .geo import Region, write_regions_csv
from .labels import RateRow, RateTable, write_rates_csv


class SynthError(ValueError):
    """Invalid world configuration."""


def derive_seed(master_seed: int, purpose: str) -> int:
    """Stable 64-bit sub-seed from a master seed and a purpose string."""
    digest = hashlib.sha256(f"{master_seed}|{purpose}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class WorldConfig:
    """Knobs for the planted world; defaults give a small learnable world."""

    n_rows: int = 6
    n_cols: int = 6
    spacing_deg: float = 1.0
    origin_lat: float = 35.0
    origin_lon: float = -100.0
    n_topics: int = 5
    vocab_size: int = 50
    smoothness: float = 0.4  # max L1 gap allowed between adjacent thetas
    theta_concentration: float = 1.0  # Dirichlet alpha for the raw theta draws
    n_slang: int = 30
    slang_rate_min: float = 0.05
    slang_rate_max: float = 0.15
    slang_mode: str = "mirror"  # mirror: slang follows region theta; noise: iid
    risk_topic: int = 0
    rate_base: float = 20.0
    rate_gain: float = 100.0
    rate_noise: float = 2.0
    suppressed_fraction: float = 0.1
    population_min: int = 50_000
    population_max: int = 500_000

    def validate(self) -> None:
        if self.n_rows < 2 or self.n_cols < 2:
            raise SynthError("grid must be at least 2x2")
        if self.n_topics < 2:
            raise SynthError("n_topics must be >= 2")
        if self.vocab_size < 2 * self.n_topics:
            raise SynthError("vocab_size must be >= 2 * n_topics")
        if self.n_slang < self.n_topics:
            raise SynthError("n_slang must be >= n_topics")
        if self.smoothness < 0:
            raise SynthError("smoothness must be >= 0")
        if self.theta_concentration <= 0:
            raise SynthError("theta_concentration must be > 0")
        if not 0 <= self.risk_topic < self.n_topics:
            raise SynthError("risk_topic outside topic range")
        if not 0.0 <= self.slang_rate_min <= self.slang_rate_max <= 1.0:
            raise SynthError("slang rates must satisfy 0 <= min <= max <= 1")
        if self.slang_mode not in ("mirror", "noise"):
            raise SynthError(f"unknown slang_mode {self.slang_mode!r}")
        if not 0.0 <= self.suppressed_fraction <= 1.0:
            raise SynthError("suppressed_fraction must be in [0, 1]")
        if self.rate_noise < 0:
            raise SynthError("rate_noise must be >= 0")
        if not 100 <= self.population_min <= self.population_max:
            raise SynthError("need 100 <= population_min <= population_max")


def region_id(row: int, col: int) -> str:
    return f"r{row:02d}c{col:02d}"


@dataclass
class PlantedWorld:
    """Ground truth: geography, topic model, theta field, slang, seed."""

    config: WorldConfig
    seed: int
    regions: list[Region]
    topic_word: np.ndarray  # (K, V)
    thetas: dict[str, np.ndarray]  # region -> (K,)
    slang_terms: list[str]
    slang_topic_word: np.ndarray  # (K, n_slang)
    slang_thetas: dict[str, np.ndarray]
    slang_rates: dict[str, float]

    @property
    def region_ids(self) -> list[str]:
        return [r.region_id for r in self.regions]

    @property
    def words(self) -> list[str]:
        return [f"w{i:04d}" for i in range(self.config.vocab_size)]


def _block_topics(n_topics: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """K topics over disjoint near-equal word blocks, Dirichlet within block."""
    topic_word = np.zeros((n_topics, size))
    bounds = np.linspace(0, size, n_topics + 1).astype(int)
    for k in range(n_topics):
        lo, hi = bounds[k], bounds[k + 1]
        topic_word[k, lo:hi] = rng.dirichlet(np.full(hi - lo, 5.0))
    return topic_word


def _grid_neighbors(n_rows: int, n_cols: int) -> list[list[int]]:
    """Rook-adjacency index lists for a row-major grid."""
    out: list[list[int]] = []
    for r in range(n_rows):
        for c in range(n_cols):
            adj = []
            if r > 0:
                adj.append((r - 1) * n_cols + c)
            if r < n_rows - 1:
                adj.append((r + 1) * n_cols + c)
            if c > 0:
                adj.append(r * n_cols + c - 1)
            if c < n_cols - 1:
                adj.append(r * n_cols + c + 1)
            out.append(adj)
    return out


def _max_adjacent_l1(field: np.ndarray, neighbors: list[list[int]]) -> float:
    worst = 0.0
    for i, adj in enumerate(neighbors):
        for j in adj:
            gap = float(np.abs(field[i] - field[j]).sum())
            if gap > worst:
                worst = gap
    return worst


def _smooth_field(
    field: np.ndarray, neighbors: list[list[int]], bound: float
) -> np.ndarray:
    """Average each cell with its neighborhood until adjacent gaps <= bound.

    bound = 0 collapses the whole field to the global mean in one step
    (the fixed point of full smoothing).
    """
    if bound <= 0.0:
        return np.tile(field.mean(axis=0), (field.shape[0], 1))
    for _ in range(100_000):
        if _max_adjacent_l1(field, neighbors) <= bound:
            return field
        means = np.asarray([field[adj].mean(axis=0) for adj in neighbors])
        field = 0.5 * (field + means)
    raise SynthError("theta field failed to reach the smoothness bound")


def generate_world(config: WorldConfig, seed: int) -> PlantedWorld:
    """Build the full planted world deterministically from the seed."""
    config.validate()
    k = config.n_topics
    n_regions = config.n_rows * config.n_cols

    rng_topics = np.random.default_rng(derive_seed(seed, "topics"))
    topic_word = _block_topics(k, config.vocab_size, rng_topics)
    slang_topic_word = _block_topics(k, config.n_slang, rng_topics)

    rng_theta = np.random.default_rng(derive_seed(seed, "theta"))
    raw = rng_theta.dirichlet(
        np.full(k, config.theta_concentration), size=n_regions
    )
    neighbors = _grid_neighbors(config.n_rows, config.n_cols)
    field = _smooth_field(raw, neighbors, config.smoothness)

    ids = [
        region_id(r, c)
        for r in range(config.n_rows)
        for c in range(config.n_cols)
    ]
    thetas = {rid: field[i] for i, rid in enumerate(ids)}

    rng_pop = np.random.default_rng(derive_seed(seed, "population"))
    pops = rng_pop.integers(
        config.population_min, config.population_max + 1, size=n_regions
    )
    n_tiny = int(round(config.suppressed_fraction * n_regions))
    if n_tiny:
        tiny_idx = rng_pop.choice(n_regions, size=n_tiny, replace=False)
        pops[tiny_idx] = rng_pop.integers(20, 100, size=n_tiny)
    regions = []
    for i, rid in enumerate(ids):
        r, c = divmod(i, config.n_cols)
        regions.append(
            Region(
                region_id=rid,
                lat=config.origin_lat + r * config.spacing_deg,
                lon=config.origin_lon + c * config.spacing_deg,
                population=int(pops[i]),
            )
        )

    rng_slang = np.random.default_rng(derive_seed(seed, "slang"))
    slang_rates = {
        rid: float(x)
        for rid, x in zip(
            ids,
            rng_slang.uniform(
                config.slang_rate_min, config.slang_rate_max, size=n_regions
            ),
        )
    }
    if config.slang_mode == "mirror":
        slang_thetas = {rid: thetas[rid].copy() for rid in ids}
    else:
        noise = rng_slang.dirichlet(np.ones(k), size=n_regions)
        slang_thetas = {rid: noise[i] for i, rid in enumerate(ids)}

    return PlantedWorld(
        config=config,
        seed=seed,
        regions=regions,
        topic_word=topic_word,
        thetas=thetas,
        slang_terms=[f"s{i:03d}" for i in range(config.n_slang)],
        slang_topic_word=slang_topic_word,
        slang_thetas=slang_thetas,
        slang_rates=slang_rates,
    )


def _sample_tokens(
    theta: np.ndarray,
    word_cdf: np.ndarray,
    n_tokens: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized LDA generative draw: topics from theta, words from topics."""
    topics = rng.choice(theta.size, size=n_tokens, p=theta)
    u = rng.random(n_tokens)
    words = np.empty(n_tokens, dtype=np.int64)
    for i in range(n_tokens):
        words[i] = np.searchsorted(word_cdf[topics[i]], u[i], side="right")
    return np.minimum(words, word_cdf.shape[1] - 1)


def generate_corpus(
    world: PlantedWorld,
    docs_per_region: int,
    tokens_per_doc: int,
    years: Sequence[int],
    seed: int,
    unlocated_fraction: float = 0.0,
    sparse_fraction: float = 0.0,
    sparse_docs: Optional[int] = None,
) -> list[RawRecord]:
    """Sample geotagged records from the planted generative process.

    A ``sparse_fraction`` of regions get ``sparse_docs`` documents per year
    instead of ``docs_per_region`` (default one tenth), exercising the thin
    corpora where neighbor information matters most. An ``unlocated_fraction``
    of records carry no region id. Slang terms replace ordinary tokens in
    place, so document length is unchanged.
    """
    if docs_per_region < 0 or tokens_per_doc < 0:
        raise SynthError("docs_per_region and tokens_per_doc must be >= 0")
    if not years:
        raise SynthError("need at least one year")
    if not 0.0 <= unlocated_fraction <= 1.0:
        raise SynthError("unlocated_fraction must be in [0, 1]")
    if not 0.0 <= sparse_fraction <= 1.0:
        raise SynthError("sparse_fraction must be in [0, 1]")
    if sparse_docs is None:
        sparse_docs = max(1, docs_per_region // 10)

    ids = world.region_ids
    n_sparse = int(round(sparse_fraction * len(ids)))
    rng_sparse = np.random.default_rng(derive_seed(seed, "sparse"))
    sparse_set = (
        set(rng_sparse.choice(len(ids), size=n_sparse, replace=False).tolist())
        if n_sparse
        else set()
    )

    words = np.asarray(world.words)
    slang = np.asarray(world.slang_terms)
    word_cdf = np.cumsum(world.topic_word, axis=1)
    slang_cdf = np.cumsum(world.slang_topic_word, axis=1)

    records: list[RawRecord] = []
    counter = 0
    for idx, rid in enumerate(ids):
        theta = world.thetas[rid]
        s_theta = world.slang_thetas[rid]
        s_rate = world.slang_rates[rid]
        n_docs = sparse_docs if idx in sparse_set else docs_per_region
        for year in sorted(years):
            rng = np.random.default_rng(derive_seed(seed, f"corpus|{rid}|{year}"))
            for _ in range(n_docs):
                if tokens_per_doc > 0:
                    token_ids = _sample_tokens(theta, word_cdf, tokens_per_doc, rng)
                    toks = words[token_ids]
                    slang_mask = rng.random(tokens_per_doc) < s_rate
                    n_rep = int(slang_mask.sum())
                    if n_rep:
                        rep_ids = _sample_tokens(s_theta, slang_cdf, n_rep, rng)
                        toks = toks.copy()
                        toks[slang_mask] = slang[rep_ids]
                    text = " ".join(toks)
                else:
                    text = ""
                day = int(rng.integers(0, 365))
                hour = int(rng.integers(0, 24))
                stamp = datetime(year, 1, 1, tzinfo=timezone.utc) + timedelta(
                    days=day, hours=hour
                )
                located = rng.random() >= unlocated_fraction
                records.append(
                    RawRecord(
                        record_id=f"t{counter:07d}",
                        text=text,
                        region=rid if located else None,
                        timestamp=stamp,
                    )
                )
                counter += 1
    return records


def generate_rates(
    world: PlantedWorld,
    years: Sequence[int],
    seed: int,
    outcome: str = "synthetic",
) -> RateTable:
    """Outcome rates tied to the risk topic: base + gain * theta[risk] + noise.

    Rates are per 100,000 and floored at 0; case counts follow from each
    region's registry population, so regions planted with tiny populations
    trip the small-area suppression rule.
    """
    cfg = world.config
    rows: list[RateRow] = []
    for year in sorted(years):
        rng = np.random.default_rng(derive_seed(seed, f"rates|{year}"))
        noise = rng.normal(0.0, cfg.rate_noise, size=len(world.regions))
        for i, region in enumerate(world.regions):
            theta_risk = float(world.thetas[region.region_id][cfg.risk_topic])
            rate = max(0.0, cfg.rate_base + cfg.rate_gain * theta_risk + noise[i])
            count = int(round(rate * region.population / 100_000.0))
            rows.append(
                RateRow(
                    region_id=region.region_id,
                    year=int(year),
                    outcome=outcome,
                    rate=rate,
                    count=count,
                    population=region.population,
                )
            )
    return RateTable(rows)


def world_truth_payload(world: PlantedWorld) -> dict:
    """JSON-ready dump of every planted parameter, for oracle tests."""
    return {
        "seed": world.seed,
        "config": asdict(world.config),
        "region_ids": world.region_ids,
        "words": world.words,
        "slang_terms": world.slang_terms,
        "topic_word": world.topic_word.tolist(),
        "slang_topic_word": world.slang_topic_word.tolist(),
        "thetas": {r: world.thetas[r].tolist() for r in world.region_ids},
        "slang_thetas": {
            r: world.slang_thetas[r].tolist() for r in world.region_ids
        },
        "slang_rates": world.slang_rates,
        "populations": {r.region_id: r.population for r in world.regions},
    }


DEFAULT_CONFIG_TEMPLATE = """\
# experiment configuration (key = value, '#' starts a comment)
records = {records}
regions = {regions}
rates = {rates}
lexicon = {lexicon}
outcome = {outcome}
train_years = {train_years}
test_years = {test_years}
k_list = 5
radius_km_list = 200
multiplier_list = 0,0.25,0.5,1,2,4
feature_sets = baseline,smooth
classifiers = gaussian_nb
lda_alpha = 0.5
lda_beta = 0.01
lda_sweeps = 300
infer_sweeps = 100
seed = {seed}
"""


def emit_world(
    out_dir: str,
    world: PlantedWorld,
    records: Sequence[RawRecord],
    rates: RateTable,
    train_years: Sequence[int] = (2014, 2015),
    test_years: Sequence[int] = (2016,),
) -> dict[str, str]:
    """Write all pipeline inputs plus ground truth into a directory.

    Returns a name -> path map. Emits records.jsonl, regions.csv, rates.csv,
    slang.txt, world_truth.json, and a ready-to-run experiment.cfg pointing at
    those files.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "records": os.path.join(out_dir, "records.jsonl"),
        "regions": os.path.join(out_dir, "regions.csv"),
        "rates": os.path.join(out_dir, "rates.csv"),
        "lexicon": os.path.join(out_dir, "slang.txt"),
        "truth": os.path.join(out_dir, "world_truth.json"),
        "config": os.path.join(out_dir, "experiment.cfg"),
    }
    write_records_jsonl(records, paths["records"])
    write_regions_csv({r.region_id: r for r in world.regions}, paths["regions"])
    write_rates_csv(rates, paths["rates"])
    with open(paths["lexicon"], "w", encoding="utf-8") as fh:
        fh.write("# planted slang lexicon\n")
        for term in world.slang_terms:
            fh.write(term + "\n")
    with open(paths["truth"], "w", encoding="utf-8") as fh:
        json.dump(world_truth_payload(world), fh, indent=1)
    # paths in the template are relative to the config file itself, so the
    # emitted directory can be moved or mounted anywhere
    with open(paths["config"], "w", encoding="utf-8") as fh:
        fh.write(
            DEFAULT_CONFIG_TEMPLATE.format(
                records=os.path.basename(paths["records"]),
                regions=os.path.basename(paths["regions"]),
                rates=os.path.basename(paths["rates"]),
                lexicon=os.path.basename(paths["lexicon"]),
                outcome="synthetic",
                train_years=",".join(str(y) for y in sorted(train_years)),
                test_years=",".join(str(y) for y in sorted(test_years)),
                seed=world.seed,
            )
        )
    return paths
