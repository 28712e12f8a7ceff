"""Region feature construction: topic, slang, and neighbor-smoothed blocks.

Each block maps region ids to fixed-width vectors; blocks are assembled into
one matrix with sorted-region row order so downstream training is stable under
input reorderings.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import TokenizedRecord, slang_ratio
from .geo import AdjacencyGraph

BLOCK_NAMES = ("baseline", "slang_topics", "slang_ratio", "smooth_avg", "smooth_concat")


class FeatureError(ValueError):
    """Inconsistent feature blocks or invalid parameters."""


@dataclass
class FeatureBlock:
    """Named group of columns with one vector per region."""

    name: str
    columns: list[str]
    vectors: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if self.name not in BLOCK_NAMES:
            raise FeatureError(f"unknown block name {self.name!r}")
        if len(set(self.columns)) != len(self.columns):
            raise FeatureError(f"duplicate column labels in block {self.name}")
        width = len(self.columns)
        for region_id, vec in self.vectors.items():
            if len(vec) != width:
                raise FeatureError(
                    f"block {self.name}: region {region_id} has width "
                    f"{len(vec)}, expected {width}"
                )

    @property
    def width(self) -> int:
        return len(self.columns)

    @property
    def regions(self) -> frozenset:
        return frozenset(self.vectors)


@dataclass
class FeatureMatrix:
    """Assembled region-by-feature matrix with block provenance."""

    blocks: list[FeatureBlock]
    region_ids: list[str]  # row order, sorted
    matrix: np.ndarray  # (n_regions, F) float64
    columns: list[str]  # namespaced block.column labels

    def row(self, region_id: str) -> np.ndarray:
        return self.matrix[self.region_ids.index(region_id)]

    def block_slice(self, name: str) -> slice:
        """Column span occupied by the named block."""
        start = 0
        for block in self.blocks:
            if block.name == name:
                return slice(start, start + block.width)
            start += block.width
        raise FeatureError(f"no block named {name!r} in matrix")


def baseline_block(region_thetas: Mapping[str, np.ndarray]) -> FeatureBlock:
    """Raw region topic distributions, one row per region."""
    if not region_thetas:
        raise FeatureError("no regions given")
    k = len(next(iter(region_thetas.values())))
    return FeatureBlock(
        name="baseline",
        columns=[f"t{i}" for i in range(k)],
        vectors={r: np.asarray(v, dtype=np.float64) for r, v in region_thetas.items()},
    )


def smooth_weighted(
    theta_r: np.ndarray,
    neighbor_thetas: Sequence[np.ndarray],
    multiplier: float,
) -> np.ndarray:
    """Blend a region's theta with its neighborhood mean.

    Returns (theta_r + m * mean(neighbors)) / (1 + m); with no neighbors the
    theta passes through unchanged. Preserves the probability simplex for any
    m >= 0.
    """
    if multiplier < 0:
        raise FeatureError(f"multiplier must be >= 0, got {multiplier}")
    theta_r = np.asarray(theta_r, dtype=np.float64)
    if not neighbor_thetas:
        return theta_r
    mean = np.mean(np.asarray(neighbor_thetas, dtype=np.float64), axis=0)
    if mean.shape != theta_r.shape:
        raise FeatureError("neighbor thetas must match theta_r length")
    return (theta_r + multiplier * mean) / (1.0 + multiplier)


def _neighbor_mean(
    region_id: str,
    region_thetas: Mapping[str, np.ndarray],
    adjacency: AdjacencyGraph,
) -> Optional[np.ndarray]:
    """Mean theta over a region's neighbors; None when it has none."""
    neighbor_ids = [n for n in adjacency.neighbors_of(region_id) if n in region_thetas]
    if not neighbor_ids:
        return None
    stack = np.asarray(
        [region_thetas[n] for n in sorted(neighbor_ids)], dtype=np.float64
    )
    return stack.mean(axis=0)


def smooth_avg_block(
    region_thetas: Mapping[str, np.ndarray],
    adjacency: AdjacencyGraph,
    multiplier: float,
) -> FeatureBlock:
    """Width-K block of neighborhood-blended thetas."""
    if multiplier < 0:
        raise FeatureError(f"multiplier must be >= 0, got {multiplier}")
    if not region_thetas:
        raise FeatureError("no regions given")
    k = len(next(iter(region_thetas.values())))
    vectors: dict[str, np.ndarray] = {}
    for region_id, theta in region_thetas.items():
        theta = np.asarray(theta, dtype=np.float64)
        mean = _neighbor_mean(region_id, region_thetas, adjacency)
        if mean is None:
            vectors[region_id] = theta
        else:
            vectors[region_id] = (theta + multiplier * mean) / (1.0 + multiplier)
    return FeatureBlock(
        name="smooth_avg",
        columns=[f"t{i}" for i in range(k)],
        vectors=vectors,
    )


def smooth_concat_block(
    region_thetas: Mapping[str, np.ndarray],
    adjacency: AdjacencyGraph,
    multiplier: float,
) -> FeatureBlock:
    """Width-2K block: own theta followed by m-scaled neighborhood mean.

    A region with no neighbors falls back to its own theta for the second
    half, keeping the block width uniform.
    """
    if multiplier < 0:
        raise FeatureError(f"multiplier must be >= 0, got {multiplier}")
    if not region_thetas:
        raise FeatureError("no regions given")
    k = len(next(iter(region_thetas.values())))
    vectors: dict[str, np.ndarray] = {}
    for region_id, theta in region_thetas.items():
        theta = np.asarray(theta, dtype=np.float64)
        mean = _neighbor_mean(region_id, region_thetas, adjacency)
        if mean is None:
            mean = theta
        vectors[region_id] = np.concatenate([theta, multiplier * mean])
    return FeatureBlock(
        name="smooth_concat",
        columns=[f"t{i}" for i in range(k)] + [f"n_t{i}" for i in range(k)],
        vectors=vectors,
    )


def slang_topic_block(
    slang_region_thetas: Mapping[str, np.ndarray],
    no_slang_regions: Sequence[str] = (),
) -> FeatureBlock:
    """Width K_s+1 block: slang-corpus thetas plus a no-slang indicator.

    Regions listed in ``no_slang_regions`` had zero slang tokens: they get a
    uniform theta and indicator 1; all others carry their inferred theta and
    indicator 0.
    """
    if not slang_region_thetas and not no_slang_regions:
        raise FeatureError("no regions given")
    if slang_region_thetas:
        k = len(next(iter(slang_region_thetas.values())))
    else:
        raise FeatureError("cannot size the block: every region lacks slang")
    vectors: dict[str, np.ndarray] = {}
    for region_id, theta in slang_region_thetas.items():
        vectors[region_id] = np.append(np.asarray(theta, dtype=np.float64), 0.0)
    uniform = np.full(k, 1.0 / k)
    for region_id in no_slang_regions:
        if region_id in vectors:
            raise FeatureError(f"region {region_id} listed both with and without slang")
        vectors[region_id] = np.append(uniform, 1.0)
    return FeatureBlock(
        name="slang_topics",
        columns=[f"t{i}" for i in range(k)] + ["no_slang"],
        vectors=vectors,
    )


def slang_ratio_block(
    records_by_region: Mapping[str, Sequence[TokenizedRecord]],
) -> FeatureBlock:
    """Width-2 block: mean and population std of per-record slang ratios."""
    if not records_by_region:
        raise FeatureError("no regions given")
    vectors: dict[str, np.ndarray] = {}
    for region_id, records in records_by_region.items():
        if not records:
            raise FeatureError(f"region {region_id} has no records")
        ratios = np.asarray([slang_ratio(r) for r in records], dtype=np.float64)
        vectors[region_id] = np.array([ratios.mean(), ratios.std()])
    return FeatureBlock(name="slang_ratio", columns=["mean", "std"], vectors=vectors)


def assemble(
    blocks: Sequence[FeatureBlock],
    block_weights: Optional[Mapping[str, float]] = None,
) -> FeatureMatrix:
    """Concatenate blocks column-wise into one matrix.

    Every block must cover the same region set; rows follow sorted region-id
    order. Each block's columns are scaled by its weight (default 1.0).
    """
    if not blocks:
        raise FeatureError("no blocks to assemble")
    names = [b.name for b in blocks]
    if len(set(names)) != len(names):
        raise FeatureError(f"duplicate block names: {names}")
    universe = blocks[0].regions
    for block in blocks[1:]:
        if block.regions != universe:
            only_first = sorted(universe - block.regions)
            only_other = sorted(block.regions - universe)
            raise FeatureError(
                f"region mismatch between blocks {blocks[0].name!r} and "
                f"{block.name!r}: missing from {block.name}={only_first}, "
                f"missing from {blocks[0].name}={only_other}"
            )
    weights = dict(block_weights or {})
    region_ids = sorted(universe)
    parts = []
    columns: list[str] = []
    for block in blocks:
        w = float(weights.get(block.name, 1.0))
        rows = np.asarray([block.vectors[r] for r in region_ids], dtype=np.float64)
        parts.append(w * rows)
        columns.extend(f"{block.name}.{c}" for c in block.columns)
    matrix = np.hstack(parts) if len(parts) > 1 else parts[0]
    return FeatureMatrix(
        blocks=list(blocks), region_ids=region_ids, matrix=matrix, columns=columns
    )


def write_features_csv(fm: FeatureMatrix, path: str) -> None:
    """CSV export: region_id column, then namespaced block.column headers."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region_id"] + fm.columns)
        for i, region_id in enumerate(fm.region_ids):
            writer.writerow([region_id] + [f"{x:.10f}" for x in fm.matrix[i]])


def load_features_csv(path: str) -> tuple[list[str], list[str], np.ndarray]:
    """Read a feature CSV back as (region_ids, columns, matrix)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "region_id":
            raise FeatureError(f"bad feature CSV header in {path}")
        columns = header[1:]
        region_ids: list[str] = []
        rows: list[list[float]] = []
        for row in reader:
            region_ids.append(row[0])
            rows.append([float(x) for x in row[1:]])
    return region_ids, columns, np.asarray(rows, dtype=np.float64)
