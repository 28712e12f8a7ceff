"""Outcome-rate tables, small-count suppression, and std-dev rate binning.

Rates are binned into six ordinal labels by z-score against training-year
statistics; suppression removes rows too small to report before any modeling.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

N_LABELS = 6
# z-score bin edges; bin b covers [edge[b-1], edge[b])
BIN_EDGES = (-2.0, -1.0, 0.0, 1.0, 2.0)

SUPPRESS_MIN_COUNT = 5
SUPPRESS_MIN_POPULATION = 100


class LabelError(ValueError):
    """Invalid rate table or label inputs."""


@dataclass(frozen=True)
class RateRow:
    region_id: str
    year: int
    outcome: str
    rate: float  # per 100,000
    count: int
    population: int

    def __post_init__(self) -> None:
        if self.rate < 0:
            raise LabelError(f"negative rate for {self.region_id}/{self.year}")
        if self.population < 0 or self.count < 0:
            raise LabelError(f"negative count/population for {self.region_id}")

    @property
    def suppressed(self) -> bool:
        return (
            self.count < SUPPRESS_MIN_COUNT
            or self.population < SUPPRESS_MIN_POPULATION
        )


@dataclass
class RateTable:
    rows: list[RateRow]

    def __post_init__(self) -> None:
        seen = set()
        for row in self.rows:
            key = (row.region_id, row.year, row.outcome)
            if key in seen:
                raise LabelError(f"duplicate rate row {key}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.rows)

    def filter(
        self,
        years: Optional[Iterable[int]] = None,
        outcome: Optional[str] = None,
    ) -> "RateTable":
        year_set = set(years) if years is not None else None
        kept = [
            r
            for r in self.rows
            if (year_set is None or r.year in year_set)
            and (outcome is None or r.outcome == outcome)
        ]
        return RateTable(kept)

    def outcomes(self) -> list[str]:
        return sorted({r.outcome for r in self.rows})

    def years(self) -> list[int]:
        return sorted({r.year for r in self.rows})


@dataclass(frozen=True)
class BinningStats:
    """Training-rate mean and population std reused for later years."""

    mean: float
    std: float
    years: tuple[int, ...]
    outcome: str
    n_values: int


@dataclass
class LabelVector:
    """Region-id to ordinal label in 0..5, plus the binning provenance."""

    labels: dict[str, int]
    stats: BinningStats

    def __post_init__(self) -> None:
        for region_id, label in self.labels.items():
            if label not in range(N_LABELS):
                raise LabelError(f"label {label} for {region_id} outside 0..5")


def apply_suppression(table: RateTable) -> tuple[RateTable, RateTable]:
    """Split a table into (retained, suppressed) partitions.

    A row is suppressed when count < 5 or population < 100; both cutoffs are
    strict, so count 5 with population 100 is retained.
    """
    retained = [r for r in table.rows if not r.suppressed]
    suppressed = [r for r in table.rows if r.suppressed]
    return RateTable(retained), RateTable(suppressed)


def fit_binning(
    rates: Sequence[float], years: Iterable[int] = (), outcome: str = ""
) -> BinningStats:
    """Mean and population standard deviation of the training rates."""
    if len(rates) < 2:
        raise LabelError("need at least 2 rates to fit binning")
    arr = np.asarray(rates, dtype=np.float64)
    return BinningStats(
        mean=float(arr.mean()),
        std=float(arr.std()),
        years=tuple(sorted(years)),
        outcome=outcome,
        n_values=len(arr),
    )


def bin_value(rate: float, stats: BinningStats) -> int:
    """Label for one rate under fitted statistics.

    Bins split at z = -2, -1, 0, 1, 2 with open tails; a zero-spread fit maps
    every rate to label 3.
    """
    if stats.std == 0.0:
        return 3
    z = (rate - stats.mean) / stats.std
    label = 0
    for edge in BIN_EDGES:
        if z >= edge:
            label += 1
        else:
            break
    return label


def bin_values(rates: Sequence[float], stats: BinningStats) -> list[int]:
    return [bin_value(r, stats) for r in rates]


def bin_by_stddev(
    region_rates: Mapping[str, float],
    stats: Optional[BinningStats] = None,
    outcome: str = "",
) -> LabelVector:
    """Bin a region->rate map into six labels.

    When ``stats`` is omitted the statistics are fit on these same rates
    (training mode); pass the training stats explicitly to bin held-out years
    without leakage.
    """
    if stats is None:
        if len(region_rates) < 2:
            raise LabelError("need at least 2 rates to fit binning")
        stats = fit_binning(list(region_rates.values()), outcome=outcome)
    labels = {r: bin_value(v, stats) for r, v in region_rates.items()}
    return LabelVector(labels=labels, stats=stats)


def ordinal_mse(predicted: Sequence[int], true: Sequence[int]) -> float:
    """Mean squared difference of label indices."""
    if len(predicted) != len(true):
        raise LabelError(
            f"length mismatch: {len(predicted)} predictions vs {len(true)} labels"
        )
    if len(true) == 0:
        raise LabelError("cannot score zero examples")
    p = np.asarray(predicted, dtype=np.float64)
    t = np.asarray(true, dtype=np.float64)
    return float(np.mean((p - t) ** 2))


def rate_mse(predicted: Sequence[float], true: Sequence[float]) -> float:
    """Secondary metric: mean squared error on raw rates."""
    if len(predicted) != len(true):
        raise LabelError("length mismatch in rate_mse")
    p = np.asarray(predicted, dtype=np.float64)
    t = np.asarray(true, dtype=np.float64)
    return float(np.mean((p - t) ** 2))


_RATE_HEADER = ["region_id", "year", "outcome", "rate", "count", "population"]


def load_rates_csv(path: str) -> RateTable:
    """Read a rate table CSV with header region_id,year,outcome,rate,count,population."""
    rows: list[RateRow] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [
            c.strip() for c in reader.fieldnames
        ] != _RATE_HEADER:
            raise LabelError(
                f"bad rates header in {path}: expected {','.join(_RATE_HEADER)}"
            )
        for lineno, raw in enumerate(reader, start=2):
            try:
                rows.append(
                    RateRow(
                        region_id=raw["region_id"],
                        year=int(raw["year"]),
                        outcome=raw["outcome"],
                        rate=float(raw["rate"]),
                        count=int(raw["count"]),
                        population=int(raw["population"]),
                    )
                )
            except (TypeError, ValueError, LabelError) as exc:
                raise LabelError(f"{path}:{lineno}: {exc}") from exc
    return RateTable(rows)


def write_rates_csv(table: RateTable, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_RATE_HEADER)
        for r in table.rows:
            writer.writerow(
                [r.region_id, r.year, r.outcome, f"{r.rate:.6f}", r.count, r.population]
            )


def write_suppression_csv(table: RateTable, path: str) -> None:
    """Diagnostics CSV for every input row with its suppression flag."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_RATE_HEADER + ["suppressed"])
        for r in table.rows:
            writer.writerow(
                [
                    r.region_id,
                    r.year,
                    r.outcome,
                    f"{r.rate:.6f}",
                    r.count,
                    r.population,
                    1 if r.suppressed else 0,
                ]
            )
