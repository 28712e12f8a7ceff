"""Rate tables, suppression, six-bin std-dev labels, and ordinal metrics."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geotopics.labels import (
    BinningStats,
    LabelError,
    LabelVector,
    RateRow,
    RateTable,
    apply_suppression,
    bin_by_stddev,
    bin_value,
    bin_values,
    fit_binning,
    load_rates_csv,
    ordinal_mse,
    rate_mse,
    write_rates_csv,
    write_suppression_csv,
)


def row(rid="r1", year=2014, outcome="hiv", rate=10.0, count=50, population=10000):
    return RateRow(rid, year, outcome, rate, count, population)


# ------------------------------------------------------------------- binning


def test_fit_binning_population_std_oracle():
    # frozen: mean 16.666..., population std 19.7203 (not the n-1 sample std)
    rates = [0.0, 10.0, 10.0, 10.0, 10.0, 60.0]
    stats = fit_binning(rates, years=[2014], outcome="hiv")
    assert stats.mean == pytest.approx(16.6667, abs=1e-4)
    assert stats.std == pytest.approx(19.7203, abs=1e-4)
    assert stats.n_values == 6
    assert bin_values(rates, stats) == [2, 2, 2, 2, 2, 5]


def test_bin_value_edge_and_tail_placement():
    stats = BinningStats(mean=0.0, std=1.0, years=(), outcome="", n_values=2)
    # bins: (-inf,-2) (-2,-1) (-1,0) (0,1) (1,2) (2,inf); edges round up
    assert bin_value(-3.0, stats) == 0
    assert bin_value(-2.0, stats) == 1
    assert bin_value(-1.5, stats) == 1
    assert bin_value(-1.0, stats) == 2
    assert bin_value(0.0, stats) == 3
    assert bin_value(0.999, stats) == 3
    assert bin_value(1.0, stats) == 4
    assert bin_value(2.0, stats) == 5
    assert bin_value(99.0, stats) == 5


def test_zero_spread_maps_everything_to_three():
    stats = fit_binning([7.0, 7.0, 7.0])
    assert stats.std == 0.0
    assert bin_values([0.0, 7.0, 1e9], stats) == [3, 3, 3]


def test_fit_binning_needs_two_rates():
    with pytest.raises(LabelError, match="at least 2"):
        fit_binning([5.0])
    with pytest.raises(LabelError, match="at least 2"):
        bin_by_stddev({"r1": 5.0})


def test_bin_by_stddev_training_mode():
    lv = bin_by_stddev({"a": 0.0, "b": 10.0, "c": 10.0, "d": 10.0, "e": 10.0, "f": 60.0})
    assert lv.labels == {"a": 2, "b": 2, "c": 2, "d": 2, "e": 2, "f": 5}
    assert lv.stats.n_values == 6


def test_bin_by_stddev_reuses_training_stats():
    train = bin_by_stddev({"a": 0.0, "b": 20.0})  # mean 10, std 10
    held_out = bin_by_stddev({"x": 35.0, "y": -15.0}, stats=train.stats)
    # z=2.5 -> top bin; z=-2.5 -> bottom bin, under *training* statistics
    assert held_out.labels == {"x": 5, "y": 0}
    assert held_out.stats is train.stats


def test_binning_is_affine_invariant():
    rng = np.random.default_rng(7)
    rates = rng.uniform(0, 100, size=40)
    base = bin_values(rates, fit_binning(rates))
    shifted = rates * 3.0 + 12.0
    again = bin_values(shifted, fit_binning(shifted))
    assert base == again


def test_normal_rates_fill_middle_bins():
    # z-bins of a standard normal: middle two bins hold ~34.1% each
    rng = np.random.default_rng(11)
    rates = rng.normal(50.0, 8.0, size=10_000)
    labels = np.asarray(bin_values(rates, fit_binning(rates)))
    fractions = np.bincount(labels, minlength=6) / labels.size
    assert fractions[2] == pytest.approx(0.341, abs=0.05)
    assert fractions[3] == pytest.approx(0.341, abs=0.05)
    assert fractions[0] < 0.05 and fractions[5] < 0.05


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50))
def test_labels_always_in_range(rates):
    stats = fit_binning(rates)
    for label in bin_values(rates, stats):
        assert 0 <= label <= 5


def test_label_vector_validates_range():
    stats = BinningStats(0.0, 1.0, (), "", 2)
    with pytest.raises(LabelError, match="outside 0..5"):
        LabelVector(labels={"r": 6}, stats=stats)


# --------------------------------------------------------------- suppression


def test_suppression_boundary_grid():
    # strict cutoffs: count < 5 OR population < 100 suppresses
    cases = [
        (5, 100, False),
        (4, 100, True),
        (5, 99, True),
        (4, 99, True),
        (1000, 1_000_000, False),
    ]
    for count, pop, want in cases:
        assert row(count=count, population=pop).suppressed is want


def test_apply_suppression_partitions():
    table = RateTable(
        [
            row(rid="keep", count=5, population=100),
            row(rid="low_count", count=4, population=100),
            row(rid="low_pop", count=50, population=99),
        ]
    )
    kept, dropped = apply_suppression(table)
    assert [r.region_id for r in kept.rows] == ["keep"]
    assert sorted(r.region_id for r in dropped.rows) == ["low_count", "low_pop"]


# ------------------------------------------------------------------- metrics


def test_ordinal_mse_hand_value():
    assert ordinal_mse([0, 2, 5], [1, 2, 3]) == pytest.approx(5.0 / 3.0)
    assert ordinal_mse([3], [3]) == 0.0


def test_ordinal_mse_rejects_bad_shapes():
    with pytest.raises(LabelError, match="length mismatch"):
        ordinal_mse([1, 2], [1])
    with pytest.raises(LabelError, match="zero examples"):
        ordinal_mse([], [])


def test_rate_mse_hand_value():
    assert rate_mse([1.0, 3.0], [0.0, 0.0]) == pytest.approx(5.0)
    with pytest.raises(LabelError, match="length mismatch"):
        rate_mse([1.0], [])


# ----------------------------------------------------------------- RateTable


def test_rate_table_rejects_duplicates():
    with pytest.raises(LabelError, match="duplicate rate row"):
        RateTable([row(), row()])
    # same region/year, different outcome is fine
    RateTable([row(outcome="hiv"), row(outcome="flu")])


def test_rate_table_filter_and_enums():
    table = RateTable(
        [
            row(rid="a", year=2014, outcome="hiv"),
            row(rid="a", year=2015, outcome="hiv"),
            row(rid="a", year=2014, outcome="flu"),
        ]
    )
    assert len(table.filter(years=[2014])) == 2
    assert len(table.filter(outcome="hiv")) == 2
    assert len(table.filter(years=[2015], outcome="flu")) == 0
    assert table.outcomes() == ["flu", "hiv"]
    assert table.years() == [2014, 2015]


def test_rate_row_validation():
    with pytest.raises(LabelError, match="negative rate"):
        row(rate=-0.1)
    with pytest.raises(LabelError, match="negative count/population"):
        row(count=-1)


# ----------------------------------------------------------------------- csv


def test_rates_csv_round_trip(tmp_path):
    table = RateTable(
        [
            row(rid="r1", year=2014, rate=12.345678),
            row(rid="r2", year=2015, rate=0.0, count=0, population=500),
        ]
    )
    p = tmp_path / "rates.csv"
    write_rates_csv(table, str(p))
    back = load_rates_csv(str(p))
    assert len(back) == 2
    assert back.rows[0].rate == pytest.approx(12.345678, abs=1e-6)
    assert back.rows[1].count == 0
    assert back.rows[0].region_id == "r1"


def test_load_rates_csv_rejects_bad_header(tmp_path):
    p = tmp_path / "rates.csv"
    p.write_text("region_id,year,rate\nr1,2014,5.0\n")
    with pytest.raises(LabelError, match="bad rates header"):
        load_rates_csv(str(p))


def test_load_rates_csv_reports_line_numbers(tmp_path):
    p = tmp_path / "rates.csv"
    p.write_text(
        "region_id,year,outcome,rate,count,population\n"
        "r1,2014,hiv,5.0,10,1000\n"
        "r2,not_a_year,hiv,5.0,10,1000\n"
    )
    with pytest.raises(LabelError, match="rates.csv:3"):
        load_rates_csv(str(p))


def test_suppression_csv_flags(tmp_path):
    table = RateTable(
        [row(rid="ok", count=9, population=500), row(rid="tiny", count=2, population=500)]
    )
    p = tmp_path / "suppression.csv"
    write_suppression_csv(table, str(p))
    lines = p.read_text().strip().splitlines()
    assert lines[0].endswith(",suppressed")
    flags = {ln.split(",")[0]: ln.split(",")[-1] for ln in lines[1:]}
    assert flags == {"ok": "0", "tiny": "1"}
