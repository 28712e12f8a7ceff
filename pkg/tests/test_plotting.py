"""Plot artifacts: aggregation CSV and the dependency-free SVG chart."""

import math
import xml.etree.ElementTree as ET

import pytest

from geotopics.harness import ReportRow
from geotopics.plotting import PlotError, emit_plot, write_plot_csv, write_plot_svg


def rr(feature_set="baseline", multiplier=0.0, mse=1.0, accuracy=0.5, error=None,
       k=5, radius_km=100.0):
    return ReportRow(
        feature_set=feature_set,
        k=k,
        radius_km=radius_km,
        multiplier=multiplier,
        classifier="gaussian_nb",
        accuracy=accuracy,
        mse=mse,
        n_regions=30,
        runtime_ms=1.0,
        error=error,
    )


def test_plot_csv_values_and_order(tmp_path):
    rows = [
        rr("smooth", multiplier=1.0, mse=0.25),
        rr("baseline", multiplier=0.0, mse=1.0),
        rr("smooth", multiplier=0.0, mse=0.5),
    ]
    p = tmp_path / "plot.csv"
    write_plot_csv(rows, str(p))
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "feature_set,multiplier,mse"
    # series sorted by name, points sorted by x, 6-decimal values
    assert lines[1:] == [
        "baseline,0,1.000000",
        "smooth,0,0.500000",
        "smooth,1,0.250000",
    ]


def test_plot_csv_averages_duplicate_x(tmp_path):
    rows = [
        rr("baseline", multiplier=0.0, mse=1.0),
        rr("baseline", multiplier=0.0, mse=3.0),
    ]
    p = tmp_path / "plot.csv"
    write_plot_csv(rows, str(p))
    assert p.read_text().strip().splitlines()[1] == "baseline,0,2.000000"


def test_plot_skips_failed_and_nan_rows(tmp_path):
    rows = [
        rr("baseline", multiplier=0.0, mse=1.0),
        rr("baseline", multiplier=1.0, mse=math.nan, error="stage boom"),
        rr("baseline", multiplier=2.0, mse=math.nan),
    ]
    p = tmp_path / "plot.csv"
    write_plot_csv(rows, str(p))
    assert len(p.read_text().strip().splitlines()) == 2  # header + one point


def test_plot_rejects_empty_input(tmp_path):
    with pytest.raises(PlotError, match="no successful rows"):
        write_plot_csv([rr(error="x")], str(tmp_path / "plot.csv"))
    with pytest.raises(PlotError, match="x_axis must be"):
        write_plot_csv([rr()], str(tmp_path / "plot.csv"), x_axis="classifier")
    with pytest.raises(PlotError, match="metric must be"):
        write_plot_csv([rr()], str(tmp_path / "plot.csv"), metric="runtime_ms")


def test_svg_is_valid_xml_with_expected_series(tmp_path):
    rows = [
        rr("baseline", multiplier=m, mse=1.0) for m in (0.0, 0.5, 1.0)
    ] + [
        rr("smooth", multiplier=m, mse=0.5 + m) for m in (0.0, 0.5, 1.0)
    ]
    p = tmp_path / "plot.svg"
    write_plot_svg(rows, str(p), title="demo chart")
    root = ET.parse(str(p)).getroot()
    assert root.tag.endswith("svg")
    ns = {"s": "http://www.w3.org/2000/svg"}
    polylines = root.findall(".//s:polyline", ns)
    circles = root.findall(".//s:circle", ns)
    texts = [t.text for t in root.findall(".//s:text", ns)]
    assert len(polylines) == 2  # one per series
    assert len(circles) == 6  # one per point
    assert "demo chart" in texts
    assert "baseline" in texts and "smooth" in texts


def test_svg_single_point_series_draws_no_polyline(tmp_path):
    p = tmp_path / "plot.svg"
    write_plot_svg([rr("baseline", multiplier=0.5, mse=1.0)], str(p))
    root = ET.parse(str(p)).getroot()
    ns = {"s": "http://www.w3.org/2000/svg"}
    assert root.findall(".//s:polyline", ns) == []
    assert len(root.findall(".//s:circle", ns)) == 1


def test_svg_supports_alternate_axes(tmp_path):
    rows = [rr(k=5, accuracy=0.5), rr(k=10, accuracy=0.75)]
    p = tmp_path / "plot.svg"
    write_plot_svg(rows, str(p), x_axis="k", metric="accuracy")
    text = p.read_text()
    assert "accuracy by k" in text


def test_emit_plot_writes_both_files(tmp_path):
    rows = [rr(multiplier=0.0), rr(multiplier=1.0, mse=2.0)]
    csv_path = tmp_path / "plot.csv"
    svg_path = tmp_path / "plot.svg"
    emit_plot(rows, str(csv_path), str(svg_path))
    assert csv_path.exists() and svg_path.exists()
    assert csv_path.read_text().startswith("feature_set,multiplier,mse")
    ET.parse(str(svg_path))  # parses cleanly
