"""Shared fixtures plus the acceptance-criteria summary hook.

Acceptance tests report through the ``acceptance`` fixture so the terminal
summary ends with one PASS/FAIL line per criterion, whether or not the test
body survived to its final assert.
"""

import numpy as np
import pytest
from hypothesis import settings

from geotopics.config import ExperimentConfig
from geotopics.geo import Region
from geotopics.synth import (
    WorldConfig,
    derive_seed,
    emit_world,
    generate_corpus,
    generate_rates,
    generate_world,
)

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []
_RECORDED_NODES: set[str] = set()


@pytest.fixture
def acceptance(request):
    """check(criterion, passed, detail) -> records a summary line, then asserts."""

    def check(criterion: str, passed: bool, detail: str = ""):
        _RECORDED_NODES.add(request.node.nodeid)
        ACCEPTANCE_RESULTS.append((criterion, bool(passed), detail))
        line = f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'}"
        if detail:
            line += f" ({detail})"
        print(line)
        assert passed, line

    return check


def pytest_runtest_logreport(report):
    # if an acceptance test dies before reaching its check, still emit a line
    if (
        report.when == "call"
        and report.failed
        and "test_acceptance" in report.nodeid
        and report.nodeid not in _RECORDED_NODES
    ):
        name = report.nodeid.rsplit("::", 1)[-1]
        ACCEPTANCE_RESULTS.append((name, False, "errored before the criterion check"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for criterion, ok, detail in ACCEPTANCE_RESULTS:
        line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f" — {detail}"
        terminalreporter.write_line(line)


# --------------------------------------------------------------------- worlds


def _grid_regions(n_rows=3, n_cols=3, origin_lat=35.0, origin_lon=-100.0, pop=10_000):
    """Unit-degree grid registry for geo and feature tests."""
    out = {}
    for r in range(n_rows):
        for c in range(n_cols):
            rid = f"g{r}{c}"
            out[rid] = Region(
                region_id=rid,
                lat=origin_lat + r,
                lon=origin_lon + c,
                population=pop,
            )
    return out


@pytest.fixture
def unit_grid():
    """Factory fixture: unit_grid(rows, cols) -> {region_id: Region}."""
    return _grid_regions


@pytest.fixture(scope="session")
def demo_world(tmp_path_factory):
    """Small end-to-end world shared by harness and CLI tests.

    16 regions, noiseless rates (so labels are learnable and every class has
    at least two training examples), a few tiny-population regions to exercise
    suppression, and some unlocated records to exercise assignment.
    """
    out_dir = tmp_path_factory.mktemp("demo_world")
    cfg = WorldConfig(
        n_rows=4,
        n_cols=4,
        n_topics=4,
        vocab_size=40,
        theta_concentration=0.3,
        smoothness=0.4,
        slang_mode="mirror",
        slang_rate_min=0.05,
        slang_rate_max=0.15,
        rate_base=20.0,
        rate_gain=120.0,
        rate_noise=0.0,
        suppressed_fraction=0.12,
    )
    world = generate_world(cfg, seed=5)
    years = [2014, 2015, 2016]
    records = generate_corpus(
        world,
        docs_per_region=6,
        tokens_per_doc=15,
        years=years,
        seed=derive_seed(5, "corpus"),
        unlocated_fraction=0.1,
    )
    rates = generate_rates(world, years, seed=derive_seed(5, "rates"))
    paths = emit_world(str(out_dir), world, records, rates)
    return {"world": world, "records": records, "rates": rates, "paths": paths}


@pytest.fixture
def demo_config(demo_world):
    """Fast single-cell ExperimentConfig over the demo world."""
    paths = demo_world["paths"]

    def make(**overrides):
        base = dict(
            records=paths["records"],
            regions=paths["regions"],
            rates=paths["rates"],
            lexicon=paths["lexicon"],
            outcome="synthetic",
            train_years=(2014, 2015),
            test_years=(2016,),
            k_list=(4,),
            radius_km_list=(120.0,),
            multiplier_list=(0.5,),
            feature_sets=("baseline",),
            classifiers=("gaussian_nb",),
            min_df=2,
            max_df_fraction=0.9,
            lda_sweeps=60,
            infer_sweeps=30,
            seed=5,
        )
        base.update(overrides)
        return ExperimentConfig(**base)

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
