import math
import re

import numpy as np
import pytest

from bench_harness import (DEFAULT_SEEDS, PUBLISHED_LEVELS, PUBLISHED_MSE, CrossoverReport, Metric,
                           Reference, SweepConfig, SweepResult, SweepRow, TableFormat, aggregate,
                           crossover_analysis, emit_plot, emit_sweep_csv, emit_table,
                           published_result, run_sweep, synthetic_scene)
from errors import DimensionMismatch, DomainMismatch, InvalidVariance, MissingSeries, WindowTooLarge
from image_core import Domain, Image, histogram
from spatial_filters import FilterKind, WindowSpec

MEAN, MEDIAN = FilterKind.MEAN, FilterKind.MEDIAN


def _result(series, levels, metric=Metric.MSE):
    """SweepResult with one seed per cell from {filter: [value per level]}."""
    rows = []
    for kind, values in series.items():
        for level, value in zip(levels, values):
            mse = value if metric is Metric.MSE else 1.0
            psnr = value if metric is Metric.PSNR else 1.0
            rows.append(SweepRow(kind, level, 1, mse, psnr))
    return SweepResult(tuple(rows))


@pytest.fixture(scope="module")
def small_scene():
    return synthetic_scene(64, 64, seed=3)


# CONFIGURATION
def test_default_config():
    config = SweepConfig()
    assert config.levels == PUBLISHED_LEVELS and len(PUBLISHED_LEVELS) == 18
    assert config.seeds == DEFAULT_SEEDS
    assert config.window == WindowSpec(3)
    assert config.reference is Reference.CLEAN


@pytest.mark.parametrize("levels", [(), (0.0,), (0.5, 1.2), (0.2, 0.1), (0.1, 0.1)])
def test_invalid_levels(levels):
    with pytest.raises(InvalidVariance):
        SweepConfig(levels=levels)


def test_empty_or_repeated_seeds():
    with pytest.raises(ValueError):
        SweepConfig(seeds=())
    with pytest.raises(ValueError):
        SweepConfig(seeds=(1, 1))


def test_lists_are_frozen_to_tuples():
    config = SweepConfig(levels=[0.1, 0.2], seeds=[4])
    assert config.levels == (0.1, 0.2) and config.seeds == (4,)


# SWEEP
def test_single_cell_sweep(small_scene):
    config = SweepConfig(levels=(0.1,), filters=(MEAN,), seeds=(7,))
    result = run_sweep(small_scene, config)
    assert len(result.rows) == 1
    row = result.rows[0]
    assert (row.filter, row.variance, row.seed) == (MEAN, 0.1, 7)
    assert row.psnr == pytest.approx(10 * math.log10(255.0 ** 2 / row.mse), abs=1e-9)


def test_rows_are_ordered_and_complete(small_scene):
    config = SweepConfig(levels=(0.02, 0.2, 0.6), seeds=(1, 2))
    result = run_sweep(small_scene, config)
    keys = [(r.filter, r.variance, r.seed) for r in result.rows]
    assert keys == [(k, v, s) for k in (MEAN, MEDIAN) for v in (0.02, 0.2, 0.6) for s in (1, 2)]
    assert result.meta["config"]["seeds"] == [1, 2]


def test_sweep_is_deterministic_across_workers(small_scene):
    config = SweepConfig(levels=(0.05, 0.3, 0.9), seeds=(1, 2, 3))
    sequential = run_sweep(small_scene, config, workers=1)
    assert run_sweep(small_scene, config, workers=1) == sequential
    assert run_sweep(small_scene, config, workers=4).rows == sequential.rows


def test_noisy_reference_changes_scores(small_scene):
    clean = run_sweep(small_scene, SweepConfig(levels=(0.3,), seeds=(1,)))
    noisy = run_sweep(small_scene, SweepConfig(levels=(0.3,), seeds=(1,), reference=Reference.NOISY))
    assert [r.mse for r in clean.rows] != [r.mse for r in noisy.rows]


def test_sweep_needs_byte_image():
    with pytest.raises(DomainMismatch):
        run_sweep(Image(np.zeros((8, 8)), Domain.UNIT), SweepConfig(levels=(0.1,), seeds=(1,)))


def test_sweep_checks_window_up_front():
    with pytest.raises(WindowTooLarge):
        run_sweep(Image(np.zeros((3, 3), dtype=np.uint8)), SweepConfig(window=WindowSpec(7)))


# AGGREGATION AND TABLES
def test_aggregate_averages_over_seeds():
    rows = (SweepRow(MEAN, 0.01, 1, 10.0, 1.0), SweepRow(MEAN, 0.01, 2, 20.0, 1.0))
    assert aggregate(SweepResult(rows), Metric.MSE) == {MEAN: {0.01: 15.0}}


def test_csv_table_layout():
    rows = (SweepRow(MEAN, 0.01, 1, 10.0, 30.0), SweepRow(MEAN, 0.01, 2, 20.0, 30.0),
            SweepRow(MEAN, 0.02, 1, 12.0, 29.0), SweepRow(MEAN, 0.02, 2, 12.0, 29.0))
    table = emit_table(SweepResult(rows), Metric.MSE, TableFormat.CSV)
    assert table == "filter,0.01,0.02\nmean,15.00,12.00\n"


def test_markdown_table_layout():
    result = _result({MEAN: [1.0, 2.0, 3.0], MEDIAN: [2.0, 3.0, 4.0]}, [0.1, 0.2, 0.3])
    lines = emit_table(result, Metric.MSE, TableFormat.MARKDOWN).splitlines()
    assert len(lines) == 2 + 2
    for line in lines:
        assert len(line.strip("|").split("|")) == 3 + 1
    assert lines[0] == "| filter | 0.1 | 0.2 | 0.3 |"


def test_table_cells_round_half_away_from_zero():
    rows = (SweepRow(MEAN, 0.01, 1, 0.125, 1.0), SweepRow(MEAN, 0.01, 2, 0.125, 1.0))
    assert emit_table(SweepResult(rows), Metric.MSE).splitlines()[1] == "mean,0.13"


def test_infinite_psnr_cells():
    rows = (SweepRow(MEAN, 0.01, 1, 0.0, math.inf),)
    assert emit_table(SweepResult(rows), Metric.PSNR).splitlines()[1] == "mean,inf"
    assert emit_sweep_csv(SweepResult(rows)).splitlines()[1] == "mean,0.01,1,0,inf"


def test_sweep_csv():
    rows = (SweepRow(MEDIAN, 0.3, 2, 45.123456789, 31.5),)
    assert emit_sweep_csv(SweepResult(rows)) == "filter,variance,seed,mse,psnr\nmedian,0.3,2,45.1235,31.5\n"


# PLOTS
def test_plot_has_one_polyline_per_filter():
    result = _result({MEAN: [1.0, 2.0, 5.0], MEDIAN: [2.0, 3.0, 4.0]}, [0.1, 0.2, 0.3])
    svg = emit_plot(result, Metric.MSE)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    polylines = re.findall(r'<polyline data-filter="(\w+)" points="([^"]+)"', svg)
    assert [name for name, _ in polylines] == ["mean", "median"]
    for _, points in polylines:
        assert len(points.split()) == 3


def test_plot_is_deterministic():
    result = published_result()
    assert emit_plot(result, Metric.PSNR) == emit_plot(result, Metric.PSNR)
    assert emit_plot(result, Metric.PSNR, log_x=True) != emit_plot(result, Metric.PSNR)


def test_plot_tolerates_infinite_and_flat_series():
    result = _result({MEAN: [math.inf, 5.0], MEDIAN: [5.0, 5.0]}, [0.1, 0.2], Metric.PSNR)
    svg = emit_plot(result, Metric.PSNR)
    assert not re.search(r"\b(nan|inf)\b", svg)


# CROSSOVER
def test_crossover_between_last_pair():
    result = _result({MEAN: [1.0, 2.0, 5.0], MEDIAN: [2.0, 3.0, 4.0]}, [0.1, 0.2, 0.3])
    report = crossover_analysis(result, Metric.MSE)
    assert report == CrossoverReport(Metric.MSE, (0.2, 0.3), MEAN, MEDIAN)


def test_no_crossover_when_mean_always_wins():
    result = _result({MEAN: [1.0, 2.0, 3.0], MEDIAN: [2.0, 3.0, 4.0]}, [0.1, 0.2, 0.3])
    report = crossover_analysis(result, Metric.MSE)
    assert report.bracket is None
    assert "no crossover" in report.describe()


def test_psnr_winner_is_the_higher_value():
    result = _result({MEAN: [30.0, 10.0], MEDIAN: [20.0, 20.0]}, [0.1, 0.2], Metric.PSNR)
    report = crossover_analysis(result, Metric.PSNR)
    assert (report.winner_below, report.winner_above) == (MEAN, MEDIAN)


def test_crossover_needs_both_filters():
    with pytest.raises(MissingSeries):
        crossover_analysis(_result({MEAN: [1.0, 2.0]}, [0.1, 0.2]), Metric.MSE)


def test_emitters_reject_a_missing_cell():
    result = _result({MEAN: [1.0, 2.0], MEDIAN: [1.0]}, [0.1, 0.2])
    with pytest.raises(MissingSeries, match="median"):
        emit_table(result, Metric.MSE)
    with pytest.raises(MissingSeries, match="median"):
        emit_plot(result, Metric.MSE)


def test_published_mse_crossover():
    report = crossover_analysis(published_result(), Metric.MSE)
    assert report.bracket == (0.1, 0.2)
    assert (report.winner_below, report.winner_above) == (MEAN, MEDIAN)


def test_published_psnr_has_no_crossover():
    assert crossover_analysis(published_result(), Metric.PSNR).bracket is None


def test_published_tables_round_trip_through_emitters():
    table = emit_table(published_result(), Metric.MSE).splitlines()
    assert table[1].split(",")[10] == f"{PUBLISHED_MSE[MEAN][9]:.2f}"
    assert len(table[0].split(",")) == 19


def test_emitters_share_the_aggregation(small_scene):
    result = run_sweep(small_scene, SweepConfig(levels=(0.05, 0.5), seeds=(1, 2)))
    averages = aggregate(result, Metric.MSE)
    cells = emit_table(result, Metric.MSE).splitlines()[1].split(",")[1:]
    assert cells == [f"{averages[MEAN][v]:.2f}" for v in (0.05, 0.5)]


# SYNTHETIC SCENE
def test_scene_is_deterministic():
    assert synthetic_scene(96, 80, seed=5) == synthetic_scene(96, 80, seed=5)
    assert synthetic_scene(96, 80, seed=5) != synthetic_scene(96, 80, seed=6)


def test_scene_content(small_scene):
    hist = histogram(small_scene)
    assert small_scene.domain is Domain.BYTE
    assert hist.bins[255] > 0      # land and ships
    assert hist.bins[10] > 0       # slicks
    assert hist.bins[153] > 0      # wakes
    sea = small_scene.pixels[(small_scene.pixels > 40) & (small_scene.pixels < 120)]
    assert sea.size > 0 and 10 < sea.mean()


def test_scene_needs_room():
    with pytest.raises(DimensionMismatch):
        synthetic_scene(32, 64)


# ACCEPTANCE
def _spearman(x, y):
    rx = np.argsort(np.argsort(x))
    ry = np.argsort(np.argsort(y))
    return float(np.corrcoef(rx, ry)[0, 1])


@pytest.fixture(scope="module")
def default_sweep():
    return run_sweep(synthetic_scene(512, 512), SweepConfig(), workers=4)


@pytest.mark.slow
def test_default_sweep_cardinality(default_sweep):
    assert len(default_sweep.rows) == 2 * 18 * 5


@pytest.mark.slow
def test_mean_wins_at_low_noise_and_median_at_high_noise(default_sweep):
    averages = aggregate(default_sweep, Metric.MSE)
    for v in (0.01, 0.02, 0.03, 0.04, 0.05):
        assert averages[MEAN][v] < averages[MEDIAN][v], v
    for v in (0.4, 0.5, 0.6, 0.7, 0.8, 0.9):
        assert averages[MEDIAN][v] < averages[MEAN][v], v

    lo, hi = crossover_analysis(default_sweep, Metric.MSE).bracket
    assert 0.05 <= lo < hi <= 0.4


@pytest.mark.slow
def test_mse_grows_with_noise(default_sweep):
    averages = aggregate(default_sweep, Metric.MSE)
    for kind in (MEAN, MEDIAN):
        series = [averages[kind][v] for v in PUBLISHED_LEVELS]
        assert _spearman(PUBLISHED_LEVELS, series) >= 0.99, kind
