import pytest
from pytest import approx

from paddywatch.stats import BaselineStatistics, Stats, baseline_trials


def test_stats_summary():
    stats = Stats([0.5, 0.6, 0.55, 0.7, 0.65])
    assert stats.mean == approx(0.6)
    assert stats.median == approx(0.6)
    assert stats.mad == approx(0.05)
    assert stats.min == 0.5
    assert stats.max == 0.7
    assert stats.percentiles(0, 50, 100) == approx([0.5, 0.6, 0.7])


def test_stats_spread():
    stats = Stats([i / 100 for i in range(101)])
    assert stats.half_width == approx(0.475)
    assert stats.format_spread() == '50.00 (±47.5)'
    assert stats.get_percentile_rank(0.5) == approx(100 * 51 / 101)
    assert stats.get_percentile_rank(-1.0) == 0.0


def test_baseline_statistics_json(tmp_path):
    original = BaselineStatistics(0.5, Stats([0.4, 0.5]), Stats([0.45, 0.55]))
    filename = str(tmp_path / 'baseline.json')
    original.export_json(filename)
    restored = BaselineStatistics.from_json(filename)
    assert restored.expected_accuracy == 0.5
    assert restored.accuracy.samples == [0.4, 0.5]
    assert restored.f1_weighted.mean == approx(0.5)


def test_baseline_trials():
    train = ['PTR'] * 777 + ['DSR'] * 378
    test = ['PTR'] * 86 + ['DSR'] * 42
    stats = baseline_trials(train, test, ['PTR', 'DSR'], seed=1, trials=300)
    assert len(stats.accuracy.samples) == 300
    assert stats.expected_accuracy == approx(0.5595, abs=1e-3)
    assert stats.accuracy.mean == approx(stats.expected_accuracy, abs=0.02)
    assert 0.0 < stats.accuracy.half_width < 0.15
    again = baseline_trials(train, test, ['PTR', 'DSR'], seed=1, trials=300)
    assert again.accuracy.samples == stats.accuracy.samples


def test_baseline_trials_rejects():
    with pytest.raises(ValueError):
        baseline_trials(['DSR', 'PTR'], ['DSR'], ['PTR', 'DSR'], seed=0, trials=0)
