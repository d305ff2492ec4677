import pandas
import pytest
from pytest import approx

from paddywatch.ablation import window_dataset
from paddywatch.dataio import iter_series_csv, write_series_csv
from paddywatch.features import TemporalWindow
from paddywatch.learn import EnsembleModel, SchemaError, Task, train_gb, train_rf
from paddywatch.metrics import InputError, rbo
from paddywatch.scale import (
    M2_PER_ACRE, ComparisonReport, DistrictAggregator, DistrictSummary, ErrorLedger,
    LedgerEntry, PlotPrediction, PredictionWriter, aggregate_districts, batch_predict,
    check_ensemble, compare_records, ensemble_vote, iter_predictions_csv, read_summaries_csv,
    summaries_frame)
from paddywatch.timeseries import Band, PlotSeries


WINDOW = TemporalWindow(0, 228, 7)
RF_PARAMS = {'n_trees': 10, 'max_depth': 6, 'min_leaf': 1}
GB_PARAMS = {'n_trees': 10, 'max_depth': 2, 'learning_rate': 0.3}


@pytest.fixture(scope='module')
def models(small_scene):
    dataset = window_dataset(small_scene.plots, WINDOW)
    rf = train_rf(dataset, RF_PARAMS, seed=1, task=Task.SOWING)
    rf.validation_f1 = 0.8
    gb = train_gb(dataset, GB_PARAMS, seed=1, task=Task.SOWING)
    gb.validation_f1 = 0.9
    return [rf, gb]


def short_plot(plot_id):
    """three acquisitions are too few for a spline"""
    return PlotSeries(plot_id, 'D1', 5000.0, [0, 12, 24],
                      {Band.VV: [-10.0, -11.0, -12.0], Band.VH: [-18.0, -18.5, -19.0]})


@pytest.mark.parametrize('labels, f1, expected', [
    (['DSR', 'DSR', 'PTR'], [0.5, 0.6, 0.9], 'DSR'),
    (['DSR', 'PTR'], [0.7, 0.9], 'PTR'),
    (['DSR', 'PTR'], [0.9, 0.7], 'DSR'),
    (['PTR', 'DSR'], [0.8, 0.8], 'PTR'),
    (['PTR', 'DSR'], [None, 0.1], 'DSR'),
    (['CONTROL', 'DSR', 'AWD', 'AWD', 'DSR'], [0.9, 0.5, 0.6, 0.7, 0.8], 'DSR'),
])
def test_ensemble_vote(labels, f1, expected):
    assert ensemble_vote(labels, f1) == expected


def test_check_ensemble(models, caplog):
    check_ensemble(models, WINDOW)
    with pytest.raises(InputError):
        check_ensemble([], WINDOW)
    check_ensemble(models, TemporalWindow(31, 137, 7))
    assert 'was trained on' in caplog.text


def test_check_ensemble_rejects_mixed_tasks(small_scene, models):
    dataset = window_dataset(small_scene.plots, WINDOW)
    other = train_rf(dataset, RF_PARAMS, seed=1, task=Task.IRRIGATION)
    with pytest.raises(SchemaError):
        check_ensemble(models + [other], WINDOW)


def test_check_ensemble_rejects_two_orbit_model(models):
    paired = EnsembleModel(models[0].kind, Task.SOWING, models[0].hyperparams)
    paired.n_orbits = 2
    with pytest.raises(SchemaError) as excinfo:
        check_ensemble([paired], WINDOW)
    assert '2 orbits' in str(excinfo.value)


def test_batch_predict_order_and_ledger(small_scene, models):
    plots = list(small_scene.plots[:10]) + [short_plot('BAD')] + list(small_scene.plots[10:20])
    ledger = ErrorLedger()
    single = list(batch_predict(models, plots, WINDOW, ledger, workers=1, chunksize=2))
    assert [p.plot_id for p in single] == [p.plot_id for p in plots if p.plot_id != 'BAD']
    assert len(ledger) == 1
    assert ledger.entries[0].plot_id == 'BAD'
    assert 'InsufficientData' in ledger.entries[0].error
    for prediction in single:
        assert prediction.predicted_class in ('PTR', 'DSR')
        assert 0.0 <= prediction.score <= 1.0

    pooled_ledger = ErrorLedger()
    pooled = list(batch_predict(models, iter(plots), WINDOW, pooled_ledger, workers=2,
                                chunksize=1))
    assert pooled == single
    assert pooled_ledger.entries == ledger.entries


def test_batch_predict_from_csv_skips_malformed_plot(tmp_path, small_scene, models):
    filename = str(tmp_path / 'series.csv')
    write_series_csv(small_scene.plots[:6], filename)
    frame = pandas.read_csv(filename, dtype={'plot_id': str})
    first = frame[frame['plot_id'] == small_scene.plots[0].plot_id]
    bad = first[first['band'] == 'VV'].assign(plot_id='BAD')
    boundary = frame.index[frame['plot_id'] == small_scene.plots[3].plot_id][0]
    pandas.concat([frame.iloc[:boundary], bad, frame.iloc[boundary:]]).to_csv(
        filename, index=False)

    ledger = ErrorLedger()
    plots = iter_series_csv(filename, chunksize=50, on_error=ledger.add)
    predicted = list(batch_predict(models, plots, WINDOW, ledger, chunksize=2))
    assert [p.plot_id for p in predicted] == [p.plot_id for p in small_scene.plots[:6]]
    assert ledger.entries == [LedgerEntry('BAD', 'InvalidSeries: plot BAD: band VH missing')]


def test_batch_predict_small_batches(small_scene, models, monkeypatch):
    monkeypatch.setattr('paddywatch.scale.BATCH_CHUNKS', 1)
    plots = small_scene.plots[:7]
    predictions = list(batch_predict(models, plots, WINDOW, chunksize=2))
    assert [p.plot_id for p in predictions] == [p.plot_id for p in plots]


def test_ledger_csv(tmp_path):
    ledger = ErrorLedger()
    ledger.add('P1', 'InsufficientData: 3 samples')
    filename = str(tmp_path / 'ledger.csv')
    ledger.to_csv(filename)
    with open(filename) as f:
        assert f.read().splitlines() == ['plot_id,error', 'P1,InsufficientData: 3 samples']


def predictions():
    return [
        PlotPrediction('P1', 'North', 4000.0, 'DSR', 0.9),
        PlotPrediction('P2', 'North', 6000.0, 'PTR', 0.8),
        PlotPrediction('P3', 'South', 8000.0, 'DSR', 0.7),
        PlotPrediction('P4', 'East', 2000.0, 'DSR', 0.6),
        PlotPrediction('P5', 'West', 2500.0, 'PTR', 0.55),
        PlotPrediction('P6', 'East', 2000.0, 'DSR', 0.6),
    ]


@pytest.mark.parametrize('block', [1, 2, 100])
def test_prediction_writer_roundtrip(tmp_path, block):
    filename = str(tmp_path / 'predictions.csv')
    with PredictionWriter(filename, block=block) as writer:
        for prediction in predictions():
            writer.write(prediction)
    assert writer.count == 6
    assert list(iter_predictions_csv(filename, chunksize=4)) == predictions()


def test_prediction_writer_empty(tmp_path):
    filename = str(tmp_path / 'predictions.csv')
    with PredictionWriter(filename):
        pass
    with open(filename) as f:
        assert f.read().strip() == 'plot_id,district,area_m2,predicted_class,score'


def test_district_aggregator():
    summaries = aggregate_districts(predictions(), 'DSR')
    assert [s.district for s in summaries] == ['South', 'East', 'North', 'West']
    south, east, north, west = summaries
    assert (south.n_plots, south.n_positive) == (1, 1)
    assert east.positive_area_m2 == 4000.0
    assert north == DistrictSummary('North', 2, 1, 4000.0)
    assert west.positive_area_m2 == 0.0
    assert south.positive_acres == approx(8000.0 / M2_PER_ACRE)
    assert south.positive_acres == approx(1.977, abs=1e-3)


def test_district_aggregator_needs_district():
    aggregator = DistrictAggregator('DSR')
    with pytest.raises(InputError):
        aggregator.add(PlotPrediction('P1', '', 4000.0, 'DSR', 0.9))


def test_summaries_csv_roundtrip(tmp_path):
    summaries = aggregate_districts(predictions(), 'DSR')
    filename = str(tmp_path / 'districts.csv')
    summaries_frame(summaries).to_csv(filename, index=False)
    assert read_summaries_csv(filename) == summaries


def acreage_summaries(acres):
    return [DistrictSummary(district, 10, 5, value * M2_PER_ACRE)
            for district, value in acres.items()]


def test_compare_records_proportional():
    acres = {'A': 100.0, 'B': 400.0, 'C': 250.0, 'D': 50.0}
    records = {district: 2.0 * value for district, value in acres.items()}
    report = compare_records(acreage_summaries(acres), records, p=0.9)
    assert report.pearson == approx(1.0)
    assert report.rbo == approx(1.0)
    assert [row['district'] for row in report.rows] == ['B', 'C', 'A', 'D']
    assert all(row['estimate'] == 'under' for row in report.rows)
    assert report.rows[0]['difference'] == approx(-400.0)
    assert report.unmatched == []


def test_compare_records_reversed_and_unmatched(caplog):
    summaries = acreage_summaries({'A': 100.0, 'B': 200.0, 'C': 300.0, 'X': 10.0})
    records = {'A': 300.0, 'B': summaries[1].positive_acres, 'C': 100.0, 'Y': 5.0}
    report = compare_records(summaries, records)
    assert report.pearson == approx(-1.0)
    assert report.rbo == approx(rbo(['C', 'B', 'A'], ['A', 'B', 'C'], 0.95))
    assert report.rbo < 1.0
    assert report.unmatched == ['X', 'Y']
    assert 'present on one side only' in caplog.text
    frame = report.to_frame()
    assert list(frame['district']) == ['A', 'B', 'C']
    assert list(frame['estimate']) == ['under', 'equal', 'over']


def test_compare_records_needs_common_districts():
    with pytest.raises(InputError):
        compare_records(acreage_summaries({'A': 1.0, 'B': 2.0, 'C': 3.0}),
                        {'A': 1.0, 'B': 2.0, 'Z': 3.0})


def test_comparison_report_json(tmp_path):
    acres = {'A': 100.0, 'B': 400.0, 'C': 250.0}
    report = compare_records(acreage_summaries(acres), {'A': 90.0, 'B': 420.0, 'C': 200.0})
    filename = str(tmp_path / 'comparison.json')
    report.export_json(filename)
    restored = ComparisonReport.from_json(filename)
    assert restored.pearson == report.pearson
    assert restored.rbo == report.rbo
    assert restored.rows == report.rows
