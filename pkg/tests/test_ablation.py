import math

import numpy
import pytest
from pytest import approx

from paddywatch.ablation import (
    PRESETS, TABLE2_PRESETS, AblationGrid, OrbitSet, custom_preset, run_ablation,
    window_dataset)
from paddywatch.features import N_FEATURES, TemporalWindow
from paddywatch.learn import ModelKind, Task
from paddywatch.synth import generate_scene, scene_config
from paddywatch.timeseries import Orbit, PracticeLabel


def test_presets():
    assert len(TABLE2_PRESETS) == 12
    assert [preset.row for preset in TABLE2_PRESETS] == list(range(1, 13))
    assert PRESETS['table2'] is TABLE2_PRESETS
    first, last = TABLE2_PRESETS[0], TABLE2_PRESETS[-1]
    assert (first.start_day, first.end_day) == (0, 106)
    assert (last.start_day, last.end_day) == (0, 228)
    assert TABLE2_PRESETS[1].start_day == 31
    for preset in TABLE2_PRESETS:
        window = preset.window()
        assert window.step_days == 7
        assert preset.window(4).length > window.length


def test_custom_preset():
    preset = custom_preset(TemporalWindow(31, 137, 10))
    assert preset.row == 1
    assert preset.window(10) == TemporalWindow(31, 137, 10)
    assert math.isnan(preset.lag_share)


def test_window_dataset(small_scene):
    window = TABLE2_PRESETS[2].window()
    dataset = window_dataset(small_scene.plots, window)
    assert dataset.X.shape == (36, N_FEATURES)
    assert dataset.window == window
    assert sorted(set(dataset.labels)) == ['AWD', 'CONTROL', 'DSR']


def test_run_ablation_rejects_unlabeled(small_scene):
    plots = list(small_scene.plots)
    plots[0] = plots[0].__class__(plots[0].plot_id, plots[0].district, plots[0].area_m2,
                                  plots[0].days, plots[0].bands)
    with pytest.raises(ValueError):
        run_ablation(plots, TABLE2_PRESETS[:1], [Task.SOWING], budget=1, seed=1)
    with pytest.raises(ValueError):
        run_ablation([], TABLE2_PRESETS[:1], [Task.SOWING], budget=1, seed=1)


@pytest.fixture(scope='module')
def grid(small_scene):
    return run_ablation(
        small_scene.plots, [TABLE2_PRESETS[0], TABLE2_PRESETS[11]],
        [Task.SOWING, Task.COMBINED], budget=1, seed=3, kinds=[ModelKind.RF, ModelKind.GB],
        steps=[7, 10], max_trees=5)


def test_run_ablation_grid(grid):
    assert len(grid.cells) == 2 * 2 * 2
    assert grid.n_test == 4
    assert [(c.preset.row, c.step_days, c.task) for c in grid.cells[:4]] == [
        (1, 7, Task.SOWING), (1, 7, Task.COMBINED),
        (1, 10, Task.SOWING), (1, 10, Task.COMBINED)]
    for cell in grid.cells:
        assert cell.report.n_test == 4
        assert 0.0 <= cell.report.f1_weighted <= 1.0
        assert cell.kind in (ModelKind.RF, ModelKind.GB)
    assert grid.get(12, Task.SOWING, 10).preset.dates == 'May 1 - Dec 15'
    with pytest.raises(KeyError):
        grid.get(5, Task.SOWING)


def test_ablation_frame(grid, tmp_path):
    frame = grid.to_frame()
    assert len(frame) == 4
    assert list(frame['row']) == [1, 1, 12, 12]
    assert list(frame['step']) == [7, 10, 7, 10]
    for column in ('f1_sowing', 'f1_combined', 'accuracy_sowing', 'kind_combined'):
        assert column in frame.columns
    assert frame['f1_sowing'].iloc[0] == grid.get(1, Task.SOWING, 7).report.f1_weighted
    filename = str(tmp_path / 'ablation.csv')
    grid.export_csv(filename)
    with open(filename) as f:
        assert f.readline().startswith('row,dates,window_start,window_end,step')


def test_ablation_json(grid, tmp_path):
    filename = str(tmp_path / 'ablation.json')
    grid.export_json(filename)
    restored = AblationGrid.from_json(filename)
    assert restored.n_test == grid.n_test
    assert len(restored.cells) == len(grid.cells)
    for original, cell in zip(grid.cells, restored.cells):
        assert cell.preset == original.preset
        assert cell.task == original.task
        assert cell.report.f1_weighted == approx(original.report.f1_weighted)


def test_run_ablation_workers_agree(small_scene, grid):
    pooled = run_ablation(
        small_scene.plots, [TABLE2_PRESETS[0], TABLE2_PRESETS[11]],
        [Task.SOWING, Task.COMBINED], budget=1, seed=3, kinds=[ModelKind.RF, ModelKind.GB],
        steps=[7, 10], max_trees=5, workers=2)
    assert [c.report.confusion for c in pooled.cells] == [c.report.confusion for c in grid.cells]


@pytest.fixture(scope='module')
def two_orbit_scene(cfg):
    counts = {practice: 12 for practice in PracticeLabel}
    config = scene_config(cfg)._replace(orbits=(Orbit.ASCENDING, Orbit.DESCENDING))
    return generate_scene(counts, config, seed=11)


def test_window_dataset_orbits(small_scene, two_orbit_scene):
    window = TABLE2_PRESETS[11].window()
    series = two_orbit_scene.series()
    ascending = window_dataset(series, window)
    descending = window_dataset(series, window, orbit_set=OrbitSet.DESCENDING)
    both = window_dataset(series, window, orbit_set=OrbitSet.BOTH)
    assert ascending.X.shape == descending.X.shape == (36, N_FEATURES)
    assert both.X.shape == (36, 2 * N_FEATURES)
    assert both.n_orbits == 2
    assert both.plot_ids == ascending.plot_ids == [plot.plot_id for plot in small_scene.plots]
    assert both.X[:, :N_FEATURES] == approx(ascending.X, nan_ok=True)
    assert both.X[:, N_FEATURES:] == approx(descending.X, nan_ok=True)
    assert ascending.X == approx(window_dataset(small_scene.plots, window).X, nan_ok=True)
    assert not numpy.allclose(ascending.X, descending.X, equal_nan=True)
    with pytest.raises(ValueError) as excinfo:
        window_dataset(small_scene.plots, window, orbit_set=OrbitSet.BOTH)
    assert 'no descending series' in str(excinfo.value)


@pytest.fixture(scope='module')
def orbit_grid(two_orbit_scene):
    return run_ablation(
        two_orbit_scene.series(), [TABLE2_PRESETS[11]], [Task.SOWING], budget=1, seed=3,
        kinds=[ModelKind.RF], max_trees=5, orbit_sets=list(OrbitSet))


def test_run_ablation_orbit_axis(small_scene, orbit_grid):
    assert [cell.orbit for cell in orbit_grid.cells] == list(OrbitSet)
    assert orbit_grid.n_test == 4
    frame = orbit_grid.to_frame()
    assert list(frame['orbit']) == ['ascending', 'descending', 'both']
    assert list(frame.columns[:6]) == [
        'row', 'dates', 'window_start', 'window_end', 'step', 'orbit']
    plain = run_ablation(
        small_scene.plots, [TABLE2_PRESETS[11]], [Task.SOWING], budget=1, seed=3,
        kinds=[ModelKind.RF], max_trees=5)
    assert orbit_grid.get(12, Task.SOWING, orbit=OrbitSet.ASCENDING).report.confusion == \
        plain.cells[0].report.confusion
    assert orbit_grid.get(12, Task.SOWING, orbit=OrbitSet.BOTH).orbit == OrbitSet.BOTH


def test_ablation_json_orbits(orbit_grid, tmp_path):
    filename = str(tmp_path / 'ablation.json')
    orbit_grid.export_json(filename)
    restored = AblationGrid.from_json(filename)
    assert [cell.orbit for cell in restored.cells] == list(OrbitSet)

    data = orbit_grid.save()
    for item in data['cells']:
        del item['orbit']
    legacy = AblationGrid(_restore_dict=data)
    assert {cell.orbit for cell in legacy.cells} == {OrbitSet.ASCENDING}


def test_run_ablation_needs_every_orbit(small_scene):
    with pytest.raises(ValueError):
        run_ablation(small_scene.plots, TABLE2_PRESETS[:1], [Task.SOWING], budget=1, seed=1,
                     orbit_sets=[OrbitSet.DESCENDING])
