"""
Synthetic labeled scenes: per-practice backscatter trajectories, planting
dates, revisit schedules and square plot polygons.

The latent trajectories are stylized, not physical. Magnitudes are
calibration constants from the [templates] config section; only their
orderings, periods and separability matter to the tests built on them.

Latent model for a plot planted on day p, with t = day - p:
    canopy(t) = logistic growth after planting, decaying after harvest
    wet(t)    = standing water (CONTROL: flooded for flood_days,
                AWD: flooded, then wet/dry cycles from awd_start_days,
                DSR: never flooded)
    VV = base_vv + vv_growth * canopy - flood_drop * wet * (1 - att * canopy)
         - sowing dip (DSR only; drops at p and recovers within the dip duration)
    VH = base_vh + vh_growth * canopy - vh_flood_drop * wet * (1 - att * canopy)
"""

import logging
import math
from multiprocessing import pool
from typing import (  # noqa
    Any, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple)

import numpy
import scipy.special
import scipy.stats

from .timeseries import Band, Orbit, PlotSeries, PracticeLabel, SEASON_LAST_DAY
from .typing import DayOffset, District, FloatArray
from .zonal import Grid, PlotPolygon, rasterize


LATTICE_CELL_M = 340.0  # exceeds the side of the largest (10 ha) square plot
LATTICE_MARGIN_M = 10.0
HARVEST_DECAY_DAYS = 3.0
# e-folding count of the sowing dip over its duration (about 5 % left at the end)
DIP_DECAY = 3.0
MIN_AWD_CYCLE_DAYS = 2.0
ASSIGNMENT_STREAM = 1
PLOT_STREAM = 0
REPORT_CHUNKS = 10000


class PracticeTemplate(NamedTuple):
    practice: PracticeLabel
    base_vv_db: float = -12.0
    base_vh_db: float = -20.0
    flood_drop_db: float = 6.0
    vh_flood_drop_db: float = 2.0
    flood_days: float = 100.0
    sowing_dip_db: float = 6.0
    sowing_dip_duration_days: float = 14.0
    vv_growth_db: float = 3.0
    vh_growth_db: float = 7.0
    growth_midpoint_days: float = 45.0
    growth_rate_days: float = 8.0
    harvest_after_days: float = 120.0
    canopy_attenuation: float = 0.5
    awd_start_days: float = 30.0
    awd_cycle_days: float = 7.0
    awd_cycle_jitter_days: float = 1.0
    awd_wet_fraction: float = 0.5
    awd_shape: str = 'square'

    def validate(self) -> None:
        if self.practice == PracticeLabel.AWD and not 4 <= self.awd_cycle_days <= 10:
            raise ValueError('AWD cycle must lie within [4, 10] days, got {}'.format(
                self.awd_cycle_days))


class PlantingModel(NamedTuple):
    means: Mapping[PracticeLabel, float]
    stds: Mapping[PracticeLabel, float]
    span_start: int = 10
    span_days: int = 110
    align_planting_dates: bool = False
    aligned_day: Optional[int] = None

    @property
    def span_end(self) -> int:
        return self.span_start + self.span_days


class RevisitSchedule(NamedTuple):
    start_day: DayOffset = 0
    end_day: DayOffset = SEASON_LAST_DAY
    period_days: int = 12
    dropped: frozenset = frozenset({5})  # acquisition indices; index 5 is day 60

    def days(self) -> List[DayOffset]:
        if self.period_days < 1:
            raise ValueError('revisit period must be at least 1 day')
        count = (self.end_day - self.start_day) // self.period_days + 1
        return [self.start_day + i * self.period_days
                for i in range(count) if i not in self.dropped]

    def shifted(self, offset_days: int) -> 'RevisitSchedule':
        return self._replace(start_day=self.start_day + offset_days)


class Scene(NamedTuple):
    """Plots by index; `descending` is either empty or aligned with `plots`."""
    plots: List[PlotSeries]
    polygons: List[PlotPolygon]
    descending: Sequence[PlotSeries] = ()

    def series(self) -> List[PlotSeries]:
        """Every series, the orbits of one plot next to each other."""
        if not self.descending:
            return list(self.plots)
        return [series for pair in zip(self.plots, self.descending) for series in pair]


def sample_planting(
            model: PlantingModel,
            practice: PracticeLabel,
            rng_seed: Any
        ) -> DayOffset:
    """Truncated-normal planting day within [span_start, span_start + span_days]."""
    low, high = model.span_start, model.span_end
    if model.align_planting_dates:
        day = model.aligned_day
        if day is None:
            day = model.means[PracticeLabel.CONTROL]
        return int(min(max(round(day), low), high))
    mean, std = model.means[practice], model.stds[practice]
    if std <= 0:
        return int(min(max(round(mean), low), high))
    rng = numpy.random.default_rng(rng_seed)
    draw = scipy.stats.truncnorm.rvs(
        (low - mean) / std, (high - mean) / std, loc=mean, scale=std, random_state=rng)
    return int(min(max(round(float(draw)), low), high))


def _cycle_edges(
            template: PracticeTemplate,
            rng: numpy.random.Generator
        ) -> FloatArray:
    """Start of every AWD cycle (days after planting) up to the end of flooding."""
    edges = [template.awd_start_days]
    jitter = template.awd_cycle_jitter_days
    while edges[-1] < template.flood_days:
        length = template.awd_cycle_days
        if jitter > 0:
            length += rng.uniform(-jitter, jitter)
        edges.append(edges[-1] + max(length, MIN_AWD_CYCLE_DAYS))
    return numpy.array(edges)


def _wetness(template: PracticeTemplate, t: FloatArray, edges: FloatArray) -> FloatArray:
    if template.practice == PracticeLabel.DSR:
        return numpy.zeros_like(t)
    wet = ((t >= 0) & (t < template.flood_days)).astype(float)
    if template.practice == PracticeLabel.CONTROL:
        return wet
    if len(edges) < 2:
        return wet
    cycling = (t >= template.awd_start_days) & (t < template.flood_days)
    k = numpy.clip(numpy.searchsorted(edges, t, side='right') - 1, 0, len(edges) - 2)
    phase = (t - edges[k]) / (edges[k + 1] - edges[k])
    if template.awd_shape == 'sine':
        level = 0.5 * (1.0 + numpy.cos(2.0 * math.pi * phase))
    else:
        level = (phase < template.awd_wet_fraction).astype(float)
    return numpy.where(cycling, level, wet)


def latent_trajectory(
            template: PracticeTemplate,
            planting_day: DayOffset,
            days: Sequence[float],
            cycle_edges: Optional[FloatArray] = None
        ) -> Tuple[FloatArray, FloatArray]:
    """Noise-free (VV, VH) in dB at the given days."""
    t = numpy.asarray(days, dtype=float) - planting_day
    if cycle_edges is None:
        cycle_edges = _cycle_edges(template._replace(awd_cycle_jitter_days=0.0), None)
    canopy = (scipy.special.expit((t - template.growth_midpoint_days)
                                  / template.growth_rate_days)
              * scipy.special.expit(-(t - template.harvest_after_days) / HARVEST_DECAY_DAYS))
    flooding = _wetness(template, t, cycle_edges) * (
        1.0 - template.canopy_attenuation * canopy)
    vv = (template.base_vv_db + template.vv_growth_db * canopy
          - template.flood_drop_db * flooding)
    vh = (template.base_vh_db + template.vh_growth_db * canopy
          - template.vh_flood_drop_db * flooding)
    if template.practice == PracticeLabel.DSR:
        decay = DIP_DECAY / template.sowing_dip_duration_days
        vv = vv - numpy.where(
            t >= 0, template.sowing_dip_db * numpy.exp(-decay * numpy.maximum(t, 0.0)), 0.0)
    return vv, vh


def generate_plot(
            template: PracticeTemplate,
            planting_day: DayOffset,
            schedule: RevisitSchedule,
            speckle_sigma_db: float,
            rng_seed: Any,
            plot_id: str = 'P000000',
            district: District = '',
            area_m2: float = 10000.0,
            orbit: Orbit = Orbit.ASCENDING,
            speckle_seed: Any = None
        ) -> PlotSeries:
    """
    One labeled plot series. AWD cycle jitter is drawn from `rng_seed`;
    speckle comes from the same stream unless `speckle_seed` is given, so
    two orbits of one field can share their water cycles.
    """
    if not 0 <= planting_day <= SEASON_LAST_DAY:
        raise ValueError('planting day {} outside the season'.format(planting_day))
    template.validate()
    rng = numpy.random.default_rng(rng_seed)
    edges = _cycle_edges(template, rng)
    days = schedule.days()
    vv, vh = latent_trajectory(template, planting_day, days, edges)
    if speckle_seed is not None:
        rng = numpy.random.default_rng(speckle_seed)
    if speckle_sigma_db > 0:
        vv = vv + rng.normal(0.0, speckle_sigma_db, size=vv.size)
        vh = vh + rng.normal(0.0, speckle_sigma_db, size=vh.size)
    return PlotSeries(plot_id, district, area_m2, days, {Band.VV: vv, Band.VH: vh},
                      label=template.practice, planting_day=planting_day, orbit=orbit)


class SceneConfig(NamedTuple):
    templates: Mapping[PracticeLabel, PracticeTemplate]
    planting: PlantingModel
    schedule: RevisitSchedule
    speckle_sigma_db: float
    districts: Sequence[District]
    district_dsr_weights: Optional[Sequence[float]] = None
    min_area_m2: float = 2000.0
    max_area_m2: float = 100000.0
    awd_cycle_min_days: float = 4.0
    awd_cycle_max_days: float = 10.0
    orbits: Tuple[Orbit, ...] = (Orbit.ASCENDING,)
    descending_offset_days: int = 6
    descending_dip_scale: float = 0.5


def scene_config(cfg: Mapping[str, Mapping[str, Any]]) -> SceneConfig:
    """Build generator settings from a parsed configuration."""
    tcfg = dict(cfg['templates'])
    cycle_min = tcfg.pop('awd_cycle_min_days')
    cycle_max = tcfg.pop('awd_cycle_max_days')
    templates = {
        practice: PracticeTemplate(
            practice=practice, awd_cycle_days=(cycle_min + cycle_max) / 2.0, **tcfg)
        for practice in PracticeLabel}
    pcfg = cfg['planting']
    planting = PlantingModel(
        means={PracticeLabel.DSR: pcfg['dsr_mean'],
               PracticeLabel.CONTROL: pcfg['control_mean'],
               PracticeLabel.AWD: pcfg['awd_mean']},
        stds={PracticeLabel.DSR: pcfg['dsr_std'],
              PracticeLabel.CONTROL: pcfg['control_std'],
              PracticeLabel.AWD: pcfg['awd_std']},
        span_start=pcfg['span_start'],
        span_days=pcfg['span_days'],
        align_planting_dates=pcfg['align_planting_dates'],
        aligned_day=pcfg.get('aligned_day'))
    scfg = cfg['schedule']
    schedule = RevisitSchedule(
        scfg['start_day'], scfg['end_day'], scfg['period_days'],
        frozenset(scfg.get('dropped', [])))
    return SceneConfig(
        templates, planting, schedule, cfg['noise']['speckle_sigma_db'],
        cfg['scene']['districts'], cfg['scene'].get('district_dsr_weights'),
        cfg['scene']['min_area_m2'], cfg['scene']['max_area_m2'],
        cycle_min, cycle_max,
        tuple(Orbit(name) for name in scfg.get('orbits', [Orbit.ASCENDING.value])),
        scfg.get('descending_offset_days', 6), scfg.get('descending_dip_scale', 0.5))


def assign_practices(
            counts: Mapping[PracticeLabel, int],
            n_districts: int,
            district_dsr_weights: Optional[Sequence[float]],
            seed: int
        ) -> List[PracticeLabel]:
    """
    Practice of every plot index with exact class counts.

    Plot i lies in district i mod n_districts. DSR plots are placed by
    weighted random ordering (key u ** (1 / w)), so districts with larger
    weights receive proportionally more DSR plots.
    """
    n = sum(counts.values())
    rng = numpy.random.default_rng(numpy.random.SeedSequence([seed, ASSIGNMENT_STREAM]))
    weights = numpy.ones(n_districts)
    if district_dsr_weights is not None:
        weights = numpy.asarray(district_dsr_weights, dtype=float)
    plot_weights = weights[numpy.arange(n) % n_districts]
    keys = rng.random(n) ** (1.0 / plot_weights)
    order = numpy.argsort(-keys, kind='stable')
    n_dsr = counts.get(PracticeLabel.DSR, 0)
    practices = [PracticeLabel.CONTROL] * n
    for i in order[:n_dsr]:
        practices[i] = PracticeLabel.DSR
    rest = rng.permutation(numpy.sort(order[n_dsr:]))
    n_control = counts.get(PracticeLabel.CONTROL, 0)
    for i in rest[n_control:]:
        practices[i] = PracticeLabel.AWD
    return practices


def square_polygon(
            plot_id: str,
            district: District,
            index: int,
            n_columns: int,
            area_m2: float,
            rng: numpy.random.Generator
        ) -> PlotPolygon:
    """Axis-aligned square inside lattice cell `index`."""
    side = math.sqrt(area_m2)
    slack = max(LATTICE_CELL_M - side - 2 * LATTICE_MARGIN_M, 0.0)
    x0 = (index % n_columns) * LATTICE_CELL_M + LATTICE_MARGIN_M + rng.uniform(0, slack)
    y0 = (index // n_columns) * LATTICE_CELL_M + LATTICE_MARGIN_M + rng.uniform(0, slack)
    ring = [(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side), (x0, y0)]
    return PlotPolygon(plot_id, district, ring)


# worker state, set by the pool initializer
__scene_cfg = None  # type: Optional[SceneConfig]
__scene_seed = 0
__scene_columns = 1


def worker_init(config: SceneConfig, seed: int, n_columns: int) -> None:
    global __scene_cfg
    global __scene_seed
    global __scene_columns
    __scene_cfg = config
    __scene_seed = seed
    __scene_columns = n_columns


def worker_generate(
            args: Tuple[int, PracticeLabel]
        ) -> Tuple[PlotSeries, PlotPolygon, Optional[PlotSeries]]:
    """Generate plot `index`; all randomness derives from (seed, index)."""
    index, practice = args
    config = __scene_cfg
    assert config is not None
    plan_seed, plot_seed, descending_seed = numpy.random.SeedSequence(
        [__scene_seed, PLOT_STREAM, index]).spawn(3)
    rng = numpy.random.default_rng(plan_seed)
    planting_day = sample_planting(config.planting, practice, rng)
    template = config.templates[practice]
    if practice == PracticeLabel.AWD:
        template = template._replace(awd_cycle_days=float(
            rng.uniform(config.awd_cycle_min_days, config.awd_cycle_max_days)))
    area = math.exp(rng.uniform(math.log(config.min_area_m2), math.log(config.max_area_m2)))
    plot_id = 'P{:06d}'.format(index)
    district = config.districts[index % len(config.districts)]
    polygon = square_polygon(plot_id, district, index, __scene_columns, area, rng)
    plot = generate_plot(template, planting_day, config.schedule, config.speckle_sigma_db,
                         plot_seed, plot_id, district, polygon.area_m2)
    descending = None
    if Orbit.DESCENDING in config.orbits:
        faded = template._replace(
            sowing_dip_db=template.sowing_dip_db * config.descending_dip_scale)
        descending = generate_plot(
            faded, planting_day, config.schedule.shifted(config.descending_offset_days),
            config.speckle_sigma_db, plot_seed, plot_id, district, polygon.area_m2,
            Orbit.DESCENDING, descending_seed)
    return plot, polygon, descending


def _collect_scene(
            results: Iterable[Tuple[PlotSeries, PlotPolygon, Optional[PlotSeries]]]
        ) -> Scene:
    plots, polygons, descending = [], [], []
    for i, (plot, polygon, other) in enumerate(results, start=1):
        plots.append(plot)
        polygons.append(polygon)
        if other is not None:
            descending.append(other)
        if i % REPORT_CHUNKS == 0:
            logging.info('%d plots generated', i)
    return Scene(plots, polygons, descending)


def generate_scene(
            counts: Mapping[PracticeLabel, int],
            config: SceneConfig,
            seed: int,
            workers: int = 1
        ) -> Scene:
    """
    Labeled plots and their polygons, ordered by plot index, plus the
    descending series of every plot when the config asks for that orbit.

    The output depends only on (counts, config, seed), never on the
    number of workers.
    """
    for practice, count in counts.items():
        if count < 1:
            raise ValueError('at least one {} plot is required'.format(practice.value))
    practices = assign_practices(
        counts, len(config.districts), config.district_dsr_weights, seed)
    n_columns = int(math.ceil(math.sqrt(len(practices))))
    tasks = list(enumerate(practices))
    if workers <= 1:
        worker_init(config, seed, n_columns)
        return _collect_scene(map(worker_generate, tasks))
    with pool.Pool(processes=workers, initializer=worker_init,
                   initargs=(config, seed, n_columns)) as p:
        chunksize = max(1, len(tasks) // (4 * workers))
        return _collect_scene(p.imap(worker_generate, tasks, chunksize=chunksize))


def render_grids(
            scene: Scene,
            pixel_size_m: float = 10.0
        ) -> Dict[Band, List[Tuple[DayOffset, Grid]]]:
    """
    Paint every plot's per-acquisition values into float32 grids.

    Pixels whose centers fall inside a plot carry that plot's value;
    everything else is NO_DATA.
    """
    minx = min(p.geometry.bounds[0] for p in scene.polygons)
    miny = min(p.geometry.bounds[1] for p in scene.polygons)
    maxx = max(p.geometry.bounds[2] for p in scene.polygons)
    maxy = max(p.geometry.bounds[3] for p in scene.polygons)
    origin = (math.floor(minx / pixel_size_m) * pixel_size_m,
              math.ceil(maxy / pixel_size_m) * pixel_size_m)
    width = int(math.ceil((maxx - origin[0]) / pixel_size_m))
    height = int(math.ceil((origin[1] - miny) / pixel_size_m))
    days = scene.plots[0].days
    for plot in scene.plots:
        if not numpy.array_equal(plot.days, days):
            raise ValueError('all plots must share one acquisition schedule')

    frame = Grid(numpy.full((height, width), numpy.nan, dtype=numpy.float32),
                 pixel_size_m, origin)
    stacks = {band: numpy.full((len(days), height, width), numpy.nan, dtype=numpy.float32)
              for band in (Band.VV, Band.VH)}
    for plot, polygon in zip(scene.plots, scene.polygons):
        mask = rasterize(polygon, frame)
        for band, stack in stacks.items():
            stack[:, mask] = plot.bands[band].astype(numpy.float32)[:, None]
    return {
        band: [(int(day), Grid(stack[j], pixel_size_m, origin)) for j, day in enumerate(days)]
        for band, stack in stacks.items()}


def log_planting_summary(plots: Sequence[PlotSeries]) -> None:
    """Log per-practice planting-date statistics and the overall span."""
    by_label = {}  # type: Dict[PracticeLabel, List[int]]
    for plot in plots:
        if plot.label is not None and plot.planting_day is not None:
            by_label.setdefault(plot.label, []).append(plot.planting_day)
    for label in PracticeLabel:
        days = by_label.get(label)
        if not days:
            continue
        logging.info('%-8s planting day: mean %6.1f, std %5.1f, min %3d, max %3d (%d plots)',
                     label.value, numpy.mean(days), numpy.std(days), min(days), max(days),
                     len(days))
    all_days = [day for days in by_label.values() for day in days]
    if all_days:
        logging.info('planting dates span %d days', max(all_days) - min(all_days))
