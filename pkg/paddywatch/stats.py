import math
import statistics
from typing import Any, List, Mapping, Optional, Sequence  # noqa

import numpy
import scipy.stats

from .dataformat import JSONDataObject
from .learn import baseline_proportional
from .metrics import classification_metrics, expected_baseline_accuracy


DEFAULT_BASELINE_TRIALS = 1000


class Stats(JSONDataObject):
    """
    Represents the empirical distribution of a single quantity.

    It keeps all the samples, e.g. accuracies of repeated seeded trials,
    so that spread and percentile rank can be computed later.

    Example: samples = [0.55, 0.58, 0.54]
    """
    _ATTRIBUTES = {
        'samples': (None, None),
    }

    def __init__(
                self,
                samples: Optional[Sequence[float]] = None,
                _restore_dict: Optional[Mapping[str, Any]] = None
            ) -> None:
        super().__init__()
        self.samples = list(samples) if samples is not None else []
        if _restore_dict is not None:
            self.restore(_restore_dict)

    @property
    def mean(self) -> float:
        return statistics.mean(self.samples)

    @property
    def median(self) -> float:
        return statistics.median(self.samples)

    @property
    def mad(self) -> float:
        mdev = [math.fabs(val - self.median) for val in self.samples]
        return statistics.median(mdev)

    @property
    def min(self) -> float:
        return min(self.samples)

    @property
    def max(self) -> float:
        return max(self.samples)

    def percentiles(self, *ranks: float) -> List[float]:
        return [float(value) for value in numpy.percentile(self.samples, ranks)]

    @property
    def half_width(self) -> float:
        """Half the width of the central 95 % interval."""
        low, high = self.percentiles(2.5, 97.5)
        return (high - low) / 2.0

    def get_percentile_rank(self, sample: float) -> float:
        return scipy.stats.percentileofscore(self.samples, sample, kind='weak')

    def format_spread(self, scale: float = 100.0) -> str:
        """'mean (±half-width)', by default in percent"""
        return '{:.2f} (±{:.1f})'.format(self.mean * scale, self.half_width * scale)


class BaselineStatistics(JSONDataObject):
    """Accuracy and weighted F1 of the proportional baseline over seeded trials."""
    _ATTRIBUTES = {
        'expected_accuracy': (None, None),
        'accuracy': (
            lambda x: Stats(_restore_dict=x),
            lambda x: x.save()),
        'f1_weighted': (
            lambda x: Stats(_restore_dict=x),
            lambda x: x.save()),
    }

    def __init__(
                self,
                expected_accuracy: Optional[float] = None,
                accuracy: Optional[Stats] = None,
                f1_weighted: Optional[Stats] = None,
                _restore_dict: Optional[Mapping[str, Any]] = None
            ) -> None:
        super().__init__()
        self.expected_accuracy = expected_accuracy
        self.accuracy = accuracy
        self.f1_weighted = f1_weighted
        if _restore_dict is not None:
            self.restore(_restore_dict)


def baseline_trials(
            train_labels: Sequence[str],
            test_labels: Sequence[str],
            classes: Sequence[str],
            seed: int,
            trials: int = DEFAULT_BASELINE_TRIALS
        ) -> BaselineStatistics:
    """Run the proportional baseline once per derived seed [seed, i]."""
    if trials < 1:
        raise ValueError('at least one baseline trial is required')
    accuracies, f1s = [], []
    for i in range(trials):
        trial_seed = numpy.random.SeedSequence([seed, i])
        predicted = baseline_proportional(train_labels, test_labels, trial_seed)
        report = classification_metrics(test_labels, predicted, classes)
        accuracies.append(report.overall_accuracy)
        f1s.append(report.f1_weighted)
    return BaselineStatistics(
        expected_accuracy=expected_baseline_accuracy(train_labels),
        accuracy=Stats(accuracies),
        f1_weighted=Stats(f1s))
