from collections import OrderedDict
import numpy as np
from scipy.special import entr
from scipy.stats import rankdata


N_BINS = 10


class PredictionLog:
    """
    Predictions paired with their targets.

    Attributes:

        task (str) - 'classification' or 'regression'

        probs (np.ndarray[float]) - N x C class probabilities (classification)

        mean (np.ndarray[float]) - N x D predictive means (regression)

        variance (np.ndarray[float]) - N x D predictive variances (regression)

        targets (np.ndarray) - N labels or N x D values

    """

    def __init__(self, task, targets, probs=None, mean=None, variance=None):
        self.task = task
        self.targets = np.asarray(targets)
        self.probs = None if probs is None else np.asarray(probs, dtype=np.float64)
        self.mean = None if mean is None else np.asarray(mean, dtype=np.float64)
        self.variance = None if variance is None else np.asarray(variance, dtype=np.float64)

        if task == 'classification':
            if self.probs is None or self.probs.ndim != 2:
                raise ValueError('Classification logs need an N x C probability array.')
            if np.any(self.probs < 0) or np.any(np.abs(self.probs.sum(axis=1) - 1) > 1e-6):
                raise ValueError('Class probabilities must lie on the simplex.')
            n = len(self.probs)
        elif task == 'regression':
            if self.mean is None:
                raise ValueError('Regression logs need predictive means.')
            n = len(self.mean)
            if self.variance is not None and np.any(self.variance < 0):
                raise ValueError('Predictive variances must be non-negative.')
        else:
            raise ValueError('Unknown task "{}".'.format(task))
        if len(self.targets) != n:
            raise ValueError('Got {:d} predictions and {:d} targets.'.format(n, len(self.targets)))

    def __len__(self):
        return len(self.targets)

    @classmethod
    def classification(cls, probs, labels):
        return cls('classification', labels, probs=probs)

    @classmethod
    def regression(cls, mean, variance, targets):
        return cls('regression', targets, mean=mean, variance=variance)

    @property
    def confidence(self):
        return self.probs.max(axis=1)

    @property
    def correct(self):
        return np.argmax(self.probs, axis=1) == self.targets


class ReliabilityTable:
    """
    Confidence histogram over right-closed deciles (0, 0.1], ..., (0.9, 1].

    Attributes:

        edges (np.ndarray[float]) - upper bin edges

        counts (np.ndarray[int]) - examples per bin

        confidence (np.ndarray[float]) - mean confidence per bin (nan if empty)

        accuracy (np.ndarray[float]) - accuracy per bin (nan if empty)

    """

    def __init__(self, counts, confidence, accuracy, n_bins=N_BINS):
        self.edges = np.arange(1, n_bins + 1) / n_bins
        self.counts = np.asarray(counts, dtype=int)
        self.confidence = np.asarray(confidence, dtype=np.float64)
        self.accuracy = np.asarray(accuracy, dtype=np.float64)

    @classmethod
    def from_log(cls, log, n_bins=N_BINS):
        """ Bins the predictions of a classification <log>. """
        edges = np.arange(1, n_bins + 1) / n_bins
        bins = np.searchsorted(edges, log.confidence, side='left')
        # confidences rounding above 1 belong to the top bin
        bins = np.minimum(bins, n_bins - 1)
        counts = np.bincount(bins, minlength=n_bins)
        with np.errstate(invalid='ignore', divide='ignore'):
            confidence = np.bincount(bins, log.confidence, minlength=n_bins) / counts
            accuracy = np.bincount(bins, log.correct.astype(float), minlength=n_bins) / counts
        return cls(counts, confidence, accuracy, n_bins)

    def to_dict(self):
        return dict(edges=self.edges.tolist(),
                    counts=self.counts.tolist(),
                    confidence=[None if np.isnan(c) else c for c in self.confidence.tolist()],
                    accuracy=[None if np.isnan(a) else a for a in self.accuracy.tolist()])

    @classmethod
    def from_dict(cls, data):
        nan = lambda values: [np.nan if v is None else v for v in values]
        return cls(data['counts'], nan(data['confidence']), nan(data['accuracy']),
                   len(data['counts']))


def expected_calibration_error(log, n_bins=N_BINS):
    """
    Bin-weighted mean absolute gap between accuracy and confidence.

    Args:

        log (PredictionLog) - classification predictions

        n_bins (int) - number of confidence bins

    Returns:

        ece (float) - value in [0, 1]

        table (ReliabilityTable)

    """
    if log.task != 'classification':
        raise ValueError('ECE requires a classification log.')
    if len(log) == 0:
        raise ValueError('ECE requires at least one prediction.')
    table = ReliabilityTable.from_log(log, n_bins)
    occupied = table.counts > 0
    gaps = np.abs(table.accuracy[occupied] - table.confidence[occupied])
    ece = np.sum(table.counts[occupied] * gaps) / len(log)
    return float(ece), table


def predictive_entropy(probs):
    """
    Natural-log entropy of class probabilities.

    Args:

        probs (np.ndarray[float]) - simplex vector, or N x C rows

    Returns:

        entropy (float or np.ndarray[float])

    """
    probs = np.asarray(probs, dtype=np.float64)
    if np.any(probs < 0):
        raise ValueError('Probabilities must be non-negative.')
    entropy = np.sum(entr(probs), axis=-1)
    return float(entropy) if entropy.ndim == 0 else entropy


def auroc(scores_in, scores_out):
    """
    Rank-based area under the ROC curve for separating <scores_out> from <scores_in>.

    Returns:

        area (float) - P(out > in) + P(out == in) / 2
    """
    scores_in = np.asarray(scores_in, dtype=np.float64).ravel()
    scores_out = np.asarray(scores_out, dtype=np.float64).ravel()
    if scores_in.size == 0 or scores_out.size == 0:
        raise ValueError('AUROC requires non-empty score sets.')
    ranks = rankdata(np.concatenate((scores_in, scores_out)))
    n_in, n_out = scores_in.size, scores_out.size
    u = ranks[n_in:].sum() - n_out * (n_out + 1) / 2
    return float(u / (n_in * n_out))


def basic_metrics(log):
    """ Returns {'accuracy': ...} for classification or {'mse': ...} for regression. """
    if len(log) == 0:
        raise ValueError('Metrics require at least one prediction.')
    if log.task == 'classification':
        return OrderedDict(accuracy=float(np.mean(log.correct)))
    residual = log.mean.reshape(len(log), -1) - log.targets.reshape(len(log), -1)
    return OrderedDict(mse=float(np.mean(residual**2)))
