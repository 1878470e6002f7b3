import hashlib
import numpy as np


TASKS = ('regression', 'classification')


class Dataset:
    """
    Inputs paired with targets.

    Attributes:

        inputs (np.ndarray[float]) - N x D vectors or N x H x W rasters

        targets (np.ndarray) - N integer labels (classification) or N values (regression)

        task (str) - 'regression' or 'classification'

        metadata (dict) - generator name, seed and parameters

    Properties:

        size (int) - number of examples N

        input_shape (tuple) - shape of a single input

    """

    def __init__(self, inputs, targets, task, metadata=None):
        inputs = np.asarray(inputs, dtype=np.float64)
        targets = np.asarray(targets)
        if task not in TASKS:
            raise ValueError('Unknown task "{}".'.format(task))
        if inputs.ndim < 2 or len(inputs) < 1:
            raise ValueError('A dataset needs at least one example.')
        if len(targets) != len(inputs):
            raise ValueError('Got {:d} inputs and {:d} targets.'.format(len(inputs), len(targets)))
        if task == 'classification':
            if not np.all(targets == np.round(targets)) or np.any(targets < 0):
                raise ValueError('Class labels must be non-negative integers.')
            targets = targets.astype(int)
            n_classes = (metadata or {}).get('n_classes')
            if n_classes is not None and np.any(targets >= n_classes):
                raise ValueError('Class labels must lie in [0, {:d}).'.format(n_classes))
        else:
            targets = targets.astype(np.float64)
        self.inputs = inputs
        self.targets = targets
        self.task = task
        self.metadata = dict(metadata or {})

    def __repr__(self):
        return 'Dataset({:s}, N={:d}, shape={})'.format(self.task, self.size, self.input_shape)

    def __eq__(self, other):
        return (isinstance(other, Dataset)
                and self.task == other.task
                and np.array_equal(self.inputs, other.inputs)
                and np.array_equal(self.targets, other.targets))

    @property
    def size(self):
        return len(self.inputs)

    @property
    def input_shape(self):
        return self.inputs.shape[1:]

    @property
    def n_classes(self):
        """ Number of classes (classification only). """
        if self.task != 'classification':
            return None
        return int(self.metadata.get('n_classes', self.targets.max() + 1))

    def digest(self):
        """ Returns a SHA-256 hex digest of inputs and targets. """
        sha = hashlib.sha256()
        sha.update(self.inputs.tobytes())
        sha.update(self.targets.tobytes())
        return sha.hexdigest()

    def subset(self, indices):
        """ Returns the examples at <indices>. """
        return Dataset(self.inputs[indices], self.targets[indices], self.task, self.metadata)
