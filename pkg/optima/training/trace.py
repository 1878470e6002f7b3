from os.path import dirname
from os import makedirs
import numpy as np
import pandas as pd


BASE_COLUMNS = ('step', 'epoch', 'total', 'data_fit', 'kl_theta', 'kl_phi',
                'dphi_mean', 'grad_norm', 'train_loss')


class TrainTrace:
    """
    Logged training trajectory.

    Attributes:

        columns (list of str) - column names; augmentation columns are prefixed 'aug_'

        records (list of dict) - one record per logged step

    """

    def __init__(self, family=None, test_metric=None):
        """
        Instantiate empty trace.

        Args:

            family (AugmentationFamily) - defines the augmentation summary columns

            test_metric (str) - name of an optional test metric column

        """
        self.columns = list(BASE_COLUMNS)
        if family is not None:
            self.columns += ['aug_' + key for key in family.summary()]
        if test_metric is not None:
            self.columns.append('test_' + test_metric)
        self.records = []

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        return isinstance(other, TrainTrace) and self.to_frame().equals(other.to_frame())

    @property
    def last(self):
        return self.records[-1] if self.records else None

    def log(self, step, epoch, estimate, grad_norm, family, q_phi, train_loss, test_value=None):
        """
        Append a record.

        Args:

            step (int) - optimizer step

            epoch (int) - epoch number

            estimate (ElboEstimate) - objective at this step

            grad_norm (float) - global gradient norm before clipping

            family (AugmentationFamily) - template

            q_phi (DiagonalGaussian) - current q(phi)

            train_loss (float) - negative data fit per example

            test_value (float) - optional test metric

        """
        if self.records and step <= self.records[-1]['step']:
            raise ValueError('Trace steps must increase.')
        record = dict(step=int(step),
                      epoch=int(epoch),
                      total=estimate.total,
                      data_fit=estimate.data_fit,
                      kl_theta=estimate.kl_theta,
                      kl_phi=estimate.kl_phi,
                      dphi_mean=estimate.dphi_mean,
                      grad_norm=float(grad_norm),
                      train_loss=float(train_loss))
        if q_phi.dim:
            for key, value in family.summary(q_phi.mean).items():
                record['aug_' + key] = value
        for column in self.columns:
            if column.startswith('test_'):
                record[column] = np.nan if test_value is None else float(test_value)
        self.records.append(record)

    def to_frame(self):
        """ Returns trace as a DataFrame. """
        return pd.DataFrame(self.records, columns=self.columns)

    def save(self, path):
        """ Write trace to CSV. """
        if dirname(path):
            makedirs(dirname(path), exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format='%.17g')

    @staticmethod
    def load(path):
        """ Read trace from CSV. """
        frame = pd.read_csv(path, float_precision='round_trip')
        trace = TrainTrace()
        trace.columns = list(frame.columns)
        trace.records = frame.to_dict('records')
        return trace
