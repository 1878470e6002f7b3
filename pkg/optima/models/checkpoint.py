import json
from os.path import dirname
from os import makedirs

from ..distributions.gaussian import DiagonalGaussian
from ..augmentation.families import AugmentationFamily
from .network import ModelState


class Checkpoint:
    """
    Everything needed to evaluate or resume a trained run.

    Attributes:

        state (ModelState) - network parameters, including q(theta) for stochastic layers

        family (AugmentationFamily) - augmentation template

        q_phi (DiagonalGaussian) - variational distribution over phi

        step (int) - number of optimizer steps taken

        task (str) - 'regression' or 'classification'

        metadata (dict) - free-form provenance (seed, arm, version)

    """

    def __init__(self, state, family, q_phi, step=0, task='regression', metadata=None):
        self.state = state
        self.family = family
        self.q_phi = q_phi
        self.step = int(step)
        self.task = task
        self.metadata = metadata or {}

    def to_dict(self):
        return dict(state=self.state.to_dict(),
                    family=self.family.to_dict(),
                    q_phi=self.q_phi.to_dict(),
                    step=self.step,
                    task=self.task,
                    metadata=self.metadata)

    @classmethod
    def from_dict(cls, data):
        return cls(ModelState.from_dict(data['state']),
                   AugmentationFamily.from_dict(data['family']),
                   DiagonalGaussian.from_dict(data['q_phi']),
                   step=data.get('step', 0),
                   task=data.get('task', 'regression'),
                   metadata=data.get('metadata'))

    def save(self, path):
        """
        Save checkpoint as JSON.

        Args:

            path (str) - save path

        """
        if dirname(path):
            makedirs(dirname(path), exist_ok=True)
        with open(path, 'w') as file:
            json.dump(self.to_dict(), file, indent=1, sort_keys=True)

    @staticmethod
    def load(path):
        """
        Load checkpoint from JSON.

        Args:

            path (str) - load path

        Returns:

            checkpoint (Checkpoint)

        """
        with open(path, 'r') as file:
            return Checkpoint.from_dict(json.load(file))
