from collections import OrderedDict
import numpy as np

from ..distributions.noise import NoiseSource
from ..augmentation.families import default_family
from ..models.network import NetworkSpec
from ..models.prediction import predict
from ..elbo.objective import McConfig
from ..training.trainer import TrainConfig, train_full_vi
from ..metrics.calibration import PredictionLog, expected_calibration_error
from ..data.dataset import Dataset


def gaussian_mixture(n, seed, separation=1.5, dim=2):
    """
    Two-class Gaussian mixture with unit-variance classes centred at +/- separation / 2 along the first axis.

    Returns:

        dataset (Dataset)

    """
    noise = NoiseSource(seed).child('mixture')
    labels = np.arange(n) % 2
    inputs = noise.standard_normal((n, dim))
    inputs[:, 0] += np.where(labels == 1, separation / 2, -separation / 2)
    metadata = dict(generator='gaussian-mixture', seed=int(seed), n_classes=2)
    return Dataset(inputs, labels, 'classification', metadata)


def ece_scaling_diagnostic(k_values=(1, 2, 5, 10),
                           seeds=(0, 1, 2, 3, 4),
                           n_train=200,
                           n_test=1000,
                           dim=20,
                           epochs=200,
                           augmentation_std=0.1,
                           n_mc_samples=50):
    """
    ECE of a Bayesian logistic classifier trained on K replicated augmented copies of each example.

    Each K is trained with the replicated (sum of logs) estimator under a fixed additive-shift augmentation; K = 1 is the unreplicated baseline. The excess ECE(K) - ECE(1) is fitted to c sqrt(K - 1).

    Args:

        k_values (list of int) - replication counts

        seeds (list of int) - data and training seeds

        n_train (int) - training examples

        n_test (int) - test examples

        dim (int) - input dimension; replication overconfidence grows with the number of weights

        epochs (int) - full-batch epochs

        augmentation_std (float) - fixed additive-shift scale

        n_mc_samples (int) - predictive draws

    Returns:

        curve (list of OrderedDict) - K, mean ECE and per-seed ECE

        fit (OrderedDict) - fitted constant c and the sqrt(K - 1) reference per K

    """
    if not len(k_values):
        raise ValueError('k_values must be non-empty.')
    k_values = sorted(int(k) for k in k_values)
    per_k = OrderedDict((k, []) for k in k_values)
    for seed in seeds:
        train = gaussian_mixture(n_train, seed, dim=dim)
        test = gaussian_mixture(n_test, seed + 10**6, dim=dim)
        spec = NetworkSpec([dim, 2], head='categorical', bayes_last_layer=True)
        family, q_phi, _ = default_family('additive-shift', (dim,),
                                          sigma_init=augmentation_std, q_log_std=-20.)
        for k in k_values:
            config = TrainConfig(lr_net=5e-2, lr_aug=0., beta_net=1., beta_aug=0.,
                                 epochs=epochs, batch_size=n_train,
                                 mc=McConfig(s_gamma=1, k_naive=k),
                                 clip_norm=1e3, seed=seed, log_every=max(epochs, 1),
                                 estimator='replicated')
            state, _, _ = train_full_vi(train, spec, family, q_phi, config)
            probs = predict(state, test.inputs, n_samples=n_mc_samples,
                            noise=NoiseSource(seed).child('ece-predict'))
            ece, _ = expected_calibration_error(PredictionLog.classification(probs, test.targets))
            per_k[k].append(ece)

    curve = [OrderedDict(K=k, ece=float(np.mean(v)), per_seed=list(v)) for k, v in per_k.items()]
    base = curve[0]['ece']
    roots = np.sqrt(np.array(k_values, dtype=float) - k_values[0])
    excess = np.array([c['ece'] for c in curve]) - base
    c = float(np.dot(roots, excess) / np.dot(roots, roots)) if np.any(roots) else 0.
    fit = OrderedDict(c=c, reference=(c * roots).tolist())
    return curve, fit
