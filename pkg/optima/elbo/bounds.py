import numpy as np


def complexity_term(kl_total, n, delta=0.05):
    """ Returns sqrt((KL + log(2 sqrt(n) / delta)) / (2n)). """
    if int(n) != n or n < 1:
        raise ValueError('n must be a positive integer.')
    if not 0 < delta < 1:
        raise ValueError('delta must lie in (0, 1).')
    if kl_total < 0:
        raise ValueError('KL must be non-negative.')
    return float(np.sqrt((kl_total + np.log(2 * np.sqrt(n) / delta)) / (2 * n)))


def pac_bayes_bound(empirical_risk, kl_total, n, delta=0.05):
    """
    PAC-Bayes upper bound on the expected risk of the posterior predictor.

    Args:

        empirical_risk (float) - bounded empirical risk in [0, 1]

        kl_total (float) - KL(q || p) of all variational parameters

        n (int) - dataset size

        delta (float) - confidence parameter in (0, 1)

    Returns:

        bound (float) - empirical_risk + sqrt((KL + log(2 sqrt(n) / delta)) / (2n))

    """
    return float(empirical_risk) + complexity_term(kl_total, n, delta)


def bounded_risk(task, predictions, targets):
    """
    Empirical risk in [0, 1].

    Args:

        task (str) - 'classification' (0-1 error of class probabilities) or 'regression' (squared error clipped to [0, 1])

        predictions (np.ndarray[float]) - class probabilities or predictive means

        targets (np.ndarray) - labels or values

    Returns:

        risk (float)

    """
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets)
    if task == 'classification':
        return float(np.mean(np.argmax(predictions, axis=-1) != targets))
    errors = (predictions.reshape(len(targets), -1) - targets.reshape(len(targets), -1))**2
    return float(np.mean(np.clip(errors.mean(axis=-1), 0., 1.)))
