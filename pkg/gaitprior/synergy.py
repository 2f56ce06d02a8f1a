"""Principal component analysis of expert actions.

Used to check how many motion synergies a demonstration contains and to pick
the latent dimension of the action prior. The prior itself is the nonlinear
autoencoder in :mod:`gaitprior.prior`; PCA here is diagnostics only.
"""

import logging

import numpy as np

from gaitprior.common import GaitPriorException

logger = logging.getLogger('gaitprior.synergy')

DEFAULT_VARIANCE_THRESHOLD = 0.97

_TIE_DECIMALS = 12


class SynergyException(GaitPriorException):
    pass


class PcaResult(object):
    """Principal components of a set of actions.

    * explained_variance_ratio (ndarray): descending fractions of the total
      variance, summing to one.
    * components (ndarray): ``a_full x a_full`` orthonormal matrix, row ``k``
      is the ``k``-th principal direction.
    * mean (ndarray): per-actuator mean removed before the decomposition.
    """

    def __init__(self, explained_variance_ratio, components, mean):
        self.explained_variance_ratio = np.asarray(explained_variance_ratio,
                                                   dtype=np.float64)
        self.components = np.asarray(components, dtype=np.float64)
        self.mean = np.asarray(mean, dtype=np.float64)

    @property
    def cumulative(self):
        return np.cumsum(self.explained_variance_ratio)

    def project(self, actions):
        return (np.asarray(actions, dtype=np.float64) - self.mean).dot(
            self.components.T)

    def reconstruct(self, scores):
        return np.asarray(scores, dtype=np.float64).dot(self.components) + \
            self.mean


def compute_pca(actions):
    """Eigendecomposition of the sample covariance of centered actions.

    The covariance uses ``1/(N-1)``. Components with equal eigenvalues keep
    the order of their dominant actuator, and each component is signed so its
    largest-magnitude entry is positive.

    Args:
        actions (ndarray): ``N x a_full`` matrix, one frame per row.

    Returns:
        :class:`PcaResult`

    Raises:
        SynergyException: for fewer than two rows, non-finite input, or
          actions without any variance.
    """
    x = np.asarray(actions, dtype=np.float64)
    if x.ndim != 2:
        raise SynergyException('Expect a matrix, got shape %s' % (x.shape,))
    if x.shape[0] < 2:
        raise SynergyException('Need at least 2 frames, got %d' % (x.shape[0]))
    if not np.all(np.isfinite(x)):
        raise SynergyException('Actions contain non-finite values')

    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T.dot(centered) / (x.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals = np.clip(eigvals, 0.0, None)
    total = eigvals.sum()
    if not total > 0:
        raise SynergyException('Actions have zero variance')

    ratios = eigvals / total
    dominant = np.argmax(np.abs(eigvecs), axis=0)
    order = sorted(range(len(ratios)),
                   key=lambda i: (-round(ratios[i], _TIE_DECIMALS),
                                  dominant[i]))

    components = eigvecs[:, order].T.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0

    result = PcaResult(ratios[order], components, mean)
    logger.debug('Explained variance ratios: %s',
                 np.array2string(result.explained_variance_ratio,
                                 precision=4))
    return result


def suggest_latent_dim(a_full):
    """Half of the full action dimension, rounded up.

    >>> suggest_latent_dim(12)
    6

    >>> suggest_latent_dim(7)
    4

    >>> suggest_latent_dim(1)
    1
    """
    if a_full < 1:
        raise SynergyException('Action dimension must be positive, got %d' %
                               (a_full))
    return (int(a_full) + 1) // 2


def dims_for_variance(pca, threshold=DEFAULT_VARIANCE_THRESHOLD):
    """Smallest number of leading components whose cumulative ratio reaches
    ``threshold``.

    Args:
        pca (:class:`PcaResult`): decomposition to inspect.
        threshold (float): required fraction in ``(0, 1]``.

    Returns:
        int
    """
    if not 0 < threshold <= 1:
        raise SynergyException('Threshold must be in (0, 1], got %r' %
                               (threshold))
    cumulative = pca.cumulative
    reached = np.nonzero(cumulative >= threshold - 1e-9)[0]
    if len(reached) == 0:
        return len(cumulative)
    return int(reached[0]) + 1
