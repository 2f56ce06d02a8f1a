"""Latent action prior.

An autoencoder is fitted to the actions of a single gait cycle. Its decoder
maps a low-dimensional latent command back to full joint commands; during
reinforcement learning the decoder is frozen and its output is blended with a
full-dimensional residual chosen by the policy.

The training loss per frame is the squared reconstruction error plus a soft
bound on the latent values::

    L(a, a_hat, z) = ||a - a_hat||^2 + L_norm(z)

    L_norm(z) = 0                               if max_i |z_i| < 0.8
              = sum_i exp((z_i / 1.2)^10) - 1   otherwise
"""

import logging

import numpy as np
import progressbar as pbar

from gaitprior.common import GaitPriorException
from gaitprior.demo import actions_matrix
from gaitprior.nn import Mlp, AdamState, forward, backward, adam_step

logger = logging.getLogger('gaitprior.prior')

NORM_GATE = 0.8
"""Latent vectors whose infinity norm stays below this are not penalized.
"""

NORM_SCALE = 1.2
NORM_POWER = 10
NORM_EXPONENT_CAP = 50.0
"""Past this exponent the penalty grows linearly in ``(z / 1.2) ** 10``.
"""

DEFAULT_EPOCHS = 10000
DEFAULT_LR = 1e-3
EARLY_STOP_LOSS = 1e-6

DEFAULT_FULL_ACTION_WEIGHT = 0.1


class PriorException(GaitPriorException):
    pass


def _norm_terms(z):
    p = (z / NORM_SCALE) ** NORM_POWER
    capped = np.minimum(p, NORM_EXPONENT_CAP)
    return np.exp(capped) * (1.0 + p - capped) - 1.0


def norm_loss(a_l):
    """Soft bound keeping latent actions inside ``[-1, 1]``.

    Args:
        a_l (ndarray): latent vector.

    Returns:
        float: zero while every component is below 0.8 in magnitude, else the
        summed per-component penalty ``exp((z / 1.2) ** 10) - 1``. The
        exponent is capped at ``NORM_EXPONENT_CAP`` and continued to first
        order beyond it, so the result stays finite.
    """
    z = np.asarray(a_l, dtype=np.float64)
    if z.size == 0 or np.max(np.abs(z)) < NORM_GATE:
        return 0.0
    return float(np.sum(_norm_terms(z)))


def _batch_norm_loss(z):
    gated = np.max(np.abs(z), axis=1) >= NORM_GATE
    return np.sum(_norm_terms(z), axis=1) * gated, gated


def _batch_norm_grad(z, gated):
    u = z / NORM_SCALE
    scale = np.exp(np.minimum(u ** NORM_POWER, NORM_EXPONENT_CAP))
    grad = scale * NORM_POWER * u ** (NORM_POWER - 1) / NORM_SCALE
    return grad * gated[:, None]


def reconstruction_loss(a, a_hat, a_l):
    """Squared reconstruction error plus :func:`norm_loss` of the latent.
    """
    a = np.asarray(a, dtype=np.float64)
    a_hat = np.asarray(a_hat, dtype=np.float64)
    if a.shape != a_hat.shape:
        raise PriorException('Reconstruction shape mismatch: %s vs %s' %
                             (a.shape, a_hat.shape))
    return float(np.sum((a - a_hat) ** 2)) + norm_loss(a_l)


class LatentActionPrior(object):
    """Trained encoder/decoder pair.

    * encoder (:class:`Mlp`): ``a_full -> 2 a_l -> a_l``, tanh hidden layer,
      linear output.
    * decoder (:class:`Mlp`): ``a_l -> 2 a_l -> a_full``, same activations.
    * latent_dim (int): ``a_l``.
    * full_action_weight (float): weight of the residual in
      :func:`compose_action`, the decoded part gets ``1 - w``.
    * source_demo_id (str): env id of the training demonstration.
    """

    def __init__(self, encoder, decoder, full_action_weight=
                 DEFAULT_FULL_ACTION_WEIGHT, source_demo_id='',
                 loss_history=None):
        if encoder.output_dim != decoder.input_dim:
            raise PriorException('Encoder emits %d latents, decoder expects %d'
                                 % (encoder.output_dim, decoder.input_dim))
        if encoder.input_dim != decoder.output_dim:
            raise PriorException('Encoder takes %d actions, decoder emits %d'
                                 % (encoder.input_dim, decoder.output_dim))
        _check_weight(full_action_weight)
        self.encoder = encoder
        self.decoder = decoder
        self.full_action_weight = float(full_action_weight)
        self.source_demo_id = source_demo_id
        self.loss_history = list(loss_history or [])

    @property
    def latent_dim(self):
        return self.decoder.input_dim

    @property
    def action_dim(self):
        return self.decoder.output_dim

    @property
    def initial_loss(self):
        return self.loss_history[0] if self.loss_history else None

    @property
    def final_loss(self):
        return self.loss_history[-1] if self.loss_history else None

    def with_full_action_weight(self, full_action_weight):
        return LatentActionPrior(self.encoder, self.decoder,
                                 full_action_weight, self.source_demo_id,
                                 self.loss_history)

    def __repr__(self):
        return 'LatentActionPrior(latent_dim=%d, action_dim=%d, w_full=%g, ' \
            'final_loss=%s)' % (self.latent_dim, self.action_dim,
                                self.full_action_weight, self.final_loss)


def _check_weight(w):
    if not 0.0 <= w <= 1.0:
        raise PriorException('Full action weight must be in [0, 1], got %r' %
                             (w))


def _loss_and_grads(encoder, decoder, x):
    n = x.shape[0]
    z = forward(encoder, x)
    x_hat = forward(decoder, z)
    norm_terms, gated = _batch_norm_loss(z)
    loss = (np.sum((x - x_hat) ** 2) + np.sum(norm_terms)) / n

    dec_grads = backward(decoder, z, 2.0 * (x_hat - x) / n)
    dz = dec_grads.input + _batch_norm_grad(z, gated) / n
    enc_grads = backward(encoder, x, dz)
    return float(loss), enc_grads.arrays() + dec_grads.arrays()


def train_autoencoder(demo, latent_dim, epochs=DEFAULT_EPOCHS, lr=DEFAULT_LR,
                      seed=0, full_action_weight=DEFAULT_FULL_ACTION_WEIGHT,
                      verbose=False):
    """Fit the prior to the demonstration actions.

    Full-batch Adam on the mean loss over all frames. Training stops early
    once the loss drops below ``EARLY_STOP_LOSS``.

    Args:
        demo (:class:`gaitprior.demo.Demonstration`): the gait cycle.
        latent_dim (int): ``a_l``, at most the action dimension.
        epochs (int): maximum number of full-batch updates.
        lr (float): Adam learning rate.
        seed (int): seed for the weight initialization.
        full_action_weight (float): stored on the returned prior.
        verbose (bool): show a progress bar.

    Returns:
        :class:`LatentActionPrior`, with the loss of every epoch in
        ``loss_history``; its last entry is the loss of the returned weights.

    Raises:
        PriorException: for an invalid latent dimension, or when the loss
          becomes non-finite (the message names the epoch).
    """
    x = actions_matrix(demo)
    a_full = x.shape[1]
    if not 1 <= latent_dim <= a_full:
        raise PriorException('Latent dimension must be in [1, %d], got %d' %
                             (a_full, latent_dim))

    rng = np.random.default_rng(seed)
    hidden = 2 * latent_dim
    encoder = Mlp.init([a_full, hidden, latent_dim], rng)
    decoder = Mlp.init([latent_dim, hidden, a_full], rng)
    n_enc = len(encoder.parameters())
    names = ['encoder %s' % (n) for n in encoder.parameter_names()] + \
        ['decoder %s' % (n) for n in decoder.parameter_names()]

    params = encoder.parameters() + decoder.parameters()
    state = AdamState.for_parameters(params, lr=lr)

    bar = None
    if verbose:
        widgets = [pbar.Percentage(), pbar.Bar(), pbar.ETA()]
        bar = pbar.ProgressBar(widgets=widgets, maxval=max(epochs, 1))
        bar.start()

    history = []
    for epoch in range(epochs + 1):
        loss, grads = _loss_and_grads(encoder, decoder, x)
        if not np.isfinite(loss):
            raise PriorException('Autoencoder diverged at epoch %d' % (epoch))
        history.append(loss)
        if loss < EARLY_STOP_LOSS or epoch == epochs:
            break

        params, state = adam_step(params, grads, state, names)
        encoder = encoder.with_parameters(params[:n_enc])
        decoder = decoder.with_parameters(params[n_enc:])

        if epoch % 1000 == 0:
            logger.debug('Epoch %d: loss %.6g', epoch, loss)
        if bar is not None:
            bar.update(epoch)

    if bar is not None:
        bar.finish()

    prior = LatentActionPrior(encoder, decoder, full_action_weight,
                              source_demo_id=demo.env_id,
                              loss_history=history)
    logger.info('Trained %r in %d epochs', prior, len(history) - 1)
    return prior


def encode(prior, a):
    """Latent representation of a full action (or batch of actions)."""
    return forward(prior.encoder, a)


def decode(prior, a_l):
    """Full action decoded from a latent vector (or batch)."""
    return forward(prior.decoder, a_l)


def compose_action(decoded, residual, full_action_weight, low=-1.0,
                   high=1.0):
    """Blend decoded latent actions with the full-action residual.

    ``w * residual + (1 - w) * decoded``, clipped to ``[low, high]``. Pass
    ``low=None`` and ``high=None`` to skip the clipping.

    Args:
        decoded (ndarray): decoder output.
        residual (ndarray): full-dimensional policy output.
        full_action_weight (float): ``w`` in ``[0, 1]``.
        low (float or ndarray): lower action bound.
        high (float or ndarray): upper action bound.

    Returns:
        ndarray: the action applied to the environment.
    """
    _check_weight(full_action_weight)
    decoded = np.asarray(decoded, dtype=np.float64)
    residual = np.asarray(residual, dtype=np.float64)
    if decoded.shape != residual.shape:
        raise PriorException('Decoded and residual shapes differ: %s vs %s' %
                             (decoded.shape, residual.shape))
    w = float(full_action_weight)
    action = w * residual + (1.0 - w) * decoded
    if low is None and high is None:
        return action
    return np.clip(action, low, high)
