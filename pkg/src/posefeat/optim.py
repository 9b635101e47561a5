#
# posefeat.optim - Parameter update rules and learning-rate schedules (2026-10-17)
# Copyright (c) 2026, the posefeat developers
#
# Permission to use, copy, modify, and/or distribute this software for any
# purpose with or without fee is hereby granted, provided that the above
# copyright notice and this permission notice appear in all copies.
#
# THE SOFTWARE IS PROVIDED "AS IS" AND THE AUTHOR DISCLAIMS ALL WARRANTIES WITH
# REGARD TO THIS SOFTWARE INCLUDING ALL IMPLIED WARRANTIES OF MERCHANTABILITY
# AND FITNESS. IN NO EVENT SHALL THE AUTHOR BE LIABLE FOR ANY SPECIAL, DIRECT,
# INDIRECT, OR CONSEQUENTIAL DAMAGES OR ANY DAMAGES WHATSOEVER RESULTING FROM
# LOSS OF USE, DATA OR PROFITS, WHETHER IN AN ACTION OF CONTRACT, NEGLIGENCE OR
# OTHER TORTIOUS ACTION, ARISING OUT OF OR IN CONNECTION WITH THE USE OR
# PERFORMANCE OF THIS SOFTWARE.
#

"""Optimizers stepped per minibatch, schedules stepped per epoch

    sgd:    p <- p - lr * g
    adam:   m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
            p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
    adamw:  adam followed by p <- p - lr * wd * p (skipped when wd == 0)

    exponential:  lr0 * gamma^epoch
    cosine:       lr_end + (lr_start - lr_end) * (1 + cos(pi * epoch / total)) / 2
"""

import posefeat

from posefeat import registry

import logging
import math

import numpy as np

logger = logging.getLogger(__name__)


class NonFiniteGradientError(posefeat.NumericalError):
    pass


class OptimState(object):
    """Moment buffers and step counter of one parameter dictionary"""

    def __init__(self, rule='adamw', base_lr=1e-3, weight_decay=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        if rule not in registry.update_rule:
            raise ValueError('Unknown update rule %r' % rule)
        if weight_decay < 0:
            raise ValueError('Weight decay must be >= 0')
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ValueError('Moment decay rates must lie in [0, 1)')

        self.rule = rule
        self.base_lr = base_lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.steps = 0
        self.first_moment = {}
        self.second_moment = {}

    def __repr__(self):
        return '<OptimState %s, %d steps>' % (self.rule, self.steps)

    @classmethod
    def from_config(cls, section):
        return cls(section.rule, section.lr, section.weight_decay, section.beta1, section.beta2, section.eps)

    def moments_for(self, name, shape):
        if name not in self.first_moment:
            self.first_moment[name] = np.zeros(shape)
            self.second_moment[name] = np.zeros(shape)
        if self.first_moment[name].shape != shape:
            raise ValueError('Moment buffer for %s has shape %r, parameter has %r' %
                             (name, self.first_moment[name].shape, shape))
        return self.first_moment[name], self.second_moment[name]


@registry.update_rule.register
def sgd(state, name, param, grad, lr):
    return param - lr * grad


def _adam_update(state, name, param, grad, lr):
    m, v = state.moments_for(name, param.shape)
    m *= state.beta1
    m += (1.0 - state.beta1) * grad
    v *= state.beta2
    v += (1.0 - state.beta2) * grad * grad

    m_hat = m / (1.0 - state.beta1 ** state.steps)
    v_hat = v / (1.0 - state.beta2 ** state.steps)
    return param - lr * m_hat / (np.sqrt(v_hat) + state.eps)


@registry.update_rule.register
def adam(state, name, param, grad, lr):
    return _adam_update(state, name, param, grad, lr)


@registry.update_rule.register
def adamw(state, name, param, grad, lr):
    updated = _adam_update(state, name, param, grad, lr)
    if state.weight_decay:
        # Decay uses the pre-update parameter value
        updated = updated - lr * state.weight_decay * param
    return updated


def step(state, params, grads, lr):
    """Apply one update to every parameter block; returns a new dictionary"""
    if set(params) != set(grads):
        raise ValueError('Parameter and gradient blocks differ: %s' % sorted(set(params) ^ set(grads)))
    if not lr > 0:
        raise ValueError('Learning rate must be positive, got %r' % lr)

    for name in sorted(grads):
        if np.shape(grads[name]) != np.shape(params[name]):
            raise ValueError('Gradient for %s has shape %r, parameter has %r' %
                             (name, np.shape(grads[name]), np.shape(params[name])))
        if not np.all(np.isfinite(grads[name])):
            raise NonFiniteGradientError('Non-finite gradient in parameter block %s' % name)

    rule = registry.update_rule.lookup(state.rule)
    state.steps += 1
    return {name: rule(state, name, np.asarray(params[name], dtype=np.float64),
                       np.asarray(grads[name], dtype=np.float64), lr)
            for name in sorted(params)}


class Schedule(object):
    def __init__(self, kind, lr_start, lr_end=1e-4, gamma=0.99):
        if kind not in registry.lr_schedule:
            raise ValueError('Unknown learning rate schedule %r' % kind)
        if not (lr_start > 0 and lr_end > 0):
            raise ValueError('Learning rates must be positive')
        if not 0 < gamma <= 1:
            raise ValueError('gamma must lie in (0, 1], got %r' % gamma)

        self.kind = kind
        self.lr_start = lr_start
        self.lr_end = lr_end
        self.gamma = gamma

    def __repr__(self):
        return '<Schedule %s from %g>' % (self.kind, self.lr_start)

    @classmethod
    def from_config(cls, section):
        return cls(section.schedule, section.lr, section.lr_end, section.gamma)


@registry.lr_schedule.register
def exponential(schedule, epoch, total_epochs):
    return schedule.lr_start * schedule.gamma ** epoch


@registry.lr_schedule.register
def cosine(schedule, epoch, total_epochs):
    if total_epochs == 0:
        return schedule.lr_start
    progress = math.cos(math.pi * epoch / total_epochs)
    return schedule.lr_end + 0.5 * (schedule.lr_start - schedule.lr_end) * (1.0 + progress)


def lr_at(schedule, epoch, total_epochs):
    """Learning rate for an epoch index in [0, total_epochs]

    >>> round(lr_at(Schedule('exponential', 0.1, gamma=0.99), 2, 10), 12)
    0.09801
    """
    if not 0 <= epoch <= total_epochs:
        raise ValueError('Epoch %r outside [0, %r]' % (epoch, total_epochs))
    return registry.lr_schedule.resolve(schedule.kind, schedule, epoch, total_epochs)
