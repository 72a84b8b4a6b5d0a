"""
Iterated Stratonovich integrals I^α_{t1,t2}(a) on a path grid.

    I^∅(a)   = a(t2)
    I^α(a)   = ∫_{t1}^{t2} I^{α−}_{t1,s}(a) ∘ dY_s^{α_l}

with Y⁰ = t and Y¹ = Y. Each level is a cumulative sum of midpoint-averaged
integrand values times the step increment, so the innermost integral runs
against α_1 and the outermost against α_l.
"""

import numpy as np

from core.conf import lab_settings
from core.exceptions import LabError, OrderTooLarge
from .models import OperatorProcess


def _guard_length(alpha):
    if alpha.length > lab_settings.MAX_INTEGRAL_LENGTH:
        raise OrderTooLarge(
            'Multi-index is too long for iterated integration',
            length=alpha.length, max_length=lab_settings.MAX_INTEGRAL_LENGTH,
        )


def cumulative_integral(values, increments):
    """
    s ↦ ∫_{t1}^{s} v ∘ dZ on every grid point.

    ``values`` has the step axis first, shape (S+1, ...); ``increments`` has
    shape (S, ...) and broadcasts against the trailing value axes.
    """
    increments = np.asarray(increments)
    pad = values.ndim - increments.ndim
    if pad > 0:
        increments = increments.reshape(increments.shape + (1,) * pad)
    pieces = 0.5 * (values[:-1] + values[1:]) * increments
    head = np.zeros_like(pieces[:1])
    return np.concatenate((head, np.cumsum(pieces, axis=0)), axis=0)


def cumulative_iterated(alpha, dt, dy, values=None):
    """
    All running integrals s ↦ I^α_{t1,s}(a) over a window.

    ``dy`` has shape (S,) or (S, P) for P paths at once; ``values`` defaults
    to the constant integrand 1.
    """
    _guard_length(alpha)
    dy = np.asarray(dy, dtype=float)
    if values is None:
        values = np.ones((dy.shape[0] + 1,) + dy.shape[1:])
    dts = np.full(dy.shape, float(dt))
    for entry in alpha.entries:
        values = cumulative_integral(values, dts if entry == 0 else dy)
    return values


def iterated_integral(alpha, path, t1, t2, integrand=None):
    """
    I^α_{t1,t2}(a) for one path.

    ``integrand`` is an OperatorProcess sampled on the path grid; when it is
    omitted the constant scalar 1 is integrated and a float is returned.
    """
    _guard_length(alpha)
    i1, i2 = path.window(t1, t2)
    dy = path.increments[i1:i2]

    if integrand is None:
        return float(cumulative_iterated(alpha, path.dt, dy)[-1])

    if not isinstance(integrand, OperatorProcess):
        integrand = OperatorProcess.constant(path.times, integrand)
    if integrand.values.shape[0] != path.steps + 1:
        raise LabError('Integrand is not sampled on the path grid',
                       samples=integrand.values.shape[0], grid=path.steps + 1)

    values = np.asarray(integrand.values[i1:i2 + 1], dtype=np.complex128)
    return cumulative_iterated(alpha, path.dt, dy, values)[-1]
