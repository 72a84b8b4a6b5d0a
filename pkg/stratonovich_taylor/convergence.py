"""
Empirical strong-convergence study of order-k expansions.

For every horizon Δ the mean-square error E‖X_Δ − SE(X_Δ)_k‖²_F is estimated
over independent paths started at t1 = 0, where X is

  * ``true``:      ρ̄_t from Heun steps of the unnormalized filter on a grid
                   of step min(Δ)/FINE_FACTOR, driven by a driftless Wiener Y;
  * ``projected``: ρ̄_{θ_t} along dθ = f dt + g ∘ dY with f, g frozen at θ = 0.

The log-log slope of mse against Δ estimates k + 1. The moment constant is the
largest path-averaged ‖D_β‖²_F (or ‖L_β‖²_F) over β ∈ ℛ(Λ_k) seen at t = 0 and
at the horizons.
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.conf import lab_settings
from core.exceptions import LabError, OrderTooLarge, TimeOffGrid, UnsupportedOrder
from core.parallel import chunk_ranges, map_ordered, resolve_workers
from multi_index.sets import lambda_set, remainder_set
from operator_algebra.models import as_matrix, frobenius
from operator_algebra.operators import exponential_from_basis
from quantum_filters.coefficients import coefficients_for
from quantum_filters.dynamics import stratonovich_heun_update
from .differentiators import d_operator, frozen_l_operator, l_operator
from .integrals import cumulative_iterated
from .models import ConvergenceStudyResult, WienerPath

logger = logging.getLogger(__name__)

TARGETS = ('true', 'projected')


def fine_grid(horizons):
    """Sorted horizons, the reference step and each horizon's step count."""
    horizons = np.array(sorted({float(h) for h in horizons}))
    if horizons.size < 2:
        raise LabError('At least two horizons are needed to fit a slope', horizons=horizons)
    if horizons[0] <= 0.0 or horizons[-1] >= 1.0:
        raise LabError('Horizons must lie strictly between 0 and 1', horizons=horizons)

    fine = horizons[0] / lab_settings.FINE_FACTOR
    counts = np.rint(horizons / fine).astype(int)
    if np.any(np.abs(counts * fine - horizons) > 1e-9 * horizons):
        raise TimeOffGrid('Horizons must be integer multiples of the reference step', fine_step=fine)
    return horizons, fine, counts


def fit_slope(horizons, mse):
    """Least-squares slope of log mse against log Δ; errors are floored at the smallest normal float."""
    floored = np.maximum(np.asarray(mse, dtype=float), np.finfo(float).tiny)
    return float(np.polyfit(np.log(horizons), np.log(floored), 1)[0])


@dataclass(frozen=True)
class _Chunk:
    target: str
    model: object
    rho0: np.ndarray
    chart: object
    f: np.ndarray
    g: np.ndarray
    order: int
    counts: tuple
    fine: float
    seed: int
    start: int
    stop: int


def _noise(chunk):
    steps = max(chunk.counts)
    return np.stack([
        WienerPath.sample(chunk.seed, p, steps, chunk.fine).increments
        for p in range(chunk.start, chunk.stop)
    ], axis=1)


def _true_snapshots(chunk, dy):
    rho = np.repeat(chunk.rho0[None], dy.shape[1], axis=0)
    wanted = set(chunk.counts)
    snapshots = {}
    for j in range(dy.shape[0]):
        rho = stratonovich_heun_update(chunk.model, rho, dy[j], chunk.fine)
        if j + 1 in wanted:
            snapshots[j + 1] = rho
    return snapshots


def _projected_snapshots(chunk, dy):
    # Heun steps of a constant-coefficient equation sum to θ_t = f t + g Y_t.
    y = np.concatenate((np.zeros((1, dy.shape[1])), np.cumsum(dy, axis=0)), axis=0)
    chart = chunk.chart
    snapshots = {}
    for c in set(chunk.counts):
        theta = chunk.f[None, :] * (c * chunk.fine) + y[c][:, None] * chunk.g[None, :]
        e = exponential_from_basis(chart.basis, chart.generators, theta)
        snapshots[c] = e @ chart.base_state @ e
    return snapshots


def _study_chunk(chunk):
    """Per-path squared errors (P, H) and remainder moments (P, H + 1, |ℛ|)."""
    dy = _noise(chunk)
    lam = lambda_set(chunk.order)
    rem = remainder_set(chunk.order)

    if chunk.target == 'true':
        snapshots = _true_snapshots(chunk, dy)
        coefficients = {alpha: d_operator(alpha, chunk.model, chunk.rho0) for alpha in lam}

        def remainder_term(beta, states):
            return d_operator(beta, chunk.model, states)
    else:
        snapshots = _projected_snapshots(chunk, dy)
        origin = np.zeros(chunk.chart.dim_m)
        coefficients = {
            alpha: l_operator(alpha, chunk.chart, origin, chunk.f, chunk.g) for alpha in lam
        }

        def remainder_term(beta, states):
            return frozen_l_operator(beta, chunk.chart, chunk.f, chunk.g, states)

    integrals = {alpha: cumulative_iterated(alpha, chunk.fine, dy) for alpha in lam}

    errors = np.empty((dy.shape[1], len(chunk.counts)))
    for h, c in enumerate(chunk.counts):
        expansion = sum(integrals[alpha][c][:, None, None] * coefficients[alpha] for alpha in lam)
        errors[:, h] = frobenius(snapshots[c] - expansion) ** 2

    states = [np.repeat(chunk.rho0[None], dy.shape[1], axis=0)] + [snapshots[c] for c in chunk.counts]
    moments = np.array([
        [frobenius(remainder_term(beta, s)) ** 2 for beta in rem] for s in states
    ])
    return errors, np.transpose(moments, (2, 0, 1))


def convergence_study(model, rho0, k, horizons, paths_per_horizon, seed, *,
                      target='true', chart=None, variant='new', workers=None):
    if target not in TARGETS:
        raise LabError('Unknown convergence target', target=target, allowed=list(TARGETS))
    if k < 0 or k > lab_settings.MAX_EXPANSION_ORDER:
        raise OrderTooLarge(order=k, max_order=lab_settings.MAX_EXPANSION_ORDER)
    if paths_per_horizon < 1:
        raise LabError('At least one path is required', paths=paths_per_horizon)

    horizons, fine, counts = fine_grid(horizons)

    f = g = None
    if target == 'projected':
        if chart is None:
            raise LabError('The projected target needs a chart')
        if k > 2:
            raise UnsupportedOrder('Projected expansions stop at order 2', order=k)
        frozen = coefficients_for(variant, chart, np.zeros(chart.dim_m), model)
        f, g = np.array(frozen.f), np.array(frozen.g)
        rho0 = chart.base_state
    rho0 = np.array(as_matrix(rho0, dim=model.dim, name='rho0'))

    workers = resolve_workers(workers)
    chunks = [
        _Chunk(target, model, rho0, chart, f, g, k, tuple(int(c) for c in counts), fine, seed, start, stop)
        for start, stop in chunk_ranges(paths_per_horizon, workers)
    ]
    logger.info(
        'Convergence study: target=%s order=%d paths=%d horizons=%s fine_step=%.3e',
        target, k, paths_per_horizon, horizons.tolist(), fine,
    )
    results = map_ordered(_study_chunk, chunks, workers)

    errors = np.concatenate([r[0] for r in results], axis=0)
    moments = np.concatenate([r[1] for r in results], axis=0)

    mse = errors.mean(axis=0)
    stderr = errors.std(axis=0, ddof=1) / np.sqrt(errors.shape[0]) if errors.shape[0] > 1 else np.zeros_like(mse)
    result = ConvergenceStudyResult(
        order=k,
        target=target,
        horizons=horizons,
        mse=mse,
        stderr=stderr,
        moment_bound=float(moments.mean(axis=0).max()),
        slope=fit_slope(horizons, mse),
        paths=paths_per_horizon,
        seed=seed,
        fine_step=fine,
    )
    logger.info('Convergence study order=%d slope=%.3f', k, result.slope)
    return result
