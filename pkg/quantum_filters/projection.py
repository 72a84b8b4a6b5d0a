"""
Integration of the projection filter in chart coordinates from θ_0 = 0.

Stratonovich variants take Heun predictor-corrector steps; the Itô variant
takes Euler–Maruyama steps. Step j only sees dY over (t_j, t_{j+1}].
"""

import logging

import numpy as np

from core.csvio import write_csv
from core.exceptions import LabError
from manifold_geometry.models import ThetaPoint
from .coefficients import CoefficientEngine
from .models import FilterTrajectory, Variant

logger = logging.getLogger(__name__)


def _increments(observations, dt, horizon):
    dy = getattr(observations, 'increments', observations)
    dy = np.asarray(dy, dtype=float).reshape(-1)
    path_dt = getattr(observations, 'dt', dt)
    if abs(path_dt - dt) > 1e-12 * max(1.0, dt):
        raise LabError('Step does not match the observation grid', dt=dt, grid_dt=path_dt)
    steps = int(round(horizon / dt))
    if abs(steps * dt - horizon) > 1e-9 * max(1.0, horizon) or dy.shape[0] != steps:
        raise LabError('Observation series does not cover the horizon', steps=steps, increments=dy.shape[0])
    return dy


def _heun(engine, variant, theta, dy, dt):
    start = engine.evaluate(variant, theta)
    predictor = ThetaPoint(theta + start.f * dt + start.g * dy).coords
    end = engine.evaluate(variant, predictor)
    return theta + 0.5 * (start.f + end.f) * dt + 0.5 * (start.g + end.g) * dy


def _euler_maruyama(engine, variant, theta, dy, dt):
    c = engine.evaluate(variant, theta)
    return theta + c.f * dt + c.g * dy


def integrate_projection_filter(chart, model, variant, observations, dt, horizon, *, engine=None):
    """
    θ_t on the grid 0, dt, …, T.

    ``observations`` is a WienerPath or an array of dY increments on the
    filter grid. Every LabError raised along the way carries the failure time.
    """
    variant = Variant.parse(variant)
    dy = _increments(observations, dt, horizon)
    engine = engine or CoefficientEngine(chart, model)
    step = _euler_maruyama if variant.is_ito else _heun

    thetas = np.zeros((dy.shape[0] + 1, chart.dim_m))
    theta = thetas[0].copy()
    for j in range(dy.shape[0]):
        try:
            engine.check_point(engine.point(theta))
            theta = ThetaPoint(step(engine, variant, theta, dy[j], dt)).coords.copy()
        except LabError as exc:
            exc.detail.setdefault('time', j * dt)
            logger.debug('%s filter failed at t=%.6g: %s', variant.label, j * dt, exc.code)
            raise
        thetas[j + 1] = theta

    times = dt * np.arange(dy.shape[0] + 1)
    return FilterTrajectory(variant.value, times, np.concatenate(([0.0], dy)), thetas=thetas)


def write_trajectory_csv(trajectory, path):
    return write_csv(path, trajectory.header(), trajectory.rows(), comments=[f'variant: {trajectory.variant}'])
