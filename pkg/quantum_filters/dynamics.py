"""
Full-state filters.

    Itô SME:        dρ = 𝓛†(ρ)dt + (Lρ + ρL† − ρ Tr(ρ(L+L†))) (dY − Tr(ρ(L+L†))dt)
    Stratonovich:   dρ̄ = D⁰(ρ̄)dt + D¹(ρ̄) ∘ dY

The ``*_update`` kernels work on raw arrays and broadcast over a leading path
axis (dY then has one entry per path); the ``*_step`` functions wrap them with
the state invariants.
"""

import logging

import numpy as np

from core.conf import lab_settings
from core.exceptions import LabError, NonPositiveTrace
from operator_algebra.models import DensityState, UnnormalizedState, hermitian_part, trace
from operator_algebra.operators import adjoint_lindblad, diffusion, drift
from .models import FilterTrajectory

logger = logging.getLogger(__name__)


def _per_matrix(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(x.shape + (1, 1))


def measurement_mean(model, rho):
    """Tr(ρ(L + L†)), per matrix for stacks."""
    return trace(rho @ (model.coupling + model.coupling_dagger)).real


def observation_increment(rho, model, dW, dt):
    """dY = Tr(ρ(L+L†))dt + dW."""
    matrix = getattr(rho, 'matrix', rho)
    return measurement_mean(model, matrix) * dt + dW


def sme_ito_update(model, rho, dy, dt):
    L, Ld = model.coupling, model.coupling_dagger
    mean = measurement_mean(model, rho)
    innovation = _per_matrix(dy - mean * dt)
    kick = L @ rho + rho @ Ld - rho * _per_matrix(mean)
    out = hermitian_part(rho + adjoint_lindblad(model, rho) * dt + kick * innovation)
    tr = trace(out).real
    if np.any(tr <= lab_settings.TRACE_FLOOR):
        raise NonPositiveTrace(trace=float(np.min(tr)))
    return out / _per_matrix(tr)


def sme_ito_step(rho, model, dY, dt):
    if not dt > 0:
        raise LabError('Step must be positive', dt=dt)
    matrix = getattr(rho, 'matrix', rho)
    out = sme_ito_update(model, matrix, dY, dt)
    smallest = float(np.linalg.eigvalsh(out)[0])
    if lab_settings.EIGEN_FLOOR <= smallest < 0.0:
        logger.debug('SME state eigenvalue below zero within floor: %.3e', smallest)
    return DensityState(out)


def stratonovich_heun_update(model, rho_bar, dy, dt):
    """Heun predictor-corrector step of dρ̄ = D⁰ dt + D¹ ∘ dY."""
    dy = _per_matrix(dy)
    a0, b0 = drift(model, rho_bar), diffusion(model, rho_bar)
    predictor = rho_bar + a0 * dt + b0 * dy
    a1, b1 = drift(model, predictor), diffusion(model, predictor)
    return hermitian_part(rho_bar + 0.5 * (a0 + a1) * dt + 0.5 * (b0 + b1) * dy)


def linear_stratonovich_step(rho_bar, model, dY, dt):
    if not dt > 0:
        raise LabError('Step must be positive', dt=dt)
    matrix = getattr(rho_bar, 'matrix', rho_bar)
    return UnnormalizedState(stratonovich_heun_update(model, matrix, dY, dt))


def integrate_sme(model, rho0, noise):
    """
    Truth trajectory of the Itô filter on the noise grid.

    ``noise`` is the WienerPath of innovations dW; the observation record is
    generated alongside as dY = Tr(ρ(L+L†))dt + dW.
    """
    rho = DensityState(getattr(rho0, 'matrix', rho0))
    states = np.empty((noise.steps + 1, rho.dim, rho.dim), dtype=np.complex128)
    dy = np.zeros(noise.steps + 1)
    states[0] = rho.matrix
    for j, dw in enumerate(noise.increments):
        dy[j + 1] = observation_increment(rho, model, dw, noise.dt)
        rho = sme_ito_step(rho, model, dy[j + 1], noise.dt)
        states[j + 1] = rho.matrix
    return FilterTrajectory('sme', noise.times, dy, states=states)


def integrate_linear_filter(model, rho0, dy, dt):
    """Unnormalized Stratonovich filter driven by the observation increments ``dy``."""
    dy = np.asarray(dy, dtype=float).reshape(-1)
    rho_bar = UnnormalizedState(getattr(rho0, 'matrix', rho0))
    states = np.empty((dy.shape[0] + 1, rho_bar.dim, rho_bar.dim), dtype=np.complex128)
    states[0] = rho_bar.matrix
    for j, increment in enumerate(dy):
        rho_bar = linear_stratonovich_step(rho_bar, model, increment, dt)
        states[j + 1] = rho_bar.matrix
    return FilterTrajectory('linear', dt * np.arange(dy.shape[0] + 1), np.concatenate(([0.0], dy)), states=states)
