"""
Closed-form value of the local approximation objective at one chart point.

    k = 1:  ‖L¹ − D¹‖²_F δ
    k = 2:  (‖M‖²_F + ‖R₁‖²_F / δ + ‖R₂‖²_F / 4) δ²

with R₁ = L¹ − D¹, R₂ = L¹L¹ − D¹D¹ and M = L⁰ − D⁰ + R₂/2, all evaluated at
ρ̄_θ. The expectations over δ, ΔY and (ΔY² − δ)/2 factor out because those
three are mutually orthogonal.
"""

import numpy as np

from core.exceptions import LabError
from multi_index.models import MultiIndex
from operator_algebra.models import frobenius
from stratonovich_taylor.differentiators import d_operator, l_operator
from .coefficients import CoefficientEngine

DRIFT = MultiIndex.of(0)
DIFFUSION = MultiIndex.of(1)
SECOND_DIFFUSION = MultiIndex.of(1, 1)


def problem_objective(chart, theta, model, coefficients, k, delta):
    if k not in (1, 2):
        raise LabError('The objective is defined for k = 1 and k = 2', order=k)
    if not delta > 0:
        raise LabError('Time perturbation must be positive', delta=delta)

    engine = CoefficientEngine(chart, model)
    point = engine.point(theta)
    f, g = coefficients.f, coefficients.g
    jacobian = coefficients.g_jacobian
    if jacobian is None:
        jacobian = engine.diffusion_jacobian(point, g)

    r1 = l_operator(DIFFUSION, chart, point, f, g) - d_operator(DIFFUSION, model, point.rho)
    if k == 1:
        return float(frobenius(r1) ** 2 * delta)

    r2 = (l_operator(SECOND_DIFFUSION, chart, point, f, g, jacobian)
          - d_operator(SECOND_DIFFUSION, model, point.rho))
    m = l_operator(DRIFT, chart, point, f, g) - d_operator(DRIFT, model, point.rho) + 0.5 * r2
    return float((frobenius(m) ** 2 + frobenius(r1) ** 2 / delta + frobenius(r2) ** 2 / 4.0) * delta ** 2)


def first_order_residual(chart, theta, model, g):
    """‖L¹(ρ̄_θ) − D¹(ρ̄_θ)‖_F."""
    point = CoefficientEngine(chart, model).point(theta)
    residual = point.tangent_vector(np.asarray(g, dtype=float)) - d_operator(DIFFUSION, model, point.rho)
    return float(frobenius(residual))
