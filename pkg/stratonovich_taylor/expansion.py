"""
Order-k Stratonovich stochastic Taylor expansions

    SE(ρ̄_{t2})_k   = Σ_{α∈Λ_k} I^α_{t1,t2}(1) · D_α(ρ̄_{t1})
    SE(ρ̄_{θ_t2})_k = Σ_{α∈Λ_k} I^α_{t1,t2}(1) · L_α(ρ̄_{θ_t1})
"""

from core.conf import lab_settings
from core.exceptions import OrderTooLarge, UnsupportedOrder
from manifold_geometry.geometry import ChartPoint
from multi_index.sets import lambda_set
from .differentiators import d_operator, l_operator
from .integrals import iterated_integral
from .models import TaylorExpansionResult


def taylor_expand_true(model, rho_bar, k, path, t1, t2):
    if k > lab_settings.MAX_EXPANSION_ORDER:
        raise OrderTooLarge(order=k, max_order=lab_settings.MAX_EXPANSION_ORDER)
    matrix = getattr(rho_bar, 'matrix', rho_bar)

    terms = {
        alpha: (iterated_integral(alpha, path, t1, t2), d_operator(alpha, model, matrix))
        for alpha in lambda_set(k)
    }
    return TaylorExpansionResult.assemble(k, t1, t2, terms)


def taylor_expand_projected(chart, theta, coefficients, k, path, t1, t2):
    """``coefficients`` needs ``f`` and ``g``; an optional ``g_jacobian`` enters L_(1,1)."""
    if k > 2:
        raise UnsupportedOrder('Projected expansions stop at order 2', order=k)

    point = ChartPoint(chart, theta)
    f, g = coefficients.f, coefficients.g
    jacobian = getattr(coefficients, 'g_jacobian', None)

    terms = {
        alpha: (iterated_integral(alpha, path, t1, t2), l_operator(alpha, chart, point, f, g, jacobian))
        for alpha in lambda_set(k)
    }
    return TaylorExpansionResult.assemble(k, t1, t2, terms)
