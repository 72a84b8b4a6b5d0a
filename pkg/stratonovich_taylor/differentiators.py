"""
Differentiators along the true and projected dynamics.

D_α(ρ̄) = D^{α_l}(D_{α−}(ρ̄)) with the constant super-operators D⁰, D¹ of the
unnormalized filter, available for every α. α_1 pairs with the innermost
integral, so D^{α_1} is applied first.

L_α(ρ̄_θ) along dθ = f dt + g ∘ dY on the chart, available for α ∈ Λ_2:

    L_(0)   = Σ f_i ∂̄_i
    L_(1)   = Σ g_i ∂̄_i
    L_(1,1) = Σ_p (J g)_p ∂̄_p + Σ_{p,q} g_p g_q ∂²ρ̄_θ/∂θ_p∂θ_q,   J_pq = ∂g_p/∂θ_q
"""

import numpy as np

from core.exceptions import DimensionMismatch, UnsupportedOrder
from manifold_geometry.geometry import ChartPoint, symmetrize
from multi_index.models import MultiIndex
from operator_algebra.operators import diffusion, drift


def d_operator(alpha, model, rho_bar):
    rho_bar = np.asarray(rho_bar, dtype=np.complex128)
    if rho_bar.shape[-1] != model.dim or rho_bar.shape[-2] != model.dim:
        raise DimensionMismatch(model_dim=model.dim, shape=list(rho_bar.shape))
    out = rho_bar
    for entry in alpha.entries:
        out = drift(model, out) if entry == 0 else diffusion(model, out)
    return out


_SUPPORTED = {MultiIndex.of(), MultiIndex.of(0), MultiIndex.of(1), MultiIndex.of(1, 1)}


def _point(chart, theta):
    return theta if isinstance(theta, ChartPoint) else ChartPoint(chart, theta)


def l_operator(alpha, chart, theta, f, g, g_jacobian=None):
    if alpha not in _SUPPORTED:
        raise UnsupportedOrder(index=str(alpha))

    point = _point(chart, theta)
    if alpha.length == 0:
        return point.rho
    if alpha == MultiIndex.of(0):
        return point.tangent_vector(f)
    if alpha == MultiIndex.of(1):
        return point.tangent_vector(g)

    g = np.asarray(g, dtype=float)
    out = point.second_derivative_along(g, g)
    if g_jacobian is not None:
        out = out + point.tangent_vector(np.asarray(g_jacobian) @ g)
    return out


def frozen_l_operator(alpha, chart, f, g, rho_bar):
    """
    L_α with f and g held constant, for any α.

    Along a constant direction v the chart derivative is ρ ↦ ½(Vρ + ρV) with
    V = Σ v_i A_i, and these maps commute with the chart exponential. ``rho_bar``
    may be a stack of chart states.
    """
    directions = {0: chart.combine(f), 1: chart.combine(g)}
    out = np.asarray(rho_bar, dtype=np.complex128)
    for entry in alpha.entries:
        out = symmetrize(directions[entry], out)
    return out
