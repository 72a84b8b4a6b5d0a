"""
Chart evaluation, tangent vectors, Fisher metric and orthogonal projection.

Coordinates of the projection are taken against the e-representation: a
self-adjoint ν is mapped to c = R(θ)⁻¹ [Tr(ν A_j)]_j so that Π(ν) = Σ c_i ∂̄_i.
The pushforward of the chart is the identity on these coefficient vectors,
so filter coefficients live directly in ℝ^m.
"""

import numpy as np

from core.exceptions import DimensionMismatch
from operator_algebra.models import UnnormalizedState, hermitian_part, require_same_dim, trace
from operator_algebra.operators import exponential_from_basis
from .models import FisherMatrix, ThetaPoint


def _coords(chart, theta):
    point = theta if isinstance(theta, ThetaPoint) else ThetaPoint(theta)
    if point.dim != chart.dim_m:
        raise DimensionMismatch('θ has the wrong length', length=point.dim, m=chart.dim_m)
    return point.coords


def symmetrize(a, rho):
    """½(Aρ + ρA)."""
    return 0.5 * (a @ rho + rho @ a)


class ChartPoint:
    """
    Everything the filters need at one point θ of a chart.

    Quantities are computed on first use and kept, so a coefficient routine
    pays for the exponential and the metric factorization once per step.
    """

    def __init__(self, chart, theta):
        self.chart = chart
        self.theta = _coords(chart, theta)
        exponential = exponential_from_basis(chart.basis, chart.generators, self.theta)
        self.rho = hermitian_part(exponential @ chart.base_state @ exponential)
        self._tangent = None
        self._fisher = None

    @property
    def tangent(self):
        if self._tangent is None:
            self._tangent = symmetrize(self.chart.generators, self.rho)
        return self._tangent

    @property
    def fisher(self):
        if self._fisher is None:
            entries = np.einsum('iab,jba->ij', self.tangent, self.chart.generators).real
            self._fisher = FisherMatrix(0.5 * (entries + entries.T))
        return self._fisher

    @property
    def trace(self):
        return float(trace(self.rho).real)

    def normalized(self):
        return self.rho / self.trace

    def project(self, nu):
        return self.fisher.solve(self.chart.pairing(nu))

    def tangent_vector(self, coefficients):
        """Σ c_i ∂̄_i."""
        return np.einsum('i,iab->ab', np.asarray(coefficients, dtype=float), self.tangent)

    def third_moments(self):
        return self.chart.third_moments(self.rho)

    def second_derivative_along(self, u, v):
        """Σ_{p,q} u_p v_q ∂²ρ̄_θ/∂θ_p∂θ_q."""
        U, V = self.chart.combine(u), self.chart.combine(v)
        rho = self.rho
        return 0.25 * (U @ V @ rho + U @ rho @ V + V @ rho @ U + rho @ V @ U)


def chart_state(chart, theta):
    return UnnormalizedState(ChartPoint(chart, theta).rho)


def tangent_basis(chart, theta):
    """∂̄_i = ½(A_i ρ̄_θ + ρ̄_θ A_i), stacked as (m, n, n)."""
    return ChartPoint(chart, theta).tangent


def symmetrized_inner(rho_bar, a, b):
    require_same_dim(rho_bar, a, b)
    return float(0.5 * trace(rho_bar @ (a @ b + b @ a)).real)


def fisher_matrix(chart, theta):
    return ChartPoint(chart, theta).fisher


def project_coordinates(chart, theta, nu):
    nu = np.asarray(nu, dtype=np.complex128)
    require_same_dim(nu, chart.base_state)
    return ChartPoint(chart, theta).project(nu)


def fisher_derivative(chart, theta, direction):
    """∂R/∂θ_i: entries Tr(ρ̄_θ A_i A_j A_k) for a commuting family."""
    point = ChartPoint(chart, theta)
    return point.third_moments()[direction]


def chart_second_derivative(chart, theta, p, q):
    """∂²ρ̄_θ/∂θ_p∂θ_q = ¼(A_pA_qρ̄ + A_pρ̄A_q + A_qρ̄A_p + ρ̄A_qA_p)."""
    point = ChartPoint(chart, theta)
    e_p = np.zeros(chart.dim_m)
    e_q = np.zeros(chart.dim_m)
    e_p[p] = 1.0
    e_q[q] = 1.0
    return point.second_derivative_along(e_p, e_q)
