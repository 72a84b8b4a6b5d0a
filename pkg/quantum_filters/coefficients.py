"""
Coefficients of the projection filter dθ = f dt + g ∘ dY on an exponential chart.

Diffusion, shared by every variant:

    g = R⁻¹ b,   b_j = Tr(ρ̄_θ (A_j L + L† A_j))

with Jacobian J_pq = ∂g_p/∂θ_q = [R⁻¹(∂b/∂θ_q − (∂R/∂θ_q) g)]_p, where
∂b_j/∂θ_q = Tr(∂̄_q (A_j L + L† A_j)) and (∂R/∂θ_q)_jk = Tr(ρ̄_θ A_q A_j A_k).
The abstract new filter reaches the same g as the coordinates of Π(Lρ̄_θ + ρ̄_θL†).

Drifts:

    new (abstract)    f = coordinates of Π(𝓛†(ρ̄_θ) − ½ L¹(L¹(ρ̄_θ)))
    new (coordinates) f = R⁻¹ Ψ,  Ψ_j = Tr(ρ̄_θ 𝓛(A_j)) + (J g)_j − ½ gᵀ Δ_j g
    Itô               f̄ = R⁻¹ Γ,  Γ_j = Tr(ρ̄_θ 𝓛(A_j)) − ½ gᵀ Δ_j g
    baseline          f = coordinates of Π(−i[H, ρ̄_θ] − 𝒮_L(ρ̄_θ))
    self-adjoint L    g = 2λ̄,  f = R⁻¹ Φ − 2Ξ,  Φ_j = Tr(iρ̄_θ[H, A_j]),  Ξ = λ̄²

with Δ_j(p, q) = Tr(ρ̄_θ A_p A_q A_j). The abstract route is the normative new
drift and equals R⁻¹Γ − ½Jg; the coordinate formula as printed is returned by
``new_coefficients_coordinates`` together with its distance to that value.
"""

import numpy as np

from core.exceptions import DimensionMismatch, InvariantViolation, NotSelfAdjoint
from manifold_geometry.geometry import ChartPoint
from operator_algebra.models import check_state, frobenius, hermitian_defect
from operator_algebra.operators import adjoint_lindblad, diffusion, drift, lindblad
from .models import CoefficientSet, SpectralData, Variant


class CoefficientEngine:
    """Per-(chart, model) precomputations shared by every coefficient evaluation."""

    def __init__(self, chart, model, spectral=None):
        if chart.dim_n != model.dim:
            raise DimensionMismatch('Chart and model dimensions differ', chart=chart.dim_n, model=model.dim)
        self.chart = chart
        self.model = model
        self._spectral = spectral

        A, L, Ld = chart.generators, model.coupling, model.coupling_dagger
        self.heisenberg = lindblad(model, A)
        self.diffusion_pairing = A @ L + Ld @ A
        self.hamiltonian_pairing = 1j * (model.hamiltonian @ A - A @ model.hamiltonian)

    def point(self, theta):
        return theta if isinstance(theta, ChartPoint) else ChartPoint(self.chart, theta)

    @staticmethod
    def _pair(rho, operators):
        return np.einsum('ab,jba->j', rho, operators).real

    # ── shared pieces ────────────────────────────────────────────────────────

    def diffusion(self, point):
        return point.fisher.solve(self._pair(point.rho, self.diffusion_pairing))

    def diffusion_jacobian(self, point, g):
        db = np.einsum('qab,jba->jq', point.tangent, self.diffusion_pairing).real
        dr_g = np.einsum('qjk,k->jq', point.third_moments(), g)
        return point.fisher.solve(db - dr_g)

    def curvature_terms(self, point, g):
        """[gᵀ Δ_j g]_j."""
        return np.einsum('pqj,p,q->j', point.third_moments(), g, g)

    def gamma(self, point, g):
        return self._pair(point.rho, self.heisenberg) - 0.5 * self.curvature_terms(point, g)

    def second_diffusion(self, point, g, jacobian):
        """L¹(L¹(ρ̄_θ)) = Σ_p (Jg)_p ∂̄_p + Σ_{p,q} g_p g_q ∂²ρ̄_θ/∂θ_p∂θ_q."""
        return point.tangent_vector(jacobian @ g) + point.second_derivative_along(g, g)

    # ── variants ─────────────────────────────────────────────────────────────

    def projected_diffusion(self, point):
        """Coordinates of Π(D¹(ρ̄_θ)), the abstract route to g."""
        return point.project(diffusion(self.model, point.rho))

    def new_abstract(self, theta):
        point = self.point(theta)
        g = self.projected_diffusion(point)
        jacobian = self.diffusion_jacobian(point, g)
        nu = adjoint_lindblad(self.model, point.rho) - 0.5 * self.second_diffusion(point, g, jacobian)
        return CoefficientSet(point.project(nu), g, Variant.NEW_STRATONOVICH, jacobian)

    def new_coordinates(self, theta):
        point = self.point(theta)
        g = self.diffusion(point)
        jacobian = self.diffusion_jacobian(point, g)
        gamma = self.gamma(point, g)
        psi = gamma + jacobian @ g
        f = point.fisher.solve(psi)
        reconciled = point.fisher.solve(gamma) - 0.5 * jacobian @ g
        return CoefficientSet(f, g, Variant.NEW_STRATONOVICH, jacobian, {
            'psi': psi,
            'delta': np.moveaxis(point.third_moments(), 2, 0),
            'reconciled_f': reconciled,
            'discrepancy': float(np.linalg.norm(f - reconciled)),
        })

    def ito(self, theta):
        point = self.point(theta)
        g = self.diffusion(point)
        gamma = self.gamma(point, g)
        return CoefficientSet(point.fisher.solve(gamma), g, Variant.NEW_ITO, extras={'gamma': gamma})

    def baseline(self, theta):
        point = self.point(theta)
        g = self.diffusion(point)
        return CoefficientSet(point.project(drift(self.model, point.rho)), g, Variant.BASELINE)

    @property
    def spectral(self):
        if self._spectral is None:
            self._spectral = SpectralData.from_chart(self.model, self.chart)
        return self._spectral

    def corollary(self, theta):
        spectral = self.spectral
        if not self.model.coupling_is_self_adjoint:
            raise NotSelfAdjoint('Coupling operator is not self-adjoint',
                                 defect=float(hermitian_defect(self.model.coupling)))
        if spectral.count != self.chart.dim_m or np.max(
                frobenius(spectral.projectors - self.chart.generators)) > 1e-10:
            raise InvariantViolation('Chart generators are not the spectral projectors of L')

        point = self.point(theta)
        phi = self._pair(point.rho, self.hamiltonian_pairing)
        xi = spectral.eigenvalues ** 2
        g = 2.0 * spectral.eigenvalues
        f = point.fisher.solve(phi) - 2.0 * xi
        return CoefficientSet(f, g, Variant.COROLLARY, np.zeros((g.size, g.size)), {'phi': phi, 'xi': xi})

    def evaluate(self, variant, theta):
        variant = Variant.parse(variant)
        return {
            Variant.NEW_STRATONOVICH: self.new_abstract,
            Variant.NEW_ITO: self.ito,
            Variant.BASELINE: self.baseline,
            Variant.COROLLARY: self.corollary,
        }[variant](theta)

    def check_point(self, point):
        """Chart states along a trajectory must stay valid unnormalized states."""
        return check_state(point.rho)


def new_coefficients_abstract(chart, theta, model):
    return CoefficientEngine(chart, model).new_abstract(theta)


def new_coefficients_coordinates(chart, theta, model):
    return CoefficientEngine(chart, model).new_coordinates(theta)


def ito_coefficients(chart, theta, model):
    return CoefficientEngine(chart, model).ito(theta)


def baseline_coefficients(chart, theta, model):
    return CoefficientEngine(chart, model).baseline(theta)


def corollary42_coefficients(spectral, chart, theta, model):
    return CoefficientEngine(chart, model, spectral).corollary(theta)


def coefficients_for(variant, chart, theta, model, spectral=None):
    return CoefficientEngine(chart, model, spectral).evaluate(variant, theta)
