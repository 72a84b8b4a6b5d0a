"""
Super-operators of the filtering equations.

    commutator                      [A, B]
    lindblad                        𝓛(X)  = i[H,X] + L†XL − ½(L†LX + XL†L)
    adjoint_lindblad                𝓛†(ρ) = −i[H,ρ] + LρL† − ½(L†Lρ + ρL†L)
    stratonovich_drift_correction   𝒮_L(ρ̄) = ((L+L†)Lρ̄ + ρ̄L†(L+L†)) / 2
    drift / diffusion               D⁰(ρ̄) = −i[H,ρ̄] − 𝒮_L(ρ̄),  D¹(ρ̄) = Lρ̄ + ρ̄L†

All functions are pure and broadcast over leading stack dimensions.
"""

import numpy as np
from scipy.linalg import expm

from core.conf import lab_settings
from core.exceptions import (
    DimensionMismatch, InvariantViolation, NonCommutingGenerators, NonPositiveTrace,
)
from .models import (
    DensityState, UnnormalizedState, dagger, frobenius, hermitian_defect,
    hermitian_part, require_same_dim, trace,
)


def commutator(a, b):
    require_same_dim(a, b)
    return a @ b - b @ a


def anticommutator(a, b):
    require_same_dim(a, b)
    return a @ b + b @ a


def _check_model_dim(model, x):
    if x.shape[-1] != model.dim or x.shape[-2] != model.dim:
        raise DimensionMismatch(model_dim=model.dim, shape=list(x.shape))


def _preserves_hermiticity(x, out):
    tol = lab_settings.OUTPUT_HERMITIAN_TOL
    x_herm = hermitian_defect(x) <= lab_settings.HERMITIAN_RTOL * (1.0 + frobenius(x))
    out_defect = hermitian_defect(out)
    bad = x_herm & (out_defect > tol * (1.0 + frobenius(out)))
    if np.any(bad):
        raise InvariantViolation(
            'Super-operator broke self-adjointness', defect=float(np.max(out_defect)),
        )
    return out


def lindblad(model, x):
    """Heisenberg-picture generator, the exact trace dual of ``adjoint_lindblad``."""
    _check_model_dim(model, x)
    H, L, Ld = model.hamiltonian, model.coupling, model.coupling_dagger
    LdL = Ld @ L
    out = 1j * (H @ x - x @ H) + Ld @ x @ L - 0.5 * (LdL @ x + x @ LdL)
    return _preserves_hermiticity(x, out)


def adjoint_lindblad(model, rho):
    _check_model_dim(model, rho)
    H, L, Ld = model.hamiltonian, model.coupling, model.coupling_dagger
    LdL = Ld @ L
    out = -1j * (H @ rho - rho @ H) + L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
    return _preserves_hermiticity(rho, out)


def stratonovich_drift_correction(model, rho_bar):
    _check_model_dim(model, rho_bar)
    L, Ld = model.coupling, model.coupling_dagger
    S = L + Ld
    out = 0.5 * (S @ L @ rho_bar + rho_bar @ Ld @ S)
    return _preserves_hermiticity(rho_bar, out)


def drift(model, rho_bar):
    """D⁰ of the unnormalized Stratonovich filter."""
    H = model.hamiltonian
    return -1j * (H @ rho_bar - rho_bar @ H) - stratonovich_drift_correction(model, rho_bar)


def diffusion(model, rho_bar):
    """D¹ of the unnormalized Stratonovich filter."""
    _check_model_dim(model, rho_bar)
    return model.coupling @ rho_bar + rho_bar @ model.coupling_dagger


def hs_distance(a, b):
    """Hilbert–Schmidt distance; equals √Tr((A−B)²) for self-adjoint A − B."""
    require_same_dim(a, b)
    return frobenius(a - b)


def normalize(rho_bar):
    """ρ = ρ̄ / Tr(ρ̄); NonPositiveTrace below the trace floor."""
    matrix = rho_bar.matrix if isinstance(rho_bar, UnnormalizedState) else rho_bar
    tr = float(trace(matrix).real)
    if tr <= lab_settings.TRACE_FLOOR:
        raise NonPositiveTrace(trace=tr)
    return DensityState(hermitian_part(matrix) / tr)


# ─────────────────────────────────────────────────────────────────────────────
# Exponentials of commuting self-adjoint families
# ─────────────────────────────────────────────────────────────────────────────

class SharedBasis:
    """
    Joint eigen-decomposition A_i = V diag(d_i) V† of a commuting family.

    ``vectors`` is None when every generator is already diagonal. When no
    generator has a non-degenerate spectrum the basis is unavailable and
    ``commuting_exponential`` falls back to scaling-and-squaring.
    """

    def __init__(self, vectors, diagonals):
        self.vectors = vectors
        self.diagonals = diagonals

    @classmethod
    def find(cls, generators, tol=None):
        tol = lab_settings.COMMUTE_TOL if tol is None else tol
        n = generators.shape[-1]
        off_diagonal = generators - generators * np.eye(n)
        if np.all(frobenius(off_diagonal) <= tol):
            return cls(None, np.real(np.diagonal(generators, axis1=-2, axis2=-1)).copy())

        for generator in generators:
            values, vectors = np.linalg.eigh(hermitian_part(generator))
            if np.min(np.diff(values)) <= 1e3 * tol * max(1.0, np.max(np.abs(values))):
                continue
            rotated = dagger(vectors) @ generators @ vectors
            diagonals = np.real(np.diagonal(rotated, axis1=-2, axis2=-1)).copy()
            rebuilt = np.einsum('ab,ib,cb->iac', vectors, diagonals, np.conj(vectors))
            if np.all(frobenius(rebuilt - generators) <= tol):
                return cls(vectors, diagonals)
        return None

    def exponential(self, weights):
        exponents = np.exp(0.5 * (np.asarray(weights) @ self.diagonals))
        if self.vectors is None:
            n = exponents.shape[-1]
            return exponents[..., :, None] * np.eye(n)
        return (self.vectors * exponents[..., None, :]) @ dagger(self.vectors)


def stack_generators(generators):
    gens = np.array([np.asarray(g, dtype=np.complex128) for g in generators])
    if gens.ndim != 3 or gens.shape[-1] != gens.shape[-2]:
        raise DimensionMismatch('Generators must be equal-sized square matrices')
    return gens


def commutation_defect(generators):
    """max_{i<j} ‖[A_i, A_j]‖_F."""
    worst = 0.0
    for i in range(len(generators)):
        for j in range(i + 1, len(generators)):
            worst = max(worst, float(frobenius(commutator(generators[i], generators[j]))))
    return worst


def exponential_from_basis(basis, generators, weights):
    weights = np.asarray(weights, dtype=float)
    if basis is not None:
        return basis.exponential(weights)
    exponent = 0.5 * np.einsum('...i,iab->...ab', weights, generators)
    return expm(exponent)


def commuting_exponential(generators, weights):
    """e^{½ Σ θ_i A_i} for pairwise commuting self-adjoint A_i."""
    gens = stack_generators(generators)
    weights = np.asarray(weights, dtype=float)
    if weights.shape[-1] != gens.shape[0]:
        raise DimensionMismatch(
            'One weight per generator is required', weights=weights.shape[-1], generators=gens.shape[0],
        )

    defect = commutation_defect(gens)
    if defect > lab_settings.COMMUTE_TOL:
        raise NonCommutingGenerators(defect=defect)

    return exponential_from_basis(SharedBasis.find(gens), gens, weights)
