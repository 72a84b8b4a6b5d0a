"""
Domain types of the exponential submanifold

    ρ̄_θ = e^{½ Σ θ_i A_i} ρ_0 e^{½ Σ θ_i A_i}

with pairwise commuting self-adjoint generators A_i.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from core.conf import lab_settings
from core.exceptions import (
    DimensionMismatch, InvariantViolation, NonCommutingGenerators, NotSelfAdjoint,
    OverflowGuard, SingularMetric,
)
from operator_algebra.models import as_matrix, check_state, frobenius, hermitian_defect
from operator_algebra.operators import SharedBasis, commutation_defect, stack_generators


@dataclass(frozen=True, eq=False)
class Chart:
    generators: np.ndarray
    base_state: np.ndarray

    def __post_init__(self):
        gens = stack_generators(self.generators)
        m, n = gens.shape[0], gens.shape[-1]
        base = as_matrix(self.base_state, dim=n, name='base state')

        if m < 1 or m > n * n:
            raise DimensionMismatch('Chart needs between 1 and n² generators', m=m, n=n)

        for i, generator in enumerate(gens):
            defect = float(hermitian_defect(generator))
            if defect > lab_settings.GENERATOR_HERMITIAN_TOL * max(1.0, float(frobenius(generator))):
                raise NotSelfAdjoint('Chart generator is not self-adjoint', generator=i, defect=defect)

        defect = commutation_defect(gens)
        if defect > lab_settings.COMMUTE_TOL:
            raise NonCommutingGenerators(defect=defect)

        check_state(base, unit_trace=True)

        gens.setflags(write=False)
        object.__setattr__(self, 'generators', gens)
        object.__setattr__(self, 'base_state', base)
        object.__setattr__(self, 'basis', SharedBasis.find(gens))

    @property
    def dim_n(self):
        return self.generators.shape[-1]

    @property
    def dim_m(self):
        return self.generators.shape[0]

    @cached_property
    def pair_products(self):
        """A_p A_q, shape (m, m, n, n)."""
        return np.einsum('pab,qbc->pqac', self.generators, self.generators)

    def combine(self, weights):
        """Σ w_i A_i."""
        return np.einsum('i,iab->ab', np.asarray(weights, dtype=float), self.generators)

    def pairing(self, nu):
        """e-representation pairing [Tr(ν A_j)]_j, real part."""
        return np.einsum('ab,jba->j', nu, self.generators).real

    def _basis_weights(self, rho):
        if self.basis.vectors is None:
            return np.real(np.diagonal(rho)).copy()
        v = self.basis.vectors
        return np.real(np.einsum('ai,ab,bi->i', np.conj(v), rho, v))

    def second_moments(self, rho):
        """[Tr(ρ A_j A_k)]_{jk}."""
        if self.basis is not None:
            w = self._basis_weights(rho)
            d = self.basis.diagonals
            return np.einsum('a,ja,ka->jk', w, d, d)
        return np.einsum('ab,jkba->jk', rho, self.pair_products).real

    def third_moments(self, rho):
        """[Tr(ρ A_i A_j A_k)]_{ijk}; symmetric in all indices for a commuting family."""
        if self.basis is not None:
            w = self._basis_weights(rho)
            d = self.basis.diagonals
            return np.einsum('a,ia,ja,ka->ijk', w, d, d, d)
        return np.einsum('ab,ijbc,kca->ijk', rho, self.pair_products, self.generators).real

    def __str__(self):
        return f'Chart(n={self.dim_n}, m={self.dim_m})'


@dataclass(frozen=True, eq=False)
class ThetaPoint:
    coords: np.ndarray

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float).reshape(-1)
        if not np.all(np.isfinite(coords)):
            raise OverflowGuard('Chart coordinates are not finite', coords=coords)
        box = lab_settings.THETA_BOX
        if coords.size and float(np.max(np.abs(coords))) > box:
            raise OverflowGuard(max_abs=float(np.max(np.abs(coords))), box=box)
        coords.setflags(write=False)
        object.__setattr__(self, 'coords', coords)

    @classmethod
    def origin(cls, m):
        return cls(np.zeros(m))

    @property
    def dim(self):
        return self.coords.shape[0]


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    """
    Quantum Fisher matrix R(θ) with its Cholesky factor.

    Singularity is judged on the unit-diagonal scaling S⁻¹RS⁻¹, S = diag(√r_ii):
    a collapsing filter drives the diagonal over many orders of magnitude
    while the chart stays non-degenerate.
    """

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        scale = max(1.0, float(np.max(np.abs(entries)))) if entries.size else 1.0
        asymmetry = float(np.max(np.abs(entries - entries.T))) if entries.size else 0.0
        if asymmetry > 1e-12 * scale:
            raise InvariantViolation('Fisher matrix is not symmetric', defect=asymmetry)
        entries = 0.5 * (entries + entries.T)

        diagonal = np.diag(entries).copy()
        if diagonal.size == 0 or np.min(diagonal) <= 0.0:
            raise SingularMetric('Fisher matrix has a non-positive diagonal', diagonal=diagonal)
        root = np.sqrt(diagonal)
        scaled = entries / np.outer(root, root)
        scaled_eigenvalues = np.linalg.eigvalsh(scaled)
        if scaled_eigenvalues[0] <= lab_settings.SINGULAR_RATIO * scaled_eigenvalues[-1]:
            raise SingularMetric(
                min_eigenvalue=float(scaled_eigenvalues[0]), max_eigenvalue=float(scaled_eigenvalues[-1]),
            )

        eigenvalues = np.linalg.eigvalsh(entries)
        smallest, largest = float(eigenvalues[0]), float(eigenvalues[-1])
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)
        object.__setattr__(self, 'eigenvalues', eigenvalues)
        object.__setattr__(self, 'condition_estimate', largest / smallest if smallest > 0.0 else np.inf)
        object.__setattr__(self, '_root', root)
        object.__setattr__(self, '_factor', cho_factor(scaled))

    @property
    def dim(self):
        return self.entries.shape[0]

    def solve(self, rhs):
        """R⁻¹ rhs; ``rhs`` may be a vector or an (m, k) matrix."""
        rhs = np.asarray(rhs, dtype=float)
        root = self._root if rhs.ndim == 1 else self._root[:, None]
        return cho_solve(self._factor, rhs / root) / root

    @cached_property
    def inverse(self):
        return self.solve(np.eye(self.dim))
