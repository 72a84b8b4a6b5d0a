"""
Domain types of the operator algebra: dense complex matrices, the system
model (H, L) and the two kinds of filter state.

Matrices are plain ``numpy`` arrays of dtype complex128 with shape (n, n).
Most helpers also accept a stack of shape (..., n, n) so Monte Carlo code can
advance many paths at once.
"""

from dataclasses import dataclass

import numpy as np

from core.conf import lab_settings
from core.exceptions import (
    DimensionMismatch, InvariantViolation, NonPositiveTrace, NotSelfAdjoint,
)

ComplexMatrix = np.ndarray


def as_matrix(value, dim=None, name='matrix'):
    """Return a read-only complex128 copy of ``value`` checked to be square (and n×n when dim is given)."""
    matrix = np.array(value, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatch(f'{name} must be a square matrix', shape=list(matrix.shape))
    if dim is not None and matrix.shape[0] != dim:
        raise DimensionMismatch(f'{name} must be {dim}x{dim}', shape=list(matrix.shape), dim=dim)
    if matrix.shape[0] > lab_settings.MAX_MATRIX_DIM:
        raise DimensionMismatch(
            f'{name} exceeds the supported dimension',
            dim=matrix.shape[0], max_dim=lab_settings.MAX_MATRIX_DIM,
        )
    matrix.setflags(write=False)
    return matrix


def dagger(x):
    return np.conj(np.swapaxes(x, -1, -2))


def hermitian_part(x):
    return 0.5 * (x + dagger(x))


def frobenius(x):
    return np.linalg.norm(x, axis=(-2, -1))


def hermitian_defect(x):
    """‖X − X†‖_F (per matrix for stacks)."""
    return frobenius(x - dagger(x))


def trace(x):
    return np.trace(x, axis1=-2, axis2=-1)


def require_same_dim(*matrices):
    dims = {m.shape[-1] for m in matrices} | {m.shape[-2] for m in matrices}
    if len(dims) != 1:
        raise DimensionMismatch(shapes=[list(m.shape) for m in matrices])
    return dims.pop()


def state_statistics(matrix):
    """Measured defects of a candidate state: Hermiticity, trace and smallest eigenvalue."""
    return {
        'hermitian_defect': float(hermitian_defect(matrix)),
        'norm': float(frobenius(matrix)),
        'trace': complex(trace(matrix)),
        'min_eigenvalue': float(np.linalg.eigvalsh(hermitian_part(matrix))[0]),
    }


def check_state(matrix, unit_trace=False):
    stats = state_statistics(matrix)

    if stats['hermitian_defect'] > lab_settings.HERMITIAN_RTOL * max(1.0, stats['norm']):
        raise NotSelfAdjoint('State matrix is not self-adjoint', defect=stats['hermitian_defect'])

    tr = stats['trace']
    if abs(tr.imag) > lab_settings.HERMITIAN_RTOL * max(1.0, abs(tr.real)):
        raise InvariantViolation('State trace is not real', trace_imag=tr.imag)
    if tr.real <= lab_settings.TRACE_FLOOR:
        raise NonPositiveTrace(trace=tr.real)
    if unit_trace and abs(tr.real - 1.0) > lab_settings.TRACE_TOL:
        raise InvariantViolation('Density state trace is not one', trace=tr.real)

    if stats['min_eigenvalue'] < lab_settings.EIGEN_FLOOR:
        raise InvariantViolation(
            'State is not positive semidefinite', min_eigenvalue=stats['min_eigenvalue'],
        )
    return stats


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Hamiltonian H (ħ = 1) and coupling operator L of the monitored system."""

    hamiltonian: ComplexMatrix
    coupling: ComplexMatrix

    def __post_init__(self):
        hamiltonian = as_matrix(self.hamiltonian, name='hamiltonian')
        coupling = as_matrix(self.coupling, dim=hamiltonian.shape[0], name='coupling')

        defect = float(hermitian_defect(hamiltonian))
        if defect > lab_settings.HAMILTONIAN_RTOL * max(1.0, float(frobenius(hamiltonian))):
            raise NotSelfAdjoint('Hamiltonian is not self-adjoint', defect=defect)

        object.__setattr__(self, 'hamiltonian', hamiltonian)
        object.__setattr__(self, 'coupling', coupling)
        object.__setattr__(self, 'coupling_dagger', as_matrix(dagger(coupling)))

    @property
    def dim(self):
        return self.hamiltonian.shape[0]

    @property
    def coupling_is_self_adjoint(self):
        return float(hermitian_defect(self.coupling)) <= lab_settings.HERMITIAN_RTOL * max(
            1.0, float(frobenius(self.coupling))
        )

    @classmethod
    def zero(cls, dim):
        return cls(np.zeros((dim, dim)), np.zeros((dim, dim)))

    def __str__(self):
        return f'SystemModel(n={self.dim})'


@dataclass(frozen=True, eq=False)
class UnnormalizedState:
    """ρ̄: self-adjoint, positive semidefinite, strictly positive trace."""

    matrix: ComplexMatrix

    def __post_init__(self):
        matrix = as_matrix(self.matrix, name='unnormalized state')
        check_state(matrix)
        object.__setattr__(self, 'matrix', matrix)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def trace(self):
        return float(trace(self.matrix).real)


@dataclass(frozen=True, eq=False)
class DensityState:
    """ρ: self-adjoint, positive semidefinite, unit trace."""

    matrix: ComplexMatrix

    def __post_init__(self):
        matrix = as_matrix(self.matrix, name='density state')
        check_state(matrix, unit_trace=True)
        object.__setattr__(self, 'matrix', matrix)

    @property
    def dim(self):
        return self.matrix.shape[0]
