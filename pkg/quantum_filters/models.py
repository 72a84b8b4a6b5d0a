"""
Filter coefficients, spectral data of a self-adjoint coupling and filter
trajectories.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from core.conf import lab_settings
from core.exceptions import DimensionMismatch, InvariantViolation, LabError, NotSelfAdjoint
from operator_algebra.models import frobenius, hermitian_defect, hermitian_part


class Variant(Enum):
    NEW_STRATONOVICH = 'new'
    NEW_ITO = 'ito'
    BASELINE = 'old'
    COROLLARY = 'corollary'

    @property
    def label(self):
        return {
            Variant.NEW_STRATONOVICH: 'NewStratonovich',
            Variant.NEW_ITO: 'NewIto',
            Variant.BASELINE: 'Baseline',
            Variant.COROLLARY: 'Corollary42',
        }[self]

    @property
    def is_ito(self):
        return self is Variant.NEW_ITO

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for variant in cls:
            if value in (variant.value, variant.label, variant.name):
                return variant
        raise LabError('Unknown filter variant', variant=value, allowed=[v.value for v in cls])


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """
    Drift f and diffusion g of dθ = f dt + g ∘ dY (or dθ = f dt + g dY for NewIto).

    ``g_jacobian[p, q]`` is ∂g_p/∂θ_q when the variant computed it; ``extras``
    holds the intermediate vectors (Ψ, Γ, Φ, Ξ, Δ_j) and diagnostics.
    """

    f: np.ndarray
    g: np.ndarray
    variant: Variant
    g_jacobian: np.ndarray = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.array(self.f, dtype=float).reshape(-1)
        g = np.array(self.g, dtype=float).reshape(-1)
        if f.shape != g.shape:
            raise DimensionMismatch('f and g must have the same length', f=f.shape[0], g=g.shape[0])
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
            raise InvariantViolation('Filter coefficients are not finite', f=f, g=g)
        object.__setattr__(self, 'f', f)
        object.__setattr__(self, 'g', g)

    @property
    def m(self):
        return self.f.shape[0]


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Nonzero eigenvalues λ̄_i of a self-adjoint L with mutually orthogonal projectors P̄_i."""

    eigenvalues: np.ndarray
    projectors: np.ndarray

    def __post_init__(self):
        eigenvalues = np.array(self.eigenvalues, dtype=float).reshape(-1)
        projectors = np.array(self.projectors, dtype=np.complex128)
        if projectors.ndim != 3 or projectors.shape[0] != eigenvalues.shape[0]:
            raise DimensionMismatch('One projector per eigenvalue is required')

        products = np.einsum('jab,kbc->jkac', projectors, projectors)
        expected = np.einsum('jk,kac->jkac', np.eye(len(eigenvalues)), projectors)
        defect = float(np.max(frobenius(products - expected))) if len(eigenvalues) else 0.0
        if defect > 1e-10:
            raise InvariantViolation('Projectors are not idempotent and mutually orthogonal', defect=defect)

        object.__setattr__(self, 'eigenvalues', eigenvalues)
        object.__setattr__(self, 'projectors', projectors)

    @property
    def count(self):
        return self.eigenvalues.shape[0]

    def reconstruct(self):
        return np.einsum('i,iab->ab', self.eigenvalues, self.projectors)

    @staticmethod
    def _require_self_adjoint(model):
        if not model.coupling_is_self_adjoint:
            raise NotSelfAdjoint('Coupling operator is not self-adjoint',
                                 defect=float(hermitian_defect(model.coupling)))

    def _check_reconstruction(self, model):
        defect = float(frobenius(self.reconstruct() - model.coupling))
        if defect > 1e-10:
            raise InvariantViolation('Spectral data does not reconstruct L', defect=defect)
        return self

    @classmethod
    def from_coupling(cls, model):
        """The decomposition over the n̄(L) distinct nonzero eigenvalues."""
        cls._require_self_adjoint(model)
        tol = lab_settings.SPECTRAL_GROUPING_TOL
        values, vectors = np.linalg.eigh(hermitian_part(model.coupling))

        groups = [[0]]
        for i in range(1, len(values)):
            if values[i] - values[groups[-1][-1]] <= tol:
                groups[-1].append(i)
            else:
                groups.append([i])

        eigenvalues, projectors = [], []
        for group in groups:
            value = float(np.mean(values[group]))
            if abs(value) <= tol:
                continue
            v = vectors[:, group]
            eigenvalues.append(value)
            projectors.append(v @ v.conj().T)
        return cls(np.array(eigenvalues), np.array(projectors).reshape(-1, model.dim, model.dim))._check_reconstruction(model)

    @classmethod
    def from_chart(cls, model, chart):
        """
        L = Σ λ_i A_i over a chart of orthogonal projectors.

        Eigenvalues may repeat or vanish here, which allows the closed-form
        coefficients on charts finer than the spectral decomposition.
        """
        cls._require_self_adjoint(model)
        generators = chart.generators
        sizes = np.trace(generators, axis1=-2, axis2=-1).real
        eigenvalues = np.einsum('ab,iba->i', model.coupling, generators).real / sizes
        return cls(eigenvalues, generators)._check_reconstruction(model)


@dataclass(frozen=True, eq=False)
class FilterTrajectory:
    """
    One filter run on a uniform grid.

    ``dy[j]`` is the observation increment over (t_{j-1}, t_j]; row 0 carries 0.
    Projection filters fill ``thetas`` (len(times) × m), full filters fill
    ``states`` (len(times) × n × n).
    """

    variant: str
    times: np.ndarray
    dy: np.ndarray
    thetas: np.ndarray = None
    states: np.ndarray = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        dy = np.asarray(self.dy, dtype=float)
        if dy.shape[0] != times.shape[0]:
            raise DimensionMismatch('One observation increment per grid point is required',
                                    times=times.shape[0], dy=dy.shape[0])
        if times.shape[0] > 2:
            steps = np.diff(times)
            if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
                raise LabError('Trajectory grid is not uniform')
        carried = self.thetas if self.thetas is not None else self.states
        if carried is None or np.asarray(carried).shape[0] != times.shape[0]:
            raise DimensionMismatch('Trajectory values must match the time grid')
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'dy', dy)

    @property
    def is_projection(self):
        return self.thetas is not None

    @property
    def state_dimension(self):
        """Real scalar equations integrated: m for a projection filter, n² − 1 for a density state."""
        if self.is_projection:
            return int(np.asarray(self.thetas).shape[1])
        n = np.asarray(self.states).shape[-1]
        return n * n - 1

    def header(self):
        if self.is_projection:
            return ['time', 'dY'] + [f'theta_{i + 1}' for i in range(np.asarray(self.thetas).shape[1])]
        n = np.asarray(self.states).shape[-1]
        return ['time', 'dY'] + [f'{part}_{a}{b}' for a in range(n) for b in range(n) for part in ('re', 'im')]

    def rows(self):
        values = np.asarray(self.thetas if self.is_projection else self.states)
        for t, dy, value in zip(self.times, self.dy, values):
            if self.is_projection:
                flat = list(value)
            else:
                flat = [x for entry in np.asarray(value).reshape(-1) for x in (entry.real, entry.imag)]
            yield [t, dy] + flat
