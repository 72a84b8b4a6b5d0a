"""
Noise paths, sampled integrands and the results of expansions and
convergence studies.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import LabError, TimeOffGrid


def noise_generator(seed, stream):
    """
    Counter-based generator for one path: Philox keyed by (seed, stream).

    Draw j of the stream is a function of (seed, stream, j) only, so a path
    can be regenerated on any worker without replaying the others.
    """
    seed, stream = int(seed), int(stream)
    if not (0 <= seed < 2 ** 64 and 0 <= stream < 2 ** 64):
        raise LabError('Seed and stream must be unsigned 64-bit integers', seed=seed, stream=stream)
    return np.random.Generator(np.random.Philox(key=(seed << 64) | stream))


@dataclass(frozen=True, eq=False)
class WienerPath:
    """Driving noise on a uniform grid; ``cumulative[j]`` is Y(t0 + j·dt) with Y(t0) = 0."""

    dt: float
    increments: np.ndarray
    t0: float = 0.0
    seed: int = None
    stream: int = None

    def __post_init__(self):
        if not self.dt > 0:
            raise LabError('Path step must be positive', dt=self.dt)
        increments = np.array(self.increments, dtype=float).reshape(-1)
        increments.setflags(write=False)
        cumulative = np.concatenate(([0.0], np.cumsum(increments)))
        cumulative.setflags(write=False)
        object.__setattr__(self, 'increments', increments)
        object.__setattr__(self, 'cumulative', cumulative)

    @classmethod
    def sample(cls, seed, stream, steps, dt, t0=0.0):
        rng = noise_generator(seed, stream)
        return cls(dt, rng.standard_normal(steps) * np.sqrt(dt), t0, seed, stream)

    @property
    def steps(self):
        return self.increments.shape[0]

    @property
    def horizon(self):
        return self.t0 + self.steps * self.dt

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.steps + 1)

    def index_of(self, t):
        j = int(round((t - self.t0) / self.dt))
        if j < 0 or j > self.steps or abs(self.t0 + j * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise TimeOffGrid(time=t, t0=self.t0, dt=self.dt, steps=self.steps)
        return j

    def window(self, t1, t2):
        if t2 < t1:
            raise TimeOffGrid('Integration window is reversed', t1=t1, t2=t2)
        return self.index_of(t1), self.index_of(t2)

    def coarsen(self, factor):
        """Sum groups of ``factor`` fine increments into one coarse increment."""
        if factor < 1 or self.steps % factor:
            raise LabError('Coarsening factor must divide the step count', factor=factor, steps=self.steps)
        coarse = self.increments.reshape(-1, factor).sum(axis=1)
        return WienerPath(self.dt * factor, coarse, self.t0, self.seed, self.stream)

    def checksum(self):
        return hashlib.sha256(np.ascontiguousarray(self.increments).tobytes()).hexdigest()


@dataclass(frozen=True, eq=False)
class OperatorProcess:
    """Integrand sampled at every grid point; values have shape (len(times), ...)."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values)
        if values.shape[0] != times.shape[0]:
            raise LabError('One value per grid point is required', times=times.shape[0], values=values.shape[0])
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'values', values)

    @classmethod
    def constant(cls, times, value):
        times = np.asarray(times, dtype=float)
        value = np.asarray(value)
        return cls(times, np.broadcast_to(value, times.shape + value.shape))


@dataclass(frozen=True, eq=False)
class TaylorExpansionResult:
    order: int
    base_time: float
    eval_time: float
    value: np.ndarray
    terms: dict = field(default_factory=dict)

    @classmethod
    def assemble(cls, order, base_time, eval_time, terms):
        """value = Σ_α I^α(1) · coefficient(α)."""
        value = sum(integral * operator for integral, operator in terms.values())
        return cls(order, base_time, eval_time, np.asarray(value), dict(terms))

    def contribution(self, alpha):
        integral, operator = self.terms[alpha]
        return integral * operator


@dataclass(frozen=True, eq=False)
class ConvergenceStudyResult:
    order: int
    target: str
    horizons: np.ndarray
    mse: np.ndarray
    stderr: np.ndarray
    moment_bound: float
    slope: float
    paths: int
    seed: int
    fine_step: float

    CSV_COLUMNS = ('order', 'delta', 'mse', 'bound', 'paths', 'seed')

    @property
    def bound(self):
        """R·(2Δ)^{k+1} with R the empirical moment maximum."""
        return self.moment_bound * (2.0 * self.horizons) ** (self.order + 1)

    def rows(self):
        for delta, mse, bound in zip(self.horizons, self.mse, self.bound):
            yield (self.order, float(delta), float(mse), float(bound), self.paths, self.seed)
