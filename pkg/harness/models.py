"""
Scenario, per-path outcomes, the comparison report and the run manifest.

Ensemble statistics are summed with ``math.fsum`` so they do not depend on
the order in which paths come back.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from core.conf import lab_settings
from quantum_filters.models import Variant


def exact_mean(values):
    """Column means of a (paths, points) array, independent of row order."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] == 0:
        return np.full(values.shape[1:], np.nan)
    return np.array([math.fsum(column) for column in values.T]) / values.shape[0]


def exact_std(values):
    values = np.asarray(values, dtype=float)
    if values.shape[0] == 0:
        return np.full(values.shape[1:], np.nan)
    centred = values - exact_mean(values)
    return np.sqrt(np.array([math.fsum(column) for column in (centred ** 2).T]) / values.shape[0])


@dataclass(frozen=True, eq=False)
class Scenario:
    """
    One experiment: the system, the chart and the Monte Carlo grid.

    Noise lives on the fine grid δt = T / 2^log2_steps; the filters step with
    Δt = integrator_factor · δt.
    """

    name: str
    model: object
    chart: object
    rho0: np.ndarray
    horizon: float
    log2_steps: int
    integrator_factor: int
    paths: int
    seed: int
    filters: tuple
    digest: str = ''
    source: dict = field(default_factory=dict)

    @property
    def fine_steps(self):
        return 2 ** self.log2_steps

    @property
    def fine_step(self):
        return self.horizon / self.fine_steps

    @property
    def integrator_step(self):
        return self.fine_step * self.integrator_factor

    @property
    def filter_steps(self):
        return self.fine_steps // self.integrator_factor

    @property
    def variants(self):
        return tuple(Variant.parse(v) for v in self.filters)

    def __str__(self):
        return f'{self.name} (n={self.model.dim}, m={self.chart.dim_m}, T={self.horizon:g}, paths={self.paths})'


@dataclass(frozen=True, eq=False)
class PathOutcome:
    """Distance series of one path, or the error that excluded it."""

    index: int
    checksum: str = ''
    distances: dict = field(default_factory=dict)
    squared_errors: dict = field(default_factory=dict)
    failure: dict = None

    @property
    def failed(self):
        return self.failure is not None


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """
    Hilbert–Schmidt distances √Tr((ρ_t − ρ_{θ_t})²) per accepted path and variant.

    ``distances[v]`` and ``squared_errors[v]`` have shape (accepted paths, len(times)).
    """

    scenario_name: str
    digest: str
    seed: int
    times: np.ndarray
    variants: tuple
    path_indices: tuple
    distances: dict
    squared_errors: dict
    checksums: tuple = ()
    failures: tuple = ()

    @classmethod
    def from_outcomes(cls, scenario, times, outcomes):
        accepted = [o for o in outcomes if not o.failed]
        variants = tuple(v.value for v in scenario.variants)
        width = len(times)

        def stack(attr, v):
            rows = [getattr(o, attr)[v] for o in accepted]
            return np.array(rows).reshape(len(rows), width)

        return cls(
            scenario_name=scenario.name,
            digest=scenario.digest,
            seed=scenario.seed,
            times=np.asarray(times, dtype=float),
            variants=variants,
            path_indices=tuple(o.index for o in accepted),
            distances={v: stack('distances', v) for v in variants},
            squared_errors={v: stack('squared_errors', v) for v in variants},
            checksums=tuple(o.checksum for o in accepted),
            failures=tuple(dict(o.failure, path=o.index) for o in outcomes if o.failed),
        )

    @property
    def accepted(self):
        return len(self.path_indices)

    def mean(self, variant):
        return exact_mean(self.distances[variant])

    def std(self, variant):
        return exact_std(self.distances[variant])

    def mean_squared_error(self, variant):
        """Ensemble mean of ‖ρ_t − ρ_{θ_t}‖²_F."""
        return exact_mean(self.squared_errors[variant])

    def time_averages(self, variant):
        """Per-path time average of the distance."""
        return np.array([math.fsum(row) / row.shape[0] for row in self.distances[variant]])

    def time_averaged_mean(self, variant):
        averages = self.time_averages(variant)
        return math.fsum(averages) / averages.shape[0] if averages.size else float('nan')

    def win_rate(self, challenger='new', reference='old'):
        """Fraction of paths whose time-averaged distance for ``challenger`` is ≤ that of ``reference``."""
        if challenger not in self.distances or reference not in self.distances or not self.accepted:
            return None
        wins = self.time_averages(challenger) <= self.time_averages(reference)
        return float(np.count_nonzero(wins)) / wins.shape[0]

    def header(self):
        columns = ['time']
        for v in self.variants:
            columns += [f'mean_{v}', f'std_{v}']
        return columns

    def rows(self):
        if not self.variants:
            return
        stats = [(self.mean(v), self.std(v)) for v in self.variants]
        for j, t in enumerate(self.times):
            row = [t]
            for mean, std in stats:
                row += [mean[j], std[j]]
            yield row

    def squared_error_header(self):
        return ['time'] + [f'msq_{v}' for v in self.variants]

    def squared_error_rows(self):
        if not self.variants:
            return
        series = [self.mean_squared_error(v) for v in self.variants]
        for j, t in enumerate(self.times):
            yield [t] + [s[j] for s in series]

    def summary(self):
        return {
            'scenario': self.scenario_name,
            'seed': self.seed,
            'accepted_paths': self.accepted,
            'failed_paths': len(self.failures),
            'time_averaged_distance': {v: self.time_averaged_mean(v) for v in self.variants},
            'win_rate_new_vs_old': self.win_rate(),
        }


@dataclass
class RunManifest:
    """What was run and what it wrote; equal manifests imply byte-identical CSV files."""

    command: str
    digest: str
    seed: int
    streams: list
    outputs: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    version: str = None

    def __post_init__(self):
        if self.version is None:
            self.version = lab_settings.VERSION

    def as_dict(self):
        return {
            'command': self.command,
            'config_digest': self.digest,
            'seed': self.seed,
            'code_version': self.version,
            'rng': 'philox(seed, stream)',
            'streams': list(self.streams),
            'outputs': list(self.outputs),
            'failures': list(self.failures),
            'summary': self.summary,
        }

    def write(self, path):
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(self.as_dict(), handle, indent=2, sort_keys=True, default=_plain)
            handle.write('\n')
        return path


def _plain(value):
    if hasattr(value, 'tolist'):
        return value.tolist()
    raise TypeError(f'{type(value).__name__} is not JSON serializable')
