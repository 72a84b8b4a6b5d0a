"""
The filter comparison experiment.

Every path draws innovations dW on the fine grid from Philox(seed, path),
integrates the Itô filter as the truth and records dY along the way. The
projection filters only ever see dY, summed onto the integrator grid. One
record is built per path and handed unchanged to every variant, so all variants
of a path consume the same increments; the record checksum goes into the
manifest.
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.conf import lab_settings
from core.exceptions import LabError, RunFailed
from core.parallel import chunk_ranges, map_ordered, resolve_workers
from operator_algebra.models import frobenius, trace
from operator_algebra.operators import exponential_from_basis
from quantum_filters.coefficients import CoefficientEngine
from quantum_filters.dynamics import integrate_sme
from quantum_filters.projection import integrate_projection_filter
from stratonovich_taylor.models import WienerPath
from .models import ComparisonReport, PathOutcome

logger = logging.getLogger(__name__)


def normalized_chart_states(chart, thetas):
    """ρ_θ = ρ̄_θ / Tr(ρ̄_θ) for every row of ``thetas``."""
    e = exponential_from_basis(chart.basis, chart.generators, np.asarray(thetas, dtype=float))
    rho_bar = e @ chart.base_state @ e
    return rho_bar / trace(rho_bar).real[:, None, None]


def observation_path(scenario, index):
    """Truth states on the integrator grid and the coarse dY record of one path."""
    noise = WienerPath.sample(scenario.seed, index, scenario.fine_steps, scenario.fine_step)
    truth = integrate_sme(scenario.model, scenario.rho0, noise)
    record = WienerPath(noise.dt, truth.dy[1:], seed=scenario.seed, stream=index)
    factor = scenario.integrator_factor
    return truth.states[::factor], record.coarsen(factor)


def simulate_path(scenario, index, engine):
    try:
        truth, observations = observation_path(scenario, index)
        checksum = observations.checksum()
        distances, squared = {}, {}
        for variant in scenario.variants:
            trajectory = integrate_projection_filter(
                scenario.chart, scenario.model, variant, observations,
                scenario.integrator_step, scenario.horizon, engine=engine,
            )
            error = frobenius(truth - normalized_chart_states(scenario.chart, trajectory.thetas))
            distances[variant.value] = error
            squared[variant.value] = error ** 2
    except LabError as exc:
        failure = exc.as_dict()
        logger.warning('Path %d excluded: %s at t=%s', index, exc.code, exc.detail.get('time', '?'))
        return PathOutcome(index, failure=failure)
    return PathOutcome(index, checksum, distances, squared)


@dataclass(frozen=True)
class _Batch:
    scenario: object
    start: int
    stop: int


def _run_batch(batch):
    engine = CoefficientEngine(batch.scenario.chart, batch.scenario.model)
    return [simulate_path(batch.scenario, index, engine) for index in range(batch.start, batch.stop)]


def run_comparison(scenario, workers=None):
    """
    Hilbert–Schmidt distance between the truth and each projection filter,
    per path, on the integrator grid.

    Excluded paths are counted in the report; RunFailed when more than
    MAX_FAILED_FRACTION of the paths had to be excluded.
    """
    workers = resolve_workers(workers)
    logger.info('Comparison run %s: digest=%s seed=%d workers=%d',
                scenario, scenario.digest[:12], scenario.seed, workers)

    batches = [_Batch(scenario, start, stop) for start, stop in chunk_ranges(scenario.paths, workers)]
    outcomes = [outcome for batch in map_ordered(_run_batch, batches, workers) for outcome in batch]

    times = scenario.integrator_step * np.arange(scenario.filter_steps + 1)
    report = ComparisonReport.from_outcomes(scenario, times, outcomes)

    failed = len(report.failures)
    if failed > lab_settings.MAX_FAILED_FRACTION * scenario.paths:
        raise RunFailed(failed=failed, paths=scenario.paths, limit=lab_settings.MAX_FAILED_FRACTION,
                        failures=list(report.failures))

    logger.info('Comparison run %s finished: %d accepted, %d excluded',
                scenario.name, report.accepted, failed)
    return report
