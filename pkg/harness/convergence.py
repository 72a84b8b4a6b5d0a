from dataclasses import dataclass

import numpy as np

from core.exceptions import LabError
from manifold_geometry.geometry import ChartPoint
from operator_algebra.models import frobenius
from quantum_filters.coefficients import coefficients_for
from quantum_filters.dynamics import integrate_linear_filter
from stratonovich_taylor.convergence import TARGETS, convergence_study
from stratonovich_taylor.expansion import taylor_expand_projected, taylor_expand_true
from stratonovich_taylor.models import WienerPath

DEFAULT_HORIZONS = tuple(2.0 ** -e for e in range(5, 10))


def run_convergence(scenario, orders, horizons=DEFAULT_HORIZONS, paths=None, seed=None, *,
                    target='true', variant='new', workers=None):
    """
    One convergence study per order on the scenario's system.

    ``target="projected"`` measures the projected expansion on the scenario's
    chart with coefficients frozen at θ = 0 for ``variant``.
    """
    if target not in TARGETS:
        raise LabError('Unknown convergence target', target=target, allowed=list(TARGETS))
    orders = sorted({int(k) for k in orders})
    if not orders:
        raise LabError('At least one expansion order is required')

    paths = scenario.paths if paths is None else paths
    seed = scenario.seed if seed is None else seed
    return [
        convergence_study(scenario.model, scenario.rho0, k, horizons, paths, seed,
                          target=target, chart=scenario.chart, variant=variant, workers=workers)
        for k in orders
    ]


@dataclass(frozen=True, eq=False)
class ExpansionRun:
    """One order-k expansion over [0, Δ] with the fine-grid reference it approximates."""

    result: object
    reference: np.ndarray
    path: object
    target: str

    @property
    def error(self):
        return float(frobenius(self.reference - self.result.value))

    def rows(self):
        for alpha, (integral, operator) in sorted(self.result.terms.items(), key=lambda kv: kv[0].sort_key()):
            yield str(alpha), float(integral), float(frobenius(operator))


def run_expansion(scenario, k, delta, seed=None, stream=0, *, steps=256, target='true', variant='new'):
    """SE(X_Δ)_k at the scenario's initial state for one sampled path."""
    if target not in TARGETS:
        raise LabError('Unknown expansion target', target=target, allowed=list(TARGETS))
    if not delta > 0:
        raise LabError('Expansion horizon must be positive', delta=delta)
    seed = scenario.seed if seed is None else seed
    path = WienerPath.sample(seed, stream, steps, delta / steps)

    if target == 'true':
        result = taylor_expand_true(scenario.model, scenario.rho0, k, path, 0.0, path.horizon)
        reference = integrate_linear_filter(scenario.model, scenario.rho0, path.increments, path.dt).states[-1]
    else:
        origin = np.zeros(scenario.chart.dim_m)
        coefficients = coefficients_for(variant, scenario.chart, origin, scenario.model)
        result = taylor_expand_projected(scenario.chart, origin, coefficients, k, path, 0.0, path.horizon)
        theta = coefficients.f * path.horizon + coefficients.g * path.cumulative[-1]
        reference = ChartPoint(scenario.chart, theta).rho
    return ExpansionRun(result, reference, path, target)
