"""
Invariant suite behind ``manage.py validate``.

Each check is a function registered under a stable name; it returns a dict of
measured quantities and the tolerance they were held to, and fails by
returning ``passed=False`` or by raising a LabError. Two faults can be
injected to confirm the suite catches them:

    appendix-recursion   remainder sets built from a rule that drops every
                         index containing a zero
    fisher-spd           a chart whose first generator is listed twice
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import LabError
from manifold_geometry.models import Chart
from multi_index.models import MultiIndexSet
from multi_index.sets import remainder_by_recursion, remainder_set
from operator_algebra.models import SystemModel, trace
from operator_algebra.operators import adjoint_lindblad, lindblad
from quantum_filters.coefficients import CoefficientEngine
from quantum_filters.dynamics import integrate_sme
from quantum_filters.models import CoefficientSet, Variant
from quantum_filters.objective import first_order_residual, problem_objective
from quantum_filters.projection import integrate_projection_filter
from stratonovich_taylor.models import WienerPath
from .presets import four_level_chart, four_level_model, four_level_rho0

logger = logging.getLogger(__name__)

FAULTS = ('appendix-recursion', 'fisher-spd')

_CHECKS = []


def check(name):
    def register(fn):
        _CHECKS.append((name, fn))
        return fn
    return register


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    error: dict = None


@dataclass
class ValidationReport:
    results: list
    faults: tuple = ()

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    @property
    def failed_names(self):
        return [r.name for r in self.results if not r.passed]

    def rows(self):
        for r in self.results:
            yield r.name, 'PASS' if r.passed else 'FAIL', _summary(r)


def _summary(result):
    if result.error:
        return f"{result.error['code']}: {result.error['error']}"
    return ', '.join(f'{k}={v:.3g}' if isinstance(v, float) else f'{k}={v}' for k, v in result.detail.items())


def _rng(offset):
    return np.random.default_rng(20240501 + offset)


def _random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


def _random_density(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def _generic_system(rng, n=4):
    """A random model on a chart of commuting but non-diagonal projectors."""
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    generators = [np.outer(q[:, i], q[:, i]) for i in range(n)]
    coupling = 0.5 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    chart = Chart(generators, _random_density(rng, n))
    return chart, SystemModel(_random_hermitian(rng, n), coupling)


def _fibonacci(k):
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a


def _faulty_remainder(k):
    return MultiIndexSet.custom(beta for beta in remainder_set(k) if beta.zeros == 0)


# ─────────────────────────────────────────────────────────────────────────────
# Multi-index identities
# ─────────────────────────────────────────────────────────────────────────────

@check('appendix-recursion')
def _appendix_recursion(faults):
    rule = _faulty_remainder if 'appendix-recursion' in faults else remainder_set
    mismatched = [j for j in range(7) if not remainder_by_recursion(j, remainder=rule).same_members(remainder_set(j + 1))]
    return not mismatched, {'orders': '0..6', 'mismatched': mismatched or 'none'}


@check('remainder-cardinality')
def _remainder_cardinality(faults):
    sizes = [len(remainder_set(k)) for k in range(9)]
    bounded = all(size <= 2 ** (k + 1) for k, size in enumerate(sizes))
    counted = all(size == 2 * _fibonacci(k + 1) + _fibonacci(k) for k, size in enumerate(sizes))
    return bounded and counted, {'sizes': sizes}


# ─────────────────────────────────────────────────────────────────────────────
# Operators and geometry
# ─────────────────────────────────────────────────────────────────────────────

@check('lindblad-duality')
def _lindblad_duality(faults):
    rng = _rng(1)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 6))
        coupling = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        model = SystemModel(_random_hermitian(rng, n), coupling)
        x, rho = _random_hermitian(rng, n), _random_density(rng, n)
        gap = abs(trace(lindblad(model, x) @ rho) - trace(x @ adjoint_lindblad(model, rho)))
        worst = max(worst, float(gap))
    return worst <= 1e-10, {'max_gap': worst, 'tol': 1e-10}


@check('fisher-spd')
def _fisher_spd(faults):
    chart = four_level_chart()
    if 'fisher-spd' in faults:
        generators = list(chart.generators) + [chart.generators[0]]
        chart = Chart(generators, chart.base_state)
    engine = CoefficientEngine(chart, four_level_model())
    rng = _rng(2)
    worst = 0.0
    for theta in [np.zeros(chart.dim_m)] + [rng.uniform(-2, 2, chart.dim_m) for _ in range(20)]:
        fisher = engine.point(theta).fisher
        worst = max(worst, float(fisher.condition_estimate))
    return True, {'points': 21, 'max_condition': worst}


# ─────────────────────────────────────────────────────────────────────────────
# Coefficient cross-checks
# ─────────────────────────────────────────────────────────────────────────────

@check('diffusion-agreement')
def _diffusion_agreement(faults):
    rng = _rng(3)
    engine = CoefficientEngine(*_generic_system(rng))
    worst = 0.0
    for _ in range(100):
        theta = rng.uniform(-1, 1, 4)
        abstract = engine.new_abstract(theta).g
        coordinates = engine.new_coordinates(theta).g
        worst = max(worst, float(np.max(np.abs(abstract - coordinates)) / max(1.0, np.max(np.abs(abstract)))))
    return worst <= 1e-9, {'points': 100, 'max_rel_gap': worst, 'tol': 1e-9}


@check('jacobian-fd')
def _jacobian_fd(faults):
    rng = _rng(4)
    engine = CoefficientEngine(*_generic_system(rng))
    eps = 1e-5
    worst = 0.0
    for _ in range(10):
        theta = rng.uniform(-0.5, 0.5, 4)
        jacobian = engine.new_abstract(theta).g_jacobian
        for q in range(4):
            step = np.zeros(4)
            step[q] = eps
            column = (engine.diffusion(engine.point(theta + step))
                      - engine.diffusion(engine.point(theta - step))) / (2 * eps)
            scale = max(1.0, float(np.max(np.abs(column))))
            worst = max(worst, float(np.max(np.abs(jacobian[:, q] - column))) / scale)
    return worst <= 1e-5, {'max_rel_gap': worst, 'tol': 1e-5}


@check('drift-diagnostic')
def _drift_diagnostic(faults):
    rng = _rng(5)
    engine = CoefficientEngine(*_generic_system(rng))
    discrepancy, normal = 0.0, 0.0
    for _ in range(20):
        point = engine.point(rng.uniform(-1, 1, 4))
        coordinates = engine.new_coordinates(point)
        abstract = engine.new_abstract(point)
        nu = adjoint_lindblad(engine.model, point.rho) - 0.5 * engine.second_diffusion(
            point, abstract.g, abstract.g_jacobian)
        residual = nu - point.tangent_vector(abstract.f)
        normal = max(normal, float(np.max(np.abs(engine.chart.pairing(residual)))))
        discrepancy = max(discrepancy, coordinates.extras['discrepancy'])
    return normal <= 1e-9, {'max_normal_residual': normal, 'max_coordinate_discrepancy': discrepancy}


@check('ito-conversion')
def _ito_conversion(faults):
    rng = _rng(6)
    engine = CoefficientEngine(*_generic_system(rng))
    worst = 0.0
    for _ in range(20):
        theta = rng.uniform(-1, 1, 4)
        new, ito = engine.new_abstract(theta), engine.ito(theta)
        worst = max(worst, float(np.max(np.abs(ito.f - new.f - 0.5 * new.g_jacobian @ new.g))))
    return worst <= 1e-9, {'max_gap': worst, 'tol': 1e-9}


@check('corollary-reduction')
def _corollary_reduction(faults):
    chart, model = four_level_chart(), four_level_model(0.0)
    engine = CoefficientEngine(chart, model)
    rng = _rng(7)
    coefficient_gap, residual = 0.0, 0.0
    for _ in range(10):
        theta = rng.uniform(-1, 1, 4)
        new, closed = engine.new_abstract(theta), engine.corollary(theta)
        coefficient_gap = max(coefficient_gap, float(np.max(np.abs(new.f - closed.f))),
                              float(np.max(np.abs(new.g - closed.g))))
        residual = max(residual, first_order_residual(chart, theta, model, new.g))

    path = WienerPath.sample(7, 0, 512, 5.0 / 2 ** 11)
    new = integrate_projection_filter(chart, model, Variant.NEW_STRATONOVICH, path, path.dt, path.horizon, engine=engine)
    old = integrate_projection_filter(chart, model, Variant.BASELINE, path, path.dt, path.horizon, engine=engine)
    trajectory_gap = float(np.max(np.abs(new.thetas - old.thetas)))

    passed = coefficient_gap <= 1e-10 and residual <= 1e-10 and trajectory_gap <= 1e-9
    return passed, {'coefficient_gap': coefficient_gap, 'first_order_residual': residual,
                    'trajectory_gap': trajectory_gap}


@check('objective-optimality')
def _objective_optimality(faults):
    chart, model = four_level_chart(), four_level_model()
    engine = CoefficientEngine(chart, model)
    rng = _rng(8)
    delta = 0.01
    beaten = 0
    for _ in range(5):
        theta = rng.uniform(-0.5, 0.5, 4)
        best = engine.new_abstract(theta)
        first = problem_objective(chart, theta, model, best, 1, delta)
        second = problem_objective(chart, theta, model, best, 2, delta)
        for _ in range(4):
            bumped_g = CoefficientSet(best.f, best.g + 1e-3 * rng.normal(size=4), Variant.NEW_STRATONOVICH,
                                      best.g_jacobian)
            bumped_f = CoefficientSet(best.f + 1e-3 * rng.normal(size=4), best.g, Variant.NEW_STRATONOVICH,
                                      best.g_jacobian)
            beaten += problem_objective(chart, theta, model, bumped_g, 1, delta) < first
            beaten += problem_objective(chart, theta, model, bumped_f, 2, delta) < second
    return beaten == 0, {'perturbations': 40, 'beaten': beaten}


@check('state-dimension')
def _state_dimension(faults):
    chart, model = four_level_chart(), four_level_model()
    noise = WienerPath.sample(0, 0, 8, 5.0 / 2 ** 12)
    truth = integrate_sme(model, four_level_rho0(), noise)
    projected = integrate_projection_filter(chart, model, Variant.NEW_STRATONOVICH, noise, noise.dt, noise.horizon)
    sizes = {'projection': projected.state_dimension, 'density': truth.state_dimension}
    return sizes == {'projection': 4, 'density': 15}, sizes


def run_validate(faults=()):
    faults = tuple(faults)
    unknown = sorted(set(faults) - set(FAULTS))
    if unknown:
        raise LabError('Unknown fault', faults=unknown, allowed=list(FAULTS))

    results = []
    for name, fn in _CHECKS:
        try:
            passed, detail = fn(faults)
            result = CheckResult(name, bool(passed), detail)
        except LabError as exc:
            result = CheckResult(name, False, error=exc.as_dict())
        logger.debug('Check %s: %s', name, 'pass' if result.passed else 'FAIL')
        results.append(result)

    report = ValidationReport(results, faults)
    if report.passed:
        logger.info('Validation suite passed (%d checks)', len(results))
    else:
        logger.info('Validation suite failed: %s', ', '.join(report.failed_names))
    return report
