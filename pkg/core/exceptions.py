"""
core/exceptions.py
──────────────────
Structured errors raised by the numerical apps.

Every error carries a machine-readable ``code`` and a ``detail`` dict with the
measured defect, so callers can report

    { "error": "...", "code": "SINGULAR_METRIC", "detail": {"min_eigenvalue": ...} }

the same way the API layer reports validation failures. Invariant violations
are raised, never clamped.
"""


class LabError(Exception):
    code = 'LAB_ERROR'
    default_message = 'Numerical laboratory error.'

    def __init__(self, message=None, **detail):
        self.message = message or self.default_message
        self.detail = detail
        super().__init__(self.message)

    def as_dict(self):
        payload = {'error': self.message, 'code': self.code}
        if self.detail:
            payload['detail'] = {k: _plain(v) for k, v in self.detail.items()}
        return payload

    def __str__(self):
        if not self.detail:
            return self.message
        extras = ', '.join(f'{k}={_plain(v)}' for k, v in self.detail.items())
        return f'{self.message} ({extras})'


def _plain(value):
    if hasattr(value, 'tolist'):
        return value.tolist()
    return value


# ─────────────────────────────────────────────────────────────────────────────
# Operator algebra
# ─────────────────────────────────────────────────────────────────────────────

class DimensionMismatch(LabError):
    code = 'DIMENSION_MISMATCH'
    default_message = 'Operand dimensions do not match.'


class NotSelfAdjoint(LabError):
    code = 'NOT_SELF_ADJOINT'
    default_message = 'Operator is not self-adjoint within tolerance.'


class NonPositiveTrace(LabError):
    code = 'NON_POSITIVE_TRACE'
    default_message = 'Trace is not strictly positive; the filter has collapsed.'


class InvariantViolation(LabError):
    code = 'INVARIANT_VIOLATION'
    default_message = 'A state invariant was violated.'


class NonCommutingGenerators(LabError):
    code = 'NON_COMMUTING_GENERATORS'
    default_message = 'Chart generators do not commute.'


# ─────────────────────────────────────────────────────────────────────────────
# Multi-indices and expansions
# ─────────────────────────────────────────────────────────────────────────────

class EmptyIndex(LabError):
    code = 'EMPTY_INDEX'
    default_message = 'Cannot remove an element from the empty multi-index.'


class OrderTooLarge(LabError):
    code = 'ORDER_TOO_LARGE'
    default_message = 'Requested order exceeds the configured guard.'


class TimeOffGrid(LabError):
    code = 'TIME_OFF_GRID'
    default_message = 'Time does not lie on the path grid.'


class UnsupportedOrder(LabError):
    code = 'UNSUPPORTED_ORDER'
    default_message = 'Differentiator is not available for this multi-index.'


# ─────────────────────────────────────────────────────────────────────────────
# Geometry and filters
# ─────────────────────────────────────────────────────────────────────────────

class OverflowGuard(LabError):
    code = 'OVERFLOW_GUARD'
    default_message = 'Chart coordinates left the admissible box.'


class SingularMetric(LabError):
    code = 'SINGULAR_METRIC'
    default_message = 'Quantum Fisher matrix is singular or not positive definite.'


# ─────────────────────────────────────────────────────────────────────────────
# Harness
# ─────────────────────────────────────────────────────────────────────────────

class ScenarioParseError(LabError):
    code = 'PARSE_ERROR'
    default_message = 'Scenario file could not be parsed as JSON.'


class InvalidScenario(LabError):
    code = 'INVALID_SCENARIO'
    default_message = 'Scenario failed validation.'


class RunFailed(LabError):
    code = 'RUN_FAILED'
    default_message = 'Too many paths were excluded from the run.'
