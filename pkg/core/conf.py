"""
core/conf.py
────────────
Lazy access to the ``QFILTER`` block of the Django settings.

Usage
-----
    from core.conf import lab_settings

    if defect > lab_settings.COMMUTE_TOL:
        ...

Missing keys fall back to DEFAULTS, so a partial ``QFILTER`` dict in a test
settings override is enough.
"""

from django.conf import settings
from django.core.signals import setting_changed


DEFAULTS = {
    'VERSION': '1.0.0',
    'HERMITIAN_RTOL': 1e-10,
    'HAMILTONIAN_RTOL': 1e-12,
    'OUTPUT_HERMITIAN_TOL': 1e-12,
    'TRACE_TOL': 1e-8,
    'EIGEN_FLOOR': -1e-8,
    'TRACE_FLOOR': 1e-300,
    'COMMUTE_TOL': 1e-10,
    'GENERATOR_HERMITIAN_TOL': 1e-12,
    'THETA_BOX': 50.0,
    'SINGULAR_RATIO': 1e-12,
    'SPECTRAL_GROUPING_TOL': 1e-9,
    'MAX_LAMBDA_ORDER': 16,
    'MAX_INTEGRAL_LENGTH': 6,
    'MAX_EXPANSION_ORDER': 4,
    'MAX_MATRIX_DIM': 32,
    'FINE_FACTOR': 16,
    'MAX_FAILED_FRACTION': 0.01,
    'WORKERS': 1,
    'OUTPUT_DIR': 'runs',
    'SCENARIO_DIR': 'harness/scenarios',
}


class LabSettings:
    def __init__(self, defaults=None):
        self.defaults = defaults or DEFAULTS
        self._cached = set()

    @property
    def user_settings(self):
        if not hasattr(self, '_user_settings'):
            self._user_settings = getattr(settings, 'QFILTER', {})
        return self._user_settings

    def __getattr__(self, attr):
        if attr not in self.defaults:
            raise AttributeError(f"Invalid QFILTER setting: '{attr}'")

        try:
            value = self.user_settings[attr]
        except KeyError:
            value = self.defaults[attr]

        self._cached.add(attr)
        setattr(self, attr, value)
        return value

    def reload(self):
        for attr in self._cached:
            delattr(self, attr)
        self._cached.clear()
        if hasattr(self, '_user_settings'):
            delattr(self, '_user_settings')


lab_settings = LabSettings(DEFAULTS)


def reload_lab_settings(*args, **kwargs):
    if kwargs['setting'] == 'QFILTER':
        lab_settings.reload()


setting_changed.connect(reload_lab_settings)
