from django.apps import AppConfig


class QuantumFiltersConfig(AppConfig):
    name = 'quantum_filters'
    verbose_name = 'Quantum and projection filters'
