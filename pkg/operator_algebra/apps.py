from django.apps import AppConfig


class OperatorAlgebraConfig(AppConfig):
    name = 'operator_algebra'
    verbose_name = 'Operator algebra'
