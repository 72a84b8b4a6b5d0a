from django.apps import AppConfig


class StratonovichTaylorConfig(AppConfig):
    name = 'stratonovich_taylor'
    verbose_name = 'Stratonovich stochastic Taylor expansions'
