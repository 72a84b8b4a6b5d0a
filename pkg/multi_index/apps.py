from django.apps import AppConfig


class MultiIndexConfig(AppConfig):
    name = 'multi_index'
    verbose_name = 'Multi-index combinatorics'
