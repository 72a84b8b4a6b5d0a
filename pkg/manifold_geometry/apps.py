from django.apps import AppConfig


class ManifoldGeometryConfig(AppConfig):
    name = 'manifold_geometry'
    verbose_name = 'Exponential submanifold geometry'
