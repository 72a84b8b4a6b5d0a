import hashlib
import json

import numpy as np
from rest_framework import serializers

from core.exceptions import LabError
from manifold_geometry.models import Chart
from operator_algebra.codec import matrix_from_pairs, matrix_to_pairs
from operator_algebra.models import DensityState, SystemModel
from quantum_filters.models import Variant
from .models import Scenario

MAX_LOG2_STEPS = 20


class MatrixField(serializers.Field):
    """Square complex matrix written as rows of [re, im] pairs."""

    default_error_messages = {
        'invalid': 'Expected an n×n array of [re, im] pairs.',
    }

    def to_internal_value(self, data):
        try:
            return matrix_from_pairs(data, name=self.field_name or 'matrix')
        except LabError as exc:
            raise serializers.ValidationError(str(exc))

    def to_representation(self, value):
        return matrix_to_pairs(value)


class ChartSerializer(serializers.Serializer):
    generators = serializers.ListField(child=MatrixField(), min_length=1)


class ScenarioSerializer(serializers.Serializer):
    name        = serializers.CharField(max_length=100, default='scenario')
    dim         = serializers.IntegerField(min_value=1, max_value=32)
    hamiltonian = MatrixField()
    coupling    = MatrixField()
    rho0        = MatrixField()
    chart       = ChartSerializer()

    T                 = serializers.FloatField(min_value=0.0, default=5.0)
    log2_steps        = serializers.IntegerField(min_value=1, max_value=MAX_LOG2_STEPS, default=12)
    integrator_factor = serializers.IntegerField(min_value=1, default=2)
    paths             = serializers.IntegerField(min_value=1, default=200)
    seed              = serializers.IntegerField(min_value=0, max_value=2 ** 64 - 1, default=0)
    filters           = serializers.ListField(
        child=serializers.ChoiceField(choices=[v.value for v in Variant]),
        allow_empty=True, default=lambda: ['new', 'old'],
    )

    def validate_T(self, value):
        if not value > 0.0 or not np.isfinite(value):
            raise serializers.ValidationError('Horizon must be a positive finite time.')
        return value

    def validate_filters(self, value):
        if len(set(value)) != len(value):
            raise serializers.ValidationError('Each filter variant may be listed once.')
        return value

    def validate(self, data):
        dim = data['dim']
        for field in ('hamiltonian', 'coupling', 'rho0'):
            if data[field].shape != (dim, dim):
                raise serializers.ValidationError({field: f'Expected a {dim}×{dim} matrix.'})
        for i, generator in enumerate(data['chart']['generators']):
            if generator.shape != (dim, dim):
                raise serializers.ValidationError({'chart': f'Generator {i} is not {dim}×{dim}.'})

        if (2 ** data['log2_steps']) % data['integrator_factor']:
            raise serializers.ValidationError(
                {'integrator_factor': 'Integrator step must be a whole number of noise steps.'}
            )

        try:
            data['model'] = SystemModel(data['hamiltonian'], data['coupling'])
        except LabError as exc:
            raise serializers.ValidationError({'hamiltonian': str(exc)})
        try:
            DensityState(data['rho0'])
        except LabError as exc:
            raise serializers.ValidationError({'rho0': str(exc)})
        try:
            data['chart_object'] = Chart(data['chart']['generators'], data['rho0'])
        except LabError as exc:
            raise serializers.ValidationError({'chart': str(exc)})
        return data

    @staticmethod
    def canonical(data):
        """The validated scenario as plain JSON with every default filled in."""
        return {
            'name': data['name'],
            'dim': data['dim'],
            'hamiltonian': matrix_to_pairs(data['hamiltonian']),
            'coupling': matrix_to_pairs(data['coupling']),
            'rho0': matrix_to_pairs(data['rho0']),
            'chart': {'generators': [matrix_to_pairs(g) for g in data['chart']['generators']]},
            'T': data['T'],
            'log2_steps': data['log2_steps'],
            'integrator_factor': data['integrator_factor'],
            'paths': data['paths'],
            'seed': data['seed'],
            'filters': list(data['filters']),
        }

    def create(self, validated_data):
        canonical = self.canonical(validated_data)
        encoded = json.dumps(canonical, sort_keys=True, separators=(',', ':'))
        return Scenario(
            name=validated_data['name'],
            model=validated_data['model'],
            chart=validated_data['chart_object'],
            rho0=validated_data['rho0'],
            horizon=float(validated_data['T']),
            log2_steps=validated_data['log2_steps'],
            integrator_factor=validated_data['integrator_factor'],
            paths=validated_data['paths'],
            seed=validated_data['seed'],
            filters=tuple(validated_data['filters']),
            digest=hashlib.sha256(encoded.encode('utf-8')).hexdigest(),
            source=canonical,
        )
