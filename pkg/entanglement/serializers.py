from pathlib import Path

from django.conf import settings
from rest_framework import serializers

from .criteria import SpinConvention
from .exceptions import DomainError
from .model_core import CouplingParams
from .presets import PRESETS, preset_values
from .sweeps import FORMATS, OUTPUT_KINDS, SweepConfig, default_t_max


class CouplingParamsSerializer(serializers.Serializer):
    """Serializer for coupling constants, optionally starting from a named preset"""
    preset = serializers.ChoiceField(choices=list(PRESETS), required=False)
    k1 = serializers.FloatField(required=False)
    k2 = serializers.FloatField(required=False)
    k3 = serializers.FloatField(required=False, allow_null=True)
    c = serializers.FloatField(required=False)

    def validate(self, attrs):
        values = {}
        if attrs.get('preset'):
            values.update(preset_values(attrs['preset']))
        # Explicit values override the preset
        for key in ('k1', 'k2', 'k3', 'c'):
            if key in attrs:
                values[key] = attrs[key]

        missing = [key for key in ('k1', 'k2', 'c') if values.get(key) is None]
        if missing:
            raise serializers.ValidationError(
                f"Missing {', '.join(missing)}; give them explicitly or choose a preset"
            )
        try:
            attrs['params'] = CouplingParams(
                k1=values['k1'], k2=values['k2'], c=values['c'], k3=values.get('k3'),
            )
        except DomainError as e:
            raise serializers.ValidationError(str(e))
        return attrs


class SweepConfigSerializer(CouplingParamsSerializer):
    """Serializer for sweep and min-scan configurations"""
    t_max = serializers.FloatField(required=False, allow_null=True)
    steps = serializers.IntegerField(required=False, min_value=2)
    spin_convention = serializers.ChoiceField(
        choices=[convention.value for convention in SpinConvention], default=SpinConvention.PRODUCT_STATE.value
    )
    n_atoms = serializers.IntegerField(required=False, min_value=1)
    outputs = serializers.ListField(
        child=serializers.ChoiceField(choices=sorted(OUTPUT_KINDS)), required=False, allow_empty=False
    )
    format = serializers.ChoiceField(choices=list(FORMATS), default='csv')
    out = serializers.CharField(required=False, allow_blank=False, allow_null=True)

    def validate_t_max(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError("t_max must be positive")
        return value

    def build_config(self, threads=1) -> SweepConfig:
        """
        SweepConfig from validated data; a missing t_max becomes
        SPINWAVE_DEFAULT_PERIODS oscillation periods. Degenerate couplings
        raise DegenerateCouplingError here.
        """
        data = self.validated_data
        params = data['params']
        t_max = data.get('t_max')
        if t_max is None:
            t_max = default_t_max(params, settings.SPINWAVE_DEFAULT_PERIODS)
        outputs = data.get('outputs')
        out = data.get('out')
        return SweepConfig(
            params=params,
            t_max=t_max,
            steps=data.get('steps') or settings.SPINWAVE_DEFAULT_STEPS,
            spin_convention=SpinConvention(data['spin_convention']),
            n_atoms=data.get('n_atoms') or settings.SPINWAVE_N_ATOMS,
            outputs=frozenset(outputs) if outputs else None,
            output_path=Path(out) if out else None,
            format=data['format'],
            threads=threads,
        )
