from .exceptions import UsageError
from .model_core import CouplingParams

# Strong exchange (c = 30 k1) parameter sets: anti-Stokes coupling scan and mixing-field scan
PRESETS = {
    'fig2a': {'k1': 1.0, 'k2': 0.3, 'c': 30.0, 'description': 'Stokes/anti-Stokes, weak anti-Stokes coupling'},
    'fig2b': {'k1': 1.0, 'k2': 1.1, 'c': 30.0, 'description': 'Stokes/anti-Stokes, near-balanced couplings'},
    'fig2c': {'k1': 1.0, 'k2': 3.0, 'c': 30.0, 'description': 'Stokes/anti-Stokes, strong anti-Stokes coupling'},
    'fig3a': {'k1': 1.0, 'k2': 1.0, 'k3': 0.6, 'c': 30.0, 'description': 'Three fields, weak mixing field'},
    'fig3b': {'k1': 1.0, 'k2': 1.0, 'k3': 1.0, 'c': 30.0, 'description': 'Three fields, equal couplings'},
    'fig3c': {'k1': 1.0, 'k2': 1.0, 'k3': 3.0, 'c': 30.0, 'description': 'Three fields, strong mixing field'},
}

BIPARTITE_PRESETS = ('fig2a', 'fig2b', 'fig2c')
TRIPARTITE_PRESETS = ('fig3a', 'fig3b', 'fig3c')


def preset_values(name):
    """Coupling values of a named preset, without its description"""
    try:
        preset = PRESETS[name]
    except KeyError:
        raise UsageError(f"Unknown preset '{name}'; choose from {', '.join(PRESETS)}")
    return {key: value for key, value in preset.items() if key != 'description'}


def preset_params(name) -> CouplingParams:
    return CouplingParams(**preset_values(name))
