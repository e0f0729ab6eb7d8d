"""Superoscillating bandlimited wave functions in extended precision."""

__version__ = "0.1.0"

from .xprec import PrecisionContext, PrecisionError, estimate_required_bits  # noqa: E402
from .prolate import NodeSpec, build_prolate, smallest_eigenpair, quadratic_form_inv  # noqa: E402
from .synth import (  # noqa: E402
    Wavefunction,
    eval_momentum,
    eval_position,
    local_wavelength,
    maximal_superoscillation,
    normalize,
    synthesize,
)
