"""Monte Carlo simulation of a first-level quantum repeater with buffer time.

The package is organised bottom-up:

- :mod:`qrepeater.states`   noisy Bell-state families and memory decay
- :mod:`qrepeater.ops`      closed-form generation, swapping and purification
- :mod:`qrepeater.oracle`   dense density-matrix reference used for verification
- :mod:`qrepeater.streams`  counter-based random streams
- :mod:`qrepeater.protocol` the time-stepped repeater engine
- :mod:`qrepeater.metrics`  Rains bound, rates and buffer-time optimisation
- :mod:`qrepeater.cli`      the ``sim`` command line tool
"""

from qrepeater.states import (
    MemoryQuality,
    NoisyBellState,
    StateFamily,
    decay,
    make_state,
    quality_factor,
)
from qrepeater.ops import (
    GenerationParams,
    OperationNoise,
    PurifyResult,
    gen_success_prob,
    purify,
    swap,
)

__version__ = "0.1.0"

__all__ = [
    "GenerationParams",
    "MemoryQuality",
    "NoisyBellState",
    "OperationNoise",
    "PurifyResult",
    "StateFamily",
    "decay",
    "gen_success_prob",
    "make_state",
    "purify",
    "quality_factor",
    "swap",
]
