"""randx: a numerical laboratory for spot-checking randomness expansion.

Models untrusted quantum devices and the games used to certify them,
computes Schatten-bracket scores and randomness measures, rate curves and
min-entropy bounds, simulates the spot-checking generation protocol, and
verifies the underlying norm inequalities by direct computation.
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    catalog,
    classicaloracle,
    convexity,
    devicemodel,
    gamedefs,
    matcore,
    protocol,
    scoring,
)
from .devicemodel import Device, evolve_sequence, state_pair, validate_device  # noqa: F401
from .gamedefs import Game, SpotCheckGame, spot_check, validate_game  # noqa: F401
from .matcore import herm_eig, pinch, psd_power, schatten, tensor  # noqa: F401
from .protocol import (  # noqa: F401
    ProtocolParams,
    entropy_lower_bound,
    enumerate_success_state,
    extractable_bits,
    hmin_classical_adversary,
    simulate,
)
from .scoring import (  # noqa: F401
    eps_randomness,
    eps_score,
    game_operator,
    quadratic_rate_curve,
    weighted_randomness,
)
