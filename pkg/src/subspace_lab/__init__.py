"""Online subspace learning with a single-layer GAN, its macroscopic ODE, and baselines."""

from .geometry import (
    NumericalHealthWarning,
    PrincipalAngles,
    RankDeficiencyError,
    cosine_diagonals,
    grassmann_distance,
    orthonormalize,
    principal_angles,
    reconstruction_error,
    uplift,
)
from .model import MacroState, MicroState, SpikedModel, Trajectory, make_rng, macro_state, matched_init, split_rng

__version__ = "0.1.0"
