"""Decentralized power-allocation games on the fast-fading MIMO MAC."""

from .channel import (
    ChannelSamples,
    CorrelationSpec,
    UiuProfile,
    exp_correlation,
    exp_profile,
    iid_profile,
    kronecker_to_uiu,
    sample_channel,
)
from .coordination import (
    CoordinationDistribution,
    DecodingOrder,
    GameContext,
    SpaceTimePowerProfile,
    uniform_powers,
)
from .exact_game import (
    KktReport,
    McEstimate,
    concavity_second_derivative,
    dsc_gap,
    kkt_residual,
    logdet2_eye_plus,
    rate_sic_exact,
    rate_sud_exact,
    sum_rate_exact,
    trace_inequality_gap,
    utility_sic,
)
from .large_system import (
    BlockFixedPoint,
    FixedPointError,
    SolverConfig,
    approx_rate_sic,
    approx_utility_sic,
    approx_utility_sud,
    denormalize,
    sic_interference_fp,
    sic_signal_fp,
    solve_sud_fps,
    sud_signal_fp,
)
from .equilibrium import (
    CapacityResult,
    EquilibriumResult,
    NeConfig,
    best_response_ne,
    constrained_ne,
    ne_high_snr,
    ne_low_snr,
    random_feasible_powers,
    spatial_waterfill,
    sre,
    sum_capacity,
    temporal_waterfill,
    waterfill,
)

__version__ = "0.1.0"
