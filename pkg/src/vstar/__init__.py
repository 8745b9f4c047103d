"""Iterated rectified-Gaussian analytics, the ATV survival-game simulator and tail estimators."""

__version__ = "0.1.0"

from .errors import DomainError, EstimationError, RangeError, ResourceError, VStarError  # noqa: E402
from .gaussian import (  # noqa: E402
    SQRT_2PI,
    SQRT_PI_OVER_2,
    BlackScholesInputs,
    NormalSpec,
    atm_call_price,
    black_scholes_call,
    g,
    mills_ratio,
    rectified_mean,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_sf,
)
from .chain import (  # noqa: E402
    AtmChainParams,
    ChainTrajectory,
    RecursionConfig,
    Regime,
    Termination,
    atm_chain,
    chain_sum,
    classify_unconditional,
    find_fixed_point,
    iterate_g,
)
from .theory import (  # noqa: E402
    PhaseGrid,
    PhaseGridSpec,
    VStarDerived,
    VStarParams,
    beta_eff,
    classify_vstar,
    critical_k_th,
    critical_sigma,
    derive,
    four_constants,
    phase_grid,
    power_law_exponent,
    solve_z_star,
    survival_probability,
    time_to_criticality,
)
from .atv import BucketTable, SimConfig, WealthSnapshot, bucketize, simulate, sweep  # noqa: E402
from .tails import RankWealthCurve, TailFit, fit_tail, rank_curve, tail_stability, theory_overlay  # noqa: E402
