"""Iterated rectified expectations.

Two chains live here: the general nonlinear recursion ``w <- g(alpha w)``
and the at-the-money geometric chain ``mu_{n+1} = beta mu_n`` with
``beta = sigma / sqrt(2 pi)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._roots import bisect
from .errors import DomainError
from .gaussian import SQRT_2PI, g

CRITICAL_BAND = 1e-9
DEFAULT_DIVERGENCE_CAP = 1e12
CONVERGENCE_RTOL = 1e-12


class Termination(enum.Enum):
    COMPLETED = "completed"
    DIVERGED = "diverged"
    CONVERGED = "converged"


class Regime(enum.Enum):
    SUBCRITICAL = "sub"
    CRITICAL = "critical"
    SUPERCRITICAL = "super"


def classify_ratio(beta: float, eps: float = CRITICAL_BAND) -> Regime:
    """Place a growth ratio in the sub/critical/super band around 1."""
    if beta < 1.0 - eps:
        return Regime.SUBCRITICAL
    if beta > 1.0 + eps:
        return Regime.SUPERCRITICAL
    return Regime.CRITICAL


@dataclass(frozen=True)
class RecursionConfig:
    """Parameters of ``w_{n+1} = g(alpha * w_n)``.

    ``alpha`` is the volatility ratio between consecutive stages divided by
    ``sqrt(2 pi)``; ``w0`` is the starting value ``g(z_1)``.
    """

    alpha: float
    w0: float
    max_steps: int = 1000
    divergence_cap: float = DEFAULT_DIVERGENCE_CAP

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha >= 0.0):
            raise DomainError(f"alpha must be finite and >= 0, got {self.alpha}")
        if not (math.isfinite(self.w0) and self.w0 > 0.0):
            raise DomainError(f"w0 must be finite and > 0, got {self.w0}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise DomainError(f"max_steps must be a positive integer, got {self.max_steps}")
        if not self.divergence_cap > self.w0:
            raise DomainError("divergence_cap must exceed w0")


@dataclass(frozen=True)
class AtmChainParams:
    """First-stage value ``mu1`` and percentage volatility ``sigma_pct``."""

    mu1: float
    sigma_pct: float

    def __post_init__(self) -> None:
        for name in ("mu1", "sigma_pct"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError(f"{name} must be finite and > 0, got {v}")

    @property
    def beta(self) -> float:
        return self.sigma_pct / SQRT_2PI


@dataclass(frozen=True)
class ChainTrajectory:
    values: tuple[float, ...]
    terminated_by: Termination
    step: int | None = None
    tolerance: float | None = None

    def __post_init__(self) -> None:
        if not self.values:
            raise DomainError("trajectory must contain at least one value")

    def ratios(self) -> np.ndarray:
        v = np.asarray(self.values)
        return v[1:] / v[:-1]


def iterate_g(cfg: RecursionConfig) -> ChainTrajectory:
    """Run the recursion until it converges, passes the divergence cap, or runs out of steps."""
    w = cfg.w0
    values = [w]
    for step in range(1, cfg.max_steps + 1):
        nxt = g(cfg.alpha * w)
        values.append(nxt)
        if nxt > cfg.divergence_cap:
            return ChainTrajectory(tuple(values), Termination.DIVERGED, step)
        if abs(nxt - w) < CONVERGENCE_RTOL * max(1.0, w):
            return ChainTrajectory(tuple(values), Termination.CONVERGED, step, CONVERGENCE_RTOL)
        w = nxt
    return ChainTrajectory(tuple(values), Termination.COMPLETED, cfg.max_steps)


def find_fixed_point(alpha: float, bracket_hi: float = 1e6, scan_points: int = 4000) -> float | None:
    """Smallest ``w* > 0`` with ``g(alpha w*) = w*``, or ``None`` when no sign change exists.

    Scans ``h(w) = g(alpha w) - w`` on a log-spaced grid over
    ``(1e-12, bracket_hi]`` and bisects the first bracketing interval.
    """
    if not (math.isfinite(alpha) and alpha >= 0.0):
        raise DomainError(f"alpha must be finite and >= 0, got {alpha}")
    if not bracket_hi > 0.0:
        raise DomainError(f"bracket_hi must be > 0, got {bracket_hi}")
    if alpha == 0.0:
        return 1.0 if bracket_hi >= 1.0 else None

    def h(w: float) -> float:
        return g(alpha * w) - w

    lo = 1e-12
    if bracket_hi <= lo:
        return None
    grid = np.geomspace(lo, bracket_hi, scan_points)
    prev_w, prev_h = float(grid[0]), h(float(grid[0]))
    for w in grid[1:]:
        w = float(w)
        hw = h(w)
        if hw == 0.0:
            return w
        if (hw < 0.0) != (prev_h < 0.0):
            return bisect(h, prev_w, w)
        prev_w, prev_h = w, hw
    return None


def atm_chain(params: AtmChainParams, n: int) -> ChainTrajectory:
    """Stage values ``mu1 * beta**k`` for ``k = 0 .. n-1``."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    beta = params.beta
    values = tuple(params.mu1 * beta**k for k in range(int(n)))
    return ChainTrajectory(values, Termination.COMPLETED, int(n))


def chain_sum(params: AtmChainParams) -> float:
    """Total value of the infinite ATM chain; ``math.inf`` when it diverges (``beta >= 1``)."""
    if params.beta >= 1.0:
        return math.inf
    return params.mu1 * SQRT_2PI / (SQRT_2PI - params.sigma_pct)


def classify_unconditional(sigma_pct: float, eps: float = CRITICAL_BAND) -> Regime:
    if not (math.isfinite(sigma_pct) and sigma_pct > 0.0):
        raise DomainError(f"sigma_pct must be finite and > 0, got {sigma_pct}")
    return classify_ratio(sigma_pct / SQRT_2PI, eps)
