"""Closed-form survival-game theory.

For a zero-centred payoff ``X ~ N(0, (sigma w)^2)`` and a continuation rule
``X >= k_th w`` the per-round survival probability is ``p = 1 - Phi(z)``
with ``z = k_th / sigma``; survivors grow on average by
``beta_eff = sigma phi(z) / p = sigma / M(z)``.  When ``beta_eff > 1`` the
population develops a power-law tail with exponent
``alpha = -log p / log beta_eff``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._roots import bisect
from .chain import CRITICAL_BAND, Regime, classify_ratio
from .errors import DomainError, RangeError
from .gaussian import (
    SQRT_2PI,
    SQRT_PI_OVER_2,
    mills_ratio,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_sf,
)

_P_FLOOR = 2.2250738585072014e-308  # smallest normal double


@dataclass(frozen=True)
class VStarParams:
    """A point ``(sigma, k_th)`` of the phase plane; ``k_th`` may be negative."""

    sigma: float
    k_th: float

    def __post_init__(self) -> None:
        s, k = float(self.sigma), float(self.k_th)
        if not (math.isfinite(s) and s > 0.0):
            raise DomainError(f"sigma must be finite and > 0, got {self.sigma}")
        if not math.isfinite(k):
            raise DomainError(f"k_th must be finite, got {self.k_th}")
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "k_th", k)

    @property
    def z(self) -> float:
        return self.k_th / self.sigma


@dataclass(frozen=True)
class VStarDerived:
    z: float
    p: float
    beta_eff: float
    alpha: float | None
    regime: Regime


def survival_probability(params: VStarParams) -> float:
    p = std_normal_sf(params.z)
    if p < _P_FLOOR:
        raise RangeError(f"survival probability underflows at z={params.z:.6g}")
    return p


def beta_eff(params: VStarParams) -> float:
    """Mean payoff multiplier among survivors, ``sigma phi(z) / (1 - Phi(z))``."""
    z = params.z
    if z > 0.0:
        return params.sigma / mills_ratio(z)
    # p in [1/2, 1): no cancellation, and phi(z) stays finite far below where M(z) overflows
    pdf = std_normal_pdf(z)
    if pdf == 0.0:
        raise RangeError(f"conditional growth underflows at z={z:.6g}")
    return params.sigma * pdf / std_normal_sf(z)


def power_law_exponent(params: VStarParams) -> float | None:
    """``-log p / log beta_eff``; ``None`` unless ``beta_eff > 1`` and ``p < 1``."""
    p = survival_probability(params)
    b = beta_eff(params)
    if not (b > 1.0 and p < 1.0):
        return None
    return -math.log(p) / math.log(b)


def classify_vstar(params: VStarParams, eps: float = CRITICAL_BAND) -> Regime:
    return classify_ratio(beta_eff(params), eps)


def derive(params: VStarParams) -> VStarDerived:
    b = beta_eff(params)
    return VStarDerived(
        z=params.z,
        p=survival_probability(params),
        beta_eff=b,
        alpha=power_law_exponent(params),
        regime=classify_ratio(b),
    )


def critical_sigma(z: float) -> float:
    """Volatility at which ``beta_eff = 1`` for standardised threshold ``z``."""
    return mills_ratio(z)


def critical_k_th(z: float) -> float:
    return z * mills_ratio(z)


def solve_z_star() -> float:
    """Positive ``z*`` with ``Phi(z*) = exp(-z*^2 / 2)``, about 0.7286.

    The critical point on the divergence line ``sigma = sqrt(2 pi)`` sits at
    standardised threshold ``-z*``, where ``1 - Phi(-z*) = exp(-z*^2/2)`` and
    ``M(-z*) = sqrt(2 pi)``.
    """

    def f(z: float) -> float:
        return std_normal_cdf(z) - math.exp(-0.5 * z * z)

    return bisect(f, 0.0, 3.0)


@dataclass(frozen=True)
class FourConstants:
    sigma_star: float
    sigma_star_th: float
    z_star: float
    k_star_th: float

    def as_dict(self) -> dict[str, float]:
        return {
            "sigma_star": self.sigma_star,
            "sigma_star_th": self.sigma_star_th,
            "z_star": self.z_star,
            "k_star_th": self.k_star_th,
        }


def four_constants() -> FourConstants:
    z_star = solve_z_star()
    return FourConstants(
        sigma_star=SQRT_2PI,
        sigma_star_th=SQRT_PI_OVER_2,
        z_star=z_star,
        k_star_th=-z_star * SQRT_2PI,
    )


def time_to_criticality(sigma_annual: float, thresholded: bool = False) -> float:
    """Years until ``sigma sqrt(T)`` reaches ``sqrt(2 pi)`` (or ``sqrt(pi/2)`` when thresholded)."""
    if not (math.isfinite(sigma_annual) and sigma_annual > 0.0):
        raise DomainError(f"sigma_annual must be finite and > 0, got {sigma_annual}")
    num = math.pi / 2.0 if thresholded else 2.0 * math.pi
    return num / sigma_annual**2


def format_horizon(years: float) -> str:
    """Render a horizon the way a person would say it: years, then months, then weeks."""
    if years >= 10.0:
        return f"{years:.0f} years"
    if years >= 1.0:
        txt = f"{years:.1f}"
        return f"{txt} year" if txt == "1.0" else f"{txt} years"
    months = years * 12.0
    if months >= 1.0:
        return f"{months:.1f} months"
    return f"{years * 52.0:.1f} weeks"


TTC_VOLS = (0.1, 0.2, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 8.0)


def ttc_table(vols: tuple[float, ...] = TTC_VOLS) -> list[dict]:
    rows = []
    for s in vols:
        t_u = time_to_criticality(s, thresholded=False)
        t_th = time_to_criticality(s, thresholded=True)
        rows.append(
            {
                "sigma": s,
                "t_star_years": t_u,
                "t_star_th_years": t_th,
                "t_star": format_horizon(t_u),
                "t_star_th": format_horizon(t_th),
            }
        )
    return rows


# --- phase plane ---------------------------------------------------------------


@dataclass(frozen=True)
class PhaseGridSpec:
    sigma_min: float = 0.2
    sigma_max: float = 4.0
    k_min: float = -3.0
    k_max: float = 4.0
    n_sigma: int = 200
    n_k: int = 200
    # insert sqrt(pi/2) and sqrt(2 pi) into the sigma axis when they fall in range
    mark_critical: bool = False

    def __post_init__(self) -> None:
        vals = (self.sigma_min, self.sigma_max, self.k_min, self.k_max)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("grid bounds must be finite")
        if self.sigma_min <= 0.0:
            raise DomainError("sigma_min must be > 0")
        if not (self.sigma_max > self.sigma_min and self.k_max > self.k_min):
            raise DomainError("axis maxima must exceed minima")
        for name in ("n_sigma", "n_k"):
            v = getattr(self, name)
            if int(v) != v or v < 2:
                raise DomainError(f"{name} must be an integer >= 2")

    def sigma_axis(self) -> np.ndarray:
        ax = np.linspace(self.sigma_min, self.sigma_max, int(self.n_sigma))
        if self.mark_critical:
            extra = [s for s in (SQRT_PI_OVER_2, SQRT_2PI) if self.sigma_min <= s <= self.sigma_max]
            ax = np.unique(np.concatenate([ax, extra]))
        return ax

    def k_axis(self) -> np.ndarray:
        return np.linspace(self.k_min, self.k_max, int(self.n_k))


@dataclass(frozen=True)
class PhaseCell:
    sigma: float
    k_th: float
    p: float
    beta_eff: float
    alpha: float | None
    regime: Regime


@dataclass(frozen=True)
class PhaseGrid:
    """Cells in row-major order: ``k_th`` indexes rows, ``sigma`` columns."""

    sigmas: tuple[float, ...]
    ks: tuple[float, ...]
    cells: tuple[PhaseCell, ...]

    def field(self, name: str) -> np.ndarray:
        """One cell attribute as a ``(len(ks), len(sigmas))`` array (``None`` becomes NaN)."""
        vals = [getattr(c, name) for c in self.cells]
        if name == "regime":
            return np.array([v.value for v in vals]).reshape(len(self.ks), len(self.sigmas))
        arr = np.array([np.nan if v is None else v for v in vals], dtype=float)
        return arr.reshape(len(self.ks), len(self.sigmas))

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sigma", "k_th", "p", "beta_eff", "alpha", "regime"])
        for c in self.cells:
            w.writerow(
                [
                    repr(c.sigma),
                    repr(c.k_th),
                    repr(c.p),
                    repr(c.beta_eff),
                    "" if c.alpha is None else repr(c.alpha),
                    c.regime.value,
                ]
            )
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _cell(sigma: float, k: float) -> PhaseCell:
    params = VStarParams(sigma, k)
    d = derive(params)
    return PhaseCell(sigma, k, d.p, d.beta_eff, d.alpha, d.regime)


def phase_grid(spec: PhaseGridSpec, workers: int = 1) -> PhaseGrid:
    """Evaluate the analytics at every node; output is independent of ``workers``."""
    if not isinstance(spec, PhaseGridSpec):
        raise DomainError("phase_grid expects a PhaseGridSpec")
    sigmas = [float(s) for s in spec.sigma_axis()]
    ks = [float(k) for k in spec.k_axis()]

    def row(k: float) -> list[PhaseCell]:
        return [_cell(s, k) for s in sigmas]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(row, ks))
    else:
        rows = [row(k) for k in ks]
    cells = tuple(c for r in rows for c in r)
    return PhaseGrid(tuple(sigmas), tuple(ks), cells)
