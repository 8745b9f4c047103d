"""Empirical power-law tails of wealth samples.

A rank-wealth curve sorts the above-floor sample in descending order.  Two
estimators of the CCDF exponent ``alpha`` in ``P(V > v) ~ v**-alpha`` work on
a window of that curve:

``rank_regression``
    OLS of ``log(rank - 1/2)`` on ``log(wealth)``; the slope is ``-alpha``.
    The half-rank shift removes the leading small-sample bias
    (Gabaix & Ibragimov, 2011) and the reported standard error is their
    asymptotic ``alpha * sqrt(2 / n_tail)``.
``hill_mle``
    Pareto maximum likelihood over the window, treating the order statistics
    above the window as censored at its upper edge.  With no upper trimming
    this is the classical Hill estimator.  Standard error ``alpha / sqrt(n_tail)``.

Windows are given as ``(lo, hi)`` fractions of the above-floor sample counted
from the top: ``(0.001, 0.02)`` uses ranks from the top 0.1% down to the top 2%.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .atv import WealthSnapshot
from .errors import DomainError, EstimationError
from .theory import VStarParams, power_law_exponent

METHODS = ("rank_regression", "hill_mle")
DEFAULT_WINDOW = (0.001, 0.02)
DEFAULT_FLOOR = 1.0
MIN_TAIL = 50
MIN_STABILITY_POINTS = 500
STABILITY_LADDER = (0.005, 0.01, 0.02, 0.05, 0.1)
PLATEAU_SPREAD = 0.15


@dataclass(frozen=True)
class RankWealthCurve:
    """Wealth sorted in descending order; rank ``i + 1`` belongs to ``wealth[i]``."""

    wealth: np.ndarray
    floor: float = DEFAULT_FLOOR

    def __len__(self) -> int:
        return int(self.wealth.size)

    @property
    def ranks(self) -> np.ndarray:
        return np.arange(1, self.wealth.size + 1, dtype=np.int64)

    def scaled(self, factor: float) -> "RankWealthCurve":
        if not factor > 0.0:
            raise DomainError("scale factor must be > 0")
        return RankWealthCurve(self.wealth * factor, self.floor * factor)

    def downsample(self, max_points: int = 10_000) -> tuple[np.ndarray, np.ndarray]:
        """``(ranks, wealth)`` at log-spaced ranks, at most ``max_points`` of them."""
        m = len(self)
        if m <= max_points:
            return self.ranks, self.wealth.copy()
        idx = np.unique(np.round(np.geomspace(1, m, max_points)).astype(np.int64)) - 1
        return idx + 1, self.wealth[idx]

    def to_csv(self, path: str | Path | None = None, max_points: int | None = 10_000) -> str:
        ranks, wealth = (self.ranks, self.wealth) if max_points is None else self.downsample(max_points)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "wealth"])
        for r, x in zip(ranks.tolist(), wealth.tolist()):
            w.writerow([r, repr(x)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


@dataclass(frozen=True)
class TailFit:
    alpha_hat: float
    method: str
    fit_window: tuple[float, float]
    stderr: float
    n_tail: int

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "alpha_hat": self.alpha_hat,
            "stderr": self.stderr,
            "window": list(self.fit_window),
            "n_tail": self.n_tail,
        }


def rank_curve(data: WealthSnapshot | Iterable[float], floor: float = DEFAULT_FLOOR) -> RankWealthCurve:
    """Sort the observations strictly above ``floor`` in descending order."""
    if isinstance(data, WealthSnapshot):
        w = data.final_wealth
    else:
        w = np.asarray(data if isinstance(data, np.ndarray) else list(data), dtype=np.float64)
    if not math.isfinite(floor):
        raise DomainError("floor must be finite")
    above = w[w > floor]
    if above.size == 0:
        raise EstimationError(f"no observations above floor {floor}")
    return RankWealthCurve(np.sort(above)[::-1].copy(), float(floor))


def window_ranks(m: int, window: tuple[float, float]) -> tuple[int, int]:
    lo, hi = window
    if not (0.0 <= lo < hi <= 1.0):
        raise DomainError(f"window must satisfy 0 <= lo < hi <= 1, got {window}")
    j = int(math.floor(lo * m))
    k = int(math.floor(hi * m))
    k = min(k, m - 1)  # Hill needs the threshold order statistic below the window
    return j, k


def window_for_values(curve: RankWealthCurve, lo_value: float, hi_value: float) -> tuple[float, float]:
    """Top-fraction window covering wealth in ``(lo_value, hi_value]``."""
    if not hi_value > lo_value:
        raise DomainError("hi_value must exceed lo_value")
    m = len(curve)
    neg = -curve.wealth  # ascending
    above_hi = int(np.searchsorted(neg, -hi_value, side="left"))
    above_lo = int(np.searchsorted(neg, -lo_value, side="left"))
    return above_hi / m, above_lo / m


def _hill(x: np.ndarray, j: int, k: int) -> float:
    # x descending; window is x[j:k], threshold x[k], top j censored at x[j]
    logs = np.log(x[: k + 1])
    u = logs[k]
    s = float(np.sum(logs[j:k] - u)) + j * float(logs[j] - u)
    if not s > 0.0:
        raise EstimationError("degenerate window: all log-excesses are zero")
    return (k - j) / s


def _rank_regression(x: np.ndarray, j: int, k: int) -> float:
    lx = np.log(x[j:k])
    lr = np.log(np.arange(j + 1, k + 1, dtype=np.float64) - 0.5)
    lx_c = lx - lx.mean()
    denom = float(np.dot(lx_c, lx_c))
    if not denom > 0.0:
        raise EstimationError("degenerate window: constant wealth")
    slope = float(np.dot(lx_c, lr - lr.mean())) / denom
    return -slope


def fit_tail(
    curve: RankWealthCurve,
    method: str = "hill_mle",
    window: tuple[float, float] = DEFAULT_WINDOW,
) -> TailFit:
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; choose from {METHODS}")
    m = len(curve)
    j, k = window_ranks(m, window)
    n_tail = k - j
    if n_tail < MIN_TAIL:
        raise EstimationError(f"window {window} holds {max(n_tail, 0)} points, need at least {MIN_TAIL}")
    x = curve.wealth
    if method == "hill_mle":
        a = _hill(x, j, k)
        se = a / math.sqrt(n_tail)
    else:
        a = _rank_regression(x, j, k)
        se = abs(a) * math.sqrt(2.0 / n_tail)
    if not a > 0.0:
        raise EstimationError(f"non-positive tail exponent {a:.4g}: no decaying tail in window")
    return TailFit(a, method, (float(window[0]), float(window[1])), se, n_tail)


@dataclass(frozen=True)
class StabilityReport:
    method: str
    points: tuple[tuple[tuple[float, float], float], ...]
    plateau: bool

    @property
    def spread(self) -> float:
        a = np.array([p[1] for p in self.points])
        return float((a.max() - a.min()) / np.median(a)) if a.size else math.inf


def tail_stability(
    curve: RankWealthCurve,
    method: str = "hill_mle",
    ladder: Sequence[float] = STABILITY_LADDER,
    lo: float = DEFAULT_WINDOW[0],
) -> StabilityReport:
    """Estimate ``alpha`` over nested windows ``(lo, h)`` for each ``h`` in ``ladder``.

    ``plateau`` is true when at least three windows could be fitted and their
    estimates span less than 15% of the median.
    """
    if len(curve) < MIN_STABILITY_POINTS:
        raise DomainError(f"stability ladder needs at least {MIN_STABILITY_POINTS} points, curve has {len(curve)}")
    pts = []
    for h in sorted(ladder):
        try:
            fit = fit_tail(curve, method, (lo, h))
        except EstimationError:
            continue
        pts.append(((lo, h), fit.alpha_hat))
    alphas = np.array([a for _, a in pts])
    plateau = bool(alphas.size >= 3 and (alphas.max() - alphas.min()) < PLATEAU_SPREAD * np.median(alphas))
    return StabilityReport(method, tuple(pts), plateau)


def theory_overlay(params: VStarParams, v_range: tuple[float, float], n_points: int = 50) -> list[tuple[float, float]]:
    """Points ``(v, (v / v_lo) ** -alpha)`` on a log grid; the first is ``(v_lo, 1)``."""
    alpha = power_law_exponent(params)
    if alpha is None:
        raise DomainError(f"no power-law tail at sigma={params.sigma}, k_th={params.k_th} (beta_eff <= 1)")
    lo, hi = v_range
    if not (0.0 < lo < hi and math.isfinite(hi)):
        raise DomainError("v_range must satisfy 0 < lo < hi < inf")
    if n_points < 2:
        raise DomainError("n_points must be >= 2")
    vs = np.geomspace(lo, hi, n_points)
    vs[0], vs[-1] = lo, hi
    return [(float(v), float((v / lo) ** -alpha)) for v in vs]
