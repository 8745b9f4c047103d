"""Scalar Gaussian building blocks.

Normal PDF/CDF, the Mills ratio, the rectified-Gaussian mean and its
unnormalised kernel ``g``, plus Black-Scholes call pricing.  Every function
takes and returns plain floats and rejects NaN or infinite input with
:class:`~vstar.errors.DomainError`.

The survival function ``1 - Phi(z)`` is always evaluated through ``erfc`` so
it keeps full relative precision far into the upper tail; the Mills ratio
switches to a continued fraction above ``z = 6``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, RangeError

SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_PI_OVER_2 = math.sqrt(math.pi / 2.0)
INV_SQRT_2PI = 1.0 / SQRT_2PI
_SQRT2 = math.sqrt(2.0)

# Above this point the Mills ratio uses the Laplace continued fraction.
MILLS_CF_BRANCH = 6.0
_CF_TERMS = 40


def _finite(x: float, name: str = "z") -> float:
    try:
        x = float(x)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"{name} must be a real number, got {x!r}") from exc
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x}")
    return x


@dataclass(frozen=True)
class NormalSpec:
    """Gaussian ``X ~ N(mu, sigma**2)`` prior to rectification."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", _finite(self.mu, "mu"))
        object.__setattr__(self, "sigma", _finite(self.sigma, "sigma"))
        if self.sigma <= 0.0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")

    @property
    def z(self) -> float:
        """Standardised mean ``mu / sigma``."""
        return self.mu / self.sigma


@dataclass(frozen=True)
class BlackScholesInputs:
    spot: float
    strike: float
    rate: float
    vol: float
    tau: float

    def __post_init__(self) -> None:
        for name in ("spot", "strike", "rate", "vol", "tau"):
            object.__setattr__(self, name, _finite(getattr(self, name), name))
        for name in ("spot", "strike", "vol", "tau"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def d_plus(self) -> float:
        vs = self.vol * math.sqrt(self.tau)
        return (math.log(self.spot / self.strike) + (self.rate + 0.5 * self.vol**2) * self.tau) / vs

    @property
    def d_minus(self) -> float:
        return self.d_plus - self.vol * math.sqrt(self.tau)


def std_normal_pdf(z: float) -> float:
    z = _finite(z)
    return INV_SQRT_2PI * math.exp(-0.5 * z * z)


def std_normal_cdf(z: float) -> float:
    z = _finite(z)
    return 0.5 * math.erfc(-z / _SQRT2)


def std_normal_sf(z: float) -> float:
    """Upper tail ``1 - Phi(z)`` without cancellation."""
    z = _finite(z)
    return 0.5 * math.erfc(z / _SQRT2)


def _mills_cf(x: float) -> tuple[float, float]:
    """Return ``(T0, T1)`` of the Laplace continued fraction at ``x > 0``.

    ``T_k = 1 / (x + (k + 1) T_{k+1})`` so that ``M(x) = T0`` and
    ``1 - x M(x) = T0 * T1``.
    """
    t = 0.0
    for k in range(_CF_TERMS, 1, -1):
        t = k / (x + t)
    t1 = 1.0 / (x + t)
    t0 = 1.0 / (x + t1)
    return t0, t1


def mills_ratio(z: float) -> float:
    """Mills ratio ``M(z) = (1 - Phi(z)) / phi(z)``.

    Strictly positive and decreasing.  ``M(0) = sqrt(pi/2)``; for large ``z``
    it behaves like ``1/z``.  Raises :class:`RangeError` when ``z`` is so
    negative that ``phi(z)`` underflows.
    """
    z = _finite(z)
    if z > MILLS_CF_BRANCH:
        return _mills_cf(z)[0]
    pdf = std_normal_pdf(z)
    if pdf == 0.0:
        raise RangeError(f"Mills ratio overflows at z={z}")
    return std_normal_sf(z) / pdf


def g(z: float) -> float:
    """Unnormalised rectified-mean kernel ``z * int_{-inf}^z exp(-t^2/2) dt + exp(-z^2/2)``.

    Equals ``sqrt(2 pi) * (z Phi(z) + phi(z))``; increasing, tends to 0 as
    ``z -> -inf`` and to ``sqrt(2 pi) z`` as ``z -> +inf``.  Raises
    :class:`RangeError` below about ``z = -37`` where the value underflows.
    """
    z = _finite(z)
    if z >= 0.0:
        return SQRT_2PI * z * std_normal_cdf(z) + math.exp(-0.5 * z * z)
    x = -z
    # z Phi(z) + phi(z) = phi(z) (1 - x M(x)) for x = -z > 0
    if x > MILLS_CF_BRANCH:
        t0, t1 = _mills_cf(x)
        val = math.exp(-0.5 * x * x) * t0 * t1
    else:
        val = math.exp(-0.5 * x * x) - SQRT_2PI * x * std_normal_cdf(z)
    if val == 0.0:
        raise RangeError(f"g underflows at z={z}")
    return val


def rectified_mean(spec: NormalSpec) -> float:
    """``E[max(X, 0)]`` for ``X ~ N(mu, sigma^2)``, i.e. ``mu Phi(mu/sigma) + sigma phi(mu/sigma)``."""
    if not isinstance(spec, NormalSpec):
        raise DomainError("rectified_mean expects a NormalSpec")
    return spec.sigma * INV_SQRT_2PI * g(spec.z)


def black_scholes_call(inp: BlackScholesInputs) -> float:
    """European call ``N(d+) S - N(d-) K exp(-r tau)``."""
    if not isinstance(inp, BlackScholesInputs):
        raise DomainError("black_scholes_call expects BlackScholesInputs")
    disc = math.exp(-inp.rate * inp.tau)
    return std_normal_cdf(inp.d_plus) * inp.spot - std_normal_cdf(inp.d_minus) * inp.strike * disc


def atm_call_price(spot: float, vol: float, tau: float) -> float:
    """At-the-money, zero-rate call ``S [2 N(vol sqrt(tau) / 2) - 1]``.

    For small ``vol * sqrt(tau)`` this is ``S vol sqrt(tau) / sqrt(2 pi)``
    to second order.
    """
    spot = _finite(spot, "spot")
    vol = _finite(vol, "vol")
    tau = _finite(tau, "tau")
    if spot <= 0.0 or vol <= 0.0 or tau <= 0.0:
        raise DomainError("spot, vol and tau must all be > 0")
    # 2 N(x) - 1 == erf(x / sqrt 2), exact without the subtraction
    return spot * math.erf(0.5 * vol * math.sqrt(tau) / _SQRT2)
