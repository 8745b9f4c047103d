"""Monte Carlo of the at-the-value (ATV) survival game.

Each period every participant in the high-risk game bets their whole wealth
on a payoff ``max(X, 0)`` with ``X ~ N(0, (sigma w)^2)``.  Anyone whose
payoff falls short of ``k_th * w`` keeps that payoff but moves permanently to
a low-volatility alternative paying ``max(w (1 + sigma_low Z), 0)``.

Per period the update order is: draw both variates for everyone, compute the
threshold from current wealth, set wealth to the payoff of the branch the
participant was in, then retire high-risk participants who missed the
threshold.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rng
from .errors import DomainError, ResourceError, VStarError
from .gaussian import SQRT_2PI

DEFAULT_MEMORY_BUDGET = 8 * 1024**3
DEFAULT_CHUNK = 1 << 18
# wealth (f8) + flag (b1) + periods survived (i4) per participant, plus per-chunk scratch
_BYTES_PER_PARTICIPANT = 8 + 1 + 4
_SCRATCH_BYTES_PER_SLOT = 6 * 8

SNAPSHOT_MAGIC = b"ATVSNAP1"
_HEADER = struct.Struct("<8sQQQ")


@dataclass(frozen=True)
class SimConfig:
    n: int
    t: int
    sigma_high: float
    seed: int
    w0: float = 20_000.0
    sigma_low: float = 0.1
    k_th: float = 2.5
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self) -> None:
        for name in ("n", "t", "chunk_size"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        if not (math.isfinite(self.w0) and self.w0 > 0.0):
            raise DomainError(f"w0 must be finite and > 0, got {self.w0}")
        if not (math.isfinite(self.sigma_high) and self.sigma_high > 0.0):
            raise DomainError(f"sigma_high must be finite and > 0, got {self.sigma_high}")
        if not (math.isfinite(self.sigma_low) and self.sigma_low >= 0.0):
            raise DomainError(f"sigma_low must be finite and >= 0, got {self.sigma_low}")
        # -inf disables dropout; +inf retires everyone after the first period
        if math.isnan(self.k_th):
            raise DomainError("k_th must not be NaN")

    @property
    def beta(self) -> float:
        return self.sigma_high / SQRT_2PI

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class WealthSnapshot:
    final_wealth: np.ndarray
    periods_survived_high: np.ndarray
    seed_used: int
    t: int

    def __post_init__(self) -> None:
        self.final_wealth = np.asarray(self.final_wealth, dtype=np.float64)
        self.periods_survived_high = np.asarray(self.periods_survived_high, dtype=np.int32)
        if self.final_wealth.shape != self.periods_survived_high.shape or self.final_wealth.ndim != 1:
            raise DomainError("wealth and survival arrays must be 1-d and the same length")
        if self.final_wealth.size and self.final_wealth.min() < 0.0:
            raise DomainError("wealth must be non-negative")

    @property
    def n(self) -> int:
        return int(self.final_wealth.size)

    def high_risk_count(self, rounds: int) -> int:
        """Participants still in the high-risk game after ``rounds`` periods."""
        return int(np.count_nonzero(self.periods_survived_high >= rounds))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["participant", "final_wealth", "periods_survived_high"])
            for i, (x, s) in enumerate(zip(self.final_wealth.tolist(), self.periods_survived_high.tolist())):
                w.writerow([i, repr(x), s])

    def dump(self, path: str | Path) -> None:
        """Binary layout: header ``<8sQQQ`` (magic, n, t, seed), then ``n`` ``<f8`` wealth, then ``n`` ``<i4`` periods."""
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(SNAPSHOT_MAGIC, self.n, self.t, self.seed_used))
            fh.write(self.final_wealth.astype("<f8").tobytes())
            fh.write(self.periods_survived_high.astype("<i4").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "WealthSnapshot":
        data = Path(path).read_bytes()
        if len(data) < _HEADER.size:
            raise DomainError(f"{path}: truncated snapshot header")
        magic, n, t, seed = _HEADER.unpack_from(data)
        if magic != SNAPSHOT_MAGIC:
            raise DomainError(f"{path}: not a wealth snapshot")
        expected = _HEADER.size + 12 * n
        if len(data) != expected:
            raise DomainError(f"{path}: expected {expected} bytes, found {len(data)}")
        off = _HEADER.size
        wealth = np.frombuffer(data, dtype="<f8", count=n, offset=off).astype(np.float64)
        periods = np.frombuffer(data, dtype="<i4", count=n, offset=off + 8 * n).astype(np.int32)
        return cls(wealth, periods, int(seed), int(t))


def _chunks(n: int, size: int) -> list[tuple[int, int]]:
    return [(a, min(a + size, n)) for a in range(0, n, size)]


def _step(cfg: SimConfig, period: int, w: np.ndarray, high: np.ndarray, survived: np.ndarray, a: int, b: int) -> None:
    ws = w[a:b]
    hs = high[a:b]
    payoff_high = np.maximum(rng.normals(cfg.seed, period, rng.STREAM_HIGH, a, b) * (cfg.sigma_high * ws), 0.0)
    payoff_low = np.maximum(ws * (1.0 + rng.normals(cfg.seed, period, rng.STREAM_LOW, a, b) * cfg.sigma_low), 0.0)
    threshold = cfg.k_th * ws
    dropout = hs & (payoff_high < threshold)
    w[a:b] = np.where(hs, payoff_high, payoff_low)
    np.logical_and(hs, ~dropout, out=hs)
    survived[a:b] += hs


def estimate_memory(cfg: SimConfig, threads: int = 1) -> int:
    slots = min(cfg.n, cfg.chunk_size) * max(1, threads)
    return cfg.n * _BYTES_PER_PARTICIPANT + slots * _SCRATCH_BYTES_PER_SLOT


def simulate(cfg: SimConfig, threads: int = 1, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> WealthSnapshot:
    """Run ``cfg.t`` periods for ``cfg.n`` participants.

    Chunks of participants are processed in parallel within a period; the
    result is bit-identical for any ``threads`` and ``chunk_size``.
    """
    if not isinstance(cfg, SimConfig):
        raise DomainError("simulate expects a SimConfig")
    threads = max(1, int(threads))
    need = estimate_memory(cfg, threads)
    if need > memory_budget:
        raise ResourceError(f"run needs ~{need / 2**20:.0f} MiB, budget is {memory_budget / 2**20:.0f} MiB")

    w = np.full(cfg.n, cfg.w0, dtype=np.float64)
    high = np.ones(cfg.n, dtype=bool)
    survived = np.zeros(cfg.n, dtype=np.int32)
    chunks = _chunks(cfg.n, cfg.chunk_size)

    if threads == 1 or len(chunks) == 1:
        for period in range(cfg.t):
            for a, b in chunks:
                _step(cfg, period, w, high, survived, a, b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            for period in range(cfg.t):
                # period barrier: all chunks finish before the next period starts
                list(ex.map(lambda ab: _step(cfg, period, w, high, survived, *ab), chunks))
    return WealthSnapshot(w, survived, cfg.seed, cfg.t)


# --- Table-1 style aggregation -------------------------------------------------

TAIL_THRESHOLDS = (20_000.0, 50_000.0, 100_000.0, 1e6, 1e7, 1e8, 1e9)
BUCKET_COLUMNS = (
    "sigma", "beta", "bankrupt", "heavy_loss", "mid_2k_20k",
    "gt_20k", "gt_50k", "gt_100k", "gt_1m", "gt_10m", "gt_100m", "gt_1b", "ratio",
)  # fmt: skip


@dataclass(frozen=True)
class BucketTable:
    """Disjoint bands below $20k plus cumulative tail counts above it.

    Bands: bankrupt ``w < 100``, heavy loss ``100 <= w < 2000``, mid
    ``2000 <= w <= 20000``; the tail counts are strict (``w > threshold``).
    """

    n: int
    bankrupt: int
    heavy_loss: int
    mid: int
    tail: tuple[int, ...]
    ratio: float
    sigma: float | None = None
    thresholds: tuple[float, ...] = field(default=TAIL_THRESHOLDS)

    def count_above(self, threshold: float) -> int:
        return self.tail[self.thresholds.index(threshold)]

    def fractions(self) -> dict[str, float]:
        return {
            "bankrupt": self.bankrupt / self.n,
            "heavy_loss": self.heavy_loss / self.n,
            "mid": self.mid / self.n,
            "gt_20k": self.tail[0] / self.n,
        }

    def row(self) -> list:
        beta = "" if self.sigma is None else self.sigma / SQRT_2PI
        return [
            "" if self.sigma is None else self.sigma, beta,
            self.bankrupt, self.heavy_loss, self.mid, *self.tail,
            "inf" if math.isinf(self.ratio) else self.ratio,
        ]  # fmt: skip


def bucketize(snapshot: WealthSnapshot, sigma: float | None = None) -> BucketTable:
    w = snapshot.final_wealth
    bankrupt = int(np.count_nonzero(w < 100.0))
    heavy = int(np.count_nonzero((w >= 100.0) & (w < 2_000.0)))
    mid = int(np.count_nonzero((w >= 2_000.0) & (w <= 20_000.0)))
    tail = tuple(int(np.count_nonzero(w > th)) for th in TAIL_THRESHOLDS)
    ten_m = tail[TAIL_THRESHOLDS.index(1e7)]
    ratio = math.inf if ten_m == 0 else tail[TAIL_THRESHOLDS.index(1e6)] / ten_m
    return BucketTable(snapshot.n, bankrupt, heavy, mid, tail, ratio, sigma)


def buckets_to_csv(tables: Sequence[BucketTable], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BUCKET_COLUMNS)
    for t in tables:
        w.writerow([repr(v) if isinstance(v, float) else v for v in t.row()])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


class SweepError(VStarError):
    """A run inside a sweep failed; ``index`` identifies which."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"run {index} failed: {cause}")
        self.index = index
        self.cause = cause


def sweep(cfgs: Sequence[SimConfig], threads: int = 1, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> list[BucketTable]:
    """One bucket table per config, in order; each run seeded from its own config."""
    cfgs = list(cfgs)
    if not cfgs:
        raise DomainError("sweep needs at least one config")
    out = []
    for i, cfg in enumerate(cfgs):
        try:
            snap = simulate(cfg, threads=threads, memory_budget=memory_budget)
        except VStarError as exc:
            raise SweepError(i, exc) from exc
        out.append(bucketize(snap, sigma=cfg.sigma_high))
    return out


TABLE1_SIGMAS = (0.10, 0.50, 1.00, 1.50, 2.00, 2.51, 3.00, 3.50, 4.00)
