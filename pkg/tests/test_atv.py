import math

import numpy as np
import pytest

from vstar import (
    DomainError,
    ResourceError,
    SimConfig,
    VStarParams,
    WealthSnapshot,
    beta_eff,
    bucketize,
    simulate,
    survival_probability,
    sweep,
)
from vstar import rng
from vstar.atv import TABLE1_SIGMAS, SweepError, buckets_to_csv
from vstar.gaussian import SQRT_2PI

PAPER_BETA = (0.04, 0.20, 0.40, 0.60, 0.80, 1.00, 1.20, 1.40, 1.60)


@pytest.fixture(scope="module")
def one_round():
    return simulate(SimConfig(n=1_000_000, t=1, sigma_high=3.0, seed=7))


class TestRng:
    def test_open_interval(self):
        u = rng.uniforms(3, 0, 0, 0, 100_000)
        assert u.min() > 0.0 and u.max() < 1.0

    @pytest.mark.parametrize("start,stop", [(0, 1), (1, 6), (3, 17), (1000, 1003)])
    def test_slices_agree_with_full_draw(self, start, stop):
        full = rng.normals(99, 4, rng.STREAM_LOW, 0, 2000)
        assert np.array_equal(rng.normals(99, 4, rng.STREAM_LOW, start, stop), full[start:stop])

    def test_streams_and_periods_differ(self):
        a = rng.normals(1, 0, rng.STREAM_HIGH, 0, 64)
        assert not np.array_equal(a, rng.normals(1, 0, rng.STREAM_LOW, 0, 64))
        assert not np.array_equal(a, rng.normals(1, 1, rng.STREAM_HIGH, 0, 64))
        assert not np.array_equal(a, rng.normals(2, 0, rng.STREAM_HIGH, 0, 64))

    def test_moments(self):
        x = rng.normals(5, 0, 0, 0, 1_000_000)
        assert abs(x.mean()) < 4e-3
        assert x.std() == pytest.approx(1.0, abs=3e-3)

    def test_empty(self):
        assert rng.uniforms(1, 0, 0, 5, 5).size == 0


class TestSimConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(n=0), dict(t=0), dict(sigma_high=0.0), dict(sigma_low=-0.1), dict(w0=0.0),
            dict(seed=-1), dict(seed=2**64), dict(k_th=math.nan), dict(chunk_size=0), dict(n=1.5),
        ],
    )  # fmt: skip
    def test_invalid(self, kw):
        base = dict(n=10, t=2, sigma_high=1.0, seed=1)
        base.update(kw)
        with pytest.raises(DomainError):
            SimConfig(**base)

    def test_beta(self):
        assert SimConfig(10, 1, 4.0, 1).beta == pytest.approx(4.0 / SQRT_2PI)


class TestSimulate:
    def test_negative_draw_bankrupts(self):
        # search seeds until participant 0's first high-risk variate is negative
        seed = next(s for s in range(100) if rng.normals(s, 0, rng.STREAM_HIGH, 0, 1)[0] < 0)
        snap = simulate(SimConfig(n=1, t=1, sigma_high=1.7, seed=seed))
        assert snap.final_wealth[0] == 0.0
        assert snap.periods_survived_high[0] == 0

    def test_mean_multiplier_without_dropout(self):
        cfg = SimConfig(n=1_000_000, t=1, sigma_high=2.5066, seed=3, k_th=-math.inf)
        m = simulate(cfg).final_wealth / cfg.w0
        se = m.std() / math.sqrt(m.size)
        assert abs(m.mean() - 2.5066 / SQRT_2PI) < 3 * se
        assert round(m.mean(), 2) == 1.00

    def test_round_one_survival(self, one_round):
        p = survival_probability(VStarParams(3.0, 2.5))
        frac = one_round.high_risk_count(1) / one_round.n
        assert abs(frac - 0.2023) < 0.0012
        assert abs(frac - p) < 3 * math.sqrt(p * (1 - p) / one_round.n)

    def test_survivor_mean_is_beta_eff(self, one_round):
        kept = one_round.final_wealth[one_round.periods_survived_high == 1] / 20_000.0
        se = kept.std() / math.sqrt(kept.size)
        assert abs(kept.mean() - beta_eff(VStarParams(3.0, 2.5))) < 3 * se

    def test_failing_round_still_pays_high_branch(self, one_round):
        # dropouts in round 1 keep their high-risk payoff, which is below the threshold
        lost = one_round.final_wealth[one_round.periods_survived_high == 0]
        assert lost.max() < 2.5 * 20_000.0
        assert np.mean(lost == 0.0) == pytest.approx(0.5 / 0.7977, abs=0.01)

    @pytest.mark.parametrize("threads", [2, 8])
    def test_thread_invariance(self, threads):
        cfg = SimConfig(n=100_000, t=6, sigma_high=3.0, seed=21, chunk_size=7_000)
        a = simulate(cfg, threads=1)
        b = simulate(cfg, threads=threads)
        assert a.final_wealth.tobytes() == b.final_wealth.tobytes()
        assert np.array_equal(a.periods_survived_high, b.periods_survived_high)

    def test_chunk_invariance(self):
        base = dict(n=20_001, t=4, sigma_high=2.0, seed=5)
        a = simulate(SimConfig(**base, chunk_size=1))
        b = simulate(SimConfig(**base, chunk_size=4099))
        c = simulate(SimConfig(**base, chunk_size=1 << 20))
        assert a.final_wealth.tobytes() == b.final_wealth.tobytes() == c.final_wealth.tobytes()

    def test_non_negative_every_period(self):
        for t in range(1, 6):
            snap = simulate(SimConfig(n=50_000, t=t, sigma_high=3.5, seed=9, sigma_low=2.0))
            assert snap.final_wealth.min() >= 0.0

    def test_monotone_attrition_and_geometric_decay(self):
        snap = simulate(SimConfig(n=1_000_000, t=5, sigma_high=3.0, seed=13))
        p = survival_probability(VStarParams(3.0, 2.5))
        counts = [snap.high_risk_count(r) for r in range(0, 6)]
        assert counts[0] == snap.n
        assert all(b <= a for a, b in zip(counts, counts[1:]))
        for r in range(1, 6):
            q = p**r
            assert abs(counts[r] - snap.n * q) < 3 * math.sqrt(snap.n * q * (1 - q))
        assert snap.periods_survived_high.max() <= 5

    def test_memory_budget(self):
        with pytest.raises(ResourceError):
            simulate(SimConfig(n=10_000_000, t=1, sigma_high=1.0, seed=1), memory_budget=1 << 20)

    def test_rejects_non_config(self):
        with pytest.raises(DomainError):
            simulate({"n": 1})


class TestSnapshot:
    def test_dump_load_round_trip(self, tmp_path):
        snap = simulate(SimConfig(n=1000, t=3, sigma_high=3.0, seed=2))
        path = tmp_path / "s.bin"
        snap.dump(path)
        back = WealthSnapshot.load(path)
        assert back.final_wealth.tobytes() == snap.final_wealth.tobytes()
        assert np.array_equal(back.periods_survived_high, snap.periods_survived_high)
        assert (back.seed_used, back.t) == (2, 3)
        assert path.stat().st_size == 32 + 12 * 1000

    def test_load_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"not a snapshot at all, clearly........")
        with pytest.raises(DomainError):
            WealthSnapshot.load(path)

    def test_csv(self, tmp_path):
        snap = WealthSnapshot(np.array([1.5, 0.0]), np.array([2, 0]), 1, 2)
        snap.to_csv(tmp_path / "s.csv")
        assert (tmp_path / "s.csv").read_text().splitlines() == [
            "participant,final_wealth,periods_survived_high",
            "0,1.5,2",
            "1,0.0,0",
        ]

    def test_negative_wealth_rejected(self):
        with pytest.raises(DomainError):
            WealthSnapshot(np.array([-1.0]), np.array([0]), 0, 1)


class TestBuckets:
    def test_all_zero(self):
        t = bucketize(WealthSnapshot(np.zeros(5), np.zeros(5), 0, 1))
        assert (t.bankrupt, t.heavy_loss, t.mid) == (5, 0, 0)
        assert all(c == 0 for c in t.tail)
        assert t.ratio == math.inf

    def test_band_edges_partition(self):
        w = np.array([0, 99.9, 100, 1999, 2000, 20_000, 20_000.01, 5e4 + 1, 2e6, 2e7, 2e9])
        t = bucketize(WealthSnapshot(w, np.zeros(w.size), 0, 1))
        assert (t.bankrupt, t.heavy_loss, t.mid) == (2, 2, 2)
        assert t.bankrupt + t.heavy_loss + t.mid + t.tail[0] == t.n
        assert list(t.tail) == sorted(t.tail, reverse=True)
        assert t.count_above(1e6) == 3 and t.count_above(1e7) == 2
        assert t.ratio == 1.5

    def test_partition_on_simulation(self):
        t = bucketize(simulate(SimConfig(n=200_000, t=15, sigma_high=3.0, seed=4)))
        assert t.bankrupt + t.heavy_loss + t.mid + t.tail[0] == t.n
        assert list(t.tail) == sorted(t.tail, reverse=True)

    def test_csv_columns(self):
        t = bucketize(WealthSnapshot(np.array([1e3, 3e7]), np.zeros(2), 0, 1), sigma=2.0)
        lines = buckets_to_csv([t]).splitlines()
        assert lines[0] == (
            "sigma,beta,bankrupt,heavy_loss,mid_2k_20k,gt_20k,gt_50k,gt_100k,gt_1m,gt_10m,gt_100m,gt_1b,ratio"
        )
        assert lines[1].split(",")[2:5] == ["0", "1", "0"]
        assert lines[1].endswith(",1.0")


class TestSweep:
    def test_table1_beta_column(self):
        for s, b in zip(TABLE1_SIGMAS, PAPER_BETA):
            assert round(s / SQRT_2PI, 2) == b

    def test_order_and_determinism(self):
        cfgs = [SimConfig(n=5000, t=5, sigma_high=s, seed=8) for s in (1.0, 3.0, 3.0)]
        tables = sweep(cfgs)
        assert [t.sigma for t in tables] == [1.0, 3.0, 3.0]
        assert tables[1] == tables[2]

    def test_empty(self):
        with pytest.raises(DomainError):
            sweep([])

    def test_error_carries_index(self):
        cfgs = [SimConfig(n=10, t=1, sigma_high=1.0, seed=1), SimConfig(n=10_000_000, t=1, sigma_high=1.0, seed=1)]
        with pytest.raises(SweepError) as info:
            sweep(cfgs, memory_budget=1 << 20)
        assert info.value.index == 1
