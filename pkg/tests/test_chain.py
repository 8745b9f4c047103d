import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vstar import (
    AtmChainParams,
    DomainError,
    RecursionConfig,
    Regime,
    Termination,
    atm_chain,
    chain_sum,
    classify_unconditional,
    find_fixed_point,
    g,
    iterate_g,
    std_normal_cdf,
)
from vstar.gaussian import SQRT_2PI, SQRT_PI_OVER_2


def oracle_fixed_point(alpha, lo=1e-9, hi=100.0):
    # plain textbook bisection, written independently of the library helper
    def h(w):
        return g(alpha * w) - w

    assert h(lo) > 0 > h(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestIterateG:
    def test_alpha_zero_collapses_to_one(self):
        tr = iterate_g(RecursionConfig(alpha=0.0, w0=5.0))
        assert tr.values[0] == 5.0
        assert all(v == 1.0 for v in tr.values[1:])
        assert tr.terminated_by is Termination.CONVERGED

    def test_self_similar_case_grows(self):
        tr = iterate_g(RecursionConfig(alpha=1.0, w0=1.0, max_steps=50))
        v = np.array(tr.values)
        assert np.all(np.diff(v) > 0)
        assert tr.terminated_by is Termination.DIVERGED

    def test_self_similar_ratio_approaches_sqrt_2pi(self):
        tr = iterate_g(RecursionConfig(alpha=1.0, w0=1.0, max_steps=200, divergence_cap=1e12))
        v = np.array(tr.values)
        r = tr.ratios()
        for i in range(len(r) - 5, len(r)):
            pred = SQRT_2PI * std_normal_cdf(v[i])
            assert r[i] == pytest.approx(pred, rel=0.01)
            assert r[i] <= SQRT_2PI * (1 + 4e-16)
        assert r[-1] == pytest.approx(SQRT_2PI, rel=0.01)

    def test_small_alpha_converges_to_oracle(self):
        tr = iterate_g(RecursionConfig(alpha=0.1, w0=1.0))
        assert tr.terminated_by is Termination.CONVERGED
        assert tr.tolerance == 1e-12
        assert tr.values[-1] == pytest.approx(oracle_fixed_point(0.1), abs=1e-9)

    def test_completed_when_steps_run_out(self):
        tr = iterate_g(RecursionConfig(alpha=0.1, w0=1.0, max_steps=2))
        assert tr.terminated_by is Termination.COMPLETED
        assert len(tr.values) == 3

    def test_values_positive(self):
        tr = iterate_g(RecursionConfig(alpha=0.4, w0=3.0))
        assert min(tr.values) > 0

    @pytest.mark.parametrize(
        "kw",
        [
            dict(alpha=-0.1, w0=1.0),
            dict(alpha=0.1, w0=0.0),
            dict(alpha=0.1, w0=1.0, max_steps=0),
            dict(alpha=0.1, w0=1.0, divergence_cap=0.5),
            dict(alpha=math.nan, w0=1.0),
        ],
    )
    def test_invalid_config(self, kw):
        with pytest.raises(DomainError):
            RecursionConfig(**kw)


class TestFixedPoint:
    def test_alpha_zero(self):
        assert find_fixed_point(0.0) == 1.0

    def test_residual(self):
        w = find_fixed_point(0.2)
        assert abs(g(0.2 * w) - w) < 1e-10

    def test_matches_iteration(self):
        w = find_fixed_point(0.2)
        tr = iterate_g(RecursionConfig(alpha=0.2, w0=1.0))
        assert tr.values[-1] == pytest.approx(w, abs=1e-8)

    def test_none_for_self_similar(self):
        assert find_fixed_point(1.0) is None
        # dense scan confirms h > 0 everywhere on the bracket
        ws = np.geomspace(1e-12, 1e6, 20_000)
        assert all(g(w) - w > 0 for w in ws)

    def test_stable_under_restart(self):
        w = find_fixed_point(0.3)
        tr = iterate_g(RecursionConfig(alpha=0.3, w0=w, max_steps=100))
        assert max(abs(v - w) for v in tr.values) < 1e-9

    @pytest.mark.parametrize("alpha", [0.05, 0.2, 0.35])
    def test_against_independent_bisection(self, alpha):
        assert find_fixed_point(alpha) == pytest.approx(oracle_fixed_point(alpha), abs=1e-10)

    def test_bad_bracket(self):
        with pytest.raises(DomainError):
            find_fixed_point(0.2, bracket_hi=0.0)
        with pytest.raises(DomainError):
            find_fixed_point(-1.0)


class TestAtmChain:
    def test_critical_chain_is_flat(self):
        tr = atm_chain(AtmChainParams(1.0, SQRT_2PI), 5)
        assert list(tr.values) == pytest.approx([1.0] * 5, rel=1e-15)

    def test_beta_at_three(self):
        p = AtmChainParams(1.0, 3.0)
        assert p.beta == pytest.approx(1.1968, abs=1e-4)
        assert round(p.beta, 2) == 1.20

    def test_halving(self):
        tr = atm_chain(AtmChainParams(2.0, SQRT_PI_OVER_2), 6)
        assert list(tr.values) == pytest.approx([2.0, 1.0, 0.5, 0.25, 0.125, 0.0625], rel=1e-14)

    def test_reproducible(self):
        p = AtmChainParams(1.7, 2.2)
        assert atm_chain(p, 40).values == atm_chain(p, 40).values

    @given(st.floats(1e-3, 10.0), st.floats(0.05, 6.0))
    def test_ratio_is_beta(self, mu1, s):
        tr = atm_chain(AtmChainParams(mu1, s), 30)
        assert np.allclose(tr.ratios(), s / SQRT_2PI, rtol=1e-12, atol=0)

    def test_n_zero_rejected(self):
        with pytest.raises(DomainError):
            atm_chain(AtmChainParams(1.0, 1.0), 0)

    def test_invalid_params(self):
        with pytest.raises(DomainError):
            AtmChainParams(0.0, 1.0)
        with pytest.raises(DomainError):
            AtmChainParams(1.0, -1.0)


class TestChainSum:
    def test_vanishing_vol(self):
        assert chain_sum(AtmChainParams(1.0, 1e-12)) == pytest.approx(1.0, rel=1e-11)

    def test_half(self):
        assert chain_sum(AtmChainParams(1.0, SQRT_PI_OVER_2)) == pytest.approx(2.0, abs=1e-10)

    def test_divergent_at_and_above_critical(self):
        assert chain_sum(AtmChainParams(1.0, SQRT_2PI)) == math.inf
        assert chain_sum(AtmChainParams(1.0, 2.51)) == math.inf
        assert chain_sum(AtmChainParams(1.0, 4.0)) == math.inf

    def test_rounded_quote_just_below_critical_is_finite(self):
        # 2.5066 sits a hair under sqrt(2 pi), so the sum is huge but finite
        s = chain_sum(AtmChainParams(1.0, 2.5066))
        assert math.isfinite(s) and s > 1e4

    @settings(max_examples=50)
    @given(st.floats(0.01, 2.4), st.floats(0.1, 10.0))
    def test_partial_sum_oracle(self, s, mu1):
        p = AtmChainParams(mu1, s)
        beta = p.beta
        partial = math.fsum(mu1 * beta**k for k in range(10_000))
        bound = beta**10_000 * mu1 / (1 - beta)
        assert abs(chain_sum(p) - partial) <= bound + 1e-12 * partial


class TestClassifyUnconditional:
    def test_examples(self):
        assert classify_unconditional(2.0) is Regime.SUBCRITICAL
        assert classify_unconditional(SQRT_2PI) is Regime.CRITICAL
        assert classify_unconditional(4.0) is Regime.SUPERCRITICAL

    def test_band_edges(self):
        assert classify_unconditional(SQRT_2PI * (1 + 1e-7)) is Regime.SUPERCRITICAL
        assert classify_unconditional(SQRT_2PI * (1 - 1e-7)) is Regime.SUBCRITICAL
        assert classify_unconditional(SQRT_2PI * (1 + 1e-10)) is Regime.CRITICAL

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            classify_unconditional(0.0)
