import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guessdec.channel_info import (
    ConvergenceError,
    blahut_arimoto,
    cond_info_variance,
    dispersion,
    qfunc,
    qinv,
)
from guessdec.mot import Channel, Pmf, mutual_info
from oracles import bsc_capacity, bsc_dispersion

LN2 = math.log(2.0)

BAC = Channel.from_rows([[0.8, 0.2], [0.1, 0.9]])


class TestBlahutArimoto:
    def test_noiseless(self):
        res = blahut_arimoto(Channel.identity(2))
        assert res.capacity == pytest.approx(LN2, abs=1e-9)
        assert res.caid.probs == pytest.approx((0.5, 0.5), abs=1e-6)

    def test_bsc_closed_form(self):
        res = blahut_arimoto(Channel.bsc(0.1))
        assert res.capacity == pytest.approx(bsc_capacity(0.1), abs=1e-9)
        assert res.capacity == pytest.approx(0.368064, abs=1e-6)

    def test_bac_against_fine_grid(self):
        res = blahut_arimoto(BAC, tol=1e-11)
        # 1-D grid search over input distributions
        grid = np.linspace(0.0, 1.0, 200_001)
        best = max(
            (mutual_info(Pmf((float(a), float(1 - a))), BAC), float(a))
            for a in grid
            if 0 < a < 1
        )
        assert res.capacity == pytest.approx(best[0], abs=1e-6)
        assert res.caid[0] == pytest.approx(best[1], abs=1e-3)

    def test_residual_and_iterations_reported(self):
        res = blahut_arimoto(BAC, tol=1e-9, max_iter=10_000)
        assert res.residual <= 1e-9
        assert res.iterations <= 10_000

    def test_non_convergence_reported(self):
        with pytest.raises(ConvergenceError) as err:
            blahut_arimoto(BAC, tol=1e-13, max_iter=3)
        assert err.value.residual > 0

    def test_invalid_tol(self):
        with pytest.raises(ValueError):
            blahut_arimoto(BAC, tol=0.0)

    @given(st.floats(0.01, 0.99))
    @settings(max_examples=25, deadline=None)
    def test_maximality_over_random_inputs(self, a):
        res = blahut_arimoto(BAC, tol=1e-10)
        assert res.capacity >= mutual_info(Pmf((a, 1.0 - a)), BAC) - 1e-8


class TestCondInfoVariance:
    def test_noiseless_zero(self):
        assert cond_info_variance(Pmf.uniform(2), Channel.identity(2)) == 0.0

    def test_constant_channel_zero(self):
        q = Pmf((0.3, 0.7))
        assert cond_info_variance(Pmf((0.4, 0.6)), Channel((q, q))) == pytest.approx(0.0, abs=1e-15)

    def test_bsc_closed_form(self):
        got = cond_info_variance(Pmf.uniform(2), Channel.bsc(0.11))
        assert got == pytest.approx(bsc_dispersion(0.11), abs=1e-12)

    def test_permutation_invariance(self):
        w = Channel.from_rows([[0.7, 0.2, 0.1], [0.1, 0.6, 0.3]])
        p = Pmf((0.35, 0.65))
        base = cond_info_variance(p, w)
        # output permutation
        w_out = Channel.from_rows([[0.1, 0.2, 0.7], [0.3, 0.6, 0.1]])
        assert cond_info_variance(p, w_out) == pytest.approx(base, abs=1e-14)
        # input permutation with matched p permutation
        w_in = Channel.from_rows([[0.1, 0.6, 0.3], [0.7, 0.2, 0.1]])
        assert cond_info_variance(Pmf((0.65, 0.35)), w_in) == pytest.approx(base, abs=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cond_info_variance(Pmf.uniform(3), Channel.bsc(0.2))


class TestDispersion:
    def test_bsc_unique_caid(self):
        res = dispersion(Channel.bsc(0.11), eps=0.1)
        assert res.unique_caid
        assert res.v_min == pytest.approx(res.v_max, abs=1e-9)
        assert res.v_at_caid == pytest.approx(bsc_dispersion(0.11), abs=1e-9)

    def test_eps_branch_selection(self):
        res = dispersion(Channel.bsc(0.11), eps=0.5)
        assert res.v_eps(0.5) == res.v_max
        assert res.v_eps(0.49) == res.v_min

    def test_identity_zero_dispersion(self):
        res = dispersion(Channel.identity(2), eps=0.1)
        assert res.v_at_caid == pytest.approx(0.0, abs=1e-12)

    def test_invalid_eps(self):
        with pytest.raises(ValueError):
            dispersion(Channel.bsc(0.11), eps=0.0)

    def test_candidate_caid_must_achieve_capacity(self):
        with pytest.raises(ValueError):
            dispersion(Channel.bsc(0.11), eps=0.1, candidate_caids=(Pmf((0.9, 0.1)),))

    def test_user_supplied_candidates_feed_min_max(self):
        res = dispersion(Channel.bsc(0.11), eps=0.1, candidate_caids=(Pmf.uniform(2),))
        assert res.v_min <= res.v_at_caid <= res.v_max


class TestGaussianTails:
    def test_symmetry_point(self):
        assert qfunc(0.0) == pytest.approx(0.5, abs=1e-15)
        assert qinv(0.5) == pytest.approx(0.0, abs=1e-10)

    def test_decile(self):
        # high-precision quadrature oracle for the 10% point
        from mpmath import mp, mpf

        mp.dps = 30
        z = mpf("1.2815515655")
        expected = mp.quad(lambda u: mp.exp(-(u**2) / 2) / mp.sqrt(2 * mp.pi), [z, mp.inf])
        assert qfunc(1.2815515655) == pytest.approx(float(expected), abs=1e-12)
        assert qfunc(1.2815515655) == pytest.approx(0.10, abs=1e-9)

    def test_round_trip(self):
        # for z <= -5 the round trip is limited by double resolution near 1:
        # qfunc(z) is within half an ulp of 1, and |dz/dp| = 1/phi(z) blows the
        # representation error up to ~1e-9; test the achievable bound there
        for z in np.linspace(-4.75, 6.0, 44):
            assert qinv(qfunc(float(z))) == pytest.approx(float(z), abs=1e-10)
        for z in np.linspace(-6.0, -4.75, 6):
            phi = math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
            limit = 1e-10 + 1.5 * 1.2e-16 / phi
            assert qinv(qfunc(float(z))) == pytest.approx(float(z), abs=limit)

    def test_complement_identity(self):
        for z in np.linspace(-8.0, 8.0, 33):
            assert qfunc(float(z)) + qfunc(float(-z)) == pytest.approx(1.0, abs=1e-12)

    def test_strictly_decreasing(self):
        # beyond |z| ~ 8.3 the value saturates at 1.0 in double precision
        zs = np.linspace(-8.0, 8.0, 81)
        vals = [qfunc(float(z)) for z in zs]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_qinv_domain(self):
        with pytest.raises(ValueError):
            qinv(0.0)
        with pytest.raises(ValueError):
            qinv(1.0)
