"""Radial laws of the walk step: exit law, inner law, directions, KS.

Frozen oracle values come from scipy.stats / scipy.special evaluated
against the closed-form CDFs; the alpha = 1 exit law has elementary
values (F(sqrt 2) = 1/2, F(2) = 2/3, for every d) used directly.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracwos import sampler
from fracwos.sampler import (
    FractionalParams,
    RngStream,
    DirectionMode,
    NEWTON_DELTA,
)

# 1 - scipy.special.betainc(alpha/2, 1 - alpha/2, 1/r^2), frozen
EXIT_CDF_TABLE = [
    (1.5, 0.5, 0.2452220549694213),
    (3.0, 0.5, 0.4771960476285432),
    (1.2, 1.5, 0.6808974150437792),
    (10.0, 1.9, 0.9993370552737216),
    (1.0001, 0.1, 1.604780997943589e-05),
    (1.05, 1.9, 0.8845623758070295),
]

# scipy.stats.beta.pdf(1/r^2; alpha/2, 1-alpha/2) * 2/r^3, frozen
EXIT_PDF_TABLE = [
    (1.5, 0.5, 0.28382220048474444),
    (2.0, 1.0, 0.18377629847393065),
    (1.2, 1.5, 0.6943754723676644),
    (4.0, 1.9, 0.001900491260833536),
]

# (r, d, alpha, cdf, pdf) frozen from scipy.integrate.quad of the
# unnormalised radial density
#   t^(alpha-1) * (1 - betainc((d-alpha)/2, alpha/2, t^2))
# over (0, r), divided by its total mass on (0, 1); the pdf column is
# the same density normalised pointwise.  Quad abs error < 1e-14.
INNER_TABLE = [
    (0.5, 2, 1.0, 0.65757337181386, 1.0471975511965974),
    (0.25, 5, 0.5, 0.5155838637001497, 1.0308978998005032),
    (0.8, 2, 1.9, 0.9235371197724662, 0.7182110206319373),
    (0.9, 5, 1.5, 0.9514771005228133, 0.8014719684421482),
]


class TestFractionalParams:
    def test_accepts_open_interval(self):
        FractionalParams(2, 0.1)
        FractionalParams(15, 1.9)

    @pytest.mark.parametrize("alpha", [0.0, 2.0, -0.5, 2.5, math.nan])
    def test_rejects_alpha(self, alpha):
        with pytest.raises(ValueError):
            FractionalParams(2, alpha)

    @pytest.mark.parametrize("d", [1, 0, -3])
    def test_rejects_low_dimension(self, d):
        with pytest.raises(ValueError):
            FractionalParams(d, 1.0)

    def test_rejects_non_integer_dimension(self):
        with pytest.raises(ValueError):
            FractionalParams(2.5, 1.0)


class TestRngStream:
    def test_same_key_same_draws(self):
        a = RngStream(7, 3).generator().random(5)
        b = RngStream(7, 3).generator().random(5)
        assert np.array_equal(a, b)

    def test_different_stream_different_draws(self):
        a = RngStream(7, 3).generator().random(5)
        b = RngStream(7, 4).generator().random(5)
        assert not np.array_equal(a, b)

    def test_substream_offsets(self):
        assert RngStream(7, 3).substream(2) == RngStream(7, 5)
        # wraps modulo 2^64
        assert RngStream(0, 2**64 - 1).substream(1) == RngStream(0, 0)


class TestExitRadiusCdf:
    def test_alpha_one_closed_forms(self):
        for d in (2, 3, 5):
            p = FractionalParams(d, 1.0)
            assert sampler.exit_radius_cdf(math.sqrt(2.0), p) == pytest.approx(0.5, abs=1e-14)
            assert sampler.exit_radius_cdf(2.0, p) == pytest.approx(2.0 / 3.0, abs=1e-14)

    @pytest.mark.parametrize("r,alpha,want", EXIT_CDF_TABLE)
    def test_frozen_oracle(self, r, alpha, want):
        p = FractionalParams(2, alpha)
        assert sampler.exit_radius_cdf(r, p) == pytest.approx(want, rel=1e-12, abs=1e-14)

    def test_support_edge(self):
        p = FractionalParams(2, 1.5)
        assert sampler.exit_radius_cdf(1.0, p) == 0.0

    def test_rejects_r_below_one(self):
        p = FractionalParams(2, 1.5)
        with pytest.raises(ValueError):
            sampler.exit_radius_cdf(0.999, p)

    @given(st.floats(min_value=0.1, max_value=1.9),
           st.floats(min_value=1.0, max_value=50.0))
    @settings(max_examples=60, deadline=None)
    def test_monotone_bounded(self, alpha, r):
        p = FractionalParams(2, alpha)
        v = sampler.exit_radius_cdf(r, p)
        assert 0.0 <= v < 1.0
        v2 = sampler.exit_radius_cdf(r + 0.5, p)
        assert v2 >= v


class TestExitRadiusPdf:
    @pytest.mark.parametrize("r,alpha,want", EXIT_PDF_TABLE)
    def test_frozen_oracle(self, r, alpha, want):
        p = FractionalParams(2, alpha)
        assert sampler.exit_radius_pdf(r, p) == pytest.approx(want, rel=1e-12)

    def test_rejects_support_edge(self):
        p = FractionalParams(2, 0.5)
        with pytest.raises(ValueError):
            sampler.exit_radius_pdf(1.0, p)

    def test_matches_cdf_derivative(self):
        p = FractionalParams(2, 1.3)
        h = 1e-6
        for r in (1.2, 2.0, 5.0):
            fd = (sampler.exit_radius_cdf(r + h, p) - sampler.exit_radius_cdf(r - h, p)) / (2 * h)
            assert sampler.exit_radius_pdf(r, p) == pytest.approx(fd, rel=1e-7)


class TestExitRadiusInverse:
    @pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0, 1.5])
    def test_roundtrip(self, alpha):
        p = FractionalParams(2, alpha)
        us = np.linspace(0.01, 0.99, 99)
        back = sampler.exit_radius_cdf(sampler.exit_radius_inverse_cdf(us, p), p)
        assert np.max(np.abs(back - us)) <= 1e-9

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0, 1.5, 1.9])
    def test_quantile_sandwich(self, alpha):
        # the float-valued inverse is a discrete quantile function, so
        # the exact identity is the bracket
        #   cdf_rounded_left(R) <= u <= cdf_rounded(R).
        # For alpha near 2 most of the mass sits within a few float
        # spacings of r = 1 (F jumps 0 -> 0.17 across one ulp at
        # alpha = 1.9), making the plain roundtrip meaningless there
        # while the bracket still holds to full precision.
        p = FractionalParams(2, alpha)
        us = np.linspace(0.01, 0.99, 99)
        rs = sampler.exit_radius_inverse_cdf(us, p)
        lo = sampler.exit_radius_cdf_rounded_left(rs, p)
        hi = sampler.exit_radius_cdf_rounded(rs, p)
        assert np.max(np.maximum(lo - us, us - hi)) <= 1e-9

    def test_u_zero_maps_to_support_edge(self):
        p = FractionalParams(2, 1.0)
        assert sampler.exit_radius_inverse_cdf(0.0, p) == 1.0

    def test_rejects_u_one_and_outside(self):
        p = FractionalParams(2, 1.0)
        for u in (1.0, -0.01, 1.5):
            with pytest.raises(ValueError):
                sampler.exit_radius_inverse_cdf(u, p)

    def test_batch_matches_scalar_bitwise(self):
        p = FractionalParams(5, 1.9)
        us = RngStream(3, 0).generator().random(64)
        batch = sampler.exit_radius_inverse_cdf(us, p)
        single = np.array([sampler.exit_radius_inverse_cdf(float(u), p) for u in us])
        assert np.array_equal(batch, single)

    def test_alpha_one_median(self):
        p = FractionalParams(7, 1.0)
        assert sampler.exit_radius_inverse_cdf(0.5, p) == pytest.approx(math.sqrt(2.0), rel=1e-12)


class TestInnerRadius:
    @pytest.mark.parametrize("r,d,alpha,cdf_want,pdf_want", INNER_TABLE)
    def test_frozen_oracles(self, r, d, alpha, cdf_want, pdf_want):
        p = FractionalParams(d, alpha)
        assert sampler.inner_radius_cdf(r, p) == pytest.approx(cdf_want, rel=1e-12, abs=1e-15)
        assert sampler.inner_radius_pdf(r, p) == pytest.approx(pdf_want, rel=1e-12)

    def test_cdf_endpoints(self):
        p = FractionalParams(2, 1.0)
        assert sampler.inner_radius_cdf(0.0, p) == 0.0
        assert sampler.inner_radius_cdf(1.0, p) == 1.0

    def test_pdf_rejects_outside_open_interval(self):
        p = FractionalParams(2, 1.0)
        for r in (0.0, 1.0, -0.2, 1.2):
            with pytest.raises(ValueError):
                sampler.inner_radius_pdf(r, p)

    def test_pdf_integrates_to_cdf(self):
        # adaptive quadrature handles the r^(alpha-1) origin singularity
        integrate = pytest.importorskip("scipy.integrate")
        p = FractionalParams(3, 1.4)
        mass, _ = integrate.quad(lambda t: sampler.inner_radius_pdf(t, p),
                                 0.0, 0.8, epsabs=1e-12, epsrel=1e-12, limit=200)
        assert mass == pytest.approx(sampler.inner_radius_cdf(0.8, p), abs=1e-10)


class TestInvertInnerCdf:
    @pytest.mark.parametrize("d,alpha", [(2, 0.5), (2, 1.9), (5, 1.0), (15, 0.1)])
    def test_delta_contract(self, d, alpha):
        p = FractionalParams(d, alpha)
        us = np.linspace(0.001, 0.999, 97)
        rs = sampler.invert_inner_cdf(us, p)
        assert np.max(np.abs(sampler.inner_radius_cdf(rs, p) - us)) < NEWTON_DELTA

    def test_tight_delta_contract(self):
        p = FractionalParams(2, 1.0)
        us = np.linspace(0.01, 0.99, 50)
        rs = sampler.invert_inner_cdf(us, p, delta=1e-9)
        assert np.max(np.abs(sampler.inner_radius_cdf(rs, p) - us)) < 1e-9

    def test_extreme_u_still_within_delta(self):
        p = FractionalParams(5, 0.5)
        for u in (1e-12, 1e-6, 0.999999):
            r = sampler.invert_inner_cdf(u, p)
            assert abs(sampler.inner_radius_cdf(r, p) - u) < NEWTON_DELTA
            assert 0.0 <= r <= 1.0

    def test_batch_matches_scalar_bitwise(self):
        # composition independence: each lane stops where it would
        # running alone, whatever else shares the batch
        p = FractionalParams(3, 1.2)
        us = RngStream(9, 1).generator().random(257)
        batch = sampler.invert_inner_cdf(us, p)
        single = np.array([sampler.invert_inner_cdf(float(u), p) for u in us])
        assert np.array_equal(batch, single)

    def test_u_zero_honors_delta(self):
        # only the stopping contract is promised: Newton retires as soon
        # as |F(r) - u| < delta, so u = 0 yields a small r, not 0 exactly
        p = FractionalParams(2, 1.0)
        r = sampler.invert_inner_cdf(0.0, p)
        assert 0.0 <= r < 1.0
        assert sampler.inner_radius_cdf(r, p) < NEWTON_DELTA

    def test_rejects_bad_arguments(self):
        p = FractionalParams(2, 1.0)
        with pytest.raises(ValueError):
            sampler.invert_inner_cdf(1.0, p)
        with pytest.raises(ValueError):
            sampler.invert_inner_cdf(0.5, p, r0=1.0)
        with pytest.raises(ValueError):
            sampler.invert_inner_cdf(0.5, p, delta=0.0)


class TestDirections:
    @pytest.mark.parametrize("d", [2, 3, 5, 15])
    @pytest.mark.parametrize("mode", list(DirectionMode))
    def test_unit_norm(self, d, mode):
        ws = sampler.sample_unit_directions(d, 200, mode, RngStream(1, 0))
        assert ws.shape == (200, d)
        assert np.max(np.abs((ws ** 2).sum(axis=1) - 1.0)) < 1e-12

    @pytest.mark.parametrize("d", [2, 3, 5])
    @pytest.mark.parametrize("mode", list(DirectionMode))
    def test_batch_matches_sequential_bitwise(self, d, mode):
        batch = sampler.sample_unit_directions(d, 40, mode, RngStream(4, 2))
        gen = RngStream(4, 2).generator()
        seq = np.array([sampler.sample_unit_direction(d, mode, gen) for _ in range(40)])
        assert np.array_equal(batch, seq)

    def test_paper_angles_d2_is_unit_circle(self):
        # d = 2: single angle uniform on (0, 2 pi), w = (cos, sin)
        gen = RngStream(8, 0).generator()
        w = sampler.sample_unit_direction(2, DirectionMode.PAPER_ANGLES, gen)
        theta = 2.0 * math.pi * RngStream(8, 0).generator().random()
        assert w == pytest.approx((math.cos(theta), math.sin(theta)), abs=1e-15)

    def test_isotropic_mean_near_zero(self):
        ws = sampler.sample_unit_directions(3, 40000, DirectionMode.ISOTROPIC, RngStream(5, 0))
        assert np.max(np.abs(ws.mean(axis=0))) < 0.02

    def test_paper_angles_d3_biased_toward_poles(self):
        # uniform polar angle lacks its sine weight: |w_1| concentrates
        # near 1 compared to the isotropic law (mean |w_1| = 0.5 at d=3)
        ws = sampler.sample_unit_directions(3, 40000, DirectionMode.PAPER_ANGLES, RngStream(5, 0))
        assert np.abs(ws[:, 0]).mean() > 0.55

    def test_rejects_d_one(self):
        with pytest.raises(ValueError):
            sampler.sample_unit_direction(1, DirectionMode.ISOTROPIC, RngStream(0, 0))


class TestSamplePoints:
    def test_exit_point_draw_order(self):
        # radius uniform first, then the direction draws
        p = FractionalParams(3, 1.5)
        x = sampler.sample_exit_point(p, DirectionMode.ISOTROPIC, RngStream(6, 1))
        gen = RngStream(6, 1).generator()
        r = sampler.exit_radius_inverse_cdf(gen.random(), p)
        w = sampler.sample_unit_direction(3, DirectionMode.ISOTROPIC, gen)
        assert np.array_equal(x, r * w)

    def test_exit_points_batch_order(self):
        # all radii first, then all directions
        p = FractionalParams(2, 1.0)
        xs = sampler.sample_exit_points(p, 10, DirectionMode.ISOTROPIC, RngStream(6, 2))
        gen = RngStream(6, 2).generator()
        rs = sampler.exit_radius_inverse_cdf(gen.random(10), p)
        ws = np.array([sampler.sample_unit_direction(2, DirectionMode.ISOTROPIC, gen)
                       for _ in range(10)])
        assert np.array_equal(xs, rs[:, None] * ws)

    def test_inner_point_inside_unit_ball(self):
        p = FractionalParams(5, 0.5)
        xs = sampler.sample_inner_points(p, 500, DirectionMode.ISOTROPIC, RngStream(2, 0))
        assert np.all((xs ** 2).sum(axis=1) < 1.0)

    def test_exit_points_outside_unit_ball(self):
        # the product r * w can round a hair inside when r sits on the
        # support edge, hence the one-ulp-scale slack
        p = FractionalParams(2, 1.9)
        xs = sampler.sample_exit_points(p, 500, DirectionMode.ISOTROPIC, RngStream(2, 1))
        assert np.all((xs ** 2).sum(axis=1) >= 1.0 - 1e-12)


class TestKsDistance:
    def test_discrete_hand_oracle(self):
        # fair coin, samples [0, 0, 1]: distance is 1/6 once the atom
        # edges are compared against the matching empirical sides
        def cdf(v):
            v = np.asarray(v, dtype=float)
            return np.where(v >= 1.0, 1.0, np.where(v >= 0.0, 0.5, 0.0))

        def cdf_left(v):
            v = np.asarray(v, dtype=float)
            return np.where(v > 1.0, 1.0, np.where(v > 0.0, 0.5, 0.0))

        got = sampler.ks_distance(np.array([0.0, 0.0, 1.0]), cdf, cdf_left)
        assert got == pytest.approx(1.0 / 6.0, abs=1e-15)

    def test_matches_scipy_continuous(self):
        stats = pytest.importorskip("scipy.stats")
        samples = RngStream(11, 0).generator().random(4000)
        got = sampler.ks_distance(samples, lambda v: np.clip(v, 0.0, 1.0))
        want = stats.kstest(samples, "uniform").statistic
        assert got == pytest.approx(want, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            sampler.ks_distance(np.array([]), lambda v: v)

    def test_exit_law_fit_small(self):
        # 20k draws through the inverse against the rounded CDF
        p = FractionalParams(2, 1.9)
        us = RngStream(12, 0).generator().random(20_000)
        rs = sampler.exit_radius_inverse_cdf(us, p)
        d = sampler.ks_distance(rs,
                                lambda r: sampler.exit_radius_cdf_rounded(r, p),
                                lambda r: sampler.exit_radius_cdf_rounded_left(r, p))
        assert d < 0.015

    def test_rounded_left_limit_at_support_edge(self):
        p = FractionalParams(2, 1.9)
        assert sampler.exit_radius_cdf_rounded_left(1.0, p) == 0.0
        # the rounded law has positive mass exactly at 1.0 for alpha
        # near 2, which the plain continuous CDF calls zero
        assert sampler.exit_radius_cdf_rounded(1.0, p) > 0.0
