"""Benchmark problems: constants, exact solutions, metrics."""

import math

import numpy as np
import pytest

from fracwos import nn, problems
from fracwos.errors import ConfigError
from fracwos.problems import (MRE_EXCLUSION, MetricReport, ProblemSpec,
                              evaluate_model, get_example)
from fracwos.sampler import FractionalParams, RngStream
from fracwos.wos import Ball

# 2^alpha * Gamma(alpha/2+d/2) * Gamma(alpha/2+1) / Gamma(d/2), frozen
# from scipy.special.gamma
F_CONST_TABLE = [
    (2, 1.0, 1.5707963267948963),
    (5, 1.5, 4.985026455671762),
    (15, 0.1, 1.1502477662790622),
]

# 2^alpha * Gamma(alpha/2+d/2) * Gamma(alpha/2+2) / Gamma(d/2), frozen
B_CONST_TABLE = [
    (2, 1.0, 2.356194490192345),
    (5, 0.5, 1.9386213994279078),
]

# Gamma(d/2-alpha/2) / (2^alpha * pi^(d/2) * Gamma(alpha/2)), frozen
C_CONST_TABLE = [
    (2, 0.5, 0.0760742798624677),
    (5, 1.5, 0.015157989020717461),
]


def sum_model(d=2):
    # relu(s) - relu(-s) == s exactly, s = sum of coordinates, so this
    # net realizes the example-4 solution with zero error
    return nn.MlpModel(
        weights=[np.vstack([np.ones(d), -np.ones(d)]), np.array([[1.0, -1.0]])],
        biases=[np.zeros(2), np.zeros(1)],
    )


class TestExample1:
    @pytest.mark.parametrize("d,alpha,want", F_CONST_TABLE)
    def test_source_constant_frozen(self, d, alpha, want):
        prob = get_example(1, FractionalParams(d, alpha))
        assert prob.f(np.zeros(d)) == pytest.approx(want, rel=1e-13)

    def test_source_constant_d2_alpha1_closed_form(self):
        prob = get_example(1, FractionalParams(2, 1.0))
        assert prob.f(np.zeros(2)) == pytest.approx(math.pi / 2.0, rel=1e-13)

    def test_exact_solution(self):
        prob = get_example(1, FractionalParams(2, 1.0))
        x = np.array([0.5, 0.5])
        assert prob.exact(x) == pytest.approx(0.5**0.5, rel=1e-14)
        assert prob.exact(np.zeros(2)) == 1.0
        # vanishes on and outside the boundary, matching g
        assert prob.exact(np.array([1.0, 0.0])) == 0.0
        assert prob.exact(np.array([2.0, 0.0])) == 0.0
        assert prob.g(np.array([2.0, 0.0])) == 0.0

    def test_marked_radial(self):
        assert get_example(1, FractionalParams(2, 1.0)).radial


class TestExample2:
    @pytest.mark.parametrize("d,alpha,want", B_CONST_TABLE)
    def test_source_scale_frozen(self, d, alpha, want):
        prob = get_example(2, FractionalParams(d, alpha))
        assert prob.f(np.zeros(d)) == pytest.approx(want, rel=1e-13)

    def test_source_changes_sign_at_known_radius(self):
        d, alpha = 2, 1.0
        prob = get_example(2, FractionalParams(d, alpha))
        r2 = d / (d + alpha)
        inside = np.array([math.sqrt(r2) - 1e-6, 0.0])
        outside = np.array([math.sqrt(r2) + 1e-6, 0.0])
        at = np.array([math.sqrt(r2), 0.0])
        assert prob.f(inside) > 0.0
        assert prob.f(outside) < 0.0
        assert prob.f(at) == pytest.approx(0.0, abs=1e-12)

    def test_exact_solution(self):
        prob = get_example(2, FractionalParams(2, 1.0))
        x = np.array([0.6, 0.0])
        assert prob.exact(x) == pytest.approx(0.64**1.5, rel=1e-14)
        assert prob.exact(np.array([1.5, 0.0])) == 0.0
        assert get_example(2, FractionalParams(2, 1.0)).radial


class TestExample3:
    @pytest.mark.parametrize("d,alpha,want", C_CONST_TABLE)
    def test_constant_frozen(self, d, alpha, want):
        prob = get_example(3, FractionalParams(d, alpha))
        # at distance 1 from the pole the solution equals the constant
        x = np.zeros(d)
        x[0] = 1.0
        assert prob.g(x) == pytest.approx(want, rel=1e-13)

    def test_no_source_and_g_is_exact(self):
        prob = get_example(3, FractionalParams(2, 0.5))
        assert prob.f is None
        assert prob.exact is prob.g
        assert not prob.radial

    def test_decay_in_distance(self):
        prob = get_example(3, FractionalParams(2, 0.5))
        near = prob.g(np.array([1.5, 0.0]))
        far = prob.g(np.array([-2.0, 0.0]))
        assert near > far > 0.0

    def test_singular_point_rejected(self):
        prob = get_example(3, FractionalParams(2, 0.5))
        with pytest.raises(ValueError, match="singular"):
            prob.g(np.array([2.0, 0.0]))
        with pytest.raises(ValueError, match="singular"):
            prob.g(np.array([[0.5, 0.0], [2.0, 0.0]]))


class TestExample4:
    def test_g_is_coordinate_sum(self):
        prob = get_example(4, FractionalParams(3, 1.0))
        assert prob.g(np.array([1.0, -2.0, 0.5])) == -0.5
        batch = prob.g(np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]))
        assert np.array_equal(batch, [6.0, 0.0])

    def test_no_source_and_g_is_exact(self):
        prob = get_example(4, FractionalParams(2, 1.9))
        assert prob.f is None
        assert prob.exact is prob.g
        assert not prob.radial


class TestGetExample:
    def test_rejects_unknown(self):
        for bad in (0, 5, "ex1", None):
            with pytest.raises(ConfigError):
                get_example(bad, FractionalParams(2, 1.0))

    @pytest.mark.parametrize("number", [1, 2, 3, 4])
    def test_fields_populated(self, number):
        prob = get_example(number, FractionalParams(2, 1.0))
        assert prob.params == FractionalParams(2, 1.0)
        assert prob.domain.circumradius() == 1.0
        assert prob.exact is not None

    @pytest.mark.parametrize("number", [1, 2])
    def test_rowwise_shapes(self, number):
        prob = get_example(number, FractionalParams(2, 1.5))
        one = prob.f(np.array([0.3, 0.1]))
        assert isinstance(one, float)
        batch = prob.f(np.array([[0.3, 0.1], [0.0, 0.0]]))
        assert batch.shape == (2,)
        assert batch[0] == one


class TestMetricReport:
    def test_validation(self):
        with pytest.raises(ConfigError):
            MetricReport(mse=-1.0, mre=0.0, n_points=10, n_excluded=0)
        with pytest.raises(ConfigError):
            MetricReport(mse=0.0, mre=0.0, n_points=10, n_excluded=11)


class TestEvaluateModel:
    def test_perfect_model_scores_zero(self):
        # the sum net realizes example 4 exactly, so every error term
        # is identically zero, not merely small
        prob = get_example(4, FractionalParams(2, 1.0))
        report = evaluate_model(sum_model(2), prob, n=500, rng=RngStream(3, 0))
        assert report.mse == 0.0
        assert report.n_points == 500

    def test_mre_excludes_vanishing_exact(self):
        # example 1 over a region poking outside the domain: exact is
        # exactly 0 out there, those points must not reach the ratio
        prob = get_example(1, FractionalParams(2, 1.0))
        m = nn.init_mlp(2, RngStream(1, 0), hidden_layers=1, width=8)
        report = evaluate_model(m, prob, n=400, region_radius=1.5,
                                rng=RngStream(4, 0))
        assert 0 < report.n_excluded < 400
        assert math.isfinite(report.mre)

    def test_all_excluded_yields_nan_mre(self):
        prob = get_example(1, FractionalParams(2, 1.0))
        zero = ProblemSpec(name="zero", params=prob.params, domain=prob.domain,
                           f=None, g=prob.g,
                           exact=lambda pts: np.zeros(len(np.atleast_2d(pts))),
                           radial=False)
        m = nn.init_mlp(2, RngStream(1, 0), hidden_layers=1, width=8)
        report = evaluate_model(m, zero, n=50, rng=RngStream(5, 0))
        assert report.n_excluded == 50
        assert math.isnan(report.mre)
        assert report.mse >= 0.0

    def test_deterministic_in_stream(self):
        prob = get_example(2, FractionalParams(2, 1.5))
        m = nn.init_mlp(2, RngStream(2, 0), hidden_layers=1, width=8)
        a = evaluate_model(m, prob, n=100, rng=RngStream(7, 0))
        b = evaluate_model(m, prob, n=100, rng=RngStream(7, 0))
        assert a == b

    def test_rejects_bad_inputs(self):
        prob = get_example(4, FractionalParams(2, 1.0))
        no_exact = ProblemSpec(name="x", params=prob.params, domain=prob.domain,
                               f=None, g=prob.g, exact=None, radial=False)
        with pytest.raises(ConfigError, match="no exact solution"):
            evaluate_model(sum_model(2), no_exact, n=10)
        with pytest.raises(ConfigError):
            evaluate_model(sum_model(2), prob, n=0)
        with pytest.raises(ConfigError, match="model expects d"):
            evaluate_model(sum_model(3), prob, n=10)

    def test_exclusion_threshold_is_tight(self):
        # |exact| just above the cutoff stays in, just below drops out
        assert MRE_EXCLUSION == 1e-8
