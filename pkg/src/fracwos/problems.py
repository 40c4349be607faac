"""The four benchmark problems and model evaluation metrics.

Each problem fixes a source f on the unit ball, a boundary function g
on its complement, and the known solution used for scoring.  Examples
1 and 2 have radial solutions (their training defaults to the radial
loss); Example 3 is the shifted fundamental solution, Example 4 a
linear function, both driven purely by their boundary data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import nn, sampler
from .errors import ConfigError
from .sampler import DirectionMode, FractionalParams, RngStream
from .specfun import ln_gamma
from .wos import Ball, Domain

# |exact| at or below this is excluded from the mean relative error;
# the solutions vanish toward the boundary and the ratio blows up.
MRE_EXCLUSION = 1e-8


@dataclass(frozen=True)
class ProblemSpec:
    """One benchmark: source f (None means f == 0), boundary g, domain,
    exact solution, and whether the radial loss is the natural fit."""

    name: str
    params: FractionalParams
    domain: Domain
    f: Optional[Callable]
    g: Callable
    exact: Optional[Callable]
    radial: bool


def _rowwise(fn):
    """Accept one point (d,) or a batch (n, d); scalar in, scalar out."""
    def wrapped(x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(fn(x[None, :])[0])
        return fn(x)
    return wrapped


def _sq_norms(pts) -> np.ndarray:
    return (np.asarray(pts, dtype=float) ** 2).sum(axis=1)


def example1(p: FractionalParams) -> ProblemSpec:
    """Constant source, zero boundary data.

    f == 2^alpha * Gamma(alpha/2+d/2) * Gamma(alpha/2+1) / Gamma(d/2),
    u(x) = (1-|x|^2)_+^(alpha/2).
    """
    d, alpha = p.d, p.alpha
    f_const = math.exp(alpha * math.log(2.0) + ln_gamma(alpha / 2 + d / 2)
                       + ln_gamma(alpha / 2 + 1) - ln_gamma(d / 2))

    @_rowwise
    def f(pts):
        return np.full(len(pts), f_const)

    @_rowwise
    def g(pts):
        return np.zeros(len(pts))

    @_rowwise
    def exact(pts):
        return np.clip(1.0 - _sq_norms(pts), 0.0, None) ** (alpha / 2.0)

    return ProblemSpec("example1", p, Ball(np.zeros(d), 1.0), f, g, exact,
                       radial=True)


def example2(p: FractionalParams) -> ProblemSpec:
    """Quadratic source changing sign inside D, zero boundary data.

    f(x) = b * (1 - (1+alpha/d)|x|^2) with
    b = 2^alpha * Gamma(alpha/2+d/2) * Gamma(alpha/2+2) / Gamma(d/2),
    u(x) = (1-|x|^2)_+^(1+alpha/2).
    """
    d, alpha = p.d, p.alpha
    b = math.exp(alpha * math.log(2.0) + ln_gamma(alpha / 2 + d / 2)
                 + ln_gamma(alpha / 2 + 2) - ln_gamma(d / 2))
    slope = 1.0 + alpha / d

    @_rowwise
    def f(pts):
        return b * (1.0 - slope * _sq_norms(pts))

    @_rowwise
    def g(pts):
        return np.zeros(len(pts))

    @_rowwise
    def exact(pts):
        return np.clip(1.0 - _sq_norms(pts), 0.0, None) ** (1.0 + alpha / 2.0)

    return ProblemSpec("example2", p, Ball(np.zeros(d), 1.0), f, g, exact,
                       radial=True)


def example3(p: FractionalParams) -> ProblemSpec:
    """Fundamental solution shifted to y = (2, 0, ..., 0), no source.

    u(x) = Gamma(d/2-alpha/2) / (2^alpha * pi^(d/2) * Gamma(alpha/2))
           * |x-y|^(alpha-d),
    singular at y itself (outside the closed unit ball), u = g.
    """
    d, alpha = p.d, p.alpha
    if d <= alpha:
        raise ConfigError(f"example 3 requires d > alpha, got d={d}, alpha={alpha}")
    c = math.exp(ln_gamma(d / 2 - alpha / 2) - alpha * math.log(2.0)
                 - (d / 2) * math.log(math.pi) - ln_gamma(alpha / 2))
    y = np.zeros(d)
    y[0] = 2.0
    exponent = (alpha - d) / 2.0

    @_rowwise
    def g(pts):
        dist2 = _sq_norms(np.asarray(pts, dtype=float) - y)
        if np.any(dist2 == 0.0):
            raise ValueError(
                f"example 3 is singular at y = {y.tolist()}; cannot evaluate there")
        return c * dist2**exponent

    return ProblemSpec("example3", p, Ball(np.zeros(d), 1.0), None, g, g,
                       radial=False)


def example4(p: FractionalParams) -> ProblemSpec:
    """Linear boundary data, no source; u(x) = sum_i x_i everywhere."""
    d = p.d

    @_rowwise
    def g(pts):
        return np.asarray(pts, dtype=float).sum(axis=1)

    return ProblemSpec("example4", p, Ball(np.zeros(d), 1.0), None, g, g,
                       radial=False)


_EXAMPLES = {1: example1, 2: example2, 3: example3, 4: example4}


def get_example(number: int, p: FractionalParams) -> ProblemSpec:
    """Benchmark problem by number, 1 through 4."""
    if number not in _EXAMPLES:
        raise ConfigError(f"example must be 1..4, got {number!r}")
    return _EXAMPLES[number](p)


@dataclass(frozen=True)
class MetricReport:
    """Evaluation scores over a sampled region.

    mre averages |error/exact| over the points where |exact| exceeds
    MRE_EXCLUSION; the rest are counted in n_excluded (and mre is NaN
    if nothing survives the guard).
    """

    mse: float
    mre: float
    n_points: int
    n_excluded: int

    def __post_init__(self):
        if self.mse < 0.0:
            raise ConfigError(f"mse must be >= 0, got {self.mse}")
        if not 0 <= self.n_excluded <= self.n_points:
            raise ConfigError(
                f"n_excluded must lie in [0, {self.n_points}], got {self.n_excluded}")


def evaluate_model(m: nn.MlpModel, prob: ProblemSpec, n: int = 5000,
                   region_radius: float = 1.0,
                   rng: RngStream = RngStream(0, 0)) -> MetricReport:
    """Score a model against the exact solution on uniform ball samples.

    Points are uniform in the ball of region_radius (default the
    domain itself): radii region_radius * U^(1/d) first, then isotropic
    directions, from the given stream.
    """
    if prob.exact is None:
        raise ConfigError(f"{prob.name} has no exact solution to evaluate against")
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    d = prob.params.d
    if m.layer_dims[0] != d:
        raise ConfigError(
            f"model expects d={m.layer_dims[0]}, problem has d={d}")
    gen = rng.generator()
    radii = region_radius * gen.random(n) ** (1.0 / d)
    dirs = sampler.sample_unit_directions(d, n, DirectionMode.ISOTROPIC, gen)
    pts = radii[:, None] * dirs
    pred = nn.realize_batch(m, pts)
    exact = np.asarray(prob.exact(pts), dtype=float)
    err = pred - exact
    mse = float(np.mean(err**2))
    included = np.abs(exact) > MRE_EXCLUSION
    if included.any():
        mre = float(np.mean(np.abs(err[included]) / np.abs(exact[included])))
    else:
        mre = float("nan")
    return MetricReport(mse=mse, mre=mre, n_points=n,
                        n_excluded=int(n - included.sum()))
