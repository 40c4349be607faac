"""Variate generation for the walk's two radial laws and unit directions.

The exit law is the radial part of the alpha-stable exit distribution
from the unit ball started at its center; the inner law is the radial
part of the normalized occupation measure of the ball.  Both reduce to
the regularized incomplete beta function I:

    F_exit(r)  = 1 - I(1/r^2; alpha/2, 1 - alpha/2),   r >= 1
    f_inner(r) = alpha * C * r^(alpha-1) * (1 - I(r^2; d/2-alpha/2, alpha/2))
    F_inner(r) = I(r^2; d/2, alpha/2)
                 + C * r^alpha * (1 - I(r^2; d/2-alpha/2, alpha/2))

with C = B(d/2-alpha/2, alpha/2) / B(d/2, alpha/2).  The exit law does
not depend on d.  The exit radius is inverted in closed form through
inv_reg_inc_beta; the inner radius has no explicit inverse and is drawn
by Newton iteration on its CDF with a bisection safeguard.

Randomness flows through RngStream, a (seed, stream id) pair mapped to
a counter-based Philox generator, so any draw sequence can be replayed
bit for bit regardless of how work is batched or parallelized.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import specfun
from .errors import NumericsError

# Newton controls for the inner-radius draw.  delta is the CDF-scale
# tolerance used by the source algorithm; r0 its starting point.
NEWTON_DELTA = 1e-3
NEWTON_R0 = 0.5
NEWTON_MAX_ITER = 100
_BISECT_MAX_ITER = 200

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class FractionalParams:
    """Dimension d >= 2 and stability index alpha in (0, 2), both strict."""

    d: int
    alpha: float

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or isinstance(self.d, bool):
            raise ValueError(f"d must be an integer, got {self.d!r}")
        if self.d < 2:
            raise ValueError(f"d must be >= 2, got {self.d}")
        alpha = float(self.alpha)
        if not np.isfinite(alpha) or not 0.0 < alpha < 2.0:
            raise ValueError(f"alpha must lie in the open interval (0, 2), got {self.alpha!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "alpha", alpha)


@dataclass(frozen=True)
class RngStream:
    """Replayable randomness source: (seed, stream id) -> Philox generator.

    Identical (seed, stream) pairs produce identical draw sequences on
    every platform.  The package-wide allocation convention is
    documented in estimator.py; the README carries the summary.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.stream & _MASK64],
                       dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, offset: int) -> "RngStream":
        return RngStream(self.seed, (self.stream + offset) & _MASK64)


class DirectionMode(Enum):
    """How unit directions are drawn.

    ISOTROPIC normalizes a standard-normal vector: exactly uniform on
    the sphere in every dimension.  PAPER_ANGLES follows the angle
    recursion of the source algorithm verbatim: Theta_1..Theta_{d-2}
    uniform on (0, pi), Theta_{d-1} uniform on (0, 2 pi), and

        w_1 = cos Theta_1
        w_i = cos Theta_i * prod_{k<i} sin Theta_k
        w_d = prod_{k=1}^{d-1} sin Theta_k.

    For d >= 3 uniform angles do not induce the uniform surface
    measure (the polar angles lack their sine weight), so ISOTROPIC is
    the default everywhere and PAPER_ANGLES sits behind a flag for
    faithful-reproduction studies.
    """

    ISOTROPIC = "isotropic"
    PAPER_ANGLES = "paper-angles"


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"rng must be an RngStream or numpy Generator, got {type(rng).__name__}")


def _exit_shapes(p: FractionalParams):
    return 0.5 * p.alpha, 1.0 - 0.5 * p.alpha


def exit_radius_cdf(r, p: FractionalParams):
    """CDF of the exit radius from the unit ball, support [1, inf).

    Depends on alpha only.  The defining form is
    F(r) = 1 - I(1/r^2; alpha/2, 1-alpha/2).  To keep full precision in
    both tails it is evaluated piecewise: below r = sqrt(2) through the
    exact symmetry I(x; a, b) = 1 - I(1-x; b, a) with the complement
    1 - 1/r^2 computed cancellation-free as (r-1)(r+1)/r^2 (the
    boundary layer r -> 1 carries most of the mass as alpha -> 2), and
    above sqrt(2) in the defining form (1/r^2 stays exact in the heavy
    far tail that dominates as alpha -> 0).  r = 1 (the support's left
    edge, where the CDF is 0) is accepted so that inverse/forward
    roundtrips stay total; r < 1 is a domain error.
    """
    ra = np.asarray(r, dtype=float)
    if np.any(np.isnan(ra)) or np.any(ra < 1.0):
        raise ValueError(f"exit_radius_cdf requires r >= 1, got {r!r}")
    a, b = _exit_shapes(p)
    r1 = np.atleast_1d(ra).astype(float)
    out = np.empty_like(r1)
    near = r1 * r1 < 2.0
    if near.any():
        rn = r1[near]
        s = (rn - 1.0) * (rn + 1.0) / (rn * rn)
        out[near] = specfun.reg_inc_beta(np.clip(s, 0.0, 1.0), b, a)
    far = ~near
    if far.any():
        with np.errstate(divide="ignore"):
            x = np.where(np.isinf(r1[far]), 0.0, 1.0 / (r1[far] * r1[far]))
        out[far] = 1.0 - specfun.reg_inc_beta(x, a, b)
    out = out.reshape(np.shape(ra))
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(out)
    return out


def exit_radius_cdf_rounded(r, p: FractionalParams):
    """CDF of the exit radius after correct rounding to float64.

    P(round(R) <= r) = F(r + spacing(r)/2).  The half-spacing midpoint
    is folded into the CDF's argument algebraically, since adding it to
    r directly would itself round away.  Differs measurably from
    exit_radius_cdf only where the law concentrates within one float
    spacing: at alpha = 1.9 about 16% of the mass lies within 2e-16 of
    r = 1 and collapses onto the double 1.0.  This is the correct
    reference law for goodness-of-fit tests of sampled (hence rounded)
    radii.
    """
    ra = np.asarray(r, dtype=float)
    if np.any(np.isnan(ra)) or np.any(ra < 1.0):
        raise ValueError(f"exit_radius_cdf_rounded requires r >= 1, got {r!r}")
    a, b = _exit_shapes(p)
    r1 = np.atleast_1d(ra).astype(float)
    out = np.empty_like(r1)
    e = 0.5 * np.spacing(r1)
    near = r1 * r1 < 2.0
    if near.any():
        rn, en = r1[near], e[near]
        # s = 1 - 1/(r+e)^2 expanded so the tiny e survives at r = 1.
        num = ((rn - 1.0) + en) * ((rn + 1.0) + en)
        den = rn * rn + 2.0 * rn * en + en * en
        out[near] = specfun.reg_inc_beta(np.clip(num / den, 0.0, 1.0), b, a)
    far = ~near
    if far.any():
        rf, ef = r1[far], e[far]
        with np.errstate(divide="ignore"):
            x = np.where(np.isinf(rf), 0.0,
                         1.0 / (rf * rf + 2.0 * rf * ef + ef * ef))
        out[far] = 1.0 - specfun.reg_inc_beta(x, a, b)
    out = out.reshape(np.shape(ra))
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(out)
    return out


def exit_radius_pdf(r, p: FractionalParams):
    """Density of the exit radius: (2/pi) sin(pi alpha/2) r^-1 (r^2-1)^(-alpha/2).

    Diverges as r -> 1+ for every alpha; used for plotting overlays and
    derivative cross-checks.
    """
    ra = np.asarray(r, dtype=float)
    if np.any(np.isnan(ra)) or np.any(ra <= 1.0):
        raise ValueError(f"exit_radius_pdf requires r > 1, got {r!r}")
    out = (2.0 / np.pi) * np.sin(np.pi * p.alpha / 2.0) \
        * np.power(ra * ra - 1.0, -0.5 * p.alpha) / ra
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(out)
    return out


def exit_radius_inverse_cdf(u, p: FractionalParams):
    """Inverse exit-radius CDF: F^-1(u) = I^-1(1-u; alpha/2, 1-alpha/2)^(-1/2).

    Each draw is solved in whichever tail orientation keeps precision:
    for u <= 1/2 (radii near the boundary layer r = 1) the complement
    s = 1 - x is found as I^-1(u; b, a) -- representable down to
    subnormals -- and R = (1-s)^(-1/2) comes out correctly rounded via
    exp(-log1p(-s)/2); for u > 1/2 (the heavy far tail) x itself is
    found as I^-1(1-u; a, b) and R = x^(-1/2).  Both branches evaluate
    the same function; they agree to rounding error at the split.  (The
    radius still cannot resolve the boundary layer itself: for
    alpha = 1.9 about 16% of the mass lies within one float spacing of
    R = 1, so that band returns exactly 1.0.)  u = 1 would be an
    infinite radius and is a domain error; uniform draws therefore come
    from [0, 1).
    """
    ua = np.asarray(u, dtype=float)
    if np.any(np.isnan(ua)) or np.any(ua < 0.0) or np.any(ua >= 1.0):
        raise ValueError(f"exit_radius_inverse_cdf requires u in [0, 1), got {u!r}")
    a, b = _exit_shapes(p)
    u1 = np.atleast_1d(ua).astype(float)
    out = np.empty_like(u1)
    near = u1 <= 0.5
    if near.any():
        s = specfun.inv_reg_inc_beta(u1[near], b, a)
        out[near] = np.exp(-0.5 * np.log1p(-s))
    far = ~near
    if far.any():
        x = specfun.inv_reg_inc_beta(1.0 - u1[far], a, b)
        with np.errstate(divide="ignore"):
            out[far] = 1.0 / np.sqrt(x)
    out = out.reshape(np.shape(ua))
    if np.isscalar(u) or np.ndim(u) == 0:
        return float(out)
    return out


def _inner_shapes(p: FractionalParams):
    return 0.5 * (p.d - p.alpha), 0.5 * p.alpha


def _inner_beta_ratio(p: FractionalParams) -> float:
    a, b = _inner_shapes(p)
    return float(np.exp(specfun.ln_beta(a, b) - specfun.ln_beta(0.5 * p.d, b)))


def inner_radius_pdf(r, p: FractionalParams):
    """Density of the inner radius on (0, 1).

    Behaves like r^(alpha-1) at the origin (integrable divergence for
    alpha < 1) and vanishes at r = 1.
    """
    ra = np.asarray(r, dtype=float)
    if np.any(np.isnan(ra)) or np.any(ra <= 0.0) or np.any(ra >= 1.0):
        raise ValueError(f"inner_radius_pdf requires r in (0, 1), got {r!r}")
    a, b = _inner_shapes(p)
    out = (p.alpha * _inner_beta_ratio(p)
           * np.power(ra, p.alpha - 1.0)
           * (1.0 - specfun.reg_inc_beta(ra * ra, a, b)))
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(out)
    return out


def inner_radius_cdf(r, p: FractionalParams):
    """CDF of the inner radius on [0, 1]."""
    ra = np.asarray(r, dtype=float)
    if np.any(np.isnan(ra)) or np.any(ra < 0.0) or np.any(ra > 1.0):
        raise ValueError(f"inner_radius_cdf requires r in [0, 1], got {r!r}")
    a, b = _inner_shapes(p)
    r2 = ra * ra
    out = (specfun.reg_inc_beta(r2, 0.5 * p.d, b)
           + _inner_beta_ratio(p) * np.power(ra, p.alpha)
           * (1.0 - specfun.reg_inc_beta(r2, a, b)))
    out = np.clip(out, 0.0, 1.0)
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(out)
    return out


def invert_inner_cdf(u, p: FractionalParams, r0: float = NEWTON_R0,
                     delta: float = NEWTON_DELTA, return_iters: bool = False):
    """Solve F_inner(R) = u for R by Newton iteration from r0.

    Stops as soon as |F(R) - u| < delta (the source algorithm's
    criterion).  A lane whose iterate leaves (0, 1) or that exhausts
    NEWTON_MAX_ITER restarts as plain bisection on [0, 1]; bisection
    failure raises NumericsError.  Deterministic: no randomness here,
    callers supply u.  With return_iters=True also returns the Newton
    iteration count per lane (bisection lanes report NEWTON_MAX_ITER).
    """
    if not 0.0 < r0 < 1.0:
        raise ValueError(f"r0 must lie in (0, 1), got {r0!r}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    ua = np.asarray(u, dtype=float)
    if np.any(np.isnan(ua)) or np.any(ua < 0.0) or np.any(ua >= 1.0):
        raise ValueError(f"invert_inner_cdf requires u in [0, 1), got {u!r}")
    scalar = np.isscalar(u) or np.ndim(u) == 0
    uu = np.atleast_1d(ua).astype(float).ravel()
    out = np.full(uu.shape, np.nan)
    iters = np.zeros(uu.shape, dtype=int)

    live = np.arange(uu.size)
    x = np.full(uu.shape, float(r0))
    needs_bisect = np.zeros(0, dtype=int)
    for it in range(NEWTON_MAX_ITER):
        f = inner_radius_cdf(x[live], p) - uu[live]
        done = np.abs(f) < delta
        if done.any():
            out[live[done]] = x[live[done]]
            iters[live[done]] = it
            keep = ~done
            live, f = live[keep], f[keep]
            if live.size == 0:
                break
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            step = f / inner_radius_pdf(np.clip(x[live], 1e-300, 1 - 1e-16), p)
            cand = x[live] - step
        escaped = ~np.isfinite(cand) | (cand <= 0.0) | (cand >= 1.0)
        if escaped.any():
            needs_bisect = np.concatenate([needs_bisect, live[escaped]])
            live = live[~escaped]
            cand = cand[~escaped]
            if live.size == 0:
                break
        x[live] = cand
    else:
        needs_bisect = np.concatenate([needs_bisect, live])

    if needs_bisect.size:
        iters[needs_bisect] = NEWTON_MAX_ITER
        lo = np.zeros(needs_bisect.size)
        hi = np.ones(needs_bisect.size)
        ub = uu[needs_bisect]
        roots = np.full(needs_bisect.size, np.nan)
        solved = np.zeros(needs_bisect.size, dtype=bool)
        for _ in range(_BISECT_MAX_ITER):
            mid = 0.5 * (lo + hi)
            f = inner_radius_cdf(mid, p) - ub
            # Each lane keeps the first midpoint that meets delta; letting
            # solved lanes continue would make the result depend on how
            # long the slowest lane in the batch takes.
            newly = ~solved & (np.abs(f) < delta)
            roots = np.where(newly, mid, roots)
            solved |= newly
            if solved.all():
                break
            hi = np.where(~solved & (f > 0.0), mid, hi)
            lo = np.where(~solved & (f <= 0.0), mid, lo)
        else:
            worst = float(np.max(np.abs(f[~solved])))
            raise NumericsError(
                f"inner-radius bisection: residual {worst:.3e} above delta "
                f"{delta:.1e} after {_BISECT_MAX_ITER} iterations",
                residual=worst,
            )
        out[needs_bisect] = roots

    if return_iters:
        return (float(out[0]), int(iters[0])) if scalar else (out, iters)
    return float(out[0]) if scalar else out


def sample_unit_direction(d: int, mode: DirectionMode, rng):
    """One unit vector in R^d under the given direction mode."""
    if d < 2:
        raise ValueError(f"direction sampling requires d >= 2, got {d}")
    return _draw_direction(_generator(rng), d, mode)


def _draw_direction(gen: np.random.Generator, d: int, mode: DirectionMode):
    # Scalar fast path shared by the walkers; consumes the stream
    # exactly like one row of sample_unit_directions.
    if mode is DirectionMode.ISOTROPIC:
        # (w*w).sum, not w@w: keeps the reduction bit-identical to the
        # batched axis reduce so replay tests can use exact equality.
        w = gen.standard_normal(d)
        norm = np.sqrt((w * w).sum())
        while norm < 1e-300:
            w = gen.standard_normal(d)
            norm = np.sqrt((w * w).sum())
        return w / norm
    if mode is DirectionMode.PAPER_ANGLES:
        theta = gen.random(d - 1)
        theta[: d - 2] *= np.pi
        theta[d - 2] *= 2.0 * np.pi
        w = np.empty(d)
        sin_prod = 1.0
        for i in range(d - 1):
            w[i] = np.cos(theta[i]) * sin_prod
            sin_prod *= np.sin(theta[i])
        w[d - 1] = sin_prod
        return w
    raise ValueError(f"unknown direction mode {mode!r}")


def sample_unit_directions(d: int, n: int, mode: DirectionMode, rng):
    """(n, d) array of unit vectors; row i uses the i-th draw block.

    Draw consumption per row: ISOTROPIC takes d standard normals,
    PAPER_ANGLES takes d-1 uniforms.  numpy fills arrays in row-major
    order from the stream, so a batch of n rows consumes the stream
    exactly as n single-row calls would.
    """
    if d < 2:
        raise ValueError(f"direction sampling requires d >= 2, got {d}")
    gen = _generator(rng)
    if mode is DirectionMode.ISOTROPIC:
        w = gen.standard_normal((n, d))
        norms = np.sqrt((w * w).sum(axis=1))
        degenerate = norms < 1e-300
        while degenerate.any():
            w[degenerate] = gen.standard_normal((int(degenerate.sum()), d))
            norms = np.sqrt((w * w).sum(axis=1))
            degenerate = norms < 1e-300
        return w / norms[:, None]
    if mode is DirectionMode.PAPER_ANGLES:
        theta = gen.random((n, d - 1))
        theta[:, : d - 2] *= np.pi
        theta[:, d - 2] *= 2.0 * np.pi
        w = np.empty((n, d))
        sin_prod = np.ones(n)
        for i in range(d - 1):
            w[:, i] = np.cos(theta[:, i]) * sin_prod
            sin_prod = sin_prod * np.sin(theta[:, i])
        w[:, d - 1] = sin_prod
        return w
    raise ValueError(f"unknown direction mode {mode!r}")


def sample_exit_point(p: FractionalParams, mode: DirectionMode, rng):
    """One exit point Y = R*w from the unit ball started at its center.

    Draw order within the stream: the radius uniform first, then the
    direction draws.
    """
    gen = _generator(rng)
    radius = exit_radius_inverse_cdf(gen.random(), p)
    w = sample_unit_direction(p.d, mode, gen)
    return radius * w


def sample_exit_points(p: FractionalParams, n: int, mode: DirectionMode, rng):
    """(n, d) batch of exit points from one stream.

    Batch draw order differs from n single calls: all n radius uniforms
    first, then all directions.  Use distinct streams per path when a
    path-level replay guarantee is needed.
    """
    gen = _generator(rng)
    radii = exit_radius_inverse_cdf(gen.random(n), p)
    w = sample_unit_directions(p.d, n, mode, gen)
    return radii[:, None] * w


def sample_inner_radius(p: FractionalParams, rng, r0: float = NEWTON_R0,
                        delta: float = NEWTON_DELTA):
    """One inner radius: draw U, then Newton-invert the inner CDF."""
    gen = _generator(rng)
    return invert_inner_cdf(gen.random(), p, r0=r0, delta=delta)


def sample_inner_point(p: FractionalParams, mode: DirectionMode, rng,
                       r0: float = NEWTON_R0, delta: float = NEWTON_DELTA):
    """One inner point v = R*w with |v| < 1; radius uniform drawn first."""
    gen = _generator(rng)
    radius = invert_inner_cdf(gen.random(), p, r0=r0, delta=delta)
    w = sample_unit_direction(p.d, mode, gen)
    return radius * w


def sample_inner_points(p: FractionalParams, n: int, mode: DirectionMode, rng,
                        r0: float = NEWTON_R0, delta: float = NEWTON_DELTA):
    """(n, d) batch of inner points from one stream (radii first, then directions)."""
    gen = _generator(rng)
    radii = invert_inner_cdf(gen.random(n), p, r0=r0, delta=delta)
    w = sample_unit_directions(p.d, n, mode, gen)
    return radii[:, None] * w


def ks_distance(samples, cdf, cdf_left=None) -> float:
    """One-sample Kolmogorov-Smirnov distance against an analytic CDF.

    sup_r max(|F(r) - Fn(r)|, |F(r-) - Fn(r-)|) evaluated at the
    distinct sample values.  For a continuous law the left limit F(r-)
    equals F(r) and this is the textbook statistic (identical to
    scipy.stats.kstest to machine precision).  For a law with atoms --
    the float64-rounded exit radius has one at r = 1 for alpha near 2
    -- pass the rounded CDF as `cdf` and its left limit as `cdf_left`
    (P(X < r), e.g. the rounded CDF evaluated one float below r);
    comparing an atom's mass against the wrong empirical edge would
    otherwise report a spurious distance equal to the atom's mass.
    """
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size
    if n == 0:
        raise ValueError("ks_distance requires at least one sample")
    vals, first = np.unique(s, return_index=True)
    ecdf_hi = np.append(first[1:], n) / n
    ecdf_lo = first / n
    f_hi = np.asarray(cdf(vals), dtype=float)
    f_lo = f_hi if cdf_left is None else np.asarray(cdf_left(vals), dtype=float)
    return float(np.max(np.maximum(np.abs(f_hi - ecdf_hi),
                                   np.abs(f_lo - ecdf_lo))))


def exit_radius_cdf_rounded_left(r, p: FractionalParams):
    """Left limit of exit_radius_cdf_rounded: P(round(R) < r).

    Equals the rounded CDF one float below r, and 0 at r = 1 (nothing
    rounds below the support's edge).  Companion to ks_distance for
    goodness-of-fit tests of exit radii.
    """
    ra = np.asarray(r, dtype=float)
    prev = np.nextafter(np.atleast_1d(ra).astype(float), -np.inf)
    out = np.zeros(prev.shape)
    inside = prev >= 1.0
    if inside.any():
        out[inside] = exit_radius_cdf_rounded(prev[inside], p)
    out = out.reshape(np.shape(ra))
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(out)
    return out
