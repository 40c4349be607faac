"""Monte Carlo estimation of the solution and training-set generation.

The estimate at x averages, over M independent Walk-on-Spheres paths,

    g(rho_N) + sum_n kappa(d,alpha) * r_n^alpha * (1/K) sum_j f(rho_{n-1} + r_n*v_{n,j})

where the v are draws from the occupation density of the unit ball.
Outside the domain the solution is the boundary datum itself, so the
estimate is g(x) with no randomness.

Stream layout: path i of a point runs its geometry on substream(i) and
its source draws on substream(INNER_FLAG + i); a training set hands
point k the substream block starting at k*PATH_STRIDE.  All live paths
advance one step per lockstep round, sharing one vectorized exit-law
inversion per round; this changes nothing about what any single stream
yields, so per-path results are bit-identical to walking the paths one
at a time.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import sampler, wos
from .errors import ConfigError, DataError
from .sampler import (NEWTON_DELTA, NEWTON_R0, DirectionMode,
                      FractionalParams, RngStream)

# Stream-id blocks.  Point k owns ids [k*PATH_STRIDE, (k+1)*PATH_STRIDE);
# within it, path i uses id +i for geometry and +i+INNER_FLAG (mod 2^64)
# for source draws.  Dataset position sampling sits at POSITIONS_STREAM,
# far above any point block in practical use (k < 2^30).
PATH_STRIDE = 2**32
INNER_FLAG = 2**63
POSITIONS_STREAM = 2**62

DEFAULT_SAMPLING_RADIUS = 1.5


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs for the per-point estimator.

    paths is the M of the per-point average; inner_samples is the K
    source draws per step.  one_v_per_path reuses a single batch of K
    source draws across all steps of a path (the source algorithm's
    literal reading) instead of drawing fresh ones per step.
    """

    paths: int = 100
    inner_samples: int = 1
    mode: DirectionMode = DirectionMode.ISOTROPIC
    nr_delta: float = NEWTON_DELTA
    newton_r0: float = NEWTON_R0
    one_v_per_path: bool = False
    max_steps: int = wos.MAX_STEPS

    def __post_init__(self):
        if not isinstance(self.paths, (int, np.integer)) or isinstance(self.paths, bool):
            raise ConfigError(f"paths must be an integer, got {self.paths!r}")
        if self.paths < 1:
            raise ConfigError(f"paths must be >= 1, got {self.paths}")
        if not isinstance(self.inner_samples, (int, np.integer)) \
                or isinstance(self.inner_samples, bool):
            raise ConfigError(f"inner_samples must be an integer, got {self.inner_samples!r}")
        if self.inner_samples < 1:
            raise ConfigError(f"inner_samples must be >= 1, got {self.inner_samples}")
        if not (0.0 < self.nr_delta):
            raise ConfigError(f"nr_delta must be positive, got {self.nr_delta}")
        if not (0.0 < self.newton_r0 < 1.0):
            raise ConfigError(f"newton_r0 must lie in (0, 1), got {self.newton_r0}")
        if self.max_steps < 1:
            raise ConfigError(f"max_steps must be >= 1, got {self.max_steps}")


@functools.lru_cache(maxsize=None)
def kappa(p: FractionalParams) -> float:
    """Normalization constant of the one-step source term.

    kappa = (2^(1-alpha)/alpha) * Gamma(d/2) / (Gamma(alpha/2) * Gamma(d/2+alpha/2)),
    evaluated in log space so large d cannot overflow the Gamma factors.
    """
    from .specfun import ln_gamma
    d, alpha = p.d, p.alpha
    ln_k = ((1.0 - alpha) * math.log(2.0) - math.log(alpha)
            + ln_gamma(d / 2.0) - ln_gamma(alpha / 2.0)
            - ln_gamma(d / 2.0 + alpha / 2.0))
    return float(math.exp(ln_k))


def _eval_field(func, pts, what):
    """Evaluate f or g on (n, d) points; non-finite values are data errors."""
    vals = np.asarray(func(pts), dtype=float)
    if vals.shape != (len(pts),):
        raise DataError(
            f"{what} must map (n, d) points to (n,) values, got shape {vals.shape}")
    bad = ~np.isfinite(vals)
    if bad.any():
        where = pts[int(np.argmax(bad))]
        raise DataError(f"{what} evaluated non-finite at point {where.tolist()}")
    return vals


def _walker_values(x0s, geo_streams, inner_streams, prob, p, cfg):
    """Per-walker estimates for interior start points.

    Walker w runs its geometry on geo_streams[w] and, when the problem
    has a source term, its inner draws on inner_streams[w].  Per step
    the inner stream yields K (uniform, direction) pairs; in
    one_v_per_path mode the K pairs are drawn once after the walk
    completes instead (separate streams make the deferral invisible).
    Returns the (n,) array of single-path estimates.
    """
    n = len(x0s)
    d, alpha = p.d, p.alpha
    kap = kappa(p)
    f = prob.f
    k_inner = cfg.inner_samples
    vals = np.zeros(n)
    geo_gens = [s.generator() for s in geo_streams]
    inner_gens = None if f is None else [s.generator() for s in inner_streams]
    hist = [[] for _ in range(n)] if (f is not None and cfg.one_v_per_path) else None

    def draw_inner(gen_idx, count):
        us = np.empty(count)
        dirs = np.empty((count, d))
        gen = inner_gens[gen_idx]
        for j in range(count):
            us[j] = gen.random()
            dirs[j] = sampler._draw_direction(gen, d, cfg.mode)
        return us, dirs

    on_step = None
    if f is not None and not cfg.one_v_per_path:
        def on_step(walkers, rho, rs, x_next):
            m = walkers.size
            us = np.empty((m, k_inner))
            dirs = np.empty((m, k_inner, d))
            for t in range(m):
                us[t], dirs[t] = draw_inner(walkers[t], k_inner)
            radii = sampler.invert_inner_cdf(
                us.reshape(-1), p, r0=cfg.newton_r0, delta=cfg.nr_delta)
            # inner point v = radius*direction first, then rho + r_n*v:
            # the grouping single-draw sampling uses, kept for replay
            vs = radii.reshape(m, k_inner)[:, :, None] * dirs
            pts = rho[:, None, :] + rs[:, None, None] * vs
            fv = _eval_field(f, pts.reshape(m * k_inner, d), "f")
            vals[walkers] += kap * rs**alpha * fv.reshape(m, k_inner).mean(axis=1)
    elif hist is not None:
        def on_step(walkers, rho, rs, x_next):
            for t, w in enumerate(walkers):
                hist[w].append((rho[t], rs[t]))

    exit_points, _ = wos._lockstep_exit(
        prob.domain, x0s, p, cfg.mode, geo_gens, cfg.max_steps, on_step)
    vals += _eval_field(prob.g, exit_points, "g")

    if hist is not None:
        us = np.empty((n, k_inner))
        dirs = np.empty((n, k_inner, d))
        for w in range(n):
            us[w], dirs[w] = draw_inner(w, k_inner)
        radii = sampler.invert_inner_cdf(
            us.reshape(-1), p, r0=cfg.newton_r0, delta=cfg.nr_delta).reshape(n, k_inner)
        for w in range(n):
            if not hist[w]:
                continue
            rho = np.array([h[0] for h in hist[w]])
            rs = np.array([h[1] for h in hist[w]])
            vs = radii[w][:, None] * dirs[w]
            pts = rho[:, None, :] + rs[:, None, None] * vs[None, :, :]
            fv = _eval_field(f, pts.reshape(-1, d), "f").reshape(len(rs), k_inner)
            vals[w] += kap * (rs**alpha * fv.mean(axis=1)).sum()
    return vals


def estimate_u_samples(x, prob, p: FractionalParams, cfg: EstimatorConfig,
                       rng: RngStream) -> np.ndarray:
    """The M single-path estimates behind estimate_u, for error bars.

    Outside the domain there is nothing random to resolve and the array
    is g(x) repeated.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (p.d,):
        raise ValueError(f"x must be a vector of length d={p.d}, got shape {x.shape}")
    m = cfg.paths
    if not prob.domain.contains(x):
        return np.full(m, _eval_field(prob.g, x[None, :], "g")[0])
    geo = [rng.substream(i) for i in range(m)]
    inner = None
    if prob.f is not None:
        inner = [rng.substream(INNER_FLAG + i) for i in range(m)]
    x0s = np.broadcast_to(x, (m, p.d))
    return _walker_values(x0s, geo, inner, prob, p, cfg)


def estimate_u(x, prob, p: FractionalParams, cfg: EstimatorConfig,
               rng: RngStream) -> float:
    """Monte Carlo estimate of the solution at one point.

    For x outside the domain this is g(x) exactly, with zero Monte
    Carlo work; inside it is the mean of cfg.paths single-path
    estimates.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (p.d,):
        raise ValueError(f"x must be a vector of length d={p.d}, got shape {x.shape}")
    if not prob.domain.contains(x):
        return float(_eval_field(prob.g, x[None, :], "g")[0])
    return float(estimate_u_samples(x, prob, p, cfg, rng).mean())


@dataclass
class TrainingSet:
    """Point/estimate pairs (x_k, u_hat_k) ready for fitting."""

    xs: np.ndarray
    u_hats: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        u_hats = np.asarray(self.u_hats, dtype=float)
        if xs.ndim != 2:
            raise DataError(f"xs must be (P, d), got shape {xs.shape}")
        if u_hats.shape != (len(xs),):
            raise DataError(
                f"u_hats must be ({len(xs)},) to match xs, got shape {u_hats.shape}")
        if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(u_hats)):
            raise DataError("training pairs must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "u_hats", u_hats)

    def __len__(self) -> int:
        return len(self.xs)

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    @property
    def pairs(self):
        return list(zip(self.xs, self.u_hats))

    def save_csv(self, dest, comment: str | None = None) -> None:
        """Write header x_1,...,x_d,u_hat and one full-precision row per
        pair; repr rendering makes load_csv an exact inverse.  An
        optional comment goes first as a '# ' line."""
        d = self.dim
        lines = []
        if comment is not None:
            lines.extend(f"# {c}" for c in comment.splitlines())
        lines.append(",".join(f"x_{i + 1}" for i in range(d)) + ",u_hat")
        for x, u in zip(self.xs, self.u_hats):
            lines.append(",".join(repr(float(c)) for c in x) + f",{repr(float(u))}")
        text = "\n".join(lines) + "\n"
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            with open(dest, "w", encoding="utf-8") as fh:
                fh.write(text)

    @classmethod
    def load_csv(cls, src) -> "TrainingSet":
        """Exact inverse of save_csv; malformed rows raise DataError
        with their line number."""
        if hasattr(src, "read"):
            text = src.read()
        else:
            with open(src, "r", encoding="utf-8") as fh:
                text = fh.read()
        header = None
        xs, u_hats = [], []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if header is None:
                if fields[-1] != "u_hat" or any(
                        f != f"x_{i + 1}" for i, f in enumerate(fields[:-1])):
                    raise DataError(f"line {lineno}: bad header {line!r}")
                header = fields
                continue
            if len(fields) != len(header):
                raise DataError(
                    f"line {lineno}: expected {len(header)} fields, got {len(fields)}")
            try:
                row = [float(f) for f in fields]
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from None
            if not all(math.isfinite(v) for v in row):
                raise DataError(f"line {lineno}: non-finite value")
            xs.append(row[:-1])
            u_hats.append(row[-1])
        if header is None:
            raise DataError("missing header row")
        d = len(header) - 1
        return cls(np.array(xs, dtype=float).reshape(len(xs), d), np.array(u_hats))


def generate_training_set(prob, p: FractionalParams, n_points: int,
                          cfg: EstimatorConfig,
                          sampling_radius: float = DEFAULT_SAMPLING_RADIUS,
                          rng: RngStream = RngStream(0, 0)) -> TrainingSet:
    """Estimate the solution at n_points uniform draws from the
    sampling ball.

    Positions come from the dedicated POSITIONS_STREAM substream
    (radii R = sampling_radius * U^(1/d) first, then isotropic
    directions, independent of cfg.mode); point k then estimates on
    the substream block at k*PATH_STRIDE, so any pair can be replayed
    with estimate_u alone.  Points outside the domain get exact g with
    no paths.  Interior walks for all points run in one lockstep.
    """
    if n_points < 0:
        raise ConfigError(f"n_points must be >= 0, got {n_points}")
    circum = prob.domain.circumradius()
    if sampling_radius < circum:
        raise ConfigError(
            f"sampling_radius {sampling_radius} does not cover the domain "
            f"(circumradius {circum})")
    d = p.d
    if n_points == 0:
        return TrainingSet(np.empty((0, d)), np.empty(0))

    pos_gen = rng.substream(POSITIONS_STREAM).generator()
    radii = sampling_radius * pos_gen.random(n_points) ** (1.0 / d)
    dirs = sampler.sample_unit_directions(d, n_points, DirectionMode.ISOTROPIC, pos_gen)
    xs = radii[:, None] * dirs

    u_hats = np.empty(n_points)
    inside = prob.domain.boundary_distances(xs) > 0.0
    outside_idx = np.flatnonzero(~inside)
    if outside_idx.size:
        u_hats[outside_idx] = _eval_field(prob.g, xs[outside_idx], "g")
    inside_idx = np.flatnonzero(inside)
    if inside_idx.size:
        m = cfg.paths
        geo, inner = [], []
        for k in inside_idx:
            base = int(k) * PATH_STRIDE
            geo.extend(rng.substream(base + i) for i in range(m))
            if prob.f is not None:
                inner.extend(rng.substream(base + INNER_FLAG + i) for i in range(m))
        x0s = np.repeat(xs[inside_idx], m, axis=0)
        vals = _walker_values(x0s, geo, inner if prob.f is not None else None,
                              prob, p, cfg)
        u_hats[inside_idx] = vals.reshape(inside_idx.size, m).mean(axis=1)
    return TrainingSet(xs, u_hats)
