"""Domain geometry and Walk-on-Spheres path simulation.

A walk starting at x in D repeatedly jumps from its current point rho
to rho + r*Y, where r is the distance to the boundary and Y follows
the alpha-stable exit law of the unit ball scaled by r.  Because the
exit radius exceeds 1 the chain leaves the inscribed ball at every
step and exits D after an almost-surely finite number of steps N; the
sequence (rho_0..rho_N, r_1..r_N) is the WosPath.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field

import numpy as np

from . import sampler
from .errors import NumericsError
from .sampler import DirectionMode, FractionalParams, _generator

# Per-path step budget; exceeding it raises rather than hangs.  The
# exit time is almost surely finite, so at 10^6 this fires only on a
# genuine defect (or an adversarial domain).
MAX_STEPS = 1_000_000


class Domain(abc.ABC):
    """Convex bounded region queried through signed boundary distance."""

    @abc.abstractmethod
    def boundary_distance(self, x) -> float:
        """Signed distance to the boundary: positive inside, 0 on the
        boundary, negative outside.  The walk only consumes the inside
        (positive) values as sphere radii."""

    def boundary_distances(self, xs) -> np.ndarray:
        """Vectorized boundary_distance over rows of xs."""
        xs = np.asarray(xs, dtype=float)
        return np.array([self.boundary_distance(row) for row in xs])

    def contains(self, x) -> bool:
        """Strict membership: boundary points count as exited."""
        return self.boundary_distance(x) > 0.0

    @abc.abstractmethod
    def circumradius(self) -> float:
        """Radius of the smallest origin-centered ball covering the domain."""


@dataclass(frozen=True)
class Ball(Domain):
    """Euclidean ball; the only domain the benchmark problems use."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if center.ndim != 1 or not np.all(np.isfinite(center)):
            raise ValueError(f"center must be a finite vector, got {self.center!r}")
        radius = float(self.radius)
        if not np.isfinite(radius) or radius <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)

    # Both distance paths reduce with ((.)**2).sum(-1): scalar and
    # batched queries must agree bit-for-bit so that lockstep walks
    # replay scalar walks exactly.
    def boundary_distance(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return self.radius - float(np.sqrt(((x - self.center) ** 2).sum(-1)))

    def boundary_distances(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        return self.radius - np.sqrt(((xs - self.center) ** 2).sum(-1))

    def circumradius(self) -> float:
        return float(np.linalg.norm(self.center)) + self.radius


def boundary_distance(dom: Domain, x) -> float:
    """Signed distance from x to the boundary of dom (positive inside)."""
    return dom.boundary_distance(x)


@dataclass
class WosPath:
    """One simulated walk: points rho_0..rho_N and the radii r_1..r_N.

    rho_n = rho_{n-1} + r_n * Y_n with |Y_n| > 1; every point before
    the last lies in D, the last lies outside (or on the boundary).
    """

    points: np.ndarray
    radii: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def exit_step(self) -> int:
        return len(self.radii)

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def exit_point(self) -> np.ndarray:
        return self.points[-1]


def simulate_wos_path(dom: Domain, x0, p: FractionalParams,
                      mode: DirectionMode, rng,
                      max_steps: int = MAX_STEPS) -> WosPath:
    """Simulate one walk from x0 in D until it exits.

    Per step, the stream is consumed in the order: one uniform for the
    exit radius, then the direction draws.  Raises NumericsError with
    the partial path attached if max_steps is exceeded.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if x.shape != (p.d,):
        raise ValueError(f"x0 must be a vector of length d={p.d}, got shape {x.shape}")
    if not dom.contains(x):
        raise ValueError(f"x0 must lie inside the domain, got {x0!r}")
    gen = _generator(rng)
    points = [x]
    radii = []
    for _ in range(max_steps):
        r = dom.boundary_distance(x)
        big_r = sampler.exit_radius_inverse_cdf(gen.random(), p)
        w = sampler._draw_direction(gen, p.d, mode)
        x = x + (r * big_r) * w
        points.append(x)
        radii.append(r)
        if not dom.contains(x):
            return WosPath(np.array(points), np.array(radii))
    partial = WosPath(np.array(points), np.array(radii))
    raise NumericsError(
        f"walk did not exit within {max_steps} steps (started at {x0!r})",
        partial_path=partial,
    )


def _lockstep_exit(dom: Domain, x0s, p: FractionalParams, mode: DirectionMode,
                   gens, max_steps: int = MAX_STEPS, on_step=None):
    """Advance many walks one step per round until all exit.

    gens[i] is walker i's generator, consumed (uniform, direction) per
    step exactly like simulate_wos_path, so walker i reproduces the
    scalar walk on the same stream bit-for-bit; only the exit-law
    inversion is shared across the round.  on_step(walkers, rho_prev,
    r, x_next) is called once per round with the still-active walkers'
    indices and step data, before the exit test.  Returns (exit points
    (n, d), step counts (n,)).
    """
    x = np.array(x0s, dtype=float)
    if x.ndim != 2 or x.shape[1] != p.d:
        raise ValueError(f"start points must have shape (n, {p.d}), got {x.shape}")
    if np.any(dom.boundary_distances(x) <= 0.0):
        raise ValueError("all start points must lie inside the domain")
    steps = np.zeros(len(x), dtype=np.int64)
    active = np.arange(len(x))
    for _ in range(max_steps):
        if active.size == 0:
            return x, steps
        m = active.size
        us = np.empty(m)
        ws = np.empty((m, p.d))
        for t in range(m):
            gen = gens[active[t]]
            us[t] = gen.random()
            ws[t] = sampler._draw_direction(gen, p.d, mode)
        rho = x[active]
        rs = dom.boundary_distances(rho)
        big_r = sampler.exit_radius_inverse_cdf(us, p)
        x_next = rho + (rs * big_r)[:, None] * ws
        if on_step is not None:
            on_step(active, rho, rs, x_next)
        x[active] = x_next
        steps[active] += 1
        active = active[dom.boundary_distances(x_next) > 0.0]
    raise NumericsError(
        f"{active.size} of {len(x)} walks did not exit within {max_steps} steps")


def exit_steps(dom: Domain, x0, p: FractionalParams, mode: DirectionMode,
               rng, n_paths: int, max_steps: int = MAX_STEPS) -> np.ndarray:
    """Exit step counts N for n_paths independent walks from x0.

    Path i runs on rng.substream(i) and its count equals
    simulate_wos_path(dom, x0, p, mode, rng.substream(i)).exit_step;
    the batch exists because counting steps does not need the paths
    kept, and lockstep rounds amortize the exit-law inversion.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    gens = [rng.substream(i).generator() for i in range(n_paths)]
    x0s = np.broadcast_to(x0, (n_paths, p.d))
    _, steps = _lockstep_exit(dom, x0s, p, mode, gens, max_steps)
    return steps


def write_path_csv(path: WosPath, dest) -> None:
    """Dump a path as CSV: step, x_1..x_d, r (radius used to reach the
    point; empty for step 0).  Full-precision decimal rendering."""
    d = path.points.shape[1]
    header = "step," + ",".join(f"x_{i + 1}" for i in range(d)) + ",r"
    lines = [header]
    for n, point in enumerate(path.points):
        coords = ",".join(repr(float(c)) for c in point)
        r = "" if n == 0 else repr(float(path.radii[n - 1]))
        lines.append(f"{n},{coords},{r}")
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
