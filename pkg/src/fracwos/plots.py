"""Figure rendering for the command-line reports.

Every function takes plain arrays plus a destination path, draws one
PNG with the Agg backend, closes the figure, and returns the path.
Nothing here touches randomness or global state beyond matplotlib's
backend selection, so the CLI can call these after writing the CSV
artifacts without disturbing replay guarantees.
"""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import sampler

_DPI = 150


def _finish(fig, dest) -> str:
    dest = str(dest)
    fig.savefig(dest, dpi=_DPI)
    plt.close(fig)
    return dest


def plot_sample_histograms(exit_draws, inner_draws, p, dest) -> str:
    """Histograms of both radial laws with their analytic densities.

    The exit law has a heavy right tail, so its panel is clipped at the
    99th percentile of the draws; the inner law lives on (0, 1).
    """
    exit_draws = np.asarray(exit_draws, dtype=float)
    inner_draws = np.asarray(inner_draws, dtype=float)
    fig, (ax_exit, ax_inner) = plt.subplots(1, 2, figsize=(10.0, 4.0))

    hi = float(np.quantile(exit_draws, 0.99))
    shown = exit_draws[exit_draws <= hi]
    ax_exit.hist(shown, bins=80, density=True, alpha=0.55, label="draws")
    grid = np.linspace(1.0 + 1e-9, hi, 400)
    ax_exit.plot(grid, sampler.exit_radius_pdf(grid, p), "r-", lw=1.5, label="pdf")
    ax_exit.set_title(f"exit radius, d={p.d}, alpha={p.alpha}")
    ax_exit.set_xlabel("r")
    ax_exit.legend()

    ax_inner.hist(inner_draws, bins=80, density=True, alpha=0.55, label="draws")
    grid = np.linspace(1e-9, 1.0 - 1e-9, 400)
    ax_inner.plot(grid, sampler.inner_radius_pdf(grid, p), "r-", lw=1.5, label="pdf")
    ax_inner.set_title(f"inner radius, d={p.d}, alpha={p.alpha}")
    ax_inner.set_xlabel("r")
    ax_inner.legend()

    fig.tight_layout()
    return _finish(fig, dest)


def plot_loss_trace(trace, dest) -> str:
    """Batch loss against iteration, log scale when losses allow it."""
    trace = np.asarray(trace, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    its = np.arange(1, trace.size + 1)
    if trace.size and np.all(trace > 0.0):
        ax.semilogy(its, trace, lw=1.0)
    else:
        ax.plot(its, trace, lw=1.0)
    ax.set_xlabel("iteration")
    ax.set_ylabel("batch loss")
    ax.set_title("training loss")
    fig.tight_layout()
    return _finish(fig, dest)


def plot_profile(ts, model_vals, exact_vals, dest) -> str:
    """Model against exact solution along the diagonal ray x = (t, ..., t)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(ts, model_vals, "b-", lw=1.2, label="network")
    if exact_vals is not None:
        ax.plot(ts, exact_vals, "k--", lw=1.2, label="exact")
    ax.set_xlabel("t")
    ax.set_ylabel("u(t, ..., t)")
    ax.set_title("diagonal profile")
    ax.legend()
    fig.tight_layout()
    return _finish(fig, dest)


def plot_surface(s_grid, t_grid, model_grid, exact_grid, dest) -> str:
    """Side-by-side 3-D panels over the (s, t) slice: network and exact."""
    s_mesh, t_mesh = np.meshgrid(s_grid, t_grid, indexing="ij")
    fig = plt.figure(figsize=(11.0, 4.5))

    ax = fig.add_subplot(1, 2, 1, projection="3d")
    ax.plot_surface(s_mesh, t_mesh, model_grid, cmap="viridis", linewidth=0)
    ax.set_title("network")
    ax.set_xlabel("s")
    ax.set_ylabel("t")

    ax = fig.add_subplot(1, 2, 2, projection="3d")
    if exact_grid is not None:
        ax.plot_surface(s_mesh, t_mesh, exact_grid, cmap="viridis", linewidth=0)
        ax.set_title("exact")
    else:
        ax.set_title("exact (unavailable)")
    ax.set_xlabel("s")
    ax.set_ylabel("t")

    fig.tight_layout()
    return _finish(fig, dest)


def plot_sweep_errors(rows, dest) -> str:
    """MSE against M, one curve per alpha.

    ``rows`` is a sequence of (alpha, m, p, mse, mre) tuples, as written
    to the sweep's errors.csv; failed cells carry NaN and are dropped.
    """
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    alphas = sorted({r[0] for r in rows})
    for alpha in alphas:
        pts = sorted((r[1], r[3]) for r in rows if r[0] == alpha and np.isfinite(r[3]))
        if not pts:
            continue
        ms = [q[0] for q in pts]
        mses = [q[1] for q in pts]
        ax.plot(ms, mses, "o-", lw=1.2, label=f"alpha={alpha}")
    ax.set_xscale("log")
    if all(r[3] > 0.0 for r in rows if np.isfinite(r[3])):
        ax.set_yscale("log")
    ax.set_xlabel("M")
    ax.set_ylabel("MSE")
    ax.set_title("evaluation error by Monte Carlo budget")
    ax.legend()
    fig.tight_layout()
    return _finish(fig, dest)
