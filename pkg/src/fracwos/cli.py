"""Command-line front end: sampling studies, datasets, training, reports.

Five subcommands cover the pipeline end to end:

    sample    draw both radial laws, report KS distances vs the CDFs
    dataset   generate a Monte Carlo training set CSV
    train     fit the ReLU network to a dataset, save a checkpoint
    evaluate  score a checkpoint against the exact solution, emit
              profile and surface curve data
    sweep     run dataset -> train -> evaluate over an (alpha, M, P)
              grid, emit timing and error tables

Every run writes a manifest.json: the full resolved configuration, a
sha256 hash of it, wall-clock seconds, and a sha256 per artifact.  CSV
artifacts begin with a `# manifest: <hash>` comment line; checkpoints
carry the hash in their meta block (JSON admits no comment line).
Figures are PNG renderings of the CSV contents, listed in the manifest
like any other artifact but exempt from the comment-line rule.

Randomness flows from --seed alone.  Stream blocks keep subcommands
disjoint: dataset occupies the estimator's documented layout from
stream 0, training sits at 2**60, evaluation at 2**61, the sample
study at 2**59.  Sweep cells reuse the root seed exactly as the
standalone commands would, so any cell can be replayed in isolation
with the same flags; sharing draws across cells also makes the
(alpha, M, P) comparisons common-random-number controlled.

Exit codes: 0 success, 1 configuration or data error, 2 numerical
error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from . import sampler
from .errors import ConfigError, DataError, NumericsError
from .sampler import FractionalParams, RngStream, DirectionMode, NEWTON_DELTA
from .estimator import EstimatorConfig, TrainingSet, generate_training_set
from .nn import TrainConfig, train, realize_batch, save_checkpoint, load_checkpoint
from .problems import get_example, evaluate_model

SAMPLE_STREAM = 2 ** 59
NN_STREAM = 2 ** 60
EVAL_STREAM = 2 ** 61

DEFAULT_DRAWS = 100_000
SURFACE_GRID = 101
PROFILE_POINTS = 5000
EVAL_POINTS = 5000

# The published parameter choices, one preset per (example, dimension)
# study; example 4 states no budget of its own and inherits example
# 3's.  Explicit flags override preset entries.
_PRESETS = {
    "ex1-d2": dict(example=1, dim=2, paths=100, points=2000, batch=400, iters=1000, lr=5e-3),
    "ex1-d5": dict(example=1, dim=5, paths=100, points=2000, batch=400, iters=1000, lr=5e-3),
    "ex1-d15": dict(example=1, dim=15, paths=100, points=2000, batch=400, iters=1000, lr=5e-4),
    "ex2-d2": dict(example=2, dim=2, paths=500, points=1000, batch=200, iters=1000, lr=5e-3),
    "ex2-d5": dict(example=2, dim=5, paths=500, points=1000, batch=200, iters=1000, lr=5e-3),
    "ex3-d2": dict(example=3, dim=2, paths=300, points=1000, batch=200, iters=1000, lr=5e-3),
    "ex4-d2": dict(example=4, dim=2, paths=300, points=1000, batch=200, iters=1000, lr=5e-3),
}

_DEFAULTS = dict(example=1, dim=2, alpha=1.0, paths=100, points=2000, batch=400,
                 iters=1000, lr=5e-3, seed=0, delta=NEWTON_DELTA,
                 direction="isotropic")


@dataclass(frozen=True)
class RunConfig:
    """Resolved run parameters, mirrored verbatim into the manifest."""

    subcommand: str
    example: int
    d: int
    alpha: float
    m: int
    p: int
    l: int
    n_iter: int
    gamma: float
    seed: int
    direction: str
    nr_delta: float
    radial_loss: bool
    strict_paper: bool
    out_dir: str

    def hashed_dict(self, **extras) -> dict:
        # out_dir is recorded in the manifest but excluded from the
        # hash: moving a run to another directory must not change the
        # identity its artifacts are stamped with.
        d = asdict(self)
        d.pop("out_dir")
        d.update(extras)
        return d


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for
    # numerical failures, so bad flags exit 1 like other config errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run parameters")
    g.add_argument("--example", type=int, choices=(1, 2, 3, 4), help="benchmark problem id")
    g.add_argument("--dim", type=int, help="spatial dimension d")
    g.add_argument("--alpha", type=float, help="fractional order in (0, 2)")
    g.add_argument("--paths", type=int, help="Monte Carlo paths per point (M)")
    g.add_argument("--points", type=int, help="training set size (P)")
    g.add_argument("--batch", type=int, help="SGD batch size (L)")
    g.add_argument("--iters", type=int, help="SGD iterations")
    g.add_argument("--lr", type=float, help="learning rate gamma")
    g.add_argument("--seed", type=int, help="root seed for all randomness")
    g.add_argument("--delta", type=float, help="inner-radius inversion tolerance")
    g.add_argument("--direction", choices=[m.value for m in DirectionMode],
                   help="unit-direction sampling rule")
    g.add_argument("--radial-loss", action=argparse.BooleanOptionalAction, default=None,
                   help="loss with the symmetrized term (default: on for radial examples)")
    g.add_argument("--strict-paper", action=argparse.BooleanOptionalAction, default=None,
                   help="reuse one batch of inner directions per path")
    g.add_argument("--preset", choices=sorted(_PRESETS), help="published parameter set")
    g.add_argument("--out", help="output directory (default: runs/<subcommand>)")

    parser = _Parser(prog="fracwos",
                     description="Walk-on-Spheres solver and network trainer "
                                 "for the fractional Dirichlet problem on the unit ball.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    sp = sub.add_parser("sample", parents=[common],
                        help="draw the exit and inner radial laws, check fit")
    sp.add_argument("--draws", type=int, default=DEFAULT_DRAWS, help="draws per law")

    sub.add_parser("dataset", parents=[common],
                   help="generate a Monte Carlo training set")

    tp = sub.add_parser("train", parents=[common], help="train the network on a dataset")
    tp.add_argument("--data", required=True, help="dataset CSV path")

    ep = sub.add_parser("evaluate", parents=[common],
                        help="score a checkpoint against the exact solution")
    ep.add_argument("--checkpoint", required=True, help="checkpoint JSON path")

    wp = sub.add_parser("sweep", parents=[common],
                        help="dataset/train/evaluate over an (alpha, M, P) grid")
    wp.add_argument("--alphas", help="comma list of alpha values (default: --alpha)")
    wp.add_argument("--paths-grid", help="comma list of M values (default: --paths)")
    wp.add_argument("--points-grid", help="comma list of P values (default: --points)")
    return parser


def _resolve(args) -> RunConfig:
    preset = _PRESETS[args.preset] if args.preset else {}

    def pick(name):
        v = getattr(args, name, None)
        if v is not None:
            return v
        if name in preset:
            return preset[name]
        return _DEFAULTS[name]

    example = pick("example")
    d = pick("dim")
    alpha = pick("alpha")
    params = FractionalParams(d=d, alpha=alpha)
    prob = get_example(example, params)
    radial = args.radial_loss if args.radial_loss is not None else prob.radial
    out = args.out if args.out is not None else str(Path("runs") / args.subcommand)
    return RunConfig(
        subcommand=args.subcommand,
        example=example,
        d=d,
        alpha=alpha,
        m=pick("paths"),
        p=pick("points"),
        l=pick("batch"),
        n_iter=pick("iters"),
        gamma=pick("lr"),
        seed=pick("seed"),
        direction=pick("direction"),
        nr_delta=pick("delta"),
        radial_loss=bool(radial),
        strict_paper=bool(args.strict_paper),
        out_dir=out,
    )


def _prepare_out(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.touch()
        probe.unlink()
    except OSError as e:
        raise ConfigError(f"output directory {out} is not writable: {e}")
    return out


def _hash_config(config: dict) -> str:
    js = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(js.encode("utf-8")).hexdigest()


def _hash_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, manifest_hash: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# manifest: {manifest_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _write_manifest(out: Path, config: dict, manifest_hash: str,
                    artifacts: dict, elapsed: float) -> Path:
    hashes = {name: _hash_file(out / name) for name in sorted(artifacts)}
    doc = {
        "config": config,
        "manifest_hash": manifest_hash,
        "elapsed_seconds": elapsed,
        "artifacts": hashes,
    }
    dest = out / "manifest.json"
    with open(dest, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return dest


def _estimator_config(cfg: RunConfig, m: int | None = None) -> EstimatorConfig:
    return EstimatorConfig(paths=cfg.m if m is None else m,
                           mode=DirectionMode(cfg.direction),
                           nr_delta=cfg.nr_delta,
                           one_v_per_path=cfg.strict_paper)


def cmd_sample(cfg: RunConfig, draws: int, out: Path, manifest_hash: str) -> dict:
    """Draw both radial laws and report their KS goodness of fit."""
    if draws < 1:
        raise ConfigError(f"--draws must be >= 1, got {draws}")
    p = FractionalParams(d=cfg.d, alpha=cfg.alpha)
    gen = RngStream(cfg.seed, SAMPLE_STREAM).generator()
    # Draw order: all exit uniforms, then all inner uniforms.
    exit_r = sampler.exit_radius_inverse_cdf(gen.random(draws), p)
    inner_r = sampler.invert_inner_cdf(gen.random(draws), p, delta=cfg.nr_delta)

    # The float64 exit law has atoms where the inverse CDF is flat, so
    # its oracle is the rounded CDF with its left limit; the inner law
    # is compared against the plain continuous CDF.
    ks_exit = sampler.ks_distance(exit_r,
                                  lambda r: sampler.exit_radius_cdf_rounded(r, p),
                                  lambda r: sampler.exit_radius_cdf_rounded_left(r, p))
    ks_inner = sampler.ks_distance(inner_r, lambda r: sampler.inner_radius_cdf(r, p))

    _write_csv(out / "samples.csv", manifest_hash,
               ["exit_radius", "inner_radius"], zip(exit_r, inner_r))
    _write_csv(out / "ks_report.csv", manifest_hash,
               ["law", "n_draws", "ks_distance"],
               [("exit_radius", draws, ks_exit), ("inner_radius", draws, ks_inner)])

    from . import plots
    plots.plot_sample_histograms(exit_r, inner_r, p, out / "sample_hist.png")
    print(f"ks exit_radius {ks_exit:.6f}  inner_radius {ks_inner:.6f}  ({draws} draws)")
    return {"samples.csv": None, "ks_report.csv": None, "sample_hist.png": None}


def cmd_dataset(cfg: RunConfig, out: Path, manifest_hash: str) -> dict:
    """Generate the training set for the configured problem."""
    p = FractionalParams(d=cfg.d, alpha=cfg.alpha)
    prob = get_example(cfg.example, p)
    ts = generate_training_set(prob, p, cfg.p, _estimator_config(cfg),
                               rng=RngStream(cfg.seed, 0))
    ts.save_csv(out / "dataset.csv", comment=f"manifest: {manifest_hash}")
    print(f"dataset: {len(ts)} points, example {cfg.example}, "
          f"d={cfg.d}, alpha={cfg.alpha}, M={cfg.m}")
    return {"dataset.csv": None}


def cmd_train(cfg: RunConfig, data: str, out: Path, manifest_hash: str) -> dict:
    """Fit the network to a dataset and write checkpoint plus loss trace."""
    ts = TrainingSet.load_csv(data)
    if ts.dim != cfg.d:
        raise ConfigError(f"dataset dimension {ts.dim} does not match --dim {cfg.d}")
    tc = TrainConfig(n_iter=cfg.n_iter, batch_size=cfg.l, gamma=cfg.gamma,
                     radial_loss=cfg.radial_loss, seed=cfg.seed)
    result = train(ts, tc, RngStream(cfg.seed, NN_STREAM))
    final_loss = float(result.loss_trace[-1]) if len(result.loss_trace) else math.nan

    meta = {
        "manifest": manifest_hash,
        "example": cfg.example,
        "d": cfg.d,
        "alpha": cfg.alpha,
        "seed": cfg.seed,
        "m": cfg.m,
        "p": len(ts),
        "l": cfg.l,
        "n_iter": cfg.n_iter,
        "gamma": cfg.gamma,
        "radial_loss": cfg.radial_loss,
        "final_loss": final_loss,
    }
    save_checkpoint(out / "checkpoint.json", result.model, meta=meta)
    _write_csv(out / "loss_trace.csv", manifest_hash, ["iteration", "loss"],
               [(i + 1, v) for i, v in enumerate(result.loss_trace)])

    from . import plots
    plots.plot_loss_trace(result.loss_trace, out / "loss_trace.png")
    print(f"trained {cfg.n_iter} iterations, final batch loss {final_loss!r}")
    return {"checkpoint.json": None, "loss_trace.csv": None, "loss_trace.png": None}


def _profile_grid(d: int):
    ts = np.linspace(0.0, 1.0 / math.sqrt(d) + 0.1, PROFILE_POINTS)
    xs = ts[:, None] * np.ones(d)
    return ts, xs


def cmd_evaluate(cfg: RunConfig, checkpoint: str, out: Path, manifest_hash: str) -> dict:
    """Score a checkpoint and emit metric, profile, and surface data."""
    model, meta = load_checkpoint(checkpoint)
    if model.layer_dims[0] != cfg.d:
        raise ConfigError(f"checkpoint expects d={model.layer_dims[0]}, run has d={cfg.d}")
    for key, have in (("d", cfg.d), ("alpha", cfg.alpha), ("example", cfg.example)):
        if key in meta and meta[key] != have:
            raise ConfigError(f"checkpoint was trained with {key}={meta[key]}, "
                              f"run has {key}={have}")

    p = FractionalParams(d=cfg.d, alpha=cfg.alpha)
    prob = get_example(cfg.example, p)
    report = evaluate_model(model, prob, n=EVAL_POINTS,
                            rng=RngStream(cfg.seed, EVAL_STREAM))

    ts, xs = _profile_grid(cfg.d)
    prof_model = realize_batch(model, xs)
    prof_exact = prob.exact(xs)
    _write_csv(out / "profile.csv", manifest_hash, ["t", "network", "exact"],
               zip(ts, prof_model, prof_exact))

    artifacts = {"metrics.csv": None, "profile.csv": None,
                 "profile.png": None}

    from . import plots
    plots.plot_profile(ts, prof_model, prof_exact, out / "profile.png")

    if cfg.d >= 2:
        grid = np.linspace(-1.0, 1.0, SURFACE_GRID)
        s_mesh, t_mesh = np.meshgrid(grid, grid, indexing="ij")
        pts = np.empty((SURFACE_GRID * SURFACE_GRID, cfg.d))
        pts[:, :-1] = s_mesh.reshape(-1)[:, None]
        pts[:, -1] = t_mesh.reshape(-1)
        surf_model = realize_batch(model, pts)
        surf_exact = prob.exact(pts)
        _write_csv(out / "surface.csv", manifest_hash, ["s", "t", "network", "exact"],
                   zip(pts[:, 0], pts[:, -1], surf_model, surf_exact))
        plots.plot_surface(grid, grid, surf_model.reshape(SURFACE_GRID, SURFACE_GRID),
                           surf_exact.reshape(SURFACE_GRID, SURFACE_GRID),
                           out / "surface.png")
        artifacts["surface.csv"] = None
        artifacts["surface.png"] = None

    def _meta(key, fallback):
        return meta.get(key, fallback)

    row = (cfg.example, cfg.d, cfg.alpha, _meta("m", cfg.m), _meta("p", cfg.p),
           _meta("l", cfg.l), _meta("n_iter", cfg.n_iter), _meta("gamma", cfg.gamma),
           report.mse, report.mre, report.n_points, report.n_excluded)
    _write_csv(out / "metrics.csv", manifest_hash,
               ["example", "d", "alpha", "m", "p", "l", "n_iter", "gamma",
                "mse", "mre", "n_points", "n_excluded"], [row])
    print(f"mse {report.mse!r}  mre {report.mre!r}  "
          f"({report.n_points} points, {report.n_excluded} excluded from mre)")
    return artifacts


def _parse_grid(text: str | None, fallback, kind, caster):
    if text is None:
        return [fallback]
    try:
        vals = [caster(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"could not parse {kind} list {text!r}")
    if not vals:
        raise ConfigError(f"empty {kind} list")
    return vals


def cmd_sweep(cfg: RunConfig, alphas, ms, ps, out: Path, manifest_hash: str) -> dict:
    """Full pipeline per (alpha, M, P) cell; timing and error tables.

    Every cell runs with the root seed exactly as the standalone
    commands would, so a cell is replayable in isolation; failures are
    recorded in the tables and the sweep continues.
    """
    err_rows = []
    timing = {}
    for alpha in alphas:
        for m in ms:
            for p_ in ps:
                t0 = time.perf_counter()
                note = ""
                mse = mre = math.nan
                try:
                    params = FractionalParams(d=cfg.d, alpha=alpha)
                    prob = get_example(cfg.example, params)
                    ts = generate_training_set(prob, params, p_,
                                               _estimator_config(cfg, m=m),
                                               rng=RngStream(cfg.seed, 0))
                    # Small-P cells clamp the batch so L <= P holds.
                    tc = TrainConfig(n_iter=cfg.n_iter, batch_size=min(cfg.l, p_),
                                     gamma=cfg.gamma, radial_loss=cfg.radial_loss,
                                     seed=cfg.seed)
                    result = train(ts, tc, RngStream(cfg.seed, NN_STREAM))
                    report = evaluate_model(result.model, prob, n=EVAL_POINTS,
                                            rng=RngStream(cfg.seed, EVAL_STREAM))
                    mse, mre = report.mse, report.mre
                except Exception as e:  # record the cell, keep sweeping
                    note = f"{type(e).__name__}: {e}"
                elapsed = time.perf_counter() - t0
                timing[(alpha, m, p_)] = elapsed
                err_rows.append((alpha, m, p_, mse, mre, note))
                status = note or f"mse {mse:.3e}"
                print(f"cell alpha={alpha} M={m} P={p_}: {status} ({elapsed:.1f}s)")

    _write_csv(out / "errors.csv", manifest_hash,
               ["alpha", "m", "p", "mse", "mre", "note"], err_rows)
    timing_rows = [[alpha, m] + [timing[(alpha, m, p_)] for p_ in ps]
                   for alpha in alphas for m in ms]
    _write_csv(out / "timing.csv", manifest_hash,
               ["alpha", "M\\P"] + [str(p_) for p_ in ps], timing_rows)

    from . import plots
    plots.plot_sweep_errors([r[:5] for r in err_rows], out / "sweep_errors.png")
    return {"errors.csv": None, "timing.csv": None, "sweep_errors.png": None}


def _dispatch(args) -> int:
    cfg = _resolve(args)
    out = _prepare_out(cfg)
    extras = {}
    if args.subcommand == "sample":
        extras["draws"] = args.draws
    elif args.subcommand == "train":
        extras["data_sha256"] = _hash_file(Path(args.data))
    elif args.subcommand == "evaluate":
        extras["checkpoint_sha256"] = _hash_file(Path(args.checkpoint))
    elif args.subcommand == "sweep":
        extras["alphas"] = _parse_grid(args.alphas, cfg.alpha, "alpha", float)
        extras["paths_grid"] = _parse_grid(args.paths_grid, cfg.m, "M", int)
        extras["points_grid"] = _parse_grid(args.points_grid, cfg.p, "P", int)

    config = cfg.hashed_dict(**extras)
    manifest_hash = _hash_config(config)
    config["out_dir"] = cfg.out_dir

    t0 = time.perf_counter()
    if args.subcommand == "sample":
        artifacts = cmd_sample(cfg, args.draws, out, manifest_hash)
    elif args.subcommand == "dataset":
        artifacts = cmd_dataset(cfg, out, manifest_hash)
    elif args.subcommand == "train":
        artifacts = cmd_train(cfg, args.data, out, manifest_hash)
    elif args.subcommand == "evaluate":
        artifacts = cmd_evaluate(cfg, args.checkpoint, out, manifest_hash)
    else:
        artifacts = cmd_sweep(cfg, extras["alphas"], extras["paths_grid"],
                              extras["points_grid"], out, manifest_hash)
    elapsed = time.perf_counter() - t0

    manifest_path = _write_manifest(out, config, manifest_hash, artifacts, elapsed)
    for name in sorted(artifacts):
        print(f"wrote {out / name}")
    print(f"wrote {manifest_path}  (manifest {manifest_hash[:12]}, {elapsed:.1f}s)")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _dispatch(args)
    except (ConfigError, DataError, ValueError) as e:
        # Library-level domain errors (bad alpha, bad ranges) surface
        # as ValueError; at the CLI boundary they are config errors.
        print(f"error: {e}", file=sys.stderr)
        return 1
    except NumericsError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
