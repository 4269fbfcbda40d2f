"""Subcommand implementations; each takes parsed arguments and the invocation string."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from ..data.dataset import DatasetFile, Normalizer, read_dataset, write_dataset
from ..data.downsample import spectral_downsample
from ..data.generate import ProblemSpec, generate_dataset
from ..data.pde import heat_operator_exact
from ..extension import ExtensionMethod, build_extension, extend_1d, extended_derivative, seam_jump
from ..fno.checkpoint import load_checkpoint, save_checkpoint
from ..fno.config import FnoConfig
from ..fno.model import FNO
from ..spectral_ops import spectral_truncate, validate_nyquist
from ..tensor_core import GridSpec, fftn, mode_indices
from ..train.balancers import BalancerState
from ..train.ifno import IfnoSchedule, activation_order, explained_ratio
from ..train.loop import TrainConfig, evaluate, predict, rollout, train
from ..train.losses import LossSpec
from ..train.optim import OptimizerConfig
from .output import load_field, read_csv, write_csv
from .svg import line_plot


def _modes(text: str, ndim: int | None = None) -> tuple[int, ...]:
    vals = tuple(int(v) for v in str(text).split(",") if v.strip())
    if not vals:
        raise ValueError("empty mode list")
    if ndim is not None and len(vals) == 1 and ndim > 1:
        vals = vals * ndim
    return vals


def _sidecar(path: str, suffix: str) -> str:
    return str(path) + suffix


def _stats_dict(ds: DatasetFile) -> dict:
    return {
        "input_mean": ds.input_stats.mean.tolist(),
        "input_std": ds.input_stats.std.tolist(),
        "output_mean": ds.output_stats.mean.tolist(),
        "output_std": ds.output_stats.std.tolist(),
    }


def _stats_from(extras: dict) -> tuple[Normalizer, Normalizer]:
    s = extras["stats"]
    return (
        Normalizer(np.array(s["input_mean"]), np.array(s["input_std"])),
        Normalizer(np.array(s["output_mean"]), np.array(s["output_std"])),
    )


def _load_model(path) -> tuple[FNO, dict]:
    config, params, extras = load_checkpoint(path)
    model = FNO(config, params)
    return model, extras


def _losses(extras: dict) -> list[LossSpec]:
    return [LossSpec(kind, p) for kind, p in extras.get("losses", [["lp-rel", 2.0]])]


def cmd_gen(args, invocation: str) -> int:
    spec = ProblemSpec(
        problem=args.problem,
        count=args.n,
        resolution=args.res,
        seed=args.seed,
        nu=args.nu,
        t=args.t,
        dt=args.dt,
        k_max=args.k_max,
        gamma=args.gamma,
        amplitude=args.amplitude,
        domain_length=args.domain_length,
        start_index=args.start_index,
        downsample=args.downsample,
        downsample_factor=args.factor if args.downsample else 1,
    )
    ds = generate_dataset(spec)
    if args.stats_from:
        ds.with_stats_from(read_dataset(args.stats_from))
    elif ds.count:
        ds.fit_stats()
    ds.metadata["invocation"] = invocation
    write_dataset(args.output, ds, float32=args.float32)
    print(f"wrote {ds.count} samples at {ds.grid.resolution} to {args.output}")
    return 0


def cmd_train(args, invocation: str) -> int:
    ds = read_dataset(args.data)
    if ds.count == 0:
        raise ValueError(f"{args.data} holds no samples")
    val = read_dataset(args.val).with_stats_from(ds) if args.val else None
    ndim = ds.grid.ndim
    modes = _modes(args.modes, ndim)
    max_modes = _modes(args.max_modes, ndim) if args.max_modes else modes
    schedule = None
    if args.ifno:
        start = tuple(min(args.ifno_start, k) for k in max_modes)
        schedule = IfnoSchedule(
            criterion=args.ifno_criterion,
            current=start,
            max_modes=max_modes,
            alpha_ratio=args.ifno_alpha,
            window=args.ifno_window,
            eps_improve=args.ifno_eps,
            check_every=args.ifno_every,
        )
        modes = start
    config = FnoConfig(
        n_modes=modes,
        hidden_channels=args.width,
        in_channels=ds.inputs.shape[1],
        out_channels=ds.outputs.shape[1],
        n_layers=args.layers,
        max_n_modes=max_modes,
        lifting_channel_ratio=args.lifting_ratio,
        projection_channel_ratio=args.projection_ratio,
        channel_mlp_expansion=args.mlp_expansion,
        fno_skip=args.skip,
        channel_mlp_skip=args.mlp_skip,
        activation=args.activation,
        domain_padding=(args.domain_padding,),
        factorization=args.factorization,
        rank=args.rank,
        separable=args.separable,
        norm=args.norm,
    )
    losses = [LossSpec(kind.strip(), args.p) for kind in args.loss.split(",") if kind.strip()]
    model = FNO(config, seed=args.seed)
    opt = OptimizerConfig(
        name=args.optimizer,
        lr=args.lr,
        momentum=args.momentum,
        schedule=args.schedule,
        step_size=args.step_size,
        gamma=args.decay,
        total_epochs=args.epochs,
    )
    balancer = BalancerState(args.balancer, len(losses), tau=args.tau, alpha=args.alpha, rho_prob=args.rho_prob)
    tc = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, seed=args.seed, optimizer=opt)
    result = train(model, ds, losses, tc, balancer, schedule, val)
    final_config = config.replace(n_modes=result.n_modes)
    extras = {
        "stats": _stats_dict(ds),
        "losses": [[spec.kind.value, spec.p] for spec in losses],
        "batch_size": args.batch_size,
        "train_resolution": list(ds.grid.resolution),
        "domain_length": list(ds.grid.domain_length),
        "dataset": {k: v for k, v in ds.metadata.items() if k != "invocation"},
        "final": result.history[-1] if result.history else {},
        "seed": args.seed,
        "invocation": invocation,
    }
    save_checkpoint(args.output, final_config, result.params, extras)
    history_path = args.history or _sidecar(args.output, ".history.csv")
    header = result.columns()
    write_csv(history_path, header, ([row[k] for k in header] for row in result.history), invocation)
    if result.history:
        last = result.history[-1]
        print(f"epochs={len(result.history)} " + " ".join(f"{k}={last[k]:.6g}" for k in result.loss_names))
    print(f"checkpoint: {args.output}\nhistory: {history_path}")
    return 0


def cmd_eval(args, invocation: str) -> int:
    model, extras = _load_model(args.model)
    ds = read_dataset(args.data)
    if ds.count == 0:
        raise ValueError(f"{args.data} holds no samples")
    in_stats, out_stats = _stats_from(extras)
    losses = _losses(extras)
    batch = args.batch_size or int(extras.get("batch_size", 20))
    report = evaluate(model, model.params, ds, losses, None, batch, in_stats, out_stats)
    names = [f"loss_{spec.name}" for spec in losses]
    header = ["sample", "rel_l2", "rel_h1"] + names
    rows = []
    for i in range(ds.count):
        rows.append([i, report["rel_l2"][i], report["rel_h1"][i]] + [v[i] for v in report["loss_per_sample"]])
    rows.append(["mean", float(np.mean(report["rel_l2"])), float(np.mean(report["rel_h1"]))] + report["loss"])
    write_csv(args.output, header, rows, invocation)
    print(f"mean rel_l2={np.mean(report['rel_l2']):.6g} rel_h1={np.mean(report['rel_h1']):.6g} "
          + " ".join(f"{n}={v:.12g}" for n, v in zip(names, report["loss"])))
    return 0


def cmd_superres(args, invocation: str) -> int:
    model, extras = _load_model(args.model)
    ds = read_dataset(args.data)
    if ds.count == 0:
        raise ValueError(f"{args.data} holds no samples")
    in_stats, out_stats = _stats_from(extras)
    fine = ds.grid.resolution
    check = validate_nyquist(model.n_modes, fine)
    for msg in check.messages:
        print(f"warning: {msg}", file=sys.stderr)
    check.raise_if_hard()
    train_n = extras.get("train_resolution", [fine[0]])[0]
    if fine[0] < train_n:
        print(f"warning: evaluation grid {fine[0]} is coarser than the training grid {train_n}", file=sys.stderr)
    coarse_n = min(args.coarse_res or train_n, fine[0])
    coarse = (int(coarse_n),) * ds.grid.ndim
    coarse_ds = DatasetFile(
        spectral_downsample(ds.inputs, coarse),
        spectral_downsample(ds.outputs, coarse),
        ds.grid.with_resolution(coarse),
        metadata=ds.metadata,
    )
    losses = _losses(extras)
    fine_report = evaluate(model, model.params, ds, losses, None, 50, in_stats, out_stats)
    coarse_report = evaluate(model, model.params, coarse_ds, losses, None, 50, in_stats, out_stats)
    fine_err = float(np.mean(fine_report["rel_l2"]))
    coarse_err = float(np.mean(coarse_report["rel_l2"]))
    truncated = spectral_truncate(fine_report["prediction"], coarse)
    consistency = float(np.linalg.norm(truncated - coarse_report["prediction"]) / np.linalg.norm(coarse_report["prediction"]))
    rows = [
        ["fine_resolution", fine[0]],
        ["coarse_resolution", coarse[0]],
        ["fine_rel_l2", fine_err],
        ["coarse_rel_l2", coarse_err],
        ["error_ratio", fine_err / coarse_err if coarse_err > 0 else float("inf")],
        ["truncation_consistency", consistency],
        ["nyquist_clean", int(check.clean)],
    ]
    write_csv(args.output, ["metric", "value"], rows, invocation)
    for name, value in rows:
        print(f"{name}={value}")
    return 0


def cmd_rollout(args, invocation: str) -> int:
    model, extras = _load_model(args.model)
    in_stats, out_stats = _stats_from(extras)
    cfg = model.config
    if cfg.in_channels != cfg.out_channels:
        raise ValueError("rollout needs matching input and output channels")
    u0 = np.asarray(load_field(args.u0, args.index), dtype=float)
    if u0.ndim == cfg.ndim:
        u0 = u0[None]
    if u0.ndim != cfg.ndim + 1 or u0.shape[0] != cfg.in_channels:
        raise ValueError(f"initial state of shape {u0.shape} does not fit the model")

    def step(state):
        return predict(model, model.params, state[None], in_stats, out_stats)[0]

    traj = rollout(step, u0, args.steps, args.residual)
    np.save(args.output, traj)
    meta = extras.get("dataset", {})
    nu = args.nu if args.nu is not None else (meta.get("nu") if meta.get("problem") in ("heat", "heat2d") else None)
    dt = args.dt if args.dt is not None else (meta.get("t") if meta.get("problem") in ("heat", "heat2d") else None)
    lengths = extras.get("domain_length", [2 * np.pi] * cfg.ndim)
    grid = GridSpec(u0.shape[1:], tuple(lengths[: cfg.ndim]))
    header = ["step", "norm"]
    rows = []
    errors = []
    for k, state in enumerate(traj):
        row = [k, float(np.linalg.norm(state))]
        if nu is not None and dt is not None:
            exact = heat_operator_exact(u0, nu, k * dt, grid)
            denom = np.linalg.norm(exact)
            err = float(np.linalg.norm(state - exact) / denom) if denom > 0 else float(np.linalg.norm(state - exact))
            row.append(err)
            errors.append(err)
        rows.append(row)
    if errors:
        header.append("rel_l2_vs_exact")
    write_csv(args.errors or _sidecar(args.output, ".errors.csv"), header, rows, invocation)
    print(f"trajectory {traj.shape} -> {args.output}")
    if errors:
        monotone = bool(np.all(np.diff(errors) >= 0))
        print(f"final rel_l2_vs_exact={errors[-1]:.6g} monotone={monotone}")
    return 0


def _shell_power(fields: np.ndarray, ndim: int) -> np.ndarray:
    """Mean power |X_k|^2 / N per max-norm shell |k|_inf, averaged over samples and channels."""
    axes = tuple(range(fields.ndim - ndim, fields.ndim))
    n = fields.shape[-1]
    power = np.abs(fftn(fields, axes)) ** 2 / np.prod([fields.shape[a] for a in axes])
    power = power.reshape((-1,) + power.shape[-ndim:]).mean(axis=0)
    shell = np.zeros(power.shape, dtype=int)
    for j in range(ndim):
        view = [1] * ndim
        view[j] = power.shape[j]
        shell = np.maximum(shell, np.abs(mode_indices(power.shape[j])).reshape(view))
    return np.bincount(shell.ravel(), weights=power.ravel(), minlength=n // 2 + 1)


def _recommended_modes(fields: np.ndarray, ndim: int, share: float) -> list[int]:
    """Smallest centered mode count per axis whose marginal energy reaches ``share``."""
    axes = tuple(range(fields.ndim - ndim, fields.ndim))
    power = np.abs(fftn(fields, axes)) ** 2
    out = []
    for j, a in enumerate(axes):
        others = tuple(b for b in range(fields.ndim) if b != a)
        marginal = power.sum(axis=others)
        n = marginal.size
        centered = np.roll(marginal, n // 2)
        ordered = centered[activation_order(n)]
        k = 1
        while k < n and explained_ratio(ordered, k) < share:
            k += 1
        out.append(k)
    return out


def _foldback_estimate(power: np.ndarray, n: int) -> float:
    """Energy share a power law fitted to modes 1..n/4 would place beyond n/2."""
    k = np.arange(1, max(n // 4, 2) + 1)
    p = power[k]
    keep = p > 0
    if keep.sum() < 2:
        return 0.0
    slope, offset = np.polyfit(np.log(k[keep]), np.log(p[keep]), 1)
    beyond = np.arange(n // 2 + 1, 64 * n)
    tail = np.exp(offset) * np.sum(beyond.astype(float) ** slope)
    return float(tail / (power.sum() + tail))


def cmd_diagnose(args, invocation: str) -> int:
    ds = read_dataset(args.data)
    if ds.count == 0:
        raise ValueError(f"{args.data} holds no samples")
    ndim = ds.grid.ndim
    n = ds.grid.resolution[0]
    p_in = _shell_power(ds.inputs, ndim)
    p_out = _shell_power(ds.outputs, ndim)
    rows = [[k, p_in[k], p_out[k]] for k in range(len(p_in))]
    write_csv(args.output, ["mode", "input_power", "output_power"], rows, invocation)
    k_in = _recommended_modes(ds.inputs, ndim, args.energy)
    k_out = _recommended_modes(ds.outputs, ndim, args.energy)
    recommended = [max(a, b) for a, b in zip(k_in, k_out)]
    declared = ds.metadata.get("k_max")
    strategy = ds.metadata.get("downsample")
    total = p_in.sum() + p_out.sum()
    combined = p_in + p_out
    if declared is not None and 2 * int(declared) < n:
        cutoff = int(declared)
    else:
        cutoff = (3 * n) // 8
    tail = combined[cutoff + 1:].sum() / total if total > 0 else 0.0
    estimate = _foldback_estimate(combined, n)
    if declared is not None and 2 * int(declared) >= n:
        # the generating band does not fit this grid; only ideal low-pass coarsening avoids fold-back
        aliasing = strategy not in ("spectral", "lowpass-stride")
    else:
        aliasing = bool(tail > args.tail_tol)
    nyquist = validate_nyquist(recommended, ds.grid)
    report = [
        ["recommended_n_modes", ",".join(map(str, recommended))],
        ["energy_share", args.energy],
        ["tail_cutoff_mode", cutoff],
        ["tail_energy_fraction", float(tail)],
        ["foldback_energy_estimate", float(estimate) if aliasing else 0.0],
        ["aliasing_flag", int(aliasing)],
        ["nyquist_clean", int(nyquist.clean)],
    ]
    if declared is not None:
        report.append(["declared_k_max", int(declared)])
        report.append(["declared_band_fits_grid", int(2 * int(declared) < n)])
    write_csv(args.report or _sidecar(args.output, ".report.csv"), ["key", "value"], report, invocation)
    for key, value in report:
        print(f"{key}={value}")
    if aliasing:
        print(f"flag: data likely aliased; estimated fold-back energy fraction {estimate:.3e}")
    return 0


def _demo_signal(n: int):
    h = 1.0 / n
    x = np.arange(n) * h
    return np.exp(-x) + np.sin(3 * x), -np.exp(-x) + 3 * np.cos(3 * x), h


def cmd_extend(args, invocation: str) -> int:
    if args.input:
        f = np.asarray(load_field(args.input), dtype=float).reshape(-1)
        h = args.spacing or 1.0 / f.size
        reference = np.asarray(load_field(args.reference), dtype=float).reshape(-1) if args.reference else None
    else:
        f, reference, h = _demo_signal(args.n)
        h = args.spacing or h
    n = f.size
    rows = []
    if args.method == "none":
        op = None
        extended = f.copy()
        rows.append(["seam_jump", seam_jump(f, 0, 0)])
    else:
        method = ExtensionMethod(args.method)
        op = build_extension(method, args.d, args.c, n, args.s)
        extended = extend_1d(f, op)
        order = 2 * args.d - 1 if method in (ExtensionMethod.FC_LEGENDRE, ExtensionMethod.FC_GRAM) else 0
        half = args.c // 2
        scale = max(float(np.ptp(f)), 1e-300)
        rows.append(["seam_jump", seam_jump(extended, 0, order)])
        rows.append(["seam_jump_relative", seam_jump(extended, 0, order) / scale])
        rows.append(["seam_order", order])
        rows.append(["left_seam_jump", seam_jump(extended, half, 0)])
        rows.append(["right_seam_jump", seam_jump(extended, half + n, 0)])
        if method is ExtensionMethod.FC_LEGENDRE:
            rows.append(["condition_number", op.condition_number])
    np.save(args.output, extended)
    if args.compare:
        if reference is None:
            raise ValueError("--compare with --input needs --reference derivative samples")
        err = float(np.max(np.abs(extended_derivative(f, h, op) - reference)))
        base = float(np.max(np.abs(extended_derivative(f, h, None) - reference)))
        rows.append(["max_derivative_error", err])
        rows.append(["none_max_derivative_error", base])
        rows.append(["error_ratio_vs_none", base / err if err > 0 else float("inf")])
        if args.method != "zero":
            zero = build_extension(ExtensionMethod.ZERO_PAD, args.d, args.c, n)
            zerr = float(np.max(np.abs(extended_derivative(f, h, zero) - reference)))
            rows.append(["zero_max_derivative_error", zerr])
            rows.append(["error_ratio_vs_zero", zerr / err if err > 0 else float("inf")])
    write_csv(args.metrics or _sidecar(args.output, ".metrics.csv"), ["metric", "value"], rows, invocation)
    for name, value in rows:
        print(f"{name}={value}")
    return 0


def cmd_report(args, invocation: str) -> int:
    header, rows = read_csv(args.history)
    if not rows:
        raise ValueError(f"{args.history} has no data rows")
    x_name = args.x or header[0]
    if x_name not in header:
        raise ValueError(f"column {x_name!r} not in {args.history}")
    table = {name: [] for name in header}
    for row in rows:
        for name, cell in zip(header, row):
            table[name].append(cell)

    def numeric(name):
        try:
            return np.array([float(v) for v in table[name]])
        except ValueError:
            return None

    x = numeric(x_name)
    if x is None:
        x = np.arange(len(rows), dtype=float)
    wanted = [c.strip() for c in args.columns.split(",")] if args.columns else [h for h in header if h != x_name]
    series = {}
    for name in wanted:
        if name not in table:
            raise ValueError(f"column {name!r} not in {args.history}")
        y = numeric(name)
        if y is not None:
            series[name] = (x, y)
    if not series:
        raise ValueError("no numeric columns to plot")
    svg = line_plot(series, args.title or Path(args.history).name, args.log, x_name, "value")
    Path(args.output).write_text(svg)
    print(f"wrote {len(series)} series to {args.output}")
    return 0
