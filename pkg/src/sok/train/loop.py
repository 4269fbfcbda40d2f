"""Training, evaluation, rollout and physics fine-tuning."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .. import autodiff as ad
from ..data.dataset import DatasetFile, Normalizer
from ..data.downsample import spectral_downsample
from ..fno.model import FNO
from ..tensor_core import GridSpec
from .balancers import BalancerState
from .ifno import IfnoCriterion, IfnoSchedule, ifno_should_expand, model_mode_energies
from .losses import LossSpec, relative_h1, relative_l2
from .optim import Optimizer, OptimizerConfig, learning_rate
from .physics import physics_residual_poisson

__all__ = [
    "TrainConfig",
    "TrainResult",
    "predict",
    "loss_terms",
    "evaluate",
    "train",
    "rollout",
    "FinetuneResult",
    "finetune_anchor",
]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 20
    seed: int = 0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)


@dataclass
class TrainResult:
    params: dict
    history: list[dict]
    n_modes: tuple[int, ...]
    loss_names: list[str]

    def columns(self) -> list[str]:
        return list(self.history[0]) if self.history else ["epoch"]

    def write_csv(self, path, invocation: str = "") -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.columns())
            writer.writeheader()
            for row in self.history:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
            fh.write(f"# invocation: {invocation}\n")


def predict(model: FNO, params: dict, inputs, in_stats: Normalizer, out_stats: Normalizer, n_modes=None):
    """Model output in physical units: decode(model(encode(inputs)))."""
    return out_stats.denormalize(model(in_stats.normalize(inputs), params, n_modes))


def loss_terms(pred, target, losses: Sequence[LossSpec], grid: GridSpec, reduce: str = "mean") -> list:
    return [spec.evaluate(pred, target, grid, batched=True, reduce=reduce) for spec in losses]


def _batches(count: int, size: int, order: np.ndarray | None = None):
    order = np.arange(count) if order is None else order
    for start in range(0, count, size):
        yield order[start:start + size]


def evaluate(
    model: FNO,
    params: dict,
    dataset: DatasetFile,
    losses: Sequence[LossSpec] = (LossSpec(),),
    n_modes=None,
    batch_size: int = 50,
    in_stats: Normalizer | None = None,
    out_stats: Normalizer | None = None,
) -> dict:
    """Per-sample relative L2 / H1 errors and mean loss terms over a dataset."""
    if dataset.count == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    in_stats = dataset.input_stats if in_stats is None else in_stats
    out_stats = dataset.output_stats if out_stats is None else out_stats
    preds, per_term = [], [[] for _ in losses]
    for idx in _batches(dataset.count, batch_size):
        pred = predict(model, params, dataset.inputs[idx], in_stats, out_stats, n_modes)
        preds.append(pred)
        for store, value in zip(per_term, loss_terms(pred, dataset.outputs[idx], losses, dataset.grid, "none")):
            store.append(np.atleast_1d(value))
    pred = np.concatenate(preds)
    per_term = [np.concatenate(v) for v in per_term]
    rel_l2 = relative_l2(pred, dataset.outputs)
    rel_h1 = relative_h1(pred, dataset.outputs, dataset.grid)
    return {
        "prediction": pred,
        "rel_l2": rel_l2,
        "rel_h1": rel_h1,
        "loss_per_sample": per_term,
        "loss": [float(np.mean(v)) for v in per_term],
    }


def _coarsen(dataset: DatasetFile, n: int) -> DatasetFile:
    if dataset.grid.resolution[0] == n:
        return dataset
    res = (n,) * dataset.grid.ndim
    return DatasetFile(
        spectral_downsample(dataset.inputs, res),
        spectral_downsample(dataset.outputs, res),
        dataset.grid.with_resolution(res),
        dataset.input_stats,
        dataset.output_stats,
        dataset.metadata,
    )


def train(
    model: FNO,
    dataset: DatasetFile,
    losses: Sequence[LossSpec] = (LossSpec(),),
    config: TrainConfig = TrainConfig(),
    balancer: BalancerState | None = None,
    schedule: IfnoSchedule | None = None,
    validation: DatasetFile | None = None,
    callback: Callable[[dict], None] | None = None,
) -> TrainResult:
    """Minibatch training in physical units with normalized model inputs and outputs.

    Each history row holds, after the epoch's updates, the full-pass mean of
    every loss term on the training set (``train_<kind>``), the weights used
    during the epoch, the active modes per axis and the learning rate.
    Normalization statistics come from ``dataset`` and are reused for
    ``validation``.
    """
    if dataset.count == 0:
        raise ValueError("cannot train on an empty dataset")
    losses = list(losses)
    if not losses:
        raise ValueError("need at least one loss term")
    rng = np.random.default_rng(config.seed)
    opt = Optimizer(config.optimizer)
    balancer = balancer or BalancerState(n_terms=len(losses))
    if balancer.n_terms != len(losses):
        raise ValueError("balancer and loss list disagree on the number of terms")
    cfg = model.config
    if schedule is not None:
        if len(schedule.current) != cfg.ndim:
            schedule.current = schedule.current * cfg.ndim
        if any(m > k for m, k in zip(schedule.max_modes, cfg.max_n_modes)):
            raise ValueError(f"schedule caps {schedule.max_modes} exceed the model's max_n_modes {cfg.max_n_modes}")
    n_modes = tuple(schedule.current) if schedule else tuple(model.n_modes)
    names = [f"train_{spec.name}" if [s.name for s in losses].count(spec.name) == 1 else f"train_{spec.name}_{i}"
             for i, spec in enumerate(losses)]
    in_stats, out_stats = dataset.input_stats, dataset.output_stats
    params = {k: v.copy() for k, v in model.params.items()}
    history: list[dict] = []
    stagnation_track: list[float] = []
    full = dataset.grid.resolution[0]
    for epoch in range(config.epochs):
        lr = learning_rate(config.optimizer, epoch)
        weights = balancer.weights.copy()
        data = _coarsen(dataset, schedule.resolution_for(full)) if schedule and schedule.resolution_ladder else dataset
        order = rng.permutation(data.count)
        for idx in _batches(data.count, config.batch_size, order):
            tape = ad.Tape()
            watched = {k: tape.watch(v) for k, v in params.items()}
            pred = predict(model, watched, data.inputs[idx], in_stats, out_stats, n_modes)
            terms = loss_terms(pred, data.outputs[idx], losses, data.grid)
            total = terms[0] * weights[0]
            for w, term in zip(weights[1:], terms[1:]):
                total = total + term * w
            keys = list(params)
            grads = dict(zip(keys, tape.gradient(total, [watched[k] for k in keys])))
            params = opt.step(params, grads, lr)
        report = evaluate(model, params, dataset, losses, n_modes, config.batch_size, in_stats, out_stats)
        row = {"epoch": epoch}
        for name, value in zip(names, report["loss"]):
            row[name] = value
        row["train_total"] = float(np.dot(weights, report["loss"]))
        for i, w in enumerate(weights):
            row[f"lambda_{i}"] = float(w)
        for j, k in enumerate(n_modes):
            row[f"modes_axis{j}"] = int(k)
        row["lr"] = float(lr)
        if validation is not None and validation.count:
            val = evaluate(model, params, validation, losses, n_modes, config.batch_size, in_stats, out_stats)
            row["val_rel_l2"] = float(np.mean(val["rel_l2"]))
        history.append(row)
        balancer.update(report["loss"], rng)
        stagnation_track.append(row["train_total"])
        if schedule is not None and (epoch + 1) % schedule.check_every == 0:
            if schedule.criterion is IfnoCriterion.EXPLAINED_RATIO:
                decision = ifno_should_expand(schedule, model_mode_energies(params, cfg, n_modes))
            else:
                decision = ifno_should_expand(schedule, loss_history=stagnation_track)
            if decision.expand:
                schedule.current = decision.new_modes
                n_modes = decision.new_modes
                stagnation_track = []
        if callback is not None:
            callback(row)
    return TrainResult(params, history, n_modes, names)


def rollout(step: Callable[[np.ndarray], np.ndarray], u0, n_steps: int, residual: bool = False) -> np.ndarray:
    """Apply ``step`` to its own output; returns the ``n_steps + 1`` states.

    In residual mode the step predicts an increment that is added to the state.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    state = np.asarray(u0)
    states = [state.copy()]
    for _ in range(n_steps):
        out = np.asarray(step(state))
        state = state + out if residual else out
        states.append(state.copy())
    return np.stack(states)


@dataclass
class FinetuneResult:
    params: dict
    residuals: list[float]
    anchors: list[float]


def finetune_anchor(
    model: FNO,
    params: dict,
    inputs,
    rhs,
    grid: GridSpec,
    anchor_weight: float = 0.0,
    steps: int = 200,
    lr: float = 1e-3,
    in_stats: Normalizer | None = None,
    out_stats: Normalizer | None = None,
    residual_fn: Callable = physics_residual_poisson,
    n_modes=None,
) -> FinetuneResult:
    """Adapt ``params`` to one instance by minimizing its PDE residual.

    The loss is residual_fn(prediction, rhs, grid) plus ``anchor_weight``
    times the integrated squared distance to the starting model's
    prediction. ``residuals[i]`` is the residual before step ``i``, with a
    final entry after the last step.
    """
    inputs = np.asarray(inputs, dtype=float)
    in_stats = in_stats or Normalizer.identity(inputs.shape[1])
    out_stats = out_stats or Normalizer.identity(model.config.out_channels)
    reference = predict(model, params, inputs, in_stats, out_stats, n_modes)
    dq = grid.cell_volume
    spatial = tuple(range(2, inputs.ndim))
    opt = Optimizer(OptimizerConfig(lr=lr))
    current = {k: v.copy() for k, v in params.items()}
    residuals, anchors = [], []
    for _ in range(steps + 1):
        tape = ad.Tape()
        watched = {k: tape.watch(v) for k, v in current.items()}
        pred = predict(model, watched, inputs, in_stats, out_stats, n_modes)
        res = residual_fn(pred, rhs, grid)
        gap = ad.mean(ad.mul(ad.sum(ad.abs2(ad.sub(pred, reference)), spatial), dq))
        residuals.append(float(ad.value_of(res)))
        anchors.append(float(ad.value_of(gap)))
        if len(residuals) == steps + 1:
            break
        total = ad.add(res, ad.mul(gap, anchor_weight)) if anchor_weight else res
        keys = list(current)
        grads = dict(zip(keys, tape.gradient(total, [watched[k] for k in keys])))
        current = opt.step(current, grads)
    return FinetuneResult(current, residuals, anchors)
