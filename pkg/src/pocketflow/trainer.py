"""Trajectory construction and exact maximum-likelihood training.

Each complex is unrolled into one autoregressive trajectory: ligand atoms
enter in nearest-first order (first the atom closest to the pocket centroid,
then whichever unplaced atom lies closest to an already placed one), and each
step records the context snapshot, the focal atom (context atom nearest the
target), the dequantized one-hot of the target element, and the target
coordinate as a focal-relative offset.

The loss is the mean per-step negative log-likelihood under the type and
coordinate flows; gradients are exact reverse-mode derivatives assembled from
the flow and encoder backward passes, and the optimizer is plain SGD.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoder import ContextGraph, aggregate_readout, build_graph, readout_backward
from .model import Model, ModelConfig
from .params import ParamStore
from .pdb import ComplexEntry

DEFAULT_DEQUANT_ALPHA = 0.25


class NumericError(ArithmeticError):
    """Loss or gradient became non-finite."""


class TrainingDiverged(RuntimeError):
    """Loss exceeded the divergence bound; carries the partial history."""

    def __init__(self, epoch: int, loss: float, history: list[float]):
        self.history = history
        super().__init__(f"training diverged at epoch {epoch}: loss={loss:.6g}")


@dataclass
class TrajectoryStep:
    """One autoregressive target with its conditioning context."""

    graph: ContextGraph  # context snapshot before this atom is placed
    focal: int  # graph node index
    target_type: np.ndarray  # dequantized one-hot, width V
    target_offset: np.ndarray  # target position minus focal position

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.target_offset)):
            raise ValueError("non-finite target offset")


@dataclass
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 1e-3
    batch_size: int = 0  # 0 = full batch
    seed: int = 0
    dequant_alpha: float = DEFAULT_DEQUANT_ALPHA
    divergence_bound: float = 1e6

    def __post_init__(self) -> None:
        # rate 0 is allowed: it freezes the parameters, useful for smoke tests
        if self.learning_rate < 0:
            raise ValueError("learning rate must be non-negative")
        if not 0.0 < self.dequant_alpha <= 0.5:
            raise ValueError("dequantization scale must lie in (0, 0.5]")


def sequentialize(
    entry: ComplexEntry,
    rng: np.random.Generator,
    cfg: ModelConfig,
    alpha: float = DEFAULT_DEQUANT_ALPHA,
) -> list[TrajectoryStep]:
    """Unroll one complex into per-atom training steps (nearest-first order)."""
    n = len(entry.ligand)
    if n == 0:
        raise ValueError("empty ligand")
    lig_pos = entry.ligand.positions
    centroid = entry.pocket.centroid()

    order = [int(np.argmin(np.linalg.norm(lig_pos - centroid, axis=1)))]
    remaining = [i for i in range(n) if i != order[0]]
    while remaining:
        placed_pos = lig_pos[order]
        dmin = [
            float(np.min(np.linalg.norm(placed_pos - lig_pos[j], axis=1)))
            for j in remaining
        ]
        order.append(remaining.pop(int(np.argmin(dmin))))

    v = len(cfg.vocab)
    steps: list[TrajectoryStep] = []
    placed = []
    for idx in order:
        graph = build_graph(entry.pocket, placed, cutoff=cfg.graph_cutoff)
        target_pos = lig_pos[idx]
        focal = int(np.argmin(np.linalg.norm(graph.positions - target_pos, axis=1)))
        target_type = np.zeros(v)
        target_type[entry.ligand.atoms[idx].element] = 1.0
        target_type += rng.uniform(0.0, alpha, size=v)
        steps.append(
            TrajectoryStep(
                graph=graph,
                focal=focal,
                target_type=target_type,
                target_offset=target_pos - graph.positions[focal],
            )
        )
        placed.append(entry.ligand.atoms[idx])
    return steps


def _step_nll(model: Model, step: TrajectoryStep) -> float:
    h = model.encoder.encode(step.graph)
    cond = aggregate_readout(h, step.focal)
    a_t = int(np.argmax(step.target_type))
    cond_coord = np.concatenate([cond, model.one_hot(a_t)])
    return model.type_flow.nll(step.target_type, cond) + model.coord_flow.nll(
        step.target_offset, cond_coord
    )


def nll_loss(model: Model, steps: list[TrajectoryStep]) -> float:
    """Mean per-step negative log-likelihood."""
    if not steps:
        raise ValueError("empty batch")
    total = 0.0
    for i, step in enumerate(steps):
        value = _step_nll(model, step)
        if not np.isfinite(value):
            raise NumericError(f"non-finite loss at step {i}")
        total += value
    return total / len(steps)


def _loss_and_grad(model: Model, steps: list[TrajectoryStep]) -> tuple[float, ParamStore]:
    if not steps:
        raise ValueError("empty batch")
    grads = model.zero_grads()
    width = 2 * model.cfg.embed_width
    total = 0.0
    for i, step in enumerate(steps):
        h, cache = model.encoder.encode_with_cache(step.graph)
        cond = aggregate_readout(h, step.focal)
        a_t = int(np.argmax(step.target_type))
        cond_coord = np.concatenate([cond, model.one_hot(a_t)])
        nll_type, dcond_type = model.type_flow.nll_backward(step.target_type, cond, grads)
        nll_coord, dcond_coord = model.coord_flow.nll_backward(
            step.target_offset, cond_coord, grads
        )
        value = nll_type + nll_coord
        if not np.isfinite(value):
            raise NumericError(f"non-finite loss at step {i}")
        dcond = dcond_type + dcond_coord[:width]
        dh = readout_backward(dcond, step.graph.n_atoms, step.focal)
        model.encoder.backward(step.graph, cache, dh, grads)
        total += value
    grads.flat /= len(steps)
    if not np.all(np.isfinite(grads.flat)):
        raise NumericError("non-finite gradient")
    return total / len(steps), grads


def grad(model: Model, steps: list[TrajectoryStep]) -> ParamStore:
    """Exact gradient of :func:`nll_loss` with respect to every parameter."""
    _, grads = _loss_and_grad(model, steps)
    return grads


def build_steps(
    dataset: list[ComplexEntry],
    rng: np.random.Generator,
    cfg: ModelConfig,
    alpha: float = DEFAULT_DEQUANT_ALPHA,
) -> list[TrajectoryStep]:
    steps: list[TrajectoryStep] = []
    for entry in dataset:
        steps.extend(sequentialize(entry, rng, cfg, alpha))
    return steps


@dataclass
class TrainResult:
    model: Model
    history: list[float] = field(default_factory=list)

    @property
    def final_nll(self) -> float:
        return self.history[-1] if self.history else float("nan")


def train(
    dataset: list[ComplexEntry],
    model_cfg: ModelConfig,
    cfg: TrainConfig,
) -> TrainResult:
    """Fit encoder and flows by full-batch (or mini-batch) SGD.

    The recorded per-epoch loss is evaluated before that epoch's update, so
    ``history[0]`` is the loss of the freshly initialized model.  Entirely
    deterministic for a fixed seed.
    """
    if not dataset:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    model = Model.initialized(model_cfg, rng)
    steps = build_steps(dataset, rng, model_cfg, cfg.dequant_alpha)

    history: list[float] = []
    n = len(steps)
    for epoch in range(cfg.epochs):
        if cfg.batch_size <= 0 or cfg.batch_size >= n:
            loss, grads = _loss_and_grad(model, steps)
            model.store.flat -= cfg.learning_rate * grads.flat
        else:
            perm = rng.permutation(n)
            weighted = 0.0
            for start in range(0, n, cfg.batch_size):
                batch = [steps[i] for i in perm[start : start + cfg.batch_size]]
                batch_loss, grads = _loss_and_grad(model, batch)
                weighted += batch_loss * len(batch)
                model.store.flat -= cfg.learning_rate * grads.flat
            loss = weighted / n
        history.append(loss)
        if loss > cfg.divergence_bound:
            raise TrainingDiverged(epoch, loss, history)
    return TrainResult(model=model, history=history)
