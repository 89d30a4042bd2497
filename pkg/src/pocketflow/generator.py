"""Autoregressive ligand generation inside a pocket.

Atoms are placed one at a time: pick a focal context atom, sample an element
from the type flow and a focal-relative offset from the coordinate flow (both
conditioned on the encoded context), then update bonds and open valences.
Placements that clash with any context atom are resampled a bounded number of
times.  Generation stops when no focal atom with open valence remains, the
atom budget is reached, or resampling is exhausted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chem import (
    DEFAULT_BOND_TOLERANCE,
    DEFAULT_CLASH_FACTOR,
    Atom,
    Bond,
    Molecule,
    Pocket,
    infer_bonds,
    open_valence,
)
from .encoder import aggregate_readout, build_graph
from .model import Model


FOCAL_RULES = ("nearest_centroid",)


@dataclass
class GenConfig:
    max_atoms: int = 24
    valence_constrained: bool = True
    clash_retries: int = 10
    clash_factor: float = DEFAULT_CLASH_FACTOR
    bond_tolerance: float = DEFAULT_BOND_TOLERANCE
    # anchor-selection policy; a single rule exists today, but the choice is
    # a modeling decision and stays visible in the configuration
    focal_rule: str = "nearest_centroid"

    def __post_init__(self) -> None:
        if self.max_atoms < 1:
            raise ValueError("max_atoms must be >= 1")
        if self.focal_rule not in FOCAL_RULES:
            raise ValueError(f"unknown focal rule {self.focal_rule!r}")


@dataclass
class GenerationState:
    """Pocket plus the molecule grown so far, with open-valence bookkeeping."""

    pocket: Pocket
    placed: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)
    open_valences: list[int] = field(default_factory=list)

    @property
    def t(self) -> int:
        return len(self.placed)

    def molecule(self) -> Molecule:
        return Molecule(list(self.placed), list(self.bonds))


def select_focal(state: GenerationState) -> int | None:
    """Context index of the next growth anchor, or None to stop.

    Step 0 anchors on the pocket atom nearest the pocket centroid; later
    steps anchor on the placed atom with remaining valence nearest the pocket
    centroid (ties resolved toward the lowest atom index).  Context indices
    count pocket atoms first, then placed atoms in placement order.
    """
    centroid = state.pocket.centroid()
    if state.t == 0:
        d = np.linalg.norm(state.pocket.positions - centroid, axis=1)
        return int(np.argmin(d))
    candidates = [i for i, ov in enumerate(state.open_valences) if ov > 0]
    if not candidates:
        return None
    d = [float(np.linalg.norm(state.placed[i].position - centroid)) for i in candidates]
    return len(state.pocket) + candidates[int(np.argmin(d))]


def _context_condition(model: Model, state: GenerationState, focal: int) -> np.ndarray:
    graph = build_graph(state.pocket, state.placed, cutoff=model.cfg.graph_cutoff)
    return aggregate_readout(model.encoder.encode(graph), focal)


def _focal_position(state: GenerationState, focal: int) -> np.ndarray:
    m = len(state.pocket)
    return (
        state.pocket.atoms[focal].position
        if focal < m
        else state.placed[focal - m].position
    )


def _valence_mask(state: GenerationState, model: Model) -> np.ndarray | None:
    """Mask single-valence elements when only one open slot remains."""
    if state.t == 0:
        return None
    total_open = sum(max(v, 0) for v in state.open_valences)
    if total_open != 1:
        return None
    mask = model.cfg.vocab.max_valences == 1
    return mask if not mask.all() else None


def generate_type(
    model: Model,
    state: GenerationState,
    focal: int,
    rng: np.random.Generator,
    valence_constrained: bool = True,
    cond: np.ndarray | None = None,
) -> int:
    """Sample an element index through the type flow, argmax-decoded."""
    if cond is None:
        cond = _context_condition(model, state, focal)
    z = rng.standard_normal(model.type_flow.event_dim)
    x, _ = model.type_flow.forward(z, cond)
    if valence_constrained:
        mask = _valence_mask(state, model)
        if mask is not None:
            x = np.where(mask, -np.inf, x)
    return int(np.argmax(x))


def generate_coord(
    model: Model,
    state: GenerationState,
    focal: int,
    element: int,
    rng: np.random.Generator,
    cond: np.ndarray | None = None,
) -> np.ndarray:
    """Sample the new atom position as a flow offset from the focal atom."""
    if cond is None:
        cond = _context_condition(model, state, focal)
    z = rng.standard_normal(3)
    offset, _ = model.coord_flow.forward(z, np.concatenate([cond, model.one_hot(element)]))
    return _focal_position(state, focal) + offset


def _clashes(
    state: GenerationState,
    element: int,
    position: np.ndarray,
    model: Model,
    clash_factor: float,
) -> bool:
    vocab = model.cfg.vocab
    r_new = vocab.radii[element]
    ctx_pos = (
        np.vstack([state.pocket.positions, np.stack([a.position for a in state.placed])])
        if state.placed
        else state.pocket.positions
    )
    ctx_elem = np.concatenate([state.pocket.elements, [a.element for a in state.placed]]).astype(int)
    d = np.linalg.norm(ctx_pos - position, axis=1)
    return bool(np.any(d < clash_factor * (vocab.radii[ctx_elem] + r_new)))


def step(
    model: Model,
    state: GenerationState,
    rng: np.random.Generator,
    cfg: GenConfig,
) -> bool:
    """Attempt to place one atom; returns True when generation is finished.

    A candidate is rejected and resampled when it clashes with any context
    atom or, under valence-constrained sampling, when the bonds it would
    form drive the placed set's total open valence negative.
    """
    if state.t >= cfg.max_atoms:
        return True
    focal = select_focal(state)
    if focal is None:
        return True
    vocab = model.cfg.vocab
    cond = _context_condition(model, state, focal)
    for _ in range(1 + cfg.clash_retries):
        element = generate_type(model, state, focal, rng, cfg.valence_constrained, cond)
        position = generate_coord(model, state, focal, element, rng, cond)
        if _clashes(state, element, position, model, cfg.clash_factor):
            continue
        candidate = state.placed + [Atom(element, position)]
        bonds = infer_bonds(candidate, vocab, cfg.bond_tolerance, cfg.clash_factor)
        if cfg.valence_constrained:
            capacity = int(sum(vocab.max_valences[a.element] for a in candidate))
            if capacity - 2 * len(bonds) < 0:
                continue
        state.placed = candidate
        state.bonds = bonds
        mol = state.molecule()
        state.open_valences = [open_valence(mol, i, vocab) for i in range(state.t)]
        return state.t >= cfg.max_atoms
    return True  # resampling exhausted


def generate_ligand(
    model: Model,
    pocket: Pocket,
    cfg: GenConfig,
    rng: np.random.Generator,
) -> Molecule:
    """Grow a ligand until saturation, budget, or resampling failure.

    Fully deterministic given (model parameters, pocket, generator state of
    ``rng``).  Validity is *not* enforced here; score the result with the
    evaluator.
    """
    if len(pocket) == 0:
        raise ValueError("empty pocket")
    state = GenerationState(pocket=pocket)
    while not step(model, state, rng, cfg):
        pass
    return state.molecule()
