"""Assembly of the full generative model: one parameter store feeding the
context encoder, the atom-type flow, and the coordinate flow.

The type flow models a dequantized one-hot over the element vocabulary,
conditioned on the context readout at the focal atom; the coordinate flow
models the 3-D offset from the focal atom, additionally conditioned on the
chosen element.  Checkpoints carry the hyperparameters needed to rebuild the
model without the original configuration file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chem import ElementKind, Vocabulary
from .encoder import Encoder, EncoderConfig, aggregate_readout
from .flows import FlowStack
from .geometry import RbfBank
from .params import CheckpointError, ParamStore, load_checkpoint, save_checkpoint


@dataclass(frozen=True)
class ModelConfig:
    vocab: Vocabulary = field(default_factory=Vocabulary.default)
    rbf_centers: int = 16
    rbf_rmax: float = 8.0
    embed_width: int = 32
    hidden_width: int = 64
    encoder_layers: int = 2
    graph_cutoff: float = 6.0
    bfactor_gating: bool = False
    type_flow_layers: int = 6
    coord_flow_layers: int = 6
    scale_floor: float = 1e-4

    def bank(self) -> RbfBank:
        return RbfBank.default(self.rbf_centers, self.rbf_rmax)

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            embed_width=self.embed_width,
            hidden_width=self.hidden_width,
            n_layers=self.encoder_layers,
            bfactor_gating=self.bfactor_gating,
        )


class Model:
    """Encoder plus type/coordinate flows over a shared flat parameter store."""

    def __init__(self, cfg: ModelConfig, store: ParamStore | None = None):
        self.cfg = cfg
        v = len(cfg.vocab)
        cond_width = 2 * cfg.embed_width
        sections = dict(Encoder.sections(cfg.encoder_config(), v, cfg.rbf_centers))
        sections.update(FlowStack.sections("typeflow", cfg.type_flow_layers, v, cond_width))
        sections.update(
            FlowStack.sections("coordflow", cfg.coord_flow_layers, 3, cond_width + v)
        )
        self.store = store if store is not None else ParamStore(sections)
        if self.store.shapes != sections:
            raise ValueError("parameter store does not match the model configuration")
        self.encoder = Encoder(cfg.encoder_config(), v, cfg.bank(), self.store)
        self.type_flow = FlowStack(
            self.store, "typeflow", cfg.type_flow_layers, v, cond_width, cfg.scale_floor
        )
        self.coord_flow = FlowStack(
            self.store,
            "coordflow",
            cfg.coord_flow_layers,
            3,
            cond_width + v,
            cfg.scale_floor,
        )

    @classmethod
    def initialized(cls, cfg: ModelConfig, rng: np.random.Generator) -> "Model":
        model = cls(cfg)
        model.encoder.init(rng)
        model.type_flow.init(rng)
        model.coord_flow.init(rng)
        return model

    @property
    def n_params(self) -> int:
        return self.store.size

    def zero_grads(self) -> ParamStore:
        return self.store.zeros_like()

    def condition(self, embeddings: np.ndarray, focal: int) -> np.ndarray:
        return aggregate_readout(embeddings, focal)

    def one_hot(self, element: int) -> np.ndarray:
        v = np.zeros(len(self.cfg.vocab))
        v[element] = 1.0
        return v

    # -- checkpointing ------------------------------------------------------

    def meta(self) -> dict[str, str]:
        cfg = self.cfg
        vocab_txt = ",".join(
            f"{e.symbol}:{e.atomic_number}:{e.covalent_radius!r}:{e.max_valence}"
            for e in cfg.vocab.elements
        )
        return {
            "vocab": vocab_txt,
            "rbf_centers": str(cfg.rbf_centers),
            "rbf_rmax": repr(cfg.rbf_rmax),
            "embed_width": str(cfg.embed_width),
            "hidden_width": str(cfg.hidden_width),
            "encoder_layers": str(cfg.encoder_layers),
            "graph_cutoff": repr(cfg.graph_cutoff),
            "bfactor_gating": str(int(cfg.bfactor_gating)),
            "type_flow_layers": str(cfg.type_flow_layers),
            "coord_flow_layers": str(cfg.coord_flow_layers),
            "scale_floor": repr(cfg.scale_floor),
        }

    def save(self, path: str | Path) -> None:
        save_checkpoint(path, self.store, self.meta())

    @classmethod
    def load(cls, path: str | Path) -> "Model":
        store, meta = load_checkpoint(path)
        try:
            elements = []
            for item in meta["vocab"].split(","):
                sym, z, radius, valence = item.split(":")
                elements.append(ElementKind(sym, int(z), float(radius), int(valence)))
            cfg = ModelConfig(
                vocab=Vocabulary(elements),
                rbf_centers=int(meta["rbf_centers"]),
                rbf_rmax=float(meta["rbf_rmax"]),
                embed_width=int(meta["embed_width"]),
                hidden_width=int(meta["hidden_width"]),
                encoder_layers=int(meta["encoder_layers"]),
                graph_cutoff=float(meta["graph_cutoff"]),
                bfactor_gating=bool(int(meta["bfactor_gating"])),
                type_flow_layers=int(meta["type_flow_layers"]),
                coord_flow_layers=int(meta["coord_flow_layers"]),
                scale_floor=float(meta["scale_floor"]),
            )
        except (KeyError, ValueError) as exc:
            raise CheckpointError(f"{path}: incomplete model metadata ({exc})") from exc
        return cls(cfg, store)
