"""Distance-graph message passing over the protein pocket plus placed ligand atoms.

Nodes carry an element index and an origin flag (protein or ligand); edges
connect every atom pair within a distance cutoff.  Each layer updates node
embeddings with

    h_k <- h_k + sum_{u in N(k)} gamma_uk * h_u * MLP_l(rbf(d_uk))

where the MLP maps the RBF-expanded edge distance to an elementwise message
weight, and ``gamma_uk = 1 + g_l * w_u`` optionally emphasizes flexible
(high B-factor) protein neighbors through a learnable per-layer gate ``g_l``
and the min-max-normalized B-factor ``w_u``; the gate path is off by default
and ``g_l = 0`` reproduces the ungated update exactly.

Because messages depend on positions only through pairwise distances, the
embeddings are invariant under rigid motions of the whole context.  The
module also implements the exact reverse-mode derivative of the encoding,
used by the trainer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chem import Atom, Pocket, VocabularyError
from .geometry import RbfBank, rbf_expand
from .params import ParamStore
from .pdb import normalize_bfactors

DEFAULT_GRAPH_CUTOFF = 6.0

PROTEIN, LIGAND = 0, 1


@dataclass
class ContextGraph:
    """Atoms of the conditioning context plus its distance-cutoff edge list.

    Edges are directed and stored both ways, so an undirected neighbor pair
    contributes one entry per direction.
    """

    elements: np.ndarray  # (n,) vocabulary indices
    origins: np.ndarray  # (n,) PROTEIN or LIGAND
    positions: np.ndarray  # (n, 3)
    edge_src: np.ndarray  # (E,)
    edge_dst: np.ndarray  # (E,)
    edge_dist: np.ndarray  # (E,)
    bfactor_weights: np.ndarray  # (n,) normalized; 0 for ligand atoms

    @property
    def n_atoms(self) -> int:
        return len(self.elements)

    @property
    def n_edges(self) -> int:
        return len(self.edge_src)


def build_graph(
    pocket: Pocket,
    placed: Sequence[Atom] = (),
    cutoff: float = DEFAULT_GRAPH_CUTOFF,
) -> ContextGraph:
    """Assemble the context graph for pocket atoms followed by placed atoms.

    Undirected edges link every pair (protein-protein, protein-ligand and
    ligand-ligand alike) with distance <= cutoff.
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    if len(pocket) + len(placed) == 0:
        raise ValueError("empty context")

    elements = np.concatenate([pocket.elements, [a.element for a in placed]]).astype(int)
    origins = np.concatenate(
        [np.full(len(pocket), PROTEIN), np.full(len(placed), LIGAND)]
    ).astype(int)
    positions = (
        np.vstack([pocket.positions, np.stack([a.position for a in placed])])
        if placed
        else pocket.positions.copy()
    )
    weights = np.zeros(len(elements))
    if len(pocket):
        weights[: len(pocket)] = normalize_bfactors(pocket)

    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    mask = (dist <= cutoff) & ~np.eye(len(elements), dtype=bool)
    src, dst = np.nonzero(mask)
    return ContextGraph(
        elements=elements,
        origins=origins,
        positions=positions,
        edge_src=src,
        edge_dst=dst,
        edge_dist=dist[src, dst],
        bfactor_weights=weights,
    )


@dataclass(frozen=True)
class EncoderConfig:
    embed_width: int = 32  # H
    hidden_width: int = 64
    n_layers: int = 2
    bfactor_gating: bool = False


class Encoder:
    """Message-passing encoder bound to one parameter store.

    Sections (per layer l): ``encoder.layer{l}.w1/b1/w2/b2/gate`` plus the
    ``encoder.embed`` table of shape (origin, element, H).
    """

    def __init__(
        self,
        cfg: EncoderConfig,
        vocab_size: int,
        bank: RbfBank,
        store: ParamStore,
    ):
        self.cfg = cfg
        self.vocab_size = vocab_size
        self.bank = bank
        self.store = store

    @staticmethod
    def sections(cfg: EncoderConfig, vocab_size: int, n_rbf: int) -> dict[str, tuple[int, ...]]:
        out: dict[str, tuple[int, ...]] = {
            "encoder.embed": (2, vocab_size, cfg.embed_width)
        }
        for layer in range(cfg.n_layers):
            out[f"encoder.layer{layer}.w1"] = (n_rbf, cfg.hidden_width)
            out[f"encoder.layer{layer}.b1"] = (cfg.hidden_width,)
            out[f"encoder.layer{layer}.w2"] = (cfg.hidden_width, cfg.embed_width)
            out[f"encoder.layer{layer}.b2"] = (cfg.embed_width,)
            out[f"encoder.layer{layer}.gate"] = ()
        return out

    def init(self, rng: np.random.Generator) -> None:
        """Uniform [-0.1, 0.1] embeddings and first MLP layers; the final MLP
        layers and B-factor gates start at zero so every layer begins as the
        identity map."""
        self.store.set(
            "encoder.embed",
            rng.uniform(-0.1, 0.1, size=self.store["encoder.embed"].shape),
        )
        for layer in range(self.cfg.n_layers):
            w1 = self.store[f"encoder.layer{layer}.w1"]
            w1[...] = rng.uniform(-0.1, 0.1, size=w1.shape)
            b1 = self.store[f"encoder.layer{layer}.b1"]
            b1[...] = rng.uniform(-0.1, 0.1, size=b1.shape)
            self.store[f"encoder.layer{layer}.w2"][...] = 0.0
            self.store[f"encoder.layer{layer}.b2"][...] = 0.0
            self.store[f"encoder.layer{layer}.gate"][...] = 0.0

    # -- forward ---------------------------------------------------------

    def _check_elements(self, graph: ContextGraph) -> None:
        if graph.n_atoms and (
            graph.elements.min() < 0 or graph.elements.max() >= self.vocab_size
        ):
            raise VocabularyError("graph contains element index outside the vocabulary")

    def initial_embeddings(self, graph: ContextGraph) -> np.ndarray:
        self._check_elements(graph)
        return self.store["encoder.embed"][graph.origins, graph.elements].copy()

    def edge_features(self, graph: ContextGraph) -> np.ndarray:
        return rbf_expand(graph.edge_dist, self.bank)

    def message_layer(
        self,
        h: np.ndarray,
        graph: ContextGraph,
        layer: int,
        edge_feat: np.ndarray | None = None,
        with_cache: bool = False,
    ):
        """One residual message-passing update; returns h' (and a cache)."""
        if h.shape != (graph.n_atoms, self.cfg.embed_width):
            raise ValueError(
                f"embedding shape {h.shape} does not match "
                f"({graph.n_atoms}, {self.cfg.embed_width})"
            )
        if edge_feat is None:
            edge_feat = self.edge_features(graph)
        w1 = self.store[f"encoder.layer{layer}.w1"]
        b1 = self.store[f"encoder.layer{layer}.b1"]
        w2 = self.store[f"encoder.layer{layer}.w2"]
        b2 = self.store[f"encoder.layer{layer}.b2"]

        t = np.tanh(edge_feat @ w1 + b1)  # (E, hidden)
        m = t @ w2 + b2  # (E, H)
        msg = h[graph.edge_src] * m
        gamma = None
        if self.cfg.bfactor_gating:
            gate = float(self.store[f"encoder.layer{layer}.gate"])
            protein_src = graph.origins[graph.edge_src] == PROTEIN
            gamma = np.where(
                protein_src, 1.0 + gate * graph.bfactor_weights[graph.edge_src], 1.0
            )
            msg = msg * gamma[:, None]
        h_next = h.copy()
        np.add.at(h_next, graph.edge_dst, msg)
        if with_cache:
            return h_next, {"h_in": h, "t": t, "m": m, "gamma": gamma}
        return h_next

    def encode(self, graph: ContextGraph) -> np.ndarray:
        h, _ = self.encode_with_cache(graph)
        return h

    def encode_with_cache(self, graph: ContextGraph):
        """Embed atoms then run all message layers, keeping what backward needs."""
        edge_feat = self.edge_features(graph)
        h = self.initial_embeddings(graph)
        layers = []
        for layer in range(self.cfg.n_layers):
            h, cache = self.message_layer(h, graph, layer, edge_feat, with_cache=True)
            layers.append(cache)
        return h, {"edge_feat": edge_feat, "layers": layers}

    # -- backward --------------------------------------------------------

    def backward(
        self,
        graph: ContextGraph,
        cache: dict,
        dh: np.ndarray,
        grads: ParamStore,
    ) -> None:
        """Accumulate d(loss)/d(params) into ``grads`` given d(loss)/d(h_out)."""
        edge_feat = cache["edge_feat"]
        src, dst = graph.edge_src, graph.edge_dst
        g = dh
        for layer in reversed(range(self.cfg.n_layers)):
            lc = cache["layers"][layer]
            h_in, t, m, gamma = lc["h_in"], lc["t"], lc["m"], lc["gamma"]
            w2 = self.store[f"encoder.layer{layer}.w2"]

            dmsg = g[dst]  # (E, H)
            if gamma is not None:
                msg_pre = h_in[src] * m
                dgamma = (dmsg * msg_pre).sum(axis=1)
                protein_src = graph.origins[src] == PROTEIN
                grads[f"encoder.layer{layer}.gate"][...] += np.sum(
                    dgamma[protein_src] * graph.bfactor_weights[src][protein_src]
                )
                dmsg = dmsg * gamma[:, None]
            dm = dmsg * h_in[src]
            dprev = g.copy()  # residual path
            np.add.at(dprev, src, dmsg * m)

            grads[f"encoder.layer{layer}.w2"][...] += t.T @ dm
            grads[f"encoder.layer{layer}.b2"][...] += dm.sum(axis=0)
            dt = dm @ w2.T
            da = dt * (1.0 - t**2)
            grads[f"encoder.layer{layer}.w1"][...] += edge_feat.T @ da
            grads[f"encoder.layer{layer}.b1"][...] += da.sum(axis=0)
            g = dprev
        np.add.at(grads["encoder.embed"], (graph.origins, graph.elements), g)


def aggregate_readout(embeddings: np.ndarray, focal: int) -> np.ndarray:
    """Fixed-width conditioner: focal embedding concatenated with the mean."""
    n = len(embeddings)
    if not 0 <= focal < n:
        raise IndexError(f"focal index {focal} out of range for {n} atoms")
    return np.concatenate([embeddings[focal], embeddings.mean(axis=0)])


def readout_backward(dcond: np.ndarray, n_atoms: int, focal: int) -> np.ndarray:
    """d(loss)/d(embeddings) given d(loss)/d(readout)."""
    width = dcond.size // 2
    dh = np.tile(dcond[width:] / n_atoms, (n_atoms, 1))
    dh[focal] += dcond[:width]
    return dh
