"""Neural relabeling network over molecular graphs.

Atoms exchange messages along bonds for a fixed number of rounds, then a
rank-1 comparison against learned reference edges produces per-atom vectors;
the graph vector is their sum. Two message forms are supported:

* ``concat`` (default): the message from ``u`` along bond ``(u, v)`` is
  ``tau(V [h_u, f_uv])``.
* ``gated``: the message is ``tau((Vh h_u) * (Vf f_uv))`` with an elementwise
  product, which guarantees that all-zero input features propagate to exactly
  zero atom vectors (used by the difference-graph scorer so that a do-nothing
  candidate scores exactly zero).

Layer weights ``U1, U2, V`` are shared across rounds; there are no bias
terms. Inputs may pass through a learned linear projection into the hidden
size; omit it by constructing with ``project=False`` when the input dimension
already equals the hidden size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import diffengine as de
from .chemgraph import (BOND_FEATURE_DIM, MolGraph, atom_feature_matrix,
                        bond_feature_matrix)
from .diffengine import DTensor, ParamStore

__all__ = ["GraphInputs", "WLNParams", "embed_atoms", "embed_from_features",
           "embed_graph", "graph_inputs"]

_ACTIVATIONS = {"relu": de.relu, "tanh": de.tanh}


@dataclass
class WLNParams:
    """Weights of one relabeling network; tensors live in a ParamStore."""

    u1: DTensor
    u2: DTensor
    w0: DTensor
    w1: DTensor
    w2: DTensor
    depth: int
    hidden: int
    in_dim: int
    variant: str = "concat"          # "concat" | "gated"
    activation: str = "relu"
    w_in: DTensor | None = None      # input projection, optional
    v: DTensor | None = None         # concat message weights, (hidden+bond, hidden)
    vh: DTensor | None = None        # gated message weights over h_u
    vf: DTensor | None = None        # gated message weights over f_uv

    @classmethod
    def create(cls, store: ParamStore, prefix: str, in_dim: int, hidden: int,
               depth: int, rng: np.random.Generator, variant: str = "concat",
               project: bool = True, activation: str = "relu",
               bond_dim: int = BOND_FEATURE_DIM) -> "WLNParams":
        if depth < 1:
            raise ValueError("depth must be >= 1")
        if variant not in ("concat", "gated"):
            raise ValueError(f"unknown message variant {variant!r}")
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        if not project and in_dim != hidden:
            raise ValueError("projection can only be dropped when in_dim == hidden")
        p = cls(
            u1=store.create(f"{prefix}.U1", hidden, hidden, rng),
            u2=store.create(f"{prefix}.U2", hidden, hidden, rng),
            w0=store.create(f"{prefix}.W0", hidden, hidden, rng),
            w1=store.create(f"{prefix}.W1", bond_dim, hidden, rng),
            w2=store.create(f"{prefix}.W2", hidden, hidden, rng),
            depth=depth, hidden=hidden, in_dim=in_dim,
            variant=variant, activation=activation,
        )
        if project:
            p.w_in = store.create(f"{prefix}.Win", in_dim, hidden, rng)
        if variant == "concat":
            p.v = store.create(f"{prefix}.V", hidden + bond_dim, hidden, rng)
        else:
            p.vh = store.create(f"{prefix}.Vh", hidden, hidden, rng)
            p.vf = store.create(f"{prefix}.Vf", bond_dim, hidden, rng)
        store.metadata[f"{prefix}.depth"] = str(depth)
        store.metadata[f"{prefix}.hidden"] = str(hidden)
        store.metadata[f"{prefix}.in_dim"] = str(in_dim)
        store.metadata[f"{prefix}.variant"] = variant
        store.metadata[f"{prefix}.activation"] = activation
        store.metadata[f"{prefix}.project"] = "1" if project else "0"
        return p

    @classmethod
    def from_store(cls, store: ParamStore, prefix: str) -> "WLNParams":
        meta = store.metadata
        variant = meta[f"{prefix}.variant"]
        project = meta[f"{prefix}.project"] == "1"
        p = cls(
            u1=store[f"{prefix}.U1"], u2=store[f"{prefix}.U2"],
            w0=store[f"{prefix}.W0"], w1=store[f"{prefix}.W1"],
            w2=store[f"{prefix}.W2"],
            depth=int(meta[f"{prefix}.depth"]),
            hidden=int(meta[f"{prefix}.hidden"]),
            in_dim=int(meta[f"{prefix}.in_dim"]),
            variant=variant, activation=meta[f"{prefix}.activation"],
        )
        if project:
            p.w_in = store[f"{prefix}.Win"]
        if variant == "concat":
            p.v = store[f"{prefix}.V"]
        else:
            p.vh = store[f"{prefix}.Vh"]
            p.vf = store[f"{prefix}.Vf"]
        return p


@dataclass
class GraphInputs:
    """Directed-edge view of a graph plus constant feature tensors."""

    n_atoms: int
    src: np.ndarray           # sender atom per directed edge (2 per bond)
    dst: np.ndarray           # receiver atom per directed edge
    features: DTensor         # (n_atoms, feature_dim)
    edge_features: DTensor    # (2 * n_bonds, BOND_FEATURE_DIM)


def graph_inputs(g: MolGraph, include_charge: bool = False) -> GraphInputs:
    bond_feats = bond_feature_matrix(g)
    src = np.empty(2 * g.n_bonds, dtype=np.intp)
    dst = np.empty(2 * g.n_bonds, dtype=np.intp)
    edge_feats = np.empty((2 * g.n_bonds, BOND_FEATURE_DIM))
    for bi, bond in enumerate(g.bonds):
        src[2 * bi], dst[2 * bi] = bond.u, bond.v
        src[2 * bi + 1], dst[2 * bi + 1] = bond.v, bond.u
        edge_feats[2 * bi] = bond_feats[bi]
        edge_feats[2 * bi + 1] = bond_feats[bi]
    return GraphInputs(g.n_atoms, src, dst,
                       de.constant(atom_feature_matrix(g, include_charge)),
                       de.constant(edge_feats))


def embed_from_features(gi: GraphInputs, x: DTensor, p: WLNParams) -> DTensor:
    """Run the relabeling rounds and final comparison on given node features.

    Returns the (n_atoms, hidden) atom-vector tensor; isolated atoms come out
    as zero rows (their neighbor sum is empty).
    """
    act = _ACTIVATIONS[p.activation]
    if x.shape[1] != p.in_dim:
        raise de.ShapeError(f"feature dim {x.shape[1]} != expected {p.in_dim}")
    h = de.matmul(x, p.w_in) if p.w_in is not None else x
    fe = gi.edge_features
    for _ in range(p.depth):
        h_src = de.gather_rows(h, gi.src)
        if p.variant == "concat":
            msg = act(de.matmul(de.concat_cols(h_src, fe), p.v))
        else:
            msg = act(de.mul(de.matmul(h_src, p.vh), de.matmul(fe, p.vf)))
        neigh = de.segment_sum(msg, gi.dst, gi.n_atoms)
        h = act(de.add(de.matmul(h, p.u1), de.matmul(neigh, p.u2)))
    h_u = de.gather_rows(h, gi.src)
    h_v = de.gather_rows(h, gi.dst)
    compared = de.mul(de.mul(de.matmul(h_u, p.w0), de.matmul(fe, p.w1)),
                      de.matmul(h_v, p.w2))
    return de.segment_sum(compared, gi.dst, gi.n_atoms)


def embed_atoms(g: MolGraph, p: WLNParams, include_charge: bool = False) -> DTensor:
    """Per-atom vectors for a molecular graph (one row per atom)."""
    gi = graph_inputs(g, include_charge)
    return embed_from_features(gi, gi.features, p)


def embed_graph(g: MolGraph, p: WLNParams, include_charge: bool = False) -> DTensor:
    """Whole-graph vector: the sum of all atom vectors, shape (1, hidden)."""
    return de.sum_rows(embed_atoms(g, p, include_charge))
