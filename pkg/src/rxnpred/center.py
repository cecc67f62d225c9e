"""Reaction-center identification.

Derives pairwise reactivity labels from atom-mapped reactions, scores every
unordered reactant atom pair with either a local model (pair atom vectors
only) or a global model (attention-weighted context over all reactant atoms,
so disconnected reagents can influence a pair), and provides the independent
per-pair log loss, top-K selection, and coverage measurement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import diffengine as de
from .candgen import BondEdit, EditSet
from .chemgraph import ATOM_FEATURE_DIM, BondType, CHARGE_SLOTS, MolGraph
from .diffengine import DTensor, ParamStore
from .wln import WLNParams, embed_from_features, graph_inputs

__all__ = [
    "PAIR_FEATURE_DIM",
    "CenterModel",
    "PairLabels",
    "Reaction",
    "center_loss",
    "coverage",
    "global_scores",
    "label_pairs",
    "local_scores",
    "pair_feature_matrix",
    "reaction_edits",
    "top_k_pairs",
    "upper_pairs",
]

PAIR_FEATURE_DIM = 6  # bond-type one-hot over {none,1,2,3,ar} + same-molecule flag


@dataclass(frozen=True)
class Reaction:
    """An atom-mapped reactant/product graph pair."""

    reactants: MolGraph
    product: MolGraph


@dataclass(frozen=True)
class PairLabels:
    """Symmetric boolean reactivity labels over reactant atoms (diagonal excluded)."""

    n_atoms: int
    positive: frozenset[tuple[int, int]]  # (u, v) with u < v

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n_atoms, self.n_atoms), dtype=bool)
        for u, v in self.positive:
            m[u, v] = m[v, u] = True
        return m

    def vector(self, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
        return np.array([1.0 if p in self.positive else 0.0 for p in pairs]).reshape(-1, 1)


def _pair_changes(rxn: Reaction) -> dict[tuple[int, int], BondType]:
    """Changed pairs (reactant indices) -> bond type on the product side.

    A pair counts as changed when both atoms map into the product and the
    bond types differ, or when exactly one does and the reactant bond must
    therefore have broken. Pairs fully outside the product (reagents,
    departed fragments) never change.
    """
    r_map = rxn.reactants.map_to_index()
    p_map = rxn.product.map_to_index()
    for i, atom in enumerate(rxn.product.atoms):
        if atom.map_number is None:
            raise ValueError(f"product atom {i} has no map number")
        if atom.map_number not in r_map:
            raise ValueError(f"product map {atom.map_number} missing from reactants")
    to_product = {ri: p_map[m] for m, ri in r_map.items() if m in p_map}

    changed: dict[tuple[int, int], BondType] = {}
    n = rxn.reactants.n_atoms
    for u in range(n):
        for v in range(u + 1, n):
            r_type = rxn.reactants.bond_type_between(u, v)
            pu, pv = to_product.get(u), to_product.get(v)
            if pu is not None and pv is not None:
                p_type = rxn.product.bond_type_between(pu, pv)
            elif pu is None and pv is None:
                continue
            else:
                p_type = BondType.NONE
            if p_type is not r_type:
                changed[(u, v)] = p_type
    return changed


def label_pairs(rxn: Reaction) -> PairLabels:
    """Reactivity labels: 1 iff the pair's bond type differs across the reaction."""
    changed = _pair_changes(rxn)
    return PairLabels(rxn.reactants.n_atoms, frozenset(changed))


def reaction_edits(rxn: Reaction) -> EditSet:
    """The recorded reaction as a bond-edit set over reactant atom indices."""
    changed = _pair_changes(rxn)
    return EditSet.of(BondEdit(u, v, t) for (u, v), t in changed.items())


def upper_pairs(n: int) -> list[tuple[int, int]]:
    """Canonical unordered pair order: (0,1), (0,2), ..., (n-2, n-1)."""
    return [(u, v) for u in range(n) for v in range(u + 1, n)]


def pair_feature_matrix(g: MolGraph, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Per-pair features: bond type between the atoms + same-molecule flag."""
    out = np.zeros((len(pairs), PAIR_FEATURE_DIM))
    for k, (u, v) in enumerate(pairs):
        bt = BondType.NONE if u == v else g.bond_type_between(u, v)
        out[k, bt.value] = 1.0
        out[k, 5] = 1.0 if g.component[u] == g.component[v] else 0.0
    return out


# ---------------------------------------------------------------------------
# Scoring models
# ---------------------------------------------------------------------------

@dataclass
class CenterModel:
    """WLN atom embeddings plus a pairwise scoring head.

    The local variant scores pairs from their own atom vectors; the global
    variant first forms attention-weighted context vectors over all reactant
    atoms (sigmoid gates, not normalized) and scores pairs from those.
    """

    store: ParamStore
    wln: WLNParams
    variant: str                       # "local" | "global"
    hidden: int
    include_charge: bool = False
    activation: str = "relu"

    @classmethod
    def create(cls, variant: str, hidden: int = 64, depth: int = 3,
               seed: int = 0, include_charge: bool = False,
               activation: str = "relu") -> "CenterModel":
        if variant not in ("local", "global"):
            raise ValueError(f"unknown center variant {variant!r}")
        rng = np.random.default_rng(seed)
        store = ParamStore(metadata={
            "kind": "center", "variant": variant, "hidden": str(hidden),
            "seed": str(seed), "include_charge": "1" if include_charge else "0",
            "activation": activation, "version": "1",
        })
        in_dim = ATOM_FEATURE_DIM + (CHARGE_SLOTS if include_charge else 0)
        wln = WLNParams.create(store, "wln", in_dim, hidden, depth, rng,
                               activation=activation)
        store.create("score.Ma", hidden, hidden, rng)
        store.create("score.Mb", PAIR_FEATURE_DIM, hidden, rng)
        store.create("score.bias", 1, hidden, init="zeros")
        store.create("score.u", hidden, 1, rng)
        if variant == "global":
            store.create("att.Pa", hidden, hidden, rng)
            store.create("att.Pb", PAIR_FEATURE_DIM, hidden, rng)
            store.create("att.bias", 1, hidden, init="zeros")
            store.create("att.u", hidden, 1, rng)
        return cls(store, wln, variant, hidden, include_charge, activation)

    @classmethod
    def from_store(cls, store: ParamStore) -> "CenterModel":
        meta = store.metadata
        if meta.get("kind") != "center":
            raise ValueError("checkpoint is not a center model")
        return cls(store, WLNParams.from_store(store, "wln"), meta["variant"],
                   int(meta["hidden"]), meta.get("include_charge") == "1",
                   meta.get("activation", "relu"))

    @classmethod
    def load(cls, path) -> "CenterModel":
        return cls.from_store(ParamStore.load(path))

    def save(self, path) -> None:
        self.store.save(path)

    # -- differentiable paths ------------------------------------------------

    def _act(self, t: DTensor) -> DTensor:
        return de.relu(t) if self.activation == "relu" else de.tanh(t)

    def _head(self, cu: DTensor, cv: DTensor, bf: DTensor,
              ma: str, mb: str, bias: str, u: str) -> DTensor:
        s = self.store
        z = de.add(de.add(de.matmul(cu, s[ma]), de.matmul(cv, s[ma])),
                   de.matmul(bf, s[mb]))
        z = de.add(z, s[bias])
        return de.sigmoid(de.matmul(self._act(z), s[u]))

    def pair_scores(self, g: MolGraph) -> tuple[DTensor, list[tuple[int, int]]]:
        """Scores for all unordered pairs as an (n_pairs, 1) tensor."""
        pairs = upper_pairs(g.n_atoms)
        gi = graph_inputs(g, self.include_charge)
        c = embed_from_features(gi, gi.features, self.wln)
        if not pairs:
            return de.constant(np.zeros((0, 1))), pairs
        if self.variant == "global":
            c = self._attention_context(g, c)[0]
        us = np.fromiter((p[0] for p in pairs), dtype=np.intp)
        vs = np.fromiter((p[1] for p in pairs), dtype=np.intp)
        bf = de.constant(pair_feature_matrix(g, pairs))
        scores = self._head(de.gather_rows(c, us), de.gather_rows(c, vs), bf,
                            "score.Ma", "score.Mb", "score.bias", "score.u")
        return scores, pairs

    def _attention_context(self, g: MolGraph, c: DTensor) -> tuple[DTensor, DTensor]:
        """Context vectors (n, hidden) and the attention matrix (n, n)."""
        n = g.n_atoms
        ordered = [(u, v) for u in range(n) for v in range(n)]
        us = np.fromiter((p[0] for p in ordered), dtype=np.intp)
        vs = np.fromiter((p[1] for p in ordered), dtype=np.intp)
        bf = de.constant(pair_feature_matrix(g, ordered))
        alpha = self._head(de.gather_rows(c, us), de.gather_rows(c, vs), bf,
                           "att.Pa", "att.Pb", "att.bias", "att.u")
        alpha_mat = de.reshape(alpha, n, n)
        return de.matmul(alpha_mat, c), alpha_mat

    # -- inference wrappers ----------------------------------------------------

    def score_matrix(self, g: MolGraph) -> np.ndarray:
        """Symmetric score matrix with a zero diagonal."""
        scores, pairs = self.pair_scores(g)
        return scores_to_matrix(scores.values, pairs, g.n_atoms)

    def attention_map(self, g: MolGraph) -> np.ndarray:
        if self.variant != "global":
            raise ValueError("attention is only defined for the global variant")
        gi = graph_inputs(g, self.include_charge)
        c = embed_from_features(gi, gi.features, self.wln)
        return self._attention_context(g, c)[1].values.copy()


def scores_to_matrix(values: np.ndarray, pairs: Sequence[tuple[int, int]],
                     n: int) -> np.ndarray:
    m = np.zeros((n, n))
    flat = values.reshape(-1)
    for k, (u, v) in enumerate(pairs):
        m[u, v] = m[v, u] = flat[k]
    return m


def local_scores(g: MolGraph, model: CenterModel) -> np.ndarray:
    """Symmetric pair-score matrix from a local-variant model."""
    if model.variant != "local":
        raise ValueError("local_scores needs a local-variant model")
    return model.score_matrix(g)


def global_scores(g: MolGraph, model: CenterModel) -> tuple[np.ndarray, np.ndarray]:
    """(score matrix, attention map) from a global-variant model."""
    if model.variant != "global":
        raise ValueError("global_scores needs a global-variant model")
    return model.score_matrix(g), model.attention_map(g)


# ---------------------------------------------------------------------------
# Loss, selection, coverage
# ---------------------------------------------------------------------------

def center_loss(scores: DTensor | np.ndarray, labels: PairLabels) -> DTensor:
    """Binary log loss summed over unordered pairs (each counted once).

    ``scores`` is either the (n_pairs, 1) tensor aligned with
    :func:`upper_pairs`, or a symmetric score matrix. Logs clamp at 1e-12.
    """
    pairs = upper_pairs(labels.n_atoms)
    if isinstance(scores, np.ndarray):
        scores = de.constant(np.array([scores[u, v] for u, v in pairs]).reshape(-1, 1))
    if scores.shape != (len(pairs), 1):
        raise de.ShapeError(f"expected {(len(pairs), 1)} scores, got {scores.shape}")
    y = de.constant(labels.vector(pairs))
    ones = de.constant(np.ones((len(pairs), 1)))
    pos = de.dot(y, de.log(scores))
    neg = de.dot(de.sub(ones, y), de.log(de.sub(ones, scores)))
    return de.scale(de.add(pos, neg), -1.0)


def top_k_pairs(scores: np.ndarray, k: int) -> list[tuple[int, int]]:
    """Top-K unordered pairs by score; ties break lexicographically by index.

    Asking for more pairs than exist returns them all.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = scores.shape[0]
    ranked = sorted(((u, v) for u in range(n) for v in range(u + 1, n)),
                    key=lambda p: (-scores[p[0], p[1]], p[0], p[1]))
    return ranked[:k]


def coverage(predicted: Iterable[tuple[int, int]], truth: PairLabels) -> bool:
    """True iff every positive pair of ``truth`` occurs among ``predicted``."""
    have = {(min(u, v), max(u, v)) for u, v in predicted}
    return all(p in have for p in truth.positive)
