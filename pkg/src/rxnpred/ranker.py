"""Candidate product scoring and ranking.

Each candidate is summarized by per-atom difference vectors (candidate atom
vector minus reactant atom vector, same atom indexing). The plain scorer
sum-pools those differences through a small head. The difference-network
scorer instead runs a second, separately parameterized relabeling network
over the candidate's graph with the difference vectors as node features
(gated messages, so an all-zero difference graph scores exactly zero),
capturing interactions between neighboring changes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import diffengine as de
from .candgen import Candidate
from .chemgraph import ATOM_FEATURE_DIM, CHARGE_SLOTS, MolGraph
from .diffengine import DTensor, ParamStore
from .wln import WLNParams, embed_from_features, graph_inputs

__all__ = ["RankerModel", "difference_vectors", "rank_candidates", "rank_loss",
           "score_sumpool", "score_wldn"]


@dataclass
class RankerModel:
    """Two relabeling networks (molecule and difference graph) plus score heads."""

    store: ParamStore
    wln: WLNParams            # embeds reactants and candidate products
    diff_wln: WLNParams       # embeds the difference graph (gated messages)
    variant: str              # "wln" = sum-pooling | "wldn" = difference network
    hidden: int
    include_charge: bool = False
    activation: str = "relu"

    @classmethod
    def create(cls, variant: str, hidden: int = 64, depth: int = 3, seed: int = 0,
               include_charge: bool = False, activation: str = "relu") -> "RankerModel":
        if variant not in ("wln", "wldn"):
            raise ValueError(f"unknown ranker variant {variant!r}")
        rng = np.random.default_rng(seed)
        store = ParamStore(metadata={
            "kind": "ranker", "variant": variant, "hidden": str(hidden),
            "seed": str(seed), "include_charge": "1" if include_charge else "0",
            "activation": activation, "version": "1",
        })
        in_dim = ATOM_FEATURE_DIM + (CHARGE_SLOTS if include_charge else 0)
        wln = WLNParams.create(store, "mol", in_dim, hidden, depth, rng,
                               activation=activation)
        diff = WLNParams.create(store, "diff", hidden, hidden, depth, rng,
                                variant="gated", project=False, activation=activation)
        store.create("sum.M", hidden, hidden, rng)
        store.create("sum.u", hidden, 1, rng)
        store.create("wldn.M", hidden, hidden, rng)
        store.create("wldn.u", hidden, 1, rng)
        return cls(store, wln, diff, variant, hidden, include_charge, activation)

    @classmethod
    def from_store(cls, store: ParamStore) -> "RankerModel":
        meta = store.metadata
        if meta.get("kind") != "ranker":
            raise ValueError("checkpoint is not a ranker model")
        return cls(store, WLNParams.from_store(store, "mol"),
                   WLNParams.from_store(store, "diff"), meta["variant"],
                   int(meta["hidden"]), meta.get("include_charge") == "1",
                   meta.get("activation", "relu"))

    @classmethod
    def load(cls, path) -> "RankerModel":
        return cls.from_store(ParamStore.load(path))

    def save(self, path) -> None:
        self.store.save(path)

    def _act(self, t: DTensor) -> DTensor:
        return de.relu(t) if self.activation == "relu" else de.tanh(t)

    def embed_reactants(self, reactants: MolGraph) -> DTensor:
        gi = graph_inputs(reactants, self.include_charge)
        return embed_from_features(gi, gi.features, self.wln)

    def score_candidate(self, reactants: MolGraph, candidate: Candidate,
                        reactant_embedding: DTensor | None = None,
                        variant: str | None = None) -> DTensor:
        """Differentiable score of one candidate, shape (1, 1)."""
        variant = variant or self.variant
        d = difference_vectors(reactants, candidate, self.wln,
                               include_charge=self.include_charge,
                               reactant_embedding=reactant_embedding)
        if variant == "wln":
            return score_sumpool(d, self.store["sum.M"], self.store["sum.u"],
                                 self._act)
        gi = graph_inputs(candidate.product, self.include_charge)
        d_final = embed_from_features(gi, d, self.diff_wln)
        return score_sumpool(d_final, self.store["wldn.M"], self.store["wldn.u"],
                             self._act)


def difference_vectors(reactants: MolGraph, candidate: Candidate, wln: WLNParams,
                       include_charge: bool = False,
                       reactant_embedding: DTensor | None = None) -> DTensor:
    """Per-atom difference vectors (candidate minus reactant embedding).

    Candidate product graphs keep the reactant atom indexing, so the
    subtraction is row-aligned. Atoms whose neighborhood the edits never
    touch come out exactly zero.
    """
    if reactant_embedding is None:
        gi_r = graph_inputs(reactants, include_charge)
        reactant_embedding = embed_from_features(gi_r, gi_r.features, wln)
    gi_p = graph_inputs(candidate.product, include_charge)
    c_p = embed_from_features(gi_p, gi_p.features, wln)
    return de.sub(c_p, reactant_embedding)


def score_sumpool(d: DTensor, m: DTensor, u: DTensor, act=de.relu) -> DTensor:
    """Head ``u' tau(M sum_v d_v)`` over per-atom difference vectors."""
    return de.matmul(act(de.matmul(de.sum_rows(d), m)), u)


def score_wldn(reactants: MolGraph, candidate: Candidate, model: RankerModel,
               reactant_embedding: DTensor | None = None) -> DTensor:
    """Difference-network score of one candidate (regardless of the model's
    configured default variant)."""
    return model.score_candidate(reactants, candidate,
                                 reactant_embedding=reactant_embedding,
                                 variant="wldn")


def rank_loss(scores: Sequence[DTensor] | DTensor, true_index: int) -> DTensor:
    """Softmax log loss with the true candidate as the target."""
    if isinstance(scores, DTensor):
        stacked = scores
    else:
        if len(scores) == 0:
            raise ValueError("rank_loss needs at least one score")
        stacked = de.stack_rows(list(scores))
    return de.softmax_logloss(stacked, true_index)


def rank_candidates(reactants: MolGraph, candidates: Sequence[Candidate],
                    model: RankerModel, variant: str | None = None) -> list[Candidate]:
    """Candidates sorted by descending score; ties keep enumeration order.

    Scores are attached to the returned candidates.
    """
    if not candidates:
        raise ValueError("rank_candidates needs a nonempty candidate list")
    c_r = model.embed_reactants(reactants)
    for cand in candidates:
        cand.score = model.score_candidate(reactants, cand, reactant_embedding=c_r,
                                           variant=variant).item()
    return sorted(candidates, key=lambda c: -c.score)
