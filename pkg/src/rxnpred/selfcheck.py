"""Independent oracles and a self-check suite runnable from the CLI.

The oracles here deliberately re-derive results through a different route
than the library code: naive per-atom loops instead of vectorized embeddings,
generate-then-filter enumeration instead of pruned enumeration, and exhaustive
backtracking instead of fingerprints. The ``selfcheck`` CLI subcommand runs
every suite and reports one pass/fail line each.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from . import diffengine as de
from .candgen import BondEdit, EditSet, GenConfig, connectivity_ok, valence_ok
from .center import CenterModel, center_loss
from .chemgraph import (BondType, MolGraph, apply_edits, atom_feature_matrix,
                        bond_features)
from .datagen import random_molecule, random_reaction_line
from .pipeline import parse_reaction_line
from .ranker import RankerModel, rank_loss
from .wliso import brute_force_isomorphic, wl_equivalent
from .wln import WLNParams, embed_atoms

__all__ = ["CheckResult", "brute_force_enumerate", "gradient_suite",
           "naive_atom_vectors", "run_selfcheck", "wl_soundness_suite"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


# ---------------------------------------------------------------------------
# Naive embedding oracle (reference-tensor comparison form)
# ---------------------------------------------------------------------------

def naive_atom_vectors(g: MolGraph, p: WLNParams) -> np.ndarray:
    """Per-atom vectors computed with plain per-atom loops.

    The final comparison is evaluated in its reference-tensor form: slot ``k``
    of an atom's vector is the inner product of the rank-1 reference tensor
    built from the k-th columns of the three comparison matrices with the
    rank-1 edge tensor (h_u, f_uv, h_v), summed over neighbors.
    """
    if p.variant != "concat":
        raise ValueError("oracle covers the concat message form")
    act = (lambda x: np.maximum(x, 0.0)) if p.activation == "relu" else np.tanh
    feats = atom_feature_matrix(g)
    w_in = p.w_in.values if p.w_in is not None else None
    h = [feats[i] @ w_in if w_in is not None else feats[i] for i in range(g.n_atoms)]
    v = p.v.values
    u1, u2 = p.u1.values, p.u2.values
    for _ in range(p.depth):
        nxt = []
        for i in range(g.n_atoms):
            neigh = np.zeros(p.hidden)
            for nbr, bi in g.adjacency[i]:
                edge_in = np.concatenate([h[nbr], bond_features(g, bi)])
                neigh += act(edge_in @ v)
            nxt.append(act(h[i] @ u1 + neigh @ u2))
        h = nxt
    w0, w1, w2 = p.w0.values, p.w1.values, p.w2.values
    out = np.zeros((g.n_atoms, p.hidden))
    for i in range(g.n_atoms):
        for nbr, bi in g.adjacency[i]:
            f_uv = bond_features(g, bi)
            for k in range(p.hidden):
                out[i, k] += (np.dot(w0[:, k], h[nbr])
                              * np.dot(w1[:, k], f_uv)
                              * np.dot(w2[:, k], h[i]))
    return out


# ---------------------------------------------------------------------------
# Brute-force candidate enumeration oracle
# ---------------------------------------------------------------------------

def brute_force_enumerate(reactants: MolGraph, pairs: list[tuple[int, int]],
                          cfg: GenConfig) -> set[EditSet]:
    """Generate every full assignment over the pairs, then filter.

    Each pair takes any alphabet value including "keep as is"; assignments
    are reduced to their changed pairs and kept when the changed set is
    nonempty, within ``max_changes``, connected, aromatic-legal, and the
    edited graph respects valences.
    """
    norm = [(min(u, v), max(u, v)) for u, v in pairs]
    out: set[EditSet] = set()
    for assignment in itertools.product(cfg.alphabet, repeat=len(norm)):
        edits = []
        for (u, v), bt in zip(norm, assignment):
            if bt is not reactants.bond_type_between(u, v):
                edits.append(BondEdit(u, v, bt))
        if not edits or len(edits) > cfg.max_changes:
            continue
        if len({(e.u, e.v) for e in edits}) < len(edits):
            continue
        if cfg.aromatic_needs_aromatic_atoms and any(
                e.bond_type is BondType.AROMATIC
                and not (reactants.atoms[e.u].aromatic and reactants.atoms[e.v].aromatic)
                for e in edits):
            continue
        if cfg.enforce_connectivity and len(edits) > 1 and not connectivity_ok(edits):
            continue
        edit_set = EditSet.of(edits)
        if edit_set in out:
            continue
        if cfg.enforce_valence and not valence_ok(apply_edits(reactants, edit_set)):
            continue
        out.add(edit_set)
    return out


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def wl_soundness_suite(n_molecules: int = 30, max_atoms: int = 7,
                       depth: int = 3, seed: int = 11) -> CheckResult:
    """Brute-force isomorphism implies WL equivalence; WL separates almost
    every non-isomorphic pair."""
    rng = np.random.default_rng(seed)
    mols = []
    while len(mols) < n_molecules:
        g = random_molecule(rng, n_atoms=int(rng.integers(2, max_atoms + 1)),
                            allow_curated=len(mols) % 3 == 0)
        if g.n_atoms <= max_atoms:
            mols.append(g)
    start = time.perf_counter()
    unsound = 0
    non_iso = 0
    undistinguished = 0
    for i in range(len(mols)):
        for j in range(i + 1, len(mols)):
            iso = brute_force_isomorphic(mols[i], mols[j])
            wl = wl_equivalent(mols[i], mols[j], depth)
            if iso and not wl:
                unsound += 1
            if not iso:
                non_iso += 1
                if wl:
                    undistinguished += 1
    elapsed = time.perf_counter() - start
    separated = 1.0 - (undistinguished / non_iso if non_iso else 0.0)
    passed = unsound == 0 and separated >= 0.99 and elapsed < 10.0
    return CheckResult(
        "wl-soundness", passed,
        f"unsound={unsound} separated={separated:.4f} over {non_iso} "
        f"non-isomorphic pairs in {elapsed:.2f}s")


def _small_instance(seed: int, max_atoms: int = 10):
    rng = np.random.default_rng(seed)
    while True:
        line = random_reaction_line(rng)
        try:
            rec = parse_reaction_line(line)
        except ValueError:
            continue
        if rec.reactants.n_atoms <= max_atoms:
            return rec


def _ranking_instance(seed: int, min_candidates: int = 3):
    """A small record whose enumerated candidate pool is big enough that the
    ranking loss actually depends on the scores."""
    from .candgen import Candidate, enumerate_candidates
    for attempt in range(50):
        rec = _small_instance(seed + 101 * attempt)
        pairs = list(rec.true_edits.pairs)
        cands = enumerate_candidates(rec.reactants, pairs,
                                     GenConfig(k=max(3, len(pairs)), max_changes=2,
                                               max_candidates=24)).candidates
        if all(c.edits != rec.true_edits for c in cands):
            cands.append(Candidate(rec.true_edits, rec.reactants))
        if len(cands) >= min_candidates:
            true_idx = next(i for i, c in enumerate(cands)
                            if c.edits == rec.true_edits)
            return rec, cands, true_idx
    raise RuntimeError("no suitable ranking instance found")


def gradient_suite(h: float = 1e-5, tol: float = 1e-4, seed: int = 5,
                   hidden: int = 8) -> list[CheckResult]:
    """Finite-difference checks of all four training losses."""
    rec = _small_instance(seed)
    out = []

    for variant in ("local", "global"):
        model = CenterModel.create(variant, hidden=hidden, depth=2, seed=seed)

        def loss_fn(_store, model=model):
            scores, _ = model.pair_scores(rec.reactants)
            return center_loss(scores, rec.labels)

        err = de.grad_check(loss_fn, model.store, h=h,
                            rng=np.random.default_rng(seed + 1))
        out.append(CheckResult(f"grad-center-{variant}", err < tol,
                               f"max rel err {err:.2e}"))

    rec, cands, true_idx = _ranking_instance(seed)

    for variant in ("wln", "wldn"):
        model = RankerModel.create(variant, hidden=hidden, depth=2, seed=seed)

        def loss_fn(_store, model=model):
            c_r = model.embed_reactants(rec.reactants)
            scores = de.stack_rows([
                model.score_candidate(rec.reactants, c, reactant_embedding=c_r)
                for c in cands])
            return rank_loss(scores, true_idx)

        err = de.grad_check(loss_fn, model.store, h=h,
                            rng=np.random.default_rng(seed + 2))
        out.append(CheckResult(f"grad-ranker-{variant}", err < tol,
                               f"max rel err {err:.2e}"))
    return out


def comparison_form_suite(seed: int = 3, tol: float = 1e-10,
                          trials: int = 5) -> CheckResult:
    """Vectorized atom vectors match the reference-tensor oracle."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in range(trials):
        g = random_molecule(rng)
        store = de.ParamStore()
        p = WLNParams.create(store, "wln", atom_feature_matrix(g).shape[1],
                             hidden=12, depth=2, rng=rng)
        fast = embed_atoms(g, p).values
        slow = naive_atom_vectors(g, p)
        worst = max(worst, float(np.max(np.abs(fast - slow))) if fast.size else 0.0)
    return CheckResult("comparison-form", worst < tol, f"max abs diff {worst:.2e}")


def enumeration_suite(n_instances: int = 20, seed: int = 9) -> CheckResult:
    """Pruned enumeration equals generate-then-filter on small instances."""
    from .candgen import enumerate_candidates
    rng = np.random.default_rng(seed)
    mismatches = 0
    done = 0
    while done < n_instances:
        g = random_molecule(rng, n_atoms=int(rng.integers(3, 8)))
        n = g.n_atoms
        all_pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        if not all_pairs:
            continue
        k = int(rng.integers(1, min(4, len(all_pairs)) + 1))
        idx = rng.choice(len(all_pairs), size=k, replace=False)
        pairs = [all_pairs[i] for i in idx]
        cfg = GenConfig(k=max(k, 3), max_changes=min(3, k), max_candidates=100000)
        fast = enumerate_candidates(g, pairs, cfg).edit_sets()
        slow = brute_force_enumerate(g, pairs, cfg)
        mismatches += int(fast != slow)
        done += 1
    return CheckResult("enumeration-oracle", mismatches == 0,
                       f"{mismatches} mismatching instances of {n_instances}")


def run_selfcheck(seed: int = 0) -> list[CheckResult]:
    results = [wl_soundness_suite(seed=seed + 11)]
    results.append(comparison_form_suite(seed=seed + 3))
    results.append(enumeration_suite(seed=seed + 9))
    results.extend(gradient_suite(seed=seed + 5))
    return results
