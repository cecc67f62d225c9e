"""Dataset ingestion, training loops, end-to-end prediction, and evaluation.

Input files hold one reaction per line as ``reactants>reagents>products``
(SMILES with ``:n`` atom maps, reagent field may be empty, ``#`` comments and
blank lines skipped). Reagents are merged into the reactant graph as extra
components; they take part in scoring but never carry positive labels. Only
the largest product component is kept for labeling, and records whose product
contains unmapped atoms, or whose edit set is empty or inconsistent, are
dropped with a diagnostic.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import diffengine as de
from .candgen import Candidate, EditSet, GenConfig, enumerate_candidates
from .center import (CenterModel, PairLabels, Reaction, center_loss, coverage,
                     label_pairs, reaction_edits, top_k_pairs)
from .chemgraph import MolGraph, apply_edits, induced_subgraph, parse_smiles, write_smiles
from .ranker import RankerModel, rank_candidates, rank_loss
from .wliso import wl_equivalent

logger = logging.getLogger(__name__)

__all__ = [
    "EvalReport", "PredictedProduct", "PredictResult", "ReactionRecord",
    "RunConfig", "evaluate", "load_dataset", "predict", "split_records",
    "train_center", "train_ranker",
]

# Model-size presets; "paper650k" sizes the ranker near 650K parameters and
# the center presets land near 572K/756K for local/global.
PRESETS = {
    "small": {"hidden": 64, "depth": 3},
    "center-local-572k": {"hidden": 300, "depth": 3},
    "center-global-756k": {"hidden": 320, "depth": 3},
    "ranker-650k": {"hidden": 240, "depth": 3},
}


@dataclass
class RunConfig:
    data: str | None = None
    out: str | None = None
    center: str | None = None       # center checkpoint path, or "oracle"
    ranker: str | None = None
    k: int = 6
    max_changes: int = 3
    hidden: int = 64
    depth: int = 3
    epochs: int = 100
    batch: int = 1
    lr: float = 1e-3
    decay: float = 0.9
    seed: int = 0
    variant: str = "local"          # local|global|wln|wldn
    augment_truth: bool = False
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)
    max_atoms: int = 150
    max_candidates: int = 2000
    activation: str = "relu"
    include_charge: bool = False
    eval_ks: tuple[int, ...] = (6, 8, 10)
    # Optional early-stop targets for small overfit runs:
    target_train_coverage: float | None = None
    target_train_p1: float | None = None

    def __post_init__(self) -> None:
        for name in ("k", "max_changes", "hidden", "depth", "epochs", "batch",
                     "max_atoms", "max_candidates"):
            if getattr(self, name) < 1:
                raise ValueError(f"config field {name} must be positive")
        if self.lr <= 0 or self.decay <= 0:
            raise ValueError("lr and decay must be positive")

    def gen_config(self) -> GenConfig:
        return GenConfig(k=self.k, max_changes=self.max_changes,
                         max_candidates=self.max_candidates)

    @classmethod
    def from_file(cls, path, **overrides) -> "RunConfig":
        """key=value lines; '#' comments. Keyword overrides win."""
        values: dict = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            values[key.strip().replace("-", "_")] = value.strip()
        cfg = cls()
        for key, value in values.items():
            cfg = _set_config_field(cfg, key, value)
        for key, value in overrides.items():
            if value is not None:
                cfg = replace(cfg, **{key: value})
        return cfg


def _set_config_field(cfg: RunConfig, key: str, raw: str) -> RunConfig:
    if not hasattr(cfg, key):
        raise ValueError(f"unknown config key {key!r}")
    current = getattr(cfg, key)
    value: object
    if key == "split":
        value = tuple(float(x) for x in raw.split(","))
    elif key == "eval_ks":
        value = tuple(int(x) for x in raw.split(","))
    elif isinstance(current, bool):
        value = raw.lower() in ("1", "true", "yes", "on")
    elif isinstance(current, int) and not isinstance(current, bool):
        value = int(raw)
    elif isinstance(current, float) or key in ("target_train_coverage", "target_train_p1"):
        value = float(raw)
    else:
        value = raw
    return replace(cfg, **{key: value})


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

@dataclass
class ReactionRecord:
    raw: str
    reactants: MolGraph            # reagents merged in as extra components
    product: MolGraph              # largest product component, fully mapped
    labels: PairLabels
    true_edits: EditSet

    @property
    def reaction(self) -> Reaction:
        return Reaction(self.reactants, self.product)

    @property
    def mapping(self) -> tuple[dict[int, int], dict[int, int]]:
        """Map-number -> atom index, for the reactant and product sides."""
        return self.reactants.map_to_index(), self.product.map_to_index()


class RecordError(ValueError):
    pass


def parse_reaction_line(line: str, max_atoms: int = 150) -> ReactionRecord:
    fields = line.split(">")
    if len(fields) != 3:
        raise RecordError(f"expected 'reactants>reagents>products', got {len(fields)} fields")
    reactant_part, reagent_part, product_part = (f.strip() for f in fields)
    if not reactant_part or not product_part:
        raise RecordError("empty reactants or products field")
    smiles = reactant_part + ("." + reagent_part if reagent_part else "")
    reactants = parse_smiles(smiles)
    if reactants.n_atoms > max_atoms:
        raise RecordError(f"reaction too large ({reactants.n_atoms} atoms)")
    reactants.map_to_index()  # raises on duplicate maps

    product_all = parse_smiles(product_part)
    sizes: dict[int, int] = {}
    for comp in product_all.component:
        sizes[comp] = sizes.get(comp, 0) + 1
    largest = max(sizes, key=lambda c: (sizes[c], -c))
    product = induced_subgraph(
        product_all, [i for i in range(product_all.n_atoms)
                      if product_all.component[i] == largest])
    for i, atom in enumerate(product.atoms):
        if atom.map_number is None:
            raise RecordError(f"product atom {i} is unmapped")

    rxn = Reaction(reactants, product)
    labels = label_pairs(rxn)
    edits = reaction_edits(rxn)
    if len(edits) == 0:
        raise RecordError("no bond changes between reactants and product")
    _check_edit_consistency(rxn, edits)
    return ReactionRecord(line, reactants, product, labels, edits)


def _check_edit_consistency(rxn: Reaction, edits: EditSet) -> None:
    """Applying the recovered edits must reproduce the product's mapped bonds."""
    edited = apply_edits(rxn.reactants, edits)
    r_map = rxn.reactants.map_to_index()
    p_map = rxn.product.map_to_index()
    shared = sorted(set(r_map) & set(p_map))
    expected = set()
    for bond in rxn.product.bonds:
        mu = rxn.product.atoms[bond.u].map_number
        mv = rxn.product.atoms[bond.v].map_number
        if mu in r_map and mv in r_map:
            expected.add((min(mu, mv), max(mu, mv), bond.bond_type))
    got = set()
    idx_to_map = {r_map[m]: m for m in shared}
    for bond in edited.bonds:
        mu, mv = idx_to_map.get(bond.u), idx_to_map.get(bond.v)
        if mu is not None and mv is not None:
            got.add((min(mu, mv), max(mu, mv), bond.bond_type))
    if expected != got:
        raise RecordError("edit set does not reproduce the product's mapped bonds")


def load_dataset(path, max_atoms: int = 150) -> list[ReactionRecord]:
    """Parse and validate a reaction file, skipping malformed lines.

    Raises if the file is unreadable or if more than half of the non-comment
    lines fail to parse.
    """
    records: list[ReactionRecord] = []
    skipped = 0
    total = 0
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        total += 1
        try:
            records.append(parse_reaction_line(line, max_atoms))
        except ValueError as exc:
            skipped += 1
            logger.warning("%s:%d: skipped record: %s", path, lineno, exc)
    if total == 0:
        raise ValueError(f"{path}: no reaction records found")
    if skipped > total / 2:
        raise ValueError(f"{path}: {skipped}/{total} records malformed; aborting")
    logger.info("%s: loaded %d records (%d skipped)", path, len(records), skipped)
    return records


def _line_hash(line: str) -> int:
    h = 0xCBF29CE484222325
    for byte in line.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & ((1 << 64) - 1)
    return h


def split_records(records: list[ReactionRecord],
                  fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
                  ) -> tuple[list[ReactionRecord], list[ReactionRecord], list[ReactionRecord]]:
    """Deterministic train/dev/test split keyed on a hash of the raw line."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    t1 = fractions[0]
    t2 = fractions[0] + fractions[1]
    out: tuple[list[ReactionRecord], ...] = ([], [], [])
    for rec in records:
        u = _line_hash(rec.raw) / 2.0 ** 64
        out[0 if u < t1 else 1 if u < t2 else 2].append(rec)
    return out


# ---------------------------------------------------------------------------
# Training: reaction center
# ---------------------------------------------------------------------------

@dataclass
class TrainResult:
    checkpoint: str
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0


def _center_coverage(model: CenterModel, records: list[ReactionRecord], k: int) -> float:
    if not records:
        return 0.0
    hits = 0
    for rec in records:
        matrix = model.score_matrix(rec.reactants)
        if coverage(top_k_pairs(matrix, k), rec.labels):
            hits += 1
    return hits / len(records)


def train_center(cfg: RunConfig) -> TrainResult:
    """Minimize the pairwise log loss with Adam; save the best checkpoint.

    Best means highest dev coverage@k (train coverage when the dev split is
    empty). Fully deterministic for a fixed config and seed.
    """
    if cfg.variant not in ("local", "global"):
        raise ValueError("center training needs variant 'local' or 'global'")
    if cfg.data is None or cfg.out is None:
        raise ValueError("train_center needs cfg.data and cfg.out")
    records = load_dataset(cfg.data, cfg.max_atoms)
    train, dev, _ = split_records(records, cfg.split)
    if not train:
        raise ValueError("training split is empty")
    model = CenterModel.create(cfg.variant, cfg.hidden, cfg.depth, cfg.seed,
                               cfg.include_charge, cfg.activation)
    model.store.metadata.update(k=str(cfg.k), max_changes=str(cfg.max_changes))
    adam = de.AdamState(model.store, lr=cfg.lr, decay=cfg.decay)
    rng = np.random.default_rng(cfg.seed)

    result = TrainResult(checkpoint=cfg.out)
    best_metric = -1.0
    best_values = model.store.clone_values()
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(train))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch):
            model.store.zero_grads()
            for idx in order[start:start + cfg.batch]:
                rec = train[idx]
                scores, _ = model.pair_scores(rec.reactants)
                loss = center_loss(scores, rec.labels)
                de.backward(loss)
                epoch_loss += loss.item()
            de.adam_step(model.store, adam)
        if not np.isfinite(epoch_loss):
            raise FloatingPointError(f"training diverged at epoch {epoch} "
                                     f"(loss={epoch_loss!r}); try a lower lr")
        train_cov = _center_coverage(model, train, cfg.k)
        dev_cov = _center_coverage(model, dev, cfg.k) if dev else None
        metric = dev_cov if dev else train_cov
        if metric > best_metric:
            best_metric = metric
            best_values = model.store.clone_values()
            result.best_epoch = epoch
        result.history.append({"epoch": epoch, "loss": epoch_loss,
                               "train_coverage": train_cov, "dev_coverage": dev_cov})
        logger.info("center epoch %d: loss %.4f train cov@%d %.3f dev cov %s",
                    epoch, epoch_loss, cfg.k, train_cov,
                    f"{dev_cov:.3f}" if dev_cov is not None else "-")
        if cfg.target_train_coverage is not None and train_cov >= cfg.target_train_coverage:
            break
        adam.end_epoch()
    model.store.load_values(best_values)
    model.save(cfg.out)
    return result


# ---------------------------------------------------------------------------
# Training: candidate ranker
# ---------------------------------------------------------------------------

@dataclass
class _RankingInstance:
    record: ReactionRecord
    candidates: list[Candidate]
    true_index: int


def _truth_index(rec: ReactionRecord, candidates: list[Candidate]) -> int | None:
    for i, cand in enumerate(candidates):
        if cand.edits == rec.true_edits:
            return i
    return None


def _build_instances(records: list[ReactionRecord], center: CenterModel | None,
                     cfg: RunConfig) -> list[_RankingInstance]:
    gen_cfg = cfg.gen_config()
    instances = []
    for rec in records:
        if center is None:
            pairs = list(rec.true_edits.pairs)  # oracle centers
        else:
            matrix = center.score_matrix(rec.reactants)
            pairs = top_k_pairs(matrix, cfg.k)
        result = enumerate_candidates(rec.reactants, pairs, gen_cfg)
        candidates = result.candidates
        idx = _truth_index(rec, candidates)
        if idx is None and cfg.augment_truth:
            candidates = candidates + [Candidate(rec.true_edits, rec.reactants)]
            idx = len(candidates) - 1
        if idx is None or not candidates:
            logger.warning("true product not among candidates; record skipped "
                           "for ranker training: %s", rec.raw[:80])
            continue
        instances.append(_RankingInstance(rec, candidates, idx))
    return instances


def _instance_scores(model: RankerModel, inst: _RankingInstance) -> de.DTensor:
    c_r = model.embed_reactants(inst.record.reactants)
    return de.stack_rows([
        model.score_candidate(inst.record.reactants, cand, reactant_embedding=c_r)
        for cand in inst.candidates])


def _ranker_p1(model: RankerModel, instances: list[_RankingInstance]) -> float:
    """Fraction of instances whose top-scored candidate matches the truth.

    Matching is product-level (edit-set equality or WL equivalence): scorers
    are permutation invariant, so candidates producing isomorphic products tie
    exactly and the atom-mapped edit indices alone cannot split them.
    """
    if not instances:
        return 0.0
    hits = 0
    for inst in instances:
        values = _instance_scores(model, inst).values[:, 0]
        best = int(np.argmax(values))  # argmax takes the earliest on ties
        hits += int(best == inst.true_index
                    or _product_matches(inst.record, inst.candidates[best]))
    return hits / len(instances)


def train_ranker(cfg: RunConfig) -> TrainResult:
    """Train the candidate scorer with the softmax ranking objective.

    Candidate lists come from a trained center checkpoint (``cfg.center``) or
    from oracle centers (``cfg.center`` unset or ``"oracle"``); with
    ``augment_truth`` the true product is inserted whenever enumeration
    missed it.
    """
    if cfg.variant not in ("wln", "wldn"):
        raise ValueError("ranker training needs variant 'wln' or 'wldn'")
    if cfg.data is None or cfg.out is None:
        raise ValueError("train_ranker needs cfg.data and cfg.out")
    records = load_dataset(cfg.data, cfg.max_atoms)
    train, dev, _ = split_records(records, cfg.split)
    if not train:
        raise ValueError("training split is empty")
    center = None
    if cfg.center and cfg.center != "oracle":
        center = CenterModel.load(cfg.center)
    train_inst = _build_instances(train, center, cfg)
    dev_inst = _build_instances(dev, center, cfg) if dev else []
    if not train_inst:
        raise ValueError("no usable ranking instances (centers never cover the truth?)")

    model = RankerModel.create(cfg.variant, cfg.hidden, cfg.depth, cfg.seed,
                               cfg.include_charge, cfg.activation)
    model.store.metadata.update(k=str(cfg.k), max_changes=str(cfg.max_changes))
    adam = de.AdamState(model.store, lr=cfg.lr, decay=cfg.decay)
    rng = np.random.default_rng(cfg.seed)

    result = TrainResult(checkpoint=cfg.out)
    best_metric = -1.0
    best_values = model.store.clone_values()
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(train_inst))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch):
            model.store.zero_grads()
            for idx in order[start:start + cfg.batch]:
                inst = train_inst[idx]
                loss = rank_loss(_instance_scores(model, inst), inst.true_index)
                de.backward(loss)
                epoch_loss += loss.item()
            de.adam_step(model.store, adam)
        if not np.isfinite(epoch_loss):
            raise FloatingPointError(f"training diverged at epoch {epoch}")
        train_p1 = _ranker_p1(model, train_inst)
        dev_p1 = _ranker_p1(model, dev_inst) if dev_inst else None
        metric = dev_p1 if dev_inst else train_p1
        if metric > best_metric:
            best_metric = metric
            best_values = model.store.clone_values()
            result.best_epoch = epoch
        result.history.append({"epoch": epoch, "loss": epoch_loss,
                               "train_p1": train_p1, "dev_p1": dev_p1})
        logger.info("ranker epoch %d: loss %.4f train P@1 %.3f dev P@1 %s",
                    epoch, epoch_loss, train_p1,
                    f"{dev_p1:.3f}" if dev_p1 is not None else "-")
        if cfg.target_train_p1 is not None and train_p1 >= cfg.target_train_p1:
            break
        adam.end_epoch()
    model.store.load_values(best_values)
    model.save(cfg.out)
    return result


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------

@dataclass
class PredictedProduct:
    smiles: str
    score: float
    edits: list[tuple[int, int, str]]  # atom maps (or indices) + new bond name


@dataclass
class PredictResult:
    reactants: str
    top_pairs: list[tuple[int, int]]
    n_candidates: int
    truncated: bool
    products: list[PredictedProduct]
    reason: str | None = None      # set when no candidates could be produced


def predict(reactants_smiles: str, center: CenterModel, ranker: RankerModel,
            k: int = 6, top_n: int = 5, max_changes: int = 3,
            max_candidates: int = 2000) -> PredictResult:
    """Full pipeline: score pairs, enumerate within the top-K, rank, serialize.

    Atom maps are optional on input; unmapped atoms are numbered by index.
    """
    g = parse_smiles(reactants_smiles)
    if any(a.map_number is None for a in g.atoms):
        atoms = [a.copy() for a in g.atoms]
        for i, atom in enumerate(atoms):
            atom.map_number = i + 1
        from .chemgraph import make_graph
        g = make_graph(atoms, [(b.u, b.v, b.bond_type) for b in g.bonds])

    if g.n_atoms < 2:
        return PredictResult(reactants_smiles, [], 0, False, [],
                             reason="fewer than two atoms: no pairs to score")
    matrix = center.score_matrix(g)
    pairs = top_k_pairs(matrix, k)
    gen_cfg = GenConfig(k=max(k, max_changes), max_changes=max_changes,
                        max_candidates=max_candidates)
    result = enumerate_candidates(g, pairs, gen_cfg)
    if not result.candidates:
        return PredictResult(reactants_smiles, pairs, 0, result.truncated, [],
                             reason="every enumerated edit was filtered out")
    ranked = rank_candidates(g, result.candidates, ranker)
    products = []
    for cand in ranked[:top_n]:
        keep = [i for i in range(cand.product.n_atoms)
                if cand.product.component[i] in _edited_components(cand.product, cand.edits)]
        smiles = write_smiles(induced_subgraph(cand.product, keep))
        edits = [(_map_of(g, e.u), _map_of(g, e.v), e.bond_type.name.lower())
                 for e in cand.edits]
        products.append(PredictedProduct(smiles, float(cand.score), edits))
    return PredictResult(reactants_smiles, pairs, len(result.candidates),
                         result.truncated, products)


def _edited_components(product: MolGraph, edits: EditSet) -> set[int]:
    return {product.component[a] for a in edits.atoms()}


def _map_of(g: MolGraph, idx: int) -> int:
    m = g.atoms[idx].map_number
    return m if m is not None else idx + 1


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    n_records: int
    coverage_at: dict[int, float]
    p_at: dict[int, float]
    mrr: float
    avg_candidates: float
    truncated: int
    median_latency_ms: float
    p95_latency_ms: float

    def lines(self, include_timing: bool = True) -> list[str]:
        """Machine-readable key=value lines; timing excluded on request so
        reports from identical runs compare bitwise."""
        out = [f"records={self.n_records}"]
        for k in sorted(self.coverage_at):
            out.append(f"coverage@{k}={self.coverage_at[k]:.6f}")
        for k in sorted(self.p_at):
            out.append(f"p@{k}={self.p_at[k]:.6f}")
        out.append(f"mrr={self.mrr:.6f}")
        out.append(f"avg_candidates={self.avg_candidates:.3f}")
        out.append(f"truncated={self.truncated}")
        if include_timing:
            out.append(f"candgen_latency_ms_median={self.median_latency_ms:.3f}")
            out.append(f"candgen_latency_ms_p95={self.p95_latency_ms:.3f}")
        return out

    def table(self) -> str:
        rows = [("records", str(self.n_records))]
        rows += [(f"coverage@{k}", f"{v:.1%}") for k, v in sorted(self.coverage_at.items())]
        rows += [(f"P@{k}", f"{v:.1%}") for k, v in sorted(self.p_at.items())]
        rows += [("MRR", f"{self.mrr:.4f}"),
                 ("avg candidates", f"{self.avg_candidates:.1f}"),
                 ("truncated lists", str(self.truncated)),
                 ("candgen median", f"{self.median_latency_ms:.2f} ms"),
                 ("candgen p95", f"{self.p95_latency_ms:.2f} ms")]
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def _product_matches(rec: ReactionRecord, cand: Candidate) -> bool:
    """Primary criterion: edit-set equality. Fallback: WL equivalence between
    the candidate product molecule(s) holding the recorded product's atoms and
    the recorded product graph (whole components, so a surviving bond to an
    atom outside the recorded product still counts as a mismatch)."""
    if cand.edits == rec.true_edits:
        return True
    p_maps = {a.map_number for a in rec.product.atoms}
    mapped_idx = [i for i, a in enumerate(rec.reactants.atoms) if a.map_number in p_maps]
    comps = {cand.product.component[i] for i in mapped_idx}
    union = induced_subgraph(cand.product, [
        i for i in range(cand.product.n_atoms) if cand.product.component[i] in comps])
    return wl_equivalent(union, rec.product, depth=3)


def evaluate(records: list[ReactionRecord], center: CenterModel,
             ranker: RankerModel, cfg: RunConfig | None = None) -> EvalReport:
    """Coverage, precision-at-rank, MRR, and candidate-generation latency.

    With ``cfg.augment_truth`` the true product joins the candidate list
    whenever enumeration missed it (the starred protocol).
    """
    cfg = cfg or RunConfig()
    gen_cfg = cfg.gen_config()
    ks = sorted(set(cfg.eval_ks) | {cfg.k})
    cover_hits = {k: 0 for k in ks}
    ranks: list[float] = []
    latencies: list[float] = []
    n_cands: list[int] = []
    truncated = 0
    for rec in records:
        matrix = center.score_matrix(rec.reactants)
        for k in ks:
            if coverage(top_k_pairs(matrix, k), rec.labels):
                cover_hits[k] += 1
        pairs = top_k_pairs(matrix, cfg.k)
        t0 = time.perf_counter()
        result = enumerate_candidates(rec.reactants, pairs, gen_cfg)
        latencies.append((time.perf_counter() - t0) * 1000.0)
        truncated += int(result.truncated)
        candidates = result.candidates
        if cfg.augment_truth and _truth_index(rec, candidates) is None:
            candidates = candidates + [Candidate(rec.true_edits, rec.reactants)]
        n_cands.append(len(candidates))
        rank = None
        if candidates:
            ranked = rank_candidates(rec.reactants, candidates, ranker)
            for pos, cand in enumerate(ranked, 1):
                if _product_matches(rec, cand):
                    rank = pos
                    break
        ranks.append(1.0 / rank if rank else 0.0)

    n = len(records)
    return EvalReport(
        n_records=n,
        coverage_at={k: cover_hits[k] / n for k in ks} if n else {k: 0.0 for k in ks},
        p_at={k: (sum(1 for r in ranks if r >= 1.0 / k) / n if n else 0.0)
              for k in (1, 3, 5)},
        mrr=float(np.mean(ranks)) if ranks else 0.0,
        avg_candidates=float(np.mean(n_cands)) if n_cands else 0.0,
        truncated=truncated,
        median_latency_ms=float(np.percentile(latencies, 50)) if latencies else 0.0,
        p95_latency_ms=float(np.percentile(latencies, 95)) if latencies else 0.0,
    )
