import math

import numpy as np
import pytest

from rxnpred import diffengine as de
from rxnpred.candgen import BondEdit
from rxnpred.center import (CenterModel, PairLabels, Reaction, center_loss,
                            coverage, label_pairs, pair_feature_matrix,
                            reaction_edits, top_k_pairs, upper_pairs)
from rxnpred.chemgraph import BondType, parse_smiles


def reaction(reactants, product):
    return Reaction(parse_smiles(reactants), parse_smiles(product))


def by_maps(g, *pairs):
    """Translate map-number pairs into index pairs."""
    m = g.map_to_index()
    return {(min(m[a], m[b]), max(m[a], m[b])) for a, b in pairs}


class TestLabels:
    def test_substitution_labels(self):
        rxn = reaction("[CH3:1][Cl:2].[NH2:3][CH3:4]", "[CH3:1][NH:3][CH3:4]")
        labels = label_pairs(rxn)
        assert labels.positive == frozenset(
            by_maps(rxn.reactants, (1, 2), (1, 3)))

    def test_identity_reaction_all_zero(self):
        rxn = reaction("[CH3:1][OH:2]", "[CH3:1][OH:2]")
        assert label_pairs(rxn).positive == frozenset()

    def test_ring_forming_three_pair_center(self):
        rxn = reaction(
            "[cH:7]1[cH:2][cH:3][cH:4][cH:5][cH:8]1.[CH3:27][Cl:28]",
            "[c:7]12[cH:2][cH:3][cH:4][cH:5][c:8]1:[CH2:27]:2.[Cl:28]")
        labels = label_pairs(rxn)
        assert labels.positive == frozenset(
            by_maps(rxn.reactants, (27, 28), (7, 27), (8, 27)))
        edits = reaction_edits(rxn)
        m = rxn.reactants.map_to_index()
        assert BondEdit(min(m[7], m[27]), max(m[7], m[27]), BondType.AROMATIC) in edits.edits

    def test_reagent_components_stay_zero(self):
        # the ether is a spectator: absent from the product on both ends
        rxn = reaction("[CH3:1][Cl:2].COC", "[CH3:1]")
        labels = label_pairs(rxn)
        assert labels.positive == frozenset(by_maps(rxn.reactants, (1, 2)))

    def test_departed_fragment_internal_bonds_unchanged(self):
        # the whole mapped ethyl fragment leaves; only the attachment breaks
        rxn = reaction("[CH3:1][CH2:2][CH3:3]", "[CH3:1]")
        labels = label_pairs(rxn)
        assert labels.positive == frozenset(by_maps(rxn.reactants, (1, 2)))

    def test_unmapped_product_atom_rejected(self):
        rxn = reaction("[CH3:1][OH:2]", "C[OH:2]")
        with pytest.raises(ValueError):
            label_pairs(rxn)

    def test_unknown_product_map_rejected(self):
        rxn = reaction("[CH3:1][OH:2]", "[CH3:1][OH:9]")
        with pytest.raises(ValueError):
            label_pairs(rxn)

    def test_matrix_symmetry(self):
        rxn = reaction("[CH3:1][Cl:2].[NH2:3][CH3:4]", "[CH3:1][NH:3][CH3:4]")
        m = label_pairs(rxn).matrix()
        assert np.array_equal(m, m.T)
        assert not m.diagonal().any()


class TestPairFeatures:
    def test_bond_slot_and_molecule_flag(self):
        g = parse_smiles("CC.O")
        feats = pair_feature_matrix(g, [(0, 1), (0, 2), (2, 2)])
        assert feats[0].tolist() == [0, 1, 0, 0, 0, 1]  # bonded, same molecule
        assert feats[1].tolist() == [1, 0, 0, 0, 0, 0]  # no bond, different
        assert feats[2].tolist() == [1, 0, 0, 0, 0, 1]  # self pair: none + same

    def test_symmetric_in_pair_order(self):
        g = parse_smiles("C=CC")
        a = pair_feature_matrix(g, [(0, 1)])
        b = pair_feature_matrix(g, [(1, 0)])
        assert np.array_equal(a, b)


class TestScoring:
    def test_zero_head_gives_half_everywhere(self):
        model = CenterModel.create("local", hidden=8, depth=2, seed=0)
        model.store["score.u"].values[:] = 0.0
        matrix = model.score_matrix(parse_smiles("CC(=O)N"))
        off_diag = matrix[~np.eye(4, dtype=bool)]
        assert np.all(off_diag == 0.5)

    def test_score_matrix_symmetry_bitwise(self):
        for variant in ("local", "global"):
            model = CenterModel.create(variant, hidden=8, depth=2, seed=1)
            matrix = model.score_matrix(parse_smiles("CC(=O)N.c1ccccc1"))
            assert np.array_equal(matrix, matrix.T)

    def test_degenerate_attention_reduces_to_pair_features(self):
        # with zero context the head must equal sigmoid(u . act(Mb b + bias))
        model = CenterModel.create("global", hidden=8, depth=2, seed=2)
        g = parse_smiles("CC")
        pairs = upper_pairs(2)
        bf = pair_feature_matrix(g, pairs)
        zero = de.constant(np.zeros((len(pairs), model.hidden)))
        got = model._head(zero, zero, de.constant(bf),
                          "score.Ma", "score.Mb", "score.bias", "score.u").values
        z = np.maximum(bf @ model.store["score.Mb"].values
                       + model.store["score.bias"].values, 0.0)
        expect = 1.0 / (1.0 + np.exp(-(z @ model.store["score.u"].values)))
        assert np.allclose(got, expect, atol=1e-12)

    def test_single_atom_context_is_self_attention(self):
        model = CenterModel.create("global", hidden=8, depth=2, seed=3)
        g = parse_smiles("[CH4:1]")
        from rxnpred.wln import embed_from_features, graph_inputs
        gi = graph_inputs(g)
        c = embed_from_features(gi, gi.features, model.wln)
        context, alpha = model._attention_context(g, c)
        assert np.allclose(context.values, alpha.values[0, 0] * c.values, atol=1e-15)

    def test_attention_entries_in_unit_interval(self):
        model = CenterModel.create("global", hidden=8, depth=2, seed=4)
        alpha = model.attention_map(parse_smiles("CC(=O)N.FB(F)F"))
        assert np.all((alpha > 0.0) & (alpha < 1.0))

    def test_global_sees_disconnected_reagent_local_does_not(self):
        base = "CC(=O)CCN.FB(F)F"
        changed = "CC(=O)CCN.ClS(Cl)Cl"  # perturb only the reagent component
        g1, g2 = parse_smiles(base), parse_smiles(changed)
        core_pairs = [(u, v) for u in range(6) for v in range(u + 1, 6)]

        local = CenterModel.create("local", hidden=8, depth=2, seed=5)
        m1 = local.score_matrix(g1)
        m2 = local.score_matrix(g2)
        for u, v in core_pairs:
            assert m1[u, v] == m2[u, v]  # beyond any core pair's receptive field

        global_model = CenterModel.create("global", hidden=8, depth=2, seed=5)
        m1 = global_model.score_matrix(g1)
        m2 = global_model.score_matrix(g2)
        assert any(m1[u, v] != m2[u, v] for u, v in core_pairs)


class TestLoss:
    def test_uniform_scores_give_pairs_times_ln2(self):
        n = 5
        n_pairs = n * (n - 1) // 2
        labels = PairLabels(n, frozenset({(0, 1)}))
        scores = np.full((n, n), 0.5)
        loss = center_loss(scores, labels).item()
        assert abs(loss - n_pairs * math.log(2)) < 1e-12

    def test_perfect_scores_near_zero(self):
        labels = PairLabels(3, frozenset({(0, 2)}))
        matrix = np.zeros((3, 3))
        matrix[0, 2] = matrix[2, 0] = 1.0
        loss = center_loss(matrix, labels).item()
        assert 0.0 <= loss <= 3 * 1e-11

    def test_hand_computed_three_atom_instance(self):
        labels = PairLabels(3, frozenset({(0, 1)}))
        matrix = np.zeros((3, 3))
        vals = {(0, 1): 0.9, (0, 2): 0.2, (1, 2): 0.4}
        for (u, v), s in vals.items():
            matrix[u, v] = matrix[v, u] = s
        expected = -(math.log(0.9) + math.log(0.8) + math.log(0.6))
        assert abs(center_loss(matrix, labels).item() - expected) < 1e-12

    def test_gradient_against_differences(self):
        model = CenterModel.create("local", hidden=6, depth=2, seed=6)
        g = parse_smiles("CC(=O)N")
        labels = PairLabels(4, frozenset({(0, 1), (2, 3)}))

        def f(_):
            scores, _pairs = model.pair_scores(g)
            return center_loss(scores, labels)

        assert de.grad_check(f, model.store, h=1e-5,
                             rng=np.random.default_rng(0)) < 1e-4


class TestTopKAndCoverage:
    def test_unique_max(self):
        m = np.zeros((4, 4))
        m[1, 3] = m[3, 1] = 0.9
        assert top_k_pairs(m, 1) == [(1, 3)]

    def test_tie_break_is_lexicographic(self):
        m = np.full((4, 4), 0.7)
        assert top_k_pairs(m, 2) == [(0, 1), (0, 2)]

    def test_k_beyond_pair_count_returns_all(self):
        m = np.zeros((3, 3))
        assert len(top_k_pairs(m, 99)) == 3

    def test_agrees_with_sort_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            n = 20
            sym = rng.random((n, n))
            sym = (sym + sym.T) / 2
            np.fill_diagonal(sym, 0.0)
            k = int(rng.integers(1, 30))
            got = top_k_pairs(sym, k)
            ranked = sorted(((u, v) for u in range(n) for v in range(u + 1, n)),
                            key=lambda p: (-sym[p], p))
            assert got == ranked[:k]

    def test_coverage_cases(self):
        empty = PairLabels(4, frozenset())
        assert coverage([], empty)
        truth = PairLabels(5, frozenset({(1, 2)}))
        assert coverage([(3, 4), (2, 1)], truth)
        assert not coverage([(3, 4)], truth)

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            top_k_pairs(np.zeros((3, 3)), 0)

    def test_batch_coverage_fraction_matches_hand_count(self):
        # ten fixed cases: the true pair's score rank decides coverage@2
        hits = 0
        expected_hits = 0
        for case in range(10):
            n = 5
            m = np.zeros((n, n))
            order = [(u, v) for u in range(n) for v in range(u + 1, n)]
            for rank, (u, v) in enumerate(order):
                m[u, v] = m[v, u] = 1.0 - 0.01 * rank
            truth_pair = order[case % len(order)]
            truth = PairLabels(n, frozenset({truth_pair}))
            hits += int(coverage(top_k_pairs(m, 2), truth))
            expected_hits += int(order.index(truth_pair) < 2)  # hand count
        assert hits == expected_hits == 2
