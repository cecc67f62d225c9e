import numpy as np
import pytest

from helpers import permute_graph, random_permutation
from rxnpred.chemgraph import (ATOM_FEATURE_DIM, BOND_FEATURE_DIM, BondType,
                               SmilesError, apply_edits, atom_features,
                               bond_features, induced_subgraph, make_graph,
                               parse_smiles, write_smiles)
from rxnpred.datagen import random_molecule
from rxnpred.wliso import brute_force_isomorphic, wl_equivalent


def maps(g):
    return g.map_to_index()


class TestParse:
    def test_mapped_methanol(self):
        g = parse_smiles("[CH3:1][OH:2]")
        assert g.n_atoms == 2 and g.n_bonds == 1
        c, o = g.atoms
        assert (c.element, c.map_number, c.total_h) == ("C", 1, 3)
        assert (o.element, o.map_number, o.total_h) == ("O", 2, 1)
        assert g.bonds[0].bond_type is BondType.SINGLE

    def test_cyclopropane_all_ring(self):
        g = parse_smiles("C1CC1")
        assert g.n_atoms == 3 and g.n_bonds == 3
        assert all(b.in_ring for b in g.bonds)

    def test_two_components_aromatics_conjugation(self):
        g = parse_smiles("CC(=O)N.c1ccccc1")
        assert g.n_components == 2
        assert sum(a.aromatic for a in g.atoms) == 6
        co = g.bond_between(1, 2)
        assert co.bond_type is BondType.DOUBLE and co.conjugated
        # acetyl C-C is not conjugated: the methyl end has no multiple bond
        assert not g.bond_between(0, 1).conjugated
        assert g.atoms[3].implicit_h == 2  # N: valence 3, one single bond

    def test_ring_closure_percent_and_bond_symbol(self):
        g = parse_smiles("C=1CCCCC=1")
        assert g.bond_between(0, 5).bond_type is BondType.DOUBLE
        g2 = parse_smiles("C%11CCC%11")
        assert g2.bond_between(0, 3) is not None

    def test_charges_and_hcounts(self):
        g = parse_smiles("[NH4+].[O-]C")
        assert g.atoms[0].formal_charge == 1 and g.atoms[0].total_h == 4
        assert g.atoms[1].formal_charge == -1 and g.atoms[1].total_h == 0

    def test_aromatic_default_bonds(self):
        g = parse_smiles("c1ccccc1")
        assert all(b.bond_type is BondType.AROMATIC for b in g.bonds)
        assert all(a.implicit_h == 1 for a in g.atoms)
        biphenyl = parse_smiles("c1ccccc1-c1ccccc1")
        link = biphenyl.bond_between(5, 6) or biphenyl.bond_between(0, 6)
        assert link.bond_type is BondType.SINGLE

    def test_stereo_read_as_single(self):
        g = parse_smiles("C/C=C/C")
        assert g.bond_between(0, 1).bond_type is BondType.SINGLE
        assert g.bond_between(1, 2).bond_type is BondType.DOUBLE

    @pytest.mark.parametrize("bad,offset", [
        ("C(", 1), ("C)", 1), ("C1CC", 1), ("C=", 1), ("C..C", 2),
        ("[CH3", 0), ("C%1C", 1), ("C==C", 2),
    ])
    def test_syntax_errors_carry_offset(self, bad, offset):
        with pytest.raises(SmilesError) as err:
            parse_smiles(bad)
        assert err.value.offset == offset

    def test_bare_element_outside_organic_subset(self):
        with pytest.raises(SmilesError):
            parse_smiles("CQ")
        # bracketed unknown elements are tolerated (unknown feature bucket)
        g = parse_smiles("[Zr]")
        assert g.atoms[0].element == "Zr"

    def test_valence_violation_is_warning_not_error(self):
        g = parse_smiles("C(=O)(=O)=O")
        assert 0 in g.valence_warnings
        assert parse_smiles("CC").valence_warnings == ()

    def test_duplicate_map_numbers_detected(self):
        g = parse_smiles("[CH3:1][OH:1]")
        with pytest.raises(ValueError):
            g.map_to_index()


class TestWrite:
    def test_single_atom(self):
        assert write_smiles(parse_smiles("C")) == "C"

    def test_three_cycle_forced_form(self):
        g = make_graph(
            [parse_smiles("C").atoms[0] for _ in range(3)],
            [(0, 1, BondType.SINGLE), (1, 2, BondType.SINGLE), (0, 2, BondType.SINGLE)])
        assert write_smiles(g) == "C1CC1"

    def test_round_trip_preserves_graph(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            g = random_molecule(rng)
            back = parse_smiles(write_smiles(g))
            assert wl_equivalent(g, back, depth=3)
            if g.n_atoms <= 8:
                assert brute_force_isomorphic(g, back)

    def test_round_trip_keeps_maps_and_charges(self):
        g = parse_smiles("[O-][C:3](=O)c1cc[nH+]cc1")
        back = parse_smiles(write_smiles(g))
        assert sorted(a.formal_charge for a in back.atoms) == sorted(
            a.formal_charge for a in g.atoms)
        assert maps(back).keys() == maps(g).keys()


class TestFeatures:
    def test_methane_features(self):
        g = parse_smiles("[CH4:1]")
        f = atom_features(g, 0)
        assert f.shape == (ATOM_FEATURE_DIM,)
        assert f[0] == 1.0                     # element slot 0 is carbon
        element_slots = 14
        assert f[element_slots + 0] == 1.0     # degree 0
        assert f[element_slots + 6 + 4] == 1.0  # total H clamped slot 4
        assert f[-1] == 0.0                    # not aromatic

    def test_benzene_carbon(self):
        g = parse_smiles("c1ccccc1")
        f = atom_features(g, 0)
        assert f[-1] == 1.0
        assert f[14 + 2] == 1.0  # degree 2

    def test_amide_nitrogen_h_count(self):
        g = parse_smiles("CC(=O)N")
        f = atom_features(g, 3)
        assert f[1] == 1.0        # nitrogen slot
        assert f[14 + 6 + 2] == 1.0  # two hydrogens

    def test_bond_features(self):
        cc = bond_features(parse_smiles("CC"), 0)
        assert cc.tolist() == [1, 0, 0, 0, 0, 0]
        benz = parse_smiles("c1ccccc1")
        assert bond_features(benz, 0).tolist() == [0, 0, 0, 1, 1, 1]
        enone = parse_smiles("CC(=O)C=C")
        co_index = next(i for i, b in enumerate(enone.bonds)
                        if enone.atoms[b.u].element == "O" or enone.atoms[b.v].element == "O")
        f = bond_features(enone, co_index)
        assert f.tolist() == [0, 1, 0, 0, 1, 0]
        assert f.shape == (BOND_FEATURE_DIM,)


class TestApplyEdits:
    def test_substitution_with_leaving_group(self):
        g = parse_smiles("[CH3:1][Cl:2].[NH2:3][CH3:4]")
        out = apply_edits(g, [(0, 1, BondType.NONE), (0, 2, BondType.SINGLE)])
        assert out.n_components == 2
        assert out.bond_between(0, 1) is None
        assert out.bond_between(0, 2).bond_type is BondType.SINGLE
        # chlorine is left behind as its own component
        cl = next(i for i, a in enumerate(out.atoms) if a.element == "Cl")
        assert out.adjacency[cl] == []

    def test_empty_edit_set_is_identity(self):
        g = parse_smiles("CC(=O)N")
        out = apply_edits(g, [])
        assert write_smiles(out) == write_smiles(g)

    def test_ring_forming_mapped_edits(self):
        # A three-edit center: one detachment plus two new aromatic bonds
        # closing a ring through the mapped atom 27.
        reactants = parse_smiles("[cH:7]1[cH:2][cH:3][cH:4][cH:5][cH:8]1.[CH3:27][Cl:28]")
        m = maps(reactants)
        edited = apply_edits(reactants, [
            (m[27], m[28], BondType.NONE),
            (m[7], m[27], BondType.AROMATIC),
            (m[8], m[27], BondType.AROMATIC),
        ])
        em = maps(edited)
        expected_bonds = {
            (2, 3): BondType.AROMATIC, (3, 4): BondType.AROMATIC,
            (4, 5): BondType.AROMATIC, (5, 8): BondType.AROMATIC,
            (2, 7): BondType.AROMATIC, (7, 8): BondType.AROMATIC,
            (7, 27): BondType.AROMATIC, (8, 27): BondType.AROMATIC,
        }
        got = {}
        for b in edited.bonds:
            mu, mv = edited.atoms[b.u].map_number, edited.atoms[b.v].map_number
            got[(min(mu, mv), max(mu, mv))] = b.bond_type
        assert got == expected_bonds
        assert edited.adjacency[em[28]] == []

    def test_purity_and_repeatability(self):
        g = parse_smiles("CCN")
        before = write_smiles(g)
        edits = [(0, 1, BondType.DOUBLE)]
        out1 = apply_edits(g, edits)
        out2 = apply_edits(g, edits)
        assert write_smiles(g) == before
        assert write_smiles(out1) == write_smiles(out2)

    def test_disjoint_edits_commute(self):
        g = parse_smiles("CCCCCC")
        e1 = [(0, 1, BondType.DOUBLE)]
        e2 = [(3, 4, BondType.NONE)]
        a = apply_edits(apply_edits(g, e1), e2)
        b = apply_edits(g, e1 + e2)
        assert write_smiles(a) == write_smiles(b)

    def test_error_cases(self):
        g = parse_smiles("CC")
        with pytest.raises(ValueError):
            apply_edits(g, [(0, 0, BondType.SINGLE)])
        with pytest.raises(ValueError):
            apply_edits(g, [(0, 1, BondType.SINGLE)])  # same as current
        with pytest.raises(ValueError):
            apply_edits(g, [(0, 5, BondType.SINGLE)])


class TestDerivedInvariants:
    def test_implicit_h_formula(self):
        from rxnpred.chemgraph import valence_for_h
        rng = np.random.default_rng(5)
        for _ in range(30):
            g = random_molecule(rng)
            for i, atom in enumerate(g.atoms):
                half = sum(g.bonds[bi].bond_type.half_order for _, bi in g.adjacency[i])
                expect = max(0, valence_for_h(atom.element, atom.formal_charge)
                             - half // 2 - (atom.explicit_h or 0))
                assert atom.implicit_h == expect

    def test_ring_flags_invariant_under_relabeling(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            g = random_molecule(rng)
            perm = random_permutation(rng, g.n_atoms)
            pg = permute_graph(g, perm)
            ring_pairs = {(min(perm[b.u], perm[b.v]), max(perm[b.u], perm[b.v]))
                          for b in g.bonds if b.in_ring}
            ring_pairs_p = {(b.u, b.v) for b in pg.bonds if b.in_ring}
            assert ring_pairs == ring_pairs_p

    def test_adjacency_round_trip(self):
        g = parse_smiles("CC(C)C(=O)OC")
        for i, adj in enumerate(g.adjacency):
            for nbr, bi in adj:
                bond = g.bonds[bi]
                assert {bond.u, bond.v} == {i, nbr}

    def test_induced_subgraph(self):
        g = parse_smiles("CC(=O)N.c1ccccc1")
        ring = [i for i in range(g.n_atoms) if g.atoms[i].aromatic]
        sub = induced_subgraph(g, ring)
        assert sub.n_atoms == 6 and sub.n_bonds == 6
        assert all(b.in_ring for b in sub.bonds)
