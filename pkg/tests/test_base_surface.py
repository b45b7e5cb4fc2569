import pytest

from qconic import germs as G
from qconic.base_surface import (
    BasePoint,
    BaseTree,
    Branch,
    CrepantExtract,
    OrdinaryBlowup,
    WeightedBlowup,
    apply_modification,
    check_rational_components,
    classify_point_by_discriminant,
    dual_graph_of_germ,
    minimal_resolution_chain,
)
from qconic.errors import IllegalModification, ScenarioError, Undecidable, UnknownGraph


def tree_with(pid, germ):
    t = BaseTree()
    t.points[pid] = BasePoint(pid, G.base_index(germ), germ)
    return t


class TestChains:
    def test_empty(self):
        assert minimal_resolution_chain(0).vertices == []

    def test_a3(self):
        g = minimal_resolution_chain(3)
        assert g.is_chain(3)
        assert all(v.self_intersection == -2 for v in g.vertices)

    def test_iterated_t_splits_give_a4_chain(self):
        t = tree_with("p", G.T(5, 2))
        t, ids = apply_modification(t, "p", CrepantExtract((2, 3)),
                                    [G.T(2, 1), G.T(3, 2)])
        t, _ = apply_modification(t, ids[0], CrepantExtract((1, 1)))
        t, ids2 = apply_modification(t, ids[1], CrepantExtract((2, 1)), [G.T(2, 1), G.Smooth()])
        t, _ = apply_modification(t, ids2[0], CrepantExtract((1, 1)))
        assert t.graph.is_chain(4)
        assert all(p.singularity_index == 1 for p in t.points.values())


class TestModifications:
    def test_a4_split(self):
        t, ids = apply_modification(tree_with("p", G.T(5, 2)), "p", CrepantExtract((2, 3)),
                                    [G.T(2, 1), G.T(3, 2)])
        assert [t.points[i].singularity_index for i in ids] == [2, 3]
        assert len(t.graph.vertices) == 1
        assert t.points[ids[0]].right == t.points[ids[1]].left == "G1"

    def test_weighted_blowup_of_smooth_point(self):
        t, ids = apply_modification(tree_with("p", G.Smooth()), "p", WeightedBlowup(1))
        assert [v.self_intersection for v in t.graph.vertices] == [-1]
        assert all(t.points[i].singularity_index == 1 for i in ids)

    def test_ordinary_blowup_lowers_old_curves(self):
        t, ids = apply_modification(tree_with("p", G.Smooth()), "p", OrdinaryBlowup())
        t, _ = apply_modification(t, ids[0], OrdinaryBlowup())
        assert [v.self_intersection for v in t.graph.vertices] == [-2, -1]

    def test_crepant_at_smooth_point(self):
        with pytest.raises(IllegalModification):
            apply_modification(tree_with("p", G.Smooth()), "p", CrepantExtract((1, 1)))

    def test_blowup_at_singular_point(self):
        with pytest.raises(IllegalModification):
            apply_modification(tree_with("p", G.T(3, 1)), "p", OrdinaryBlowup())

    def test_bad_split(self):
        with pytest.raises(IllegalModification):
            apply_modification(tree_with("p", G.T(5, 2)), "p", CrepantExtract((2, 2)))

    def test_index_must_match_germ(self):
        with pytest.raises(IllegalModification):
            BasePoint("p", 3, G.T(5, 2))


class TestGermGraphs:
    def test_iev(self):
        g = dual_graph_of_germ(G.IEdual())
        assert len(g.vertices) == 5
        assert sorted(g.neighbors("Theta0")) == ["Delta2", "Theta1", "Theta2"]
        assert g.neighbors("Delta1") == ["Theta1"]

    def test_k2a(self):
        g = dual_graph_of_germ(G.K2A(5))
        assert len(g.exceptional()) == 4
        assert g.neighbors("Delta1") == ["G1"] and g.neighbors("Delta2") == ["G4"]

    def test_if(self):
        g = dual_graph_of_germ(G.IF())
        assert g.neighbors("Delta1") == ["Delta2"]

    def test_unknown(self):
        with pytest.raises(UnknownGraph):
            dual_graph_of_germ(G.T(5, 2))

    def test_dot_is_deterministic(self):
        a = dual_graph_of_germ(G.IEdual()).to_dot()
        assert a == dual_graph_of_germ(G.IEdual()).to_dot()
        assert a.startswith("graph G {")


class TestClassification:
    def test_t_without_branches(self):
        assert classify_point_by_discriminant(BasePoint("o", 5, G.T(5, 2))).compatible

    def test_if_with_one_smooth_branch(self):
        p = BasePoint("o", 1, G.IF(), [Branch("D")])
        assert not classify_point_by_discriminant(p).compatible

    def test_k2a3_with_two_transversal_branches(self):
        p = BasePoint("o", 3, G.K2A(3), [Branch("D1"), Branch("D2")], True)
        v = classify_point_by_discriminant(p)
        assert v.compatible and v.configuration == "lc-not-plt"

    def test_unknown_smoothness(self):
        with pytest.raises(Undecidable):
            classify_point_by_discriminant(BasePoint("o", 1, G.IF(), [Branch("D", None)]))

    def test_rational_component_rejected(self):
        with pytest.raises(ScenarioError):
            check_rational_components([Branch("D", True, True, 0, 1)])
        check_rational_components([Branch("D", True, True, 1, 1)])
        check_rational_components([Branch("D", True, False)])
