from fractions import Fraction as F

import pytest

from qconic import germs as G
from qconic.base_surface import CrepantExtract, WeightedBlowup
from qconic.errors import (
    BadParameter,
    BirationalTag,
    GorensteinNoMd,
    MissingParams,
    TagParseError,
    UnsupportedGerm,
)

TAGS = ["std", "std(ll)", "std(dl)", "gor", "IF", "T(5,2)", "k2A(5)", "IEv", "IAv",
        "IAv+IAv", "IIv", "IIv+IIv", "ID(2)", "ID(1,k=3)", "ID(0,k=2,sq)", "ID(0,k=2,nsq)"]


@pytest.mark.parametrize("tag", TAGS)
def test_tag_round_trip(tag):
    assert G.parse_tag(tag).tag == tag


@pytest.mark.parametrize("bad", ["T(4,2)", "k2A(4)", "ID(1,k=1)", "nonsense", "T(3)"])
def test_bad_tags(bad):
    with pytest.raises(TagParseError):
        G.parse_tag(bad)


def test_t_symmetry():
    assert G.equivalent(G.T(7, 2), G.T(7, 5))
    assert not G.equivalent(G.T(7, 2), G.T(7, 3))


class TestInvariants:
    def test_t52(self):
        inv = G.germ_invariants(G.T(5, 2))
        assert inv.difficulty.value == 8
        assert inv.base_index == 5
        assert inv.k_dot_c == (F(-2, 5),)

    def test_iev(self):
        inv = G.germ_invariants(G.IEdual())
        assert inv.difficulty.value == 7
        assert inv.base_index == 4
        assert str(inv.non_gorenstein_points[0]) == "1/8(1,3,5)"

    def test_smooth(self):
        assert G.difficulty(G.Smooth()).value == 0

    @pytest.mark.parametrize("g,d", [(G.K2A(7), 12), (G.IAdual(), 3), (G.IAdualPlusIAdual(), 3),
                                     (G.ID(2), 1), (G.ID(1, 2), 2), (G.ID(0, 2, True), 2),
                                     (G.ID(0, 2, False), 1)])
    def test_table(self, g, d):
        assert G.difficulty(g).value == d

    def test_id0_without_flag_is_a_disjunction(self):
        assert G.difficulty(G.ID(0, 3)).values == frozenset({1, 2})

    def test_iidual_lower_bound(self):
        d = G.difficulty(G.IIdual())
        assert d.lower == 3 and d.max is None

    def test_birational_tag(self):
        with pytest.raises(BirationalTag):
            G.germ_invariants(G.IC(5))


class TestBlowupData:
    def test_ic5(self):
        b = G.kawamata_blowup_data(G.IC(5))
        assert b.weights == (F(2, 5), F(3, 5), F(1, 5))
        assert (b.e_dot_c, b.k_tilde_dot_c) == (1, 0)

    def test_kad5(self):
        b = G.kawamata_blowup_data(G.KAD(5))
        assert b.weights == (F(2, 5), F(1, 5), F(3, 5))
        assert (b.e_dot_c, b.k_tilde_dot_c) == (F(1, 2), 0)

    def test_k2a_general(self):
        b = G.kawamata_blowup_data(None, {"r": 5, "a": 4, "m": 3, "b": 2, "k": 1})
        assert b.e_dot_c == F(1, 4)
        assert -b.k_tilde_dot_c == F(5, 12)

    def test_k2a_general_needs_params(self):
        with pytest.raises(MissingParams):
            G.kawamata_blowup_data(None, {"r": 5})

    def test_iidual(self):
        with pytest.raises(UnsupportedGerm):
            G.kawamata_blowup_data(G.IIdual())

    def test_t_matches_formula(self):
        b = G.kawamata_blowup_data(G.T(5, 2))
        assert b.k_tilde_dot_c == G.k_after_blowup(F(-2, 5), 5, b.e_dot_c) == F(-1, 5)


@pytest.mark.parametrize("args,expected", [((F(-2, 5), 5, 1), F(-1, 5)), ((F(-1), 2, 1), F(-1, 2)),
                                           ((F(3, 7), 4, 0), F(3, 7))])
def test_k_after_blowup(args, expected):
    assert G.k_after_blowup(*args) == expected


class TestLinks:
    def test_t52(self):
        res = G.md_link(G.T(5, 2))
        assert [g.tag for _, g in res.new_fibers] == ["T(2,1)", "T(3,2)"]
        assert isinstance(res.base_modification, CrepantExtract)
        assert res.base_modification.parts == (2, 3)
        assert res.flips == 1 and res.discriminant_rule == "ProperTransform"

    def test_k2a5(self):
        res = G.md_link(G.K2A(5))
        assert dict(res.new_fibers) == {"o'": G.K2A(3), "o''": G.ID(2)}
        assert res.discriminant_rule == "ProperPlusGamma"
        assert res.unspecified_tail

    def test_k2a3_gives_standard_double_line(self):
        assert dict(G.md_link(G.K2A(3)).new_fibers)["o'"] == G.StandardDegenerate(True)

    def test_if(self):
        res = G.md_link(G.IF())
        assert res.flops == 1 and res.flips == 0
        assert isinstance(res.base_modification, WeightedBlowup)
        assert all(isinstance(g, G.StandardDegenerate) for _, g in res.new_fibers)

    @pytest.mark.parametrize("g,rule", [(G.ID(2), "TotalSetTheoreticPreimage"),
                                        (G.ID(1, 3), "ProperTransform"),
                                        (G.ID(0, 2, True), "ProperTransform"),
                                        (G.ID(0, 2, False), "TotalSetTheoreticPreimage"),
                                        (G.IAdual(), "TotalSetTheoreticPreimage"),
                                        (G.IAdualPlusIAdual(), "ProperPlusGamma"),
                                        (G.IEdual(), "ProperTransform")])
    def test_delta_rules(self, g, rule):
        assert G.md_link(g).discriminant_rule == rule

    def test_iaia_flip_has_two_components(self):
        res = G.md_link(G.IAdualPlusIAdual())
        assert [s.components for s in res.steps] == [2]

    def test_iidual(self):
        for g in (G.IIdual(), G.IIdualPlusIIdual()):
            with pytest.raises(UnsupportedGerm, match="excluded"):
                G.md_link(g)

    def test_gorenstein(self):
        with pytest.raises(GorensteinNoMd):
            G.md_link(G.Smooth())

    def test_id0_needs_flag(self):
        with pytest.raises(MissingParams):
            G.md_link(G.ID(0, 2))

    def test_rho_trace_constant(self):
        assert set(G.md_link(G.T(7, 3)).rho_trace) == {2}


class TestTwoPoint:
    def test_t72(self):
        res = G.md_link_both(G.T(7, 2))
        expect = [G.T(2, 1), G.T(3, 1), G.T(2, 1)]
        assert all(G.equivalent(g, e) for (_, g), e in zip(res.new_fibers, expect))
        assert [s.kind for s in res.steps] == ["flop", "flip", "flip"]
        assert res.base_modification.parts == (2, 3, 2)

    def test_t52_middle_is_smooth(self):
        res = G.md_link_both(G.T(5, 2))
        assert isinstance(res.new_fibers[1][1], G.Smooth)

    def test_domain(self):
        with pytest.raises(BadParameter):
            G.T(4, 2)
        with pytest.raises(BadParameter):
            G.md_link_both(G.T(5, 3))


class TestLedger:
    @pytest.mark.parametrize("r", range(2, 31))
    def test_t_chain(self, r):
        for a in range(1, r):
            from math import gcd
            if gcd(r, a) != 1:
                continue
            rep = G.check_ledger(G.T(r, a), G.md_link(G.T(r, a)))
            assert rep.ok, rep.render()
            d0, d1, d2 = rep.chain
            assert (d0.value, d1.value) == (2 * (r - 1), 2 * r - 3)
            assert d2.value == 2 * r - 4

    def test_iev(self):
        rep = G.check_ledger(G.IEdual(), G.md_link(G.IEdual()))
        assert rep.ok
        assert [str(x) for x in rep.chain] == ["7", "6", "4"]

    def test_iaia_gap_recorded(self):
        rep = G.check_ledger(G.IAdualPlusIAdual(), G.md_link(G.IAdualPlusIAdual()))
        assert rep.ok
        assert [str(x) for x in rep.chain] == ["3", "2", "0"]
        assert "gap 1" in rep.render()

    def test_report_flags_a_bad_link(self):
        res = G.md_link(G.T(5, 2))
        res.new_fibers = [("o'", G.T(5, 2))]
        assert not G.check_ledger(G.T(5, 2), res).ok
