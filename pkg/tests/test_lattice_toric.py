from fractions import Fraction as F

import pytest

from qconic import germs as G
from qconic.errors import (
    AntiflipRejected,
    BoundaryWall,
    NonSimplicial,
    NotTerminalCyclic,
    RayOutsideCone,
)
from qconic.lattice_toric import (
    Cone,
    Fan,
    QuotientSingularity,
    RefinedLattice,
    canonical_intersect,
    classify_cone,
    discrepancy_of_ray,
    intersect_divisor_curve,
    kawamata_ray,
    run_T_link,
    star_subdivide,
    t_germ_fan,
    toric_flip,
    vec,
    wall_relation,
)

W52 = vec(F(1, 5), F(2, 5), F(3, 5))
L52 = RefinedLattice(3, [W52])
E1, E2, E3 = vec(1, 0, 0), vec(0, 1, 0), vec(0, 0, 1)
MINUS_E1 = vec(-1, 0, 0)


def p1_times_c2() -> Fan:
    lat = RefinedLattice(3)
    rays = {"e1": E1, "-e1": MINUS_E1, "e2": E2, "e3": E3}
    cones = (("e1", "e2", "e3"), ("-e1", "e2", "e3"))
    return Fan(lat, rays, cones, ((0, 1, 0), (0, 0, 1)), RefinedLattice(2))


class TestLattice:
    def test_index_of_refined_lattice(self):
        assert L52.index == 5

    def test_membership(self):
        assert L52.contains(W52)
        assert not L52.contains(vec(F(1, 5), 0, 0))

    def test_primitive(self):
        # (2,4,6) = 10 * (1/5)(1,2,3) in the refined lattice
        assert L52.primitive(vec(2, 4, 6)) == W52
        assert not L52.is_primitive(vec(2, 4, 6))


class TestClassify:
    def test_basis_cone_is_smooth(self):
        assert classify_cone(Cone((E1, E2, E3), RefinedLattice(3))).is_smooth

    def test_t52_point_p(self):
        assert classify_cone(Cone((E1, E2, E3), L52)) == QuotientSingularity(5, (1, 2, -2))

    def test_t52_point_q(self):
        assert classify_cone(Cone((MINUS_E1, E2, E3), L52)) == QuotientSingularity(5, (-1, 2, -2))

    def test_dependent_generators(self):
        with pytest.raises(NonSimplicial):
            Cone((E1, E2, vec(1, 1, 0)), RefinedLattice(3))

    def test_canonical_form_identifies_presentations(self):
        assert QuotientSingularity(3, (1, 2, 1)) == QuotientSingularity(3, (2, 1, 1))


class TestKawamataRay:
    def test_r5(self):
        assert kawamata_ray(QuotientSingularity(5, (1, 2, -2))) == (F(1, 5), F(2, 5), F(3, 5))

    def test_r2(self):
        assert kawamata_ray(QuotientSingularity(2, (1, 1, -1))) == (F(1, 2), F(1, 2), F(1, 2))

    def test_smooth_rejected(self):
        with pytest.raises(NotTerminalCyclic):
            kawamata_ray(QuotientSingularity(1, (0, 0, 0)))


class TestSubdivision:
    def test_t52_blowup_cones(self):
        fan = star_subdivide(t_germ_fan(5, 2), ("e1", "e2", "e3"), W52)
        types = {frozenset(c): classify_cone(fan.cone(c)) for c in fan.cones}
        # derived by lattice arithmetic: the cone opposite e1 is the smooth one
        assert types[frozenset(("E", "e2", "e3"))].is_smooth
        assert types[frozenset(("E", "e1", "e3"))] == QuotientSingularity(2, (1, 1, 1))
        assert types[frozenset(("E", "e1", "e2"))] == QuotientSingularity(3, (1, 2, 1))

    def test_smooth_barycentric(self):
        fan = star_subdivide(p1_times_c2(), ("e1", "e2", "e3"), vec(1, 1, 1))
        assert len(fan.cones) == 4
        assert all(classify_cone(fan.cone(c)).is_smooth for c in fan.cones)

    def test_ray_on_facet(self):
        with pytest.raises(RayOutsideCone):
            star_subdivide(p1_times_c2(), ("e1", "e2", "e3"), vec(1, 1, 0))


class TestDiscrepancy:
    def test_kawamata(self):
        assert discrepancy_of_ray(Cone((E1, E2, E3), L52), W52) == F(1, 5)

    def test_smooth_cone_face_ray(self):
        # e1+e2 lies on a face; the divisor over the smooth codimension-2 stratum
        assert discrepancy_of_ray(Cone((E1, E2), RefinedLattice(3)), vec(1, 1, 0)) == 1

    def test_du_val_crepant(self):
        L = RefinedLattice(2, [vec(F(2, 5), F(3, 5))])
        assert discrepancy_of_ray(Cone((vec(1, 0), vec(0, 1)), L), vec(F(2, 5), F(3, 5))) == 0

    @pytest.mark.parametrize("r", range(2, 31))
    def test_one_over_r(self, r):
        from math import gcd
        for a in range(1, r):
            if gcd(r, a) == 1:
                fan = t_germ_fan(r, a)
                cone = fan.cone(("e1", "e2", "e3"))
                ray = vec(F(1, r), F(a, r), F(r - a, r))
                assert discrepancy_of_ray(cone, ray) == F(1, r)


class TestWalls:
    def test_product_relation(self):
        rel = wall_relation(p1_times_c2(), ("e2", "e3"))
        assert dict(zip(rel.rays, rel.coefficients)) == {"e1": 1, "-e1": 1, "e2": 0, "e3": 0}

    def test_t52_after_blowup(self):
        fan = star_subdivide(t_germ_fan(5, 2), ("e1", "e2", "e3"), W52)
        rel = wall_relation(fan, ("e2", "e3"))
        assert dict(zip(rel.rays, rel.coefficients)) == {"E": 5, "-e1": 1, "e2": -2, "e3": -3}

    def test_boundary(self):
        with pytest.raises(BoundaryWall):
            wall_relation(p1_times_c2(), ("e1", "e2"))


class TestIntersections:
    def test_minus_k_on_fiber(self):
        assert -canonical_intersect(p1_times_c2(), ("e2", "e3")) == 2

    def test_e_dot_c_tilde(self):
        fan = star_subdivide(t_germ_fan(5, 2), ("e1", "e2", "e3"), W52)
        assert intersect_divisor_curve(fan, ("e2", "e3"), "E") == 1

    def test_k_dot_c_before(self):
        assert canonical_intersect(t_germ_fan(5, 2), ("e2", "e3")) == F(-2, 5)


class TestFlip:
    def test_t52_flip_fibers(self):
        fan = star_subdivide(t_germ_fan(5, 2), ("e1", "e2", "e3"), W52)
        assert canonical_intersect(fan, ("e2", "e3")) == F(-1, 5)
        out = toric_flip(fan, ("e2", "e3"))
        assert len(out.cones) == len(fan.cones)

    def test_flop_in_two_point_configuration(self):
        fan = t_germ_fan(7, 2)
        fan = star_subdivide(fan, ("e1", "e2", "e3"), vec(F(1, 7), F(2, 7), F(5, 7)), "E_P")
        from qconic.lattice_toric import kawamata_ray_of_cone
        fan = star_subdivide(fan, ("-e1", "e2", "e3"),
                             kawamata_ray_of_cone(fan.cone(("-e1", "e2", "e3"))), "E_Q")
        assert canonical_intersect(fan, ("e2", "e3")) == 0
        toric_flip(fan, ("e2", "e3"))

    def test_antiflip_rejected(self):
        # after the one-point flip, the flipped curve has positive K-degree; undoing it is an antiflip
        fan = star_subdivide(t_germ_fan(5, 2), ("e1", "e2", "e3"), W52)
        out = toric_flip(fan, ("e2", "e3"))
        with pytest.raises(AntiflipRejected):
            toric_flip(out, ("E", "-e1"))


class TestRunTLink:
    def test_t52(self):
        link = run_T_link(5, 2, "P")
        assert sorted(g.tag for g in link.fibers) == ["T(2,1)", "T(3,2)"]
        assert link.flips == 1
        assert link.ledger == [8, 7, 6]

    def test_t21_single_smooth_fiber(self):
        link = run_T_link(2, 1, "P")
        # the toric model shows two smooth fibers over the resolved base; both are T(1)
        assert all(isinstance(g, G.Smooth) for g in link.fibers)
        assert link.base_indices == [1, 1]

    def test_t72_both(self):
        link = run_T_link(7, 2, "Both")
        tags = sorted(g.canonical().tag if isinstance(g, G.T) else g.tag for g in link.fibers)
        assert tags == ["T(2,1)", "T(2,1)", "T(3,1)"]
        kinds = [s.kind for s in link.steps if s.kind != "blowup"]
        assert kinds == ["flop", "flip", "flip"]

    def test_fan_round_trips_to_text(self):
        text = run_T_link(5, 2).fan.to_text()
        assert text.count("\n") == len(run_T_link(5, 2).fan.cones)
