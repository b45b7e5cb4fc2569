"""Acceptance criteria 1-8.

Each test records a PASS/FAIL line in RESULTS; ``conftest.py`` prints them at the
end of the session and ``python3 tests/test_acceptance.py`` prints them directly.
"""
import io
import sys
import time
from fractions import Fraction as F
from math import gcd

import pytest

from qconic import engine as E
from qconic import germs as G
from qconic.cli import run_command
from qconic.errors import AntiflipRejected, UnsupportedGerm
from qconic.lattice_toric import run_T_link, star_subdivide, t_germ_fan, toric_flip, vec
from qconic.series import sample_family, verify_discriminant_claim
from qconic.verify import check_both, coprime_pairs

RESULTS: dict[int, str] = {}


class Criterion:
    def __init__(self, n, title, budget=None):
        self.n, self.title, self.budget = n, title, budget
        self.problems: list[str] = []
        self.notes = ""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def fail(self, msg):
        self.problems.append(msg)

    def __exit__(self, et, ev, tb):
        dt = time.perf_counter() - self.t0
        if ev is not None:
            self.problems.append(f"{type(ev).__name__}: {ev}")
        if self.budget is not None and dt > self.budget:
            self.problems.append(f"took {dt:.1f}s > {self.budget}s")
        head = "PASS" if not self.problems else "FAIL"
        detail = self.notes if not self.problems else "; ".join(self.problems[:5])
        RESULTS[self.n] = f"{head} criterion {self.n} ({self.title}, {dt:.1f}s) {detail}".rstrip()
        print(RESULTS[self.n])
        assert not self.problems, RESULTS[self.n]
        return False


def T(r, a):
    return G.T_or_smooth(r, a)


def index(g):
    return G.base_index(g)


def test_criterion_1_single_point_toric_sweep():
    with Criterion(1, "one-point T links r<=30", 10) as c:
        cases = list(coprime_pairs(30))
        # sum of phi(r) over 2..30; the criterion's "206" is a miscount
        if len(cases) != 277:
            c.fail(f"{len(cases)} cases")
        for r, a in cases:
            link = run_T_link(r, a, "P")
            want = sorted([T(a, (r - a) % a), T(r - a, a % (r - a))], key=index)
            got = sorted(link.fibers, key=index)
            if not all(G.equivalent(x, y) for x, y in zip(got, want)):
                c.fail(f"T({r},{a}) fibers {[g.tag for g in got]}")
            if link.discrepancies != [F(1, r)] or link.k_tilde != F(-1, r):
                c.fail(f"T({r},{a}) discrepancy/K.C")
            if link.flips != 1 or link.flops != 0:
                c.fail(f"T({r},{a}) surgery")
            if list(link.ledger) != [2 * (r - 1), 2 * r - 3, 2 * r - 4]:
                c.fail(f"T({r},{a}) ledger {link.ledger}")
            rule = sorted((g for _, g in G.md_link(G.T(r, a)).new_fibers), key=index)
            if not all(G.equivalent(x, y) for x, y in zip(got, rule)):
                c.fail(f"T({r},{a}) rule mismatch")
        c.notes = f"{len(cases)} cases"


def test_criterion_2_two_point_toric_sweep():
    with Criterion(2, "two-point T links r<=30", 30) as c:
        cases = list(coprime_pairs(30, half=True))
        for r, a in cases:
            link = run_T_link(r, a, "Both")
            if sorted(link.base_indices) != sorted([a, a, r - 2 * a]):
                c.fail(f"T({r},{a}) indices {link.base_indices}")
            rule = G.md_link_both(G.T(r, a))
            if sorted(index(g) for _, g in rule.new_fibers) != sorted([a, a, r - 2 * a]):
                c.fail(f"T({r},{a}) rule fibers")
            row = check_both(r, a)
            if not row.ledger_ok:
                c.fail(f"T({r},{a}) {row.detail}")
        c.notes = f"{len(cases)} cases"


def test_criterion_3_blowup_data_table():
    with Criterion(3, "blowup data K.C <= 0", 10) as c:
        n = 0
        for r in range(3, 32, 2):
            for g in ([G.IC(r)] if r >= 5 else []) + [G.KAD(r), G.K3A(r)]:
                n += 1
                if G.kawamata_blowup_data(g).k_tilde_dot_c != 0:
                    c.fail(f"{g.tag} not K-trivial")
        n += 1
        if G.kawamata_blowup_data(G.IIB()).k_tilde_dot_c != 0:
            c.fail("IIB")
        for r in range(1, 16):
            for a in range(0, r + 1):
                if gcd(r, a) != 1:
                    continue
                for m in range(1, r + 1):
                    for b in range(0, m + 1):
                        if gcd(m, b) != 1:
                            continue
                        for k in range(1, 4):
                            if a * m + b * r - m * r <= 0:
                                continue
                            g = G.K2AGeneral(r, a, m, b, k)
                            for j in range(k):
                                n += 1
                                kc = G.kawamata_blowup_data(g, choice=j).k_tilde_dot_c
                                a1 = (pow(a, -1, r) if r > 1 else 1) + j * r
                                if kc > 0:
                                    c.fail(f"{g.tag}#{j} K.C={kc}")
                                if (kc == 0) != (a1 * g.delta == m):
                                    c.fail(f"{g.tag}#{j} equality")
        c.notes = f"{n} cases"


def test_criterion_4_k_formula_oracle():
    with Criterion(4, "K.C after blowup formula") as c:
        for r, a in coprime_pairs(30):
            link = run_T_link(r, a, "P")
            if link.k_tilde != G.k_after_blowup(link.k_dot_c, r, link.e_dot_c):
                c.fail(f"T({r},{a})")
        c.notes = "277 cases"


def _claim_types():
    yield "IEv", lambda s: G.IEdual(), {}
    yield "IAv+IAv", lambda s: G.IAdualPlusIAdual(), {}
    yield "IAv(xi12 has u)", lambda s: G.IAdual(), {"xi12_has_u": True}
    yield "IAv(xi12 in (u^2,v))", lambda s: G.IAdual(), {"xi12_has_u": False}
    yield "k2A", lambda s: G.K2A(3 + 2 * (s % 7)), {}
    yield "ID(2)", lambda s: G.ID(2), {}
    yield "ID(1)", lambda s: G.ID(1, 2 + s % 4), {}
    yield "ID(0,sq)", lambda s: G.ID(0, 2 + s % 4, True), {}
    yield "ID(0,nsq)", lambda s: G.ID(0, 2 + s % 4, False), {}


def test_criterion_5_discriminant_claims():
    with Criterion(5, "discriminant claims, 100 seeds per type, N=10", 60) as c:
        total = 0
        for name, make, kw in _claim_types():
            for seed in range(100):
                g = make(seed)
                rep = verify_discriminant_claim(g, sample_family(g, seed, 10, **kw))
                total += 1
                if rep.status != "pass":
                    c.fail(f"{name} seed {seed}: {rep.status}")
        c.notes = f"{total} families"


def _md_rules():
    for r, a in coprime_pairs(30):
        yield G.T(r, a), G.md_link(G.T(r, a))
    for r, a in coprime_pairs(30, half=True):
        yield G.T(r, a), G.md_link_both(G.T(r, a))
    for r in range(3, 31, 2):
        yield G.K2A(r), G.md_link(G.K2A(r))
    for g in (G.IEdual(), G.IAdual(), G.IAdualPlusIAdual(), G.ID(2)):
        yield g, G.md_link(g)
    for k in range(2, 31):
        for g in (G.ID(1, k), G.ID(0, k, True), G.ID(0, k, False)):
            yield g, G.md_link(g)


def test_criterion_6_difficulty_monotonicity():
    with Criterion(6, "difficulty and base index decrease") as c:
        n = 0
        for g, res in _md_rules():
            n += 1
            before = G.difficulty(g).value
            after = sum(G.difficulty(h).value for _, h in res.new_fibers)
            if not after < before:
                c.fail(f"{g.tag}: difficulty {before} -> {after}")
            if not sum(index(h) - 1 for _, h in res.new_fibers) < index(g) - 1:
                c.fail(f"{g.tag}: base index")
        c.notes = f"{n} rules"


def _is_min_chain(graph, r):
    if r == 1:
        return not graph.vertices
    return graph.is_chain(r - 1) and all(v.self_intersection == -2 for v in graph.vertices)


def test_criterion_7_drivers():
    with Criterion(7, "drivers on 50 random scenarios", 120) as c:
        for seed in range(50):
            sc = E.random_scenario(seed, rmax=20)
            measure = sum(index(p.germ) - 1 for p in sc.points)
            tr = E.resolve_base(sc)
            if len(tr.steps) > measure or tr.summary["base_smooth"] != "yes":
                c.fail(f"seed {seed}: resolve_base took {len(tr.steps)} > {measure}")
            for p in sc.points:
                if not _is_min_chain(tr.state.root_graph(p.id), index(p.germ)):
                    c.fail(f"seed {seed}: {p.id} not the minimal resolution")
            g = E.gorensteinize(sc)
            if (g.summary["base_smooth"], g.summary["fibers_gorenstein"]) != ("yes", "yes"):
                c.fail(f"seed {seed}: gorensteinize {g.summary}")
            s = E.standardize(sc)
            if any(s.summary[k] != "yes" for k in
                   ("base_smooth", "fibers_standard", "delta_nc")):
                c.fail(f"seed {seed}: standardize {s.summary}")
            text = s.to_text()
            if text != E.standardize(E.parse_scenario(sc.to_text())).to_text():
                c.fail(f"seed {seed}: not byte-identical")
            if not E.replay(sc, text).ok:
                c.fail(f"seed {seed}: replay")
        c.notes = "50 scenarios"


def test_criterion_8_negative_paths(tmp_path, capsys):
    with Criterion(8, "II-dual exclusion and antiflip rejection") as c:
        for tag in ("IIv", "IIv+IIv"):
            path = tmp_path / "s.cfg"
            path.write_text(f"scenario neg\npoint p1 germ={tag}\n")
            for argv in (["link", str(path), "--at", "p1"], ["standardize", str(path)]):
                capsys.readouterr()
                code = run_command(argv, io.StringIO())
                err = capsys.readouterr().err
                if code != 2 or "excluded" not in err:
                    c.fail(f"{tag} {argv[0]}: exit {code} {err.strip()!r}")
        try:
            G.md_link(G.IIdual())
            c.fail("md_link accepted IIv")
        except UnsupportedGerm:
            pass
        fan = star_subdivide(t_germ_fan(5, 2), ("e1", "e2", "e3"), vec(F(1, 5), F(2, 5), F(3, 5)))
        flipped = toric_flip(fan, ("e2", "e3"))
        before = flipped.to_text()
        try:
            toric_flip(flipped, ("E", "-e1"))
            c.fail("antiflip executed")
        except AntiflipRejected:
            pass
        if flipped.to_text() != before:
            c.fail("fan mutated by rejected antiflip")
        for r, a in coprime_pairs(30):
            for link in (run_T_link(r, a, "P"),) + ((run_T_link(r, a, "Both"),) if 2 * a < r else ()):
                if any(s.kind in ("flip", "flop") and s.k_dot_c > 0 for s in link.steps):
                    c.fail(f"T({r},{a}) executed a K-positive surgery")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
