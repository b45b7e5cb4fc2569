import io

import pytest

from qconic import engine as E
from qconic import germs as G
from qconic.cli import run_command
from qconic.errors import ScenarioError, UnsupportedGerm


def scen(*points, extra=""):
    return E.parse_scenario("scenario t\n" + extra + "\n".join(points) + "\n")


def run(argv):
    buf = io.StringIO()
    code = run_command(argv, buf)
    return code, buf.getvalue()


@pytest.fixture
def write(tmp_path):
    def _w(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return _w


class TestScenarioGrammar:
    def test_round_trip(self):
        sc = scen("point p1 germ=T(5,2)", "point q germ=gor delta=u*v*(u-v)",
                  extra="truncation 12\noption depth 4\n")
        again = E.parse_scenario(sc.to_text())
        assert again.to_text() == sc.to_text()
        assert (again.truncation_order, again.depth) == (12, 4)

    def test_comments_and_blank_lines(self):
        sc = E.parse_scenario("# hi\nscenario x\n\npoint a germ=std  # trailing\n")
        assert [p.id for p in sc.points] == ["a"]

    @pytest.mark.parametrize("bad", ["point p germ=T(4,2)", "point p", "frobnicate 3",
                                     "point p germ=std\npoint p germ=std",
                                     "point p germ=gor"])
    def test_errors_carry_line(self, bad):
        with pytest.raises(ScenarioError):
            E.State(E.parse_scenario("scenario x\n" + bad + "\n"))

    def test_iidual_rejected(self):
        with pytest.raises(UnsupportedGerm, match="p9"):
            E.State(scen("point p9 germ=IIv"))

    def test_seed_override(self, monkeypatch):
        sc = scen("point p germ=std", extra="option seed 3\n")
        assert sc.seed == 3
        monkeypatch.setenv("QCB_SEED", "17")
        assert sc.seed == 17


class TestResolveBase:
    def test_t52(self):
        tr = E.resolve_base(scen("point p germ=T(5,2)"))
        # each T link lowers sum(r-1) by exactly one, so four links are needed
        assert len(tr.steps) == 4
        g = tr.state.root_graph("p")
        assert g.is_chain(4) and all(v.self_intersection == -2 for v in g.vertices)
        assert tr.summary["base_smooth"] == "yes"
        assert tr.summary["fibers_standard"] == "yes"

    def test_k2a5(self):
        tr = E.resolve_base(scen("point p germ=k2A(5)"))
        assert tr.steps[0].fibers.startswith("p.1:k2A(3)")
        assert "ID(2)" in tr.steps[0].fibers
        assert tr.summary["base_smooth"] == "yes"
        assert tr.state.root_graph("p").is_chain(4)

    def test_smooth_base(self):
        tr = E.resolve_base(scen("point p germ=gor delta=u*v"))
        assert tr.steps == []


class TestGorensteinize:
    def test_iev(self):
        tr = E.gorensteinize(scen("point p germ=IEv"))
        assert [s.germ for s in tr.steps[:2]] == ["IEv", "k2A(3)"]
        assert tr.summary["fibers_gorenstein"] == "yes"
        assert tr.summary["base_smooth"] == "yes"

    def test_id1(self):
        tr = E.gorensteinize(scen("point p germ=ID(1,k=3)"))
        assert len(tr.steps) == 1
        assert tr.summary["fibers_gorenstein"] == "yes"

    def test_all_gorenstein(self):
        assert E.gorensteinize(scen("point p germ=IF", "point q germ=std")).steps == []


class TestStandardize:
    def test_if(self):
        tr = E.standardize(scen("point p germ=IF delta=u*v"))
        assert len(tr.steps) == 1
        assert tr.steps[0].delta_rule == "ProperTransform"
        assert tr.summary["fibers_standard"] == "yes"

    def test_triple_point(self):
        tr = E.standardize(scen("point p germ=gor delta=u*(v^2-u^2)"))
        assert [s.base for s in tr.steps] == ["OrdinaryBlowup"]
        assert tr.summary["delta_nc"] == "yes"

    def test_standard(self):
        assert E.standardize(scen("point p germ=std")).steps == []

    def test_terminal_predicates_on_mixed_input(self):
        tr = E.standardize(scen("point a germ=T(7,3)", "point b germ=IAv+IAv",
                                "point c germ=ID(0,k=2,sq)", "point d germ=gor delta=v^2-u^3"))
        assert all(tr.summary[k] == "yes" for k in
                   ("base_smooth", "fibers_gorenstein", "fibers_standard", "delta_nc"))

    def test_iav_without_u_is_undecidable(self):
        with pytest.raises(Exception) as e:
            E.standardize(scen("point p germ=IAv xi12=no-u"))
        assert e.value.exit_code == 4

    def test_if_with_bad_delta(self):
        with pytest.raises(ScenarioError, match="node"):
            E.standardize(scen("point p germ=IF delta=v^2-u^3"))


class TestTraces:
    def test_byte_identical(self):
        sc = scen("point a germ=IEv", "point b germ=T(5,2)")
        assert E.standardize(sc).to_text() == E.standardize(sc).to_text()

    def test_replay(self):
        sc = scen("point a germ=k2A(7)", "point b germ=gor delta=u*v*(u-v)")
        assert E.replay(sc, E.standardize(sc).to_text()).ok

    def test_tampered_trace(self):
        sc = scen("point a germ=T(5,2)")
        text = E.resolve_base(sc).to_text()
        lines = text.splitlines()
        i = next(k for k, l in enumerate(lines) if l.startswith("SNAPSHOT 2 "))
        lines[i] = "SNAPSHOT 2 " + "0" * 64 + " D 0"
        res = E.replay(sc, "\n".join(lines))
        assert not res.ok and "STEP 2" in res.mismatches

    def test_header_records_assumption(self):
        text = E.resolve_base(scen("point a germ=T(3,1)")).to_text()
        assert "# assumption " in text
        assert text.startswith("# qconic trace v1\n")

    def test_step_line_format(self):
        line = E.resolve_base(scen("point a germ=T(5,2)")).steps[0].line()
        assert line == ("STEP 1 AT a GERM T(5,2) -> FIBERS a.1:T(2,1),a.2:T(3,2) "
                        "BASE Crepant(5->2+3) DELTA ProperTransform LEDGER ok")

    def test_unsupported_is_skipped_when_allowed(self):
        tr = E.standardize(scen("point a germ=IIv", "point b germ=T(3,1)"), True)
        assert tr.skipped and tr.skipped[0].startswith("a ")
        assert all(s.point != "a" for s in tr.steps)


class TestCli:
    def test_invariants(self):
        code, out = run(["invariants", "T(5,2)"])
        assert code == 0
        assert "difficulty 8" in out and "A4" in out and "-2/5" in out

    def test_verify_toric(self, tmp_path):
        csv = tmp_path / "s.csv"
        code, _ = run(["verify-toric", "--rmax", "12", "--csv", str(csv)])
        assert code == 0
        rows = csv.read_text().splitlines()
        assert rows[0] == "r,a,fibers,flips,ledger_ok"
        assert all(r.endswith(",true") for r in rows[1:])

    def test_link_iidual(self, write, capsys):
        path = write("s.cfg", "scenario s\npoint p1 germ=IIv\n")
        code, _ = run(["link", path, "--at", "p1"])
        assert code == 2
        assert "excluded" in capsys.readouterr().err

    def test_link(self, write):
        path = write("s.cfg", "scenario s\npoint p1 germ=T(5,2)\n")
        code, out = run(["link", path, "--at", "p1"])
        assert code == 0 and "STEP 1 AT p1" in out

    def test_standardize_artifacts(self, write, tmp_path):
        path = write("s.cfg", "scenario s\npoint p germ=IEv\n")
        trace, dot, fig = (tmp_path / n for n in ("t.txt", "g.dot", "d.png"))
        code, _ = run(["standardize", path, "--trace", str(trace), "--dot", str(dot),
                       "--figure", str(fig)])
        assert code == 0
        assert dot.read_text().startswith("graph ")
        assert fig.stat().st_size > 0
        assert run(["replay", path, str(trace)]) == (0, "replay ok\n")

    def test_discriminant_sample(self):
        code, out = run(["discriminant", "--sample", "IEv", "--seed", "2"])
        assert code == 0 and "status pass" in out

    def test_discriminant_family_file(self, tmp_path):
        fam = tmp_path / "f.txt"
        assert run(["discriminant", "--sample", "ID(2)", "--write-family", str(fam)])[0] == 0
        assert run(["discriminant", str(fam)])[0] == 0

    def test_graph(self):
        code, out = run(["graph", "--chain", "3"])
        assert code == 0 and out.count("--") == 2

    @pytest.mark.parametrize("argv", [[], ["bogus"], ["invariants"], ["verify-toric", "--rmax", "1"],
                                      ["discriminant"], ["standardize", "/nonexistent"]])
    def test_usage(self, argv):
        assert run(argv)[0] == 64

    def test_bad_tag_is_usage(self):
        assert run(["invariants", "T(4,2)"])[0] == 64

    def test_gorenstein_link_is_usage(self, write):
        path = write("s.cfg", "scenario s\npoint p germ=gor delta=u\n")
        assert run(["link", path, "--at", "p"])[0] == 64
