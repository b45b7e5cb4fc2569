"""Command line entry point: ``qconic <subcommand> ...``.

Exit codes: 0 success, 2 unsupported germ, 3 ledger or invariant violation,
4 undecidable within budgets, 64 usage error.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import engine
from . import germs as G
from .base_surface import dual_graph_of_germ, minimal_resolution_chain
from .errors import QConicError, UsageError

EXIT_OK, EXIT_UNSUPPORTED, EXIT_LEDGER, EXIT_UNDECIDABLE, EXIT_USAGE = 0, 2, 3, 4, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_unsupported(p):
    p.add_argument("--allow-unsupported", action="store_true",
                   help="carry II-dual germs along instead of rejecting the scenario")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qconic", description="Exact rewriting of Q-conic bundle germs.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("invariants", help="print the invariants of a germ tag")
    p.add_argument("germ")

    p = sub.add_parser("link", help="apply one md-link at a scenario point")
    p.add_argument("scenario")
    p.add_argument("--at", required=True, metavar="ID")
    _add_unsupported(p)

    p = sub.add_parser("standardize", help="run a driver and write the trace")
    p.add_argument("scenario")
    p.add_argument("--driver", choices=sorted(engine.DRIVERS), default="standardize")
    p.add_argument("--trace", metavar="FILE", help="trace file (default: stdout)")
    p.add_argument("--dot", metavar="FILE", help="DOT graph of the final base")
    p.add_argument("--figure", metavar="FILE", help="difficulty plot along the trace")
    _add_unsupported(p)

    p = sub.add_parser("replay", help="re-apply a trace and compare snapshot hashes")
    p.add_argument("scenario")
    p.add_argument("trace")
    _add_unsupported(p)

    p = sub.add_parser("verify-toric", help="sweep the T-type links on their toric models")
    p.add_argument("--rmax", type=int, default=12)
    p.add_argument("--both", action="store_true", help="also sweep the two-point links")
    p.add_argument("--csv", metavar="FILE", help="CSV output (default: stdout)")
    p.add_argument("--figure", metavar="FILE")

    p = sub.add_parser("discriminant", help="discriminant and claim report of a family")
    p.add_argument("family", nargs="?", help="family file")
    p.add_argument("--sample", metavar="GERM", help="sample a family of this germ type")
    p.add_argument("--germ", metavar="GERM", help="germ type (default: the family shape)")
    p.add_argument("--seed", type=int)
    p.add_argument("--truncation", type=int, default=10)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--xi12", choices=("u", "no-u"))
    p.add_argument("--write-family", metavar="FILE")

    p = sub.add_parser("graph", help="emit a DOT graph")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--germ", metavar="GERM", help="dual graph attached to a germ type")
    g.add_argument("--chain", type=int, metavar="N", help="minimal resolution of A_N")
    g.add_argument("--scenario", metavar="FILE", help="base graph after a driver run")
    p.add_argument("--driver", choices=sorted(engine.DRIVERS), default="standardize")
    p.add_argument("--out", metavar="FILE")
    return ap


def _write(path, text: str, out):
    if path:
        Path(path).write_text(text, encoding="ascii")
    else:
        out.write(text)


def _cmd_invariants(a, out):
    out.write(G.germ_invariants(G.parse_tag(a.germ)).render() + "\n")
    return EXIT_OK


def _cmd_link(a, out):
    sc = engine.load_scenario(a.scenario)
    res, ledger, step = engine.link_once(sc, a.at, a.allow_unsupported)
    out.write(res.render() + "\n")
    out.write(ledger.render() + "\n")
    out.write(step.line() + "\n")
    return EXIT_OK if ledger.ok else EXIT_LEDGER


def _cmd_standardize(a, out):
    sc = engine.load_scenario(a.scenario)
    trace = engine.DRIVERS[a.driver](sc, a.allow_unsupported)
    _write(a.trace, trace.to_text(), out)
    if a.dot:
        Path(a.dot).write_text(trace.dot(), encoding="ascii")
    if a.figure:
        from .report import trace_figure
        trace_figure(trace, a.figure)
    return EXIT_OK if trace.ledger_ok else EXIT_LEDGER


def _cmd_replay(a, out):
    sc = engine.load_scenario(a.scenario)
    res = engine.replay(sc, Path(a.trace).read_text(encoding="ascii"), a.allow_unsupported)
    out.write("replay ok\n" if res.ok else "replay mismatch " + ",".join(res.mismatches) + "\n")
    return EXIT_OK if res.ok else EXIT_LEDGER


def _cmd_verify_toric(a, out):
    from .verify import CSV_HEADER, sweep

    if a.rmax < 2:
        raise UsageError("--rmax must be at least 2")
    rows = sweep(a.rmax, a.both)
    text = CSV_HEADER + "\n" + "".join(r.csv() + "\n" for r in rows)
    _write(a.csv, text, out)
    if a.figure:
        from .report import sweep_figure
        sweep_figure(rows, a.figure)
    bad = [r for r in rows if not r.ledger_ok]
    for r in bad:
        sys.stderr.write(f"fail r={r.r} a={r.a} link={r.link}: {r.detail}\n")
    return EXIT_OK if not bad else EXIT_LEDGER


def _cmd_discriminant(a, out):
    from . import series as S

    if (a.family is None) == (a.sample is None):
        raise UsageError("give either a family file or --sample GERM")
    if a.sample:
        g = G.parse_tag(a.sample)
        seed = a.seed
        if seed is None:
            seed = int(os.environ.get("QCB_SEED") or 0)
        controls = {"xi12_has_u": a.xi12 == "u"} if a.xi12 else {}
        fam = S.sample_family(g, seed, a.truncation, **controls)
    else:
        fam = S.parse_family(Path(a.family).read_text(encoding="ascii"))
        tag = a.germ or fam.shape
        if not tag:
            raise UsageError("the family has no shape; pass --germ")
        g = G.parse_tag(tag)
    if a.write_family:
        Path(a.write_family).write_text(fam.to_text(), encoding="ascii")
    rep = S.verify_discriminant_claim(g, fam, a.depth)
    out.write("determinant\n" + S.discriminant(fam).to_text() + "\n")
    out.write(rep.render() + "\n")
    return {"pass": EXIT_OK, "fail": EXIT_LEDGER, "undecided": EXIT_UNDECIDABLE}[rep.status]


def _cmd_graph(a, out):
    if a.germ:
        text = dual_graph_of_germ(G.parse_tag(a.germ)).to_dot("germ")
    elif a.chain is not None:
        text = minimal_resolution_chain(a.chain).to_dot(f"A{a.chain}")
    else:
        sc = engine.load_scenario(a.scenario)
        text = engine.DRIVERS[a.driver](sc).dot()
    _write(a.out, text, out)
    return EXIT_OK


COMMANDS = {"invariants": _cmd_invariants, "link": _cmd_link, "standardize": _cmd_standardize,
            "replay": _cmd_replay, "verify-toric": _cmd_verify_toric,
            "discriminant": _cmd_discriminant, "graph": _cmd_graph}


def run_command(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        a = build_parser().parse_args(argv)
        return COMMANDS[a.cmd](a, out)
    except QConicError as e:
        sys.stderr.write(f"qconic: {type(e).__name__}: {e}\n")
        return e.exit_code
    except (OSError, UnicodeError) as e:
        sys.stderr.write(f"qconic: {e}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_command())
