"""Scenario ingestion, the three drivers and replayable traces.

Scenario grammar (ASCII, one record per line, ``#`` starts a comment)::

    scenario <name>
    truncation <N>                 default 10
    option depth <n>               branch-resolution budget, default 6
    option seed <n>                sampler seed (QCB_SEED overrides)
    option blowups <n>             Gorenstein-phase blowup budget, default 64
    point <id> germ=<tag> [delta=<series>] [branches=<s,s,...>]
          [transversal=yes|no] [xi12=u|no-u] [family=sample]

``<tag>`` is a germ tag (``T(5,2)``, ``k2A(5)``, ``IEv``, ``gor`` ...).
``delta`` is a polynomial in u, v without spaces giving the local equation
of the discriminant at a smooth base point.  ``branches`` lists the branch
smoothness flags (smooth, singular, unknown) for the compatibility check.
"""
from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass, field

from . import germs as G
from .base_surface import (
    BasePoint,
    BaseTree,
    Branch,
    CrepantExtract,
    DualGraph,
    OrdinaryBlowup,
    WeightedBlowup,
    apply_modification,
    classify_point_by_discriminant,
)
from .errors import (
    QConicError,
    ScenarioError,
    TagParseError,
    Undecidable,
    UndecidableDiscriminant,
    UnsupportedGerm,
    ZeroWithinTruncation,
)
from .series import (
    DEFAULT_DEPTH,
    DEFAULT_N,
    TruncatedSeries,
    blowup_curve_germ,
    discriminant,
    factor_form,
    sample_family,
    verify_discriminant_claim,
)

import sympy

U, V = sympy.symbols("u v")
CURVE_N = 60          # local equations of exceptional curves are exact lines
ASSUMPTION = ("links at distinct base points are applied independently; "
              "each germ is treated over its own small neighbourhood")
K2A_CONVENTION = "k2A: branch Delta1 follows the left chain end (o'), Delta2 the right end (o'')"


# ---------------------------------------------------------------- scenario

@dataclass
class PointSpec:
    id: str
    germ: G.GermType
    delta: str | None = None
    branches: tuple | None = None
    transversal: bool | None = None
    xi12: str | None = None
    family: str | None = None


@dataclass
class Scenario:
    name: str = "scenario"
    truncation_order: int = DEFAULT_N
    points: list = field(default_factory=list)
    options: dict = field(default_factory=dict)

    @property
    def depth(self) -> int:
        return int(self.options.get("depth", DEFAULT_DEPTH))

    @property
    def seed(self) -> int:
        env = os.environ.get("QCB_SEED")
        if env is not None and env.strip():
            return int(env)
        return int(self.options.get("seed", 0))

    @property
    def blowup_budget(self) -> int:
        return int(self.options.get("blowups", 64))

    def to_text(self) -> str:
        lines = [f"scenario {self.name}", f"truncation {self.truncation_order}"]
        for k in sorted(self.options):
            lines.append(f"option {k} {self.options[k]}")
        for p in self.points:
            parts = [f"point {p.id}", f"germ={p.germ.tag}"]
            if p.delta is not None:
                parts.append(f"delta={p.delta}")
            if p.branches is not None:
                parts.append("branches=" + ",".join(p.branches))
            if p.transversal is not None:
                parts.append(f"transversal={'yes' if p.transversal else 'no'}")
            if p.xi12 is not None:
                parts.append(f"xi12={p.xi12}")
            if p.family is not None:
                parts.append(f"family={p.family}")
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"


_ID_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")


def parse_scenario(text: str) -> Scenario:
    sc = Scenario()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            if head == "scenario":
                sc.name = rest[0] if rest else "scenario"
            elif head == "truncation":
                sc.truncation_order = int(rest[0])
            elif head == "option":
                sc.options[rest[0]] = rest[1]
            elif head == "point":
                sc.points.append(_parse_point(rest))
            else:
                raise ScenarioError(f"unknown record {head!r}")
        except ScenarioError as e:
            raise ScenarioError(f"line {lineno}: {e}") from None
        except (IndexError, ValueError) as e:
            raise ScenarioError(f"line {lineno}: malformed record ({e})") from None
    for p in sc.points:
        if p.id in seen:
            raise ScenarioError(f"duplicate point id {p.id}")
        seen.add(p.id)
    return sc


def _parse_point(tokens) -> PointSpec:
    if not tokens:
        raise ScenarioError("point needs an id")
    pid, kv = tokens[0], {}
    if not _ID_RE.match(pid):
        raise ScenarioError(f"bad point id {pid!r}")
    for t in tokens[1:]:
        if "=" not in t:
            raise ScenarioError(f"expected key=value, got {t!r}")
        k, v = t.split("=", 1)
        kv[k] = v
    if "germ" not in kv:
        raise ScenarioError(f"point {pid} has no germ")
    known = {"germ", "delta", "branches", "transversal", "xi12", "family"}
    if set(kv) - known:
        raise ScenarioError(f"point {pid}: unknown keys {sorted(set(kv) - known)}")
    try:
        germ = G.parse_tag(kv["germ"])
    except TagParseError as e:
        raise ScenarioError(str(e)) from None
    tr = kv.get("transversal")
    if tr is not None and tr not in ("yes", "no"):
        raise ScenarioError("transversal must be yes or no")
    xi = kv.get("xi12")
    if xi is not None and xi not in ("u", "no-u"):
        raise ScenarioError("xi12 must be u or no-u")
    br = tuple(kv["branches"].split(",")) if "branches" in kv else None
    if br and set(br) - {"smooth", "singular", "unknown"}:
        raise ScenarioError("branch flags are smooth, singular or unknown")
    return PointSpec(pid, germ, kv.get("delta"), br,
                     None if tr is None else tr == "yes", xi, kv.get("family"))


def load_scenario(path) -> Scenario:
    with open(path, encoding="ascii") as fh:
        return parse_scenario(fh.read())


# ----------------------------------------------------------------- state

@dataclass
class Local:
    """Local data at a base point.

    Smooth points carry ``delta`` (the non-exceptional part of the discriminant)
    and ``curves`` (local equations of the exceptional curves through the point).
    Singular points carry ``branches``: ("curve", name) or ("free", side).
    """
    delta: TruncatedSeries | None = None
    curves: dict = field(default_factory=dict)
    branches: list = field(default_factory=list)
    root: str = ""
    xi12: str | None = None


def _series(expr: str, N: int) -> TruncatedSeries:
    return TruncatedSeries.parse(expr, N)


def _exact(expr: str) -> TruncatedSeries:
    """Representative normal forms are exact polynomials."""
    poly = sympy.Poly(sympy.sympify(expr.replace("^", "**"), locals={"u": U, "v": V}), U, V)
    return TruncatedSeries.parse(poly.as_expr(), max(CURVE_N, 4 * poly.total_degree() + 8))


def _natural_key(s: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", s)]


def _initial_branches(g) -> list:
    if isinstance(g, G.K2A):
        return [("free", "L"), ("free", "R")]
    if isinstance(g, G.IAdualPlusIAdual):
        return [("free", None)] * 3
    if isinstance(g, (G.IEdual, G.IAdual)):
        return [("free", None)] * 2
    if isinstance(g, G.ID):
        return [("free", None)] * (2 if g.m == 2 else 1)
    return []


DEFAULT_DELTA = {"std": "1", "std(ll)": "v", "std(dl)": "u*v", "IF": "u*v"}


def over_approx(loc: Local, membership: dict) -> TruncatedSeries:
    f = loc.delta
    for c, eq in sorted(loc.curves.items()):
        if membership.get(c, "unknown") != "out":
            f = f * eq
    return f


def nc_class(f: TruncatedSeries) -> str:
    """empty | smooth | node | other (decided from the leading form)."""
    if f.is_zero():
        raise UndecidableDiscriminant("discriminant vanishes within truncation")
    m = f.order()
    if m == 0:
        return "empty"
    if m == 1:
        return "smooth"
    if m > f.N:
        raise UndecidableDiscriminant("multiplicity exceeds truncation")
    if m == 2:
        a, b, c = f[(2, 0)], f[(1, 1)], f[(0, 2)]
        return "node" if b * b - 4 * a * c != 0 else "other"
    return "other"


def _std_for(cls: str):
    return {"empty": G.Smooth(), "smooth": G.StandardDegenerate(False),
            "node": G.StandardDegenerate(True)}.get(cls)


@dataclass
class TraceStep:
    n: int
    point: str
    germ: str
    fibers: str
    base: str
    delta_rule: str
    ledger: str
    snapshot: str
    difficulty: str

    def line(self) -> str:
        return (f"STEP {self.n} AT {self.point} GERM {self.germ} -> FIBERS {self.fibers} "
                f"BASE {self.base} DELTA {self.delta_rule} LEDGER {self.ledger}")


@dataclass
class StandardizationTrace:
    driver: str
    scenario: Scenario
    initial_snapshot: str
    initial_difficulty: str
    steps: list
    conversions: list
    final_snapshot: str
    summary: dict
    claims: list
    skipped: list
    state: "State"

    @property
    def ledger_ok(self) -> bool:
        return all(s.ledger == "ok" for s in self.steps)

    def to_text(self) -> str:
        sc = self.scenario
        digest = hashlib.sha256(sc.to_text().encode()).hexdigest()
        out = ["# qconic trace v1",
               f"# driver {self.driver}",
               f"# scenario {sc.name} sha256 {digest}",
               f"# truncation {sc.truncation_order} depth {sc.depth} seed {sc.seed}",
               f"# assumption {ASSUMPTION}",
               f"# convention {K2A_CONVENTION}"]
        for c in self.claims:
            out.append(f"CLAIM {c}")
        for s in self.skipped:
            out.append(f"SKIP {s}")
        out.append(f"INIT {self.initial_snapshot} D {self.initial_difficulty}")
        for s in self.steps:
            out.append(s.line())
            out.append(f"SNAPSHOT {s.n} {s.snapshot} D {s.difficulty}")
        if self.conversions:
            out.append("CONVERT " + ",".join(self.conversions))
        out.append(f"SNAPSHOT final {self.final_snapshot}")
        out.append("FINAL " + " ".join(f"{k}={v}" for k, v in self.summary.items()))
        return "\n".join(out) + "\n"

    def dot(self) -> str:
        return self.state.dot()


class State:
    """Mutable driver state: base tree, local data and discriminant membership."""

    def __init__(self, sc: Scenario, allow_unsupported: bool = False):
        self.sc = sc
        self.N = sc.truncation_order
        self.tree = BaseTree()
        self.local: dict[str, Local] = {}
        self.membership: dict[str, str] = {}
        self.curve_root: dict[str, str] = {}
        self.if_points: set = set()
        self.claims: list[str] = []
        self.allow_unsupported = allow_unsupported
        self.blowups = 0
        for p in sc.points:
            self._add_initial(p)

    # -- setup
    def _add_initial(self, p: PointSpec):
        g = p.germ
        if g.birational:
            raise ScenarioError(f"point {p.id}: {g.tag} is a blowup-only tag")
        if isinstance(g, (G.IIdual, G.IIdualPlusIIdual)) and not self.allow_unsupported:
            raise UnsupportedGerm(
                f"point {p.id}: {g.tag} is outside the supported classes; links for the "
                "II-dual types are excluded (use --allow-unsupported to carry it along)")
        r = G.base_index(g)
        loc = Local(root=p.id, xi12=p.xi12)
        fam = None
        if p.family == "sample":
            fam = sample_family(g, self.sc.seed, self.N,
                                **({"xi12_has_u": p.xi12 != "no-u"} if p.xi12 else {}))
            rep = verify_discriminant_claim(g, fam, self.sc.depth)
            self.claims.append(f"{p.id} {g.tag} {rep.status}")
            if isinstance(g, G.IAdual) and p.xi12 is None:
                loc.xi12 = "u" if fam.param.get("xi12_has_u") == "true" else "no-u"
        elif p.family is not None:
            raise ScenarioError(f"point {p.id}: family must be 'sample'")
        if r == 1:
            expr = p.delta
            if fam is not None and expr is None:
                loc.delta = discriminant(fam)
            else:
                if expr is None:
                    expr = DEFAULT_DELTA.get(g.tag)
                if expr is None:
                    raise ScenarioError(f"point {p.id}: {g.tag} needs a delta series")
                loc.delta = _series(expr, self.N)
            self._check_smooth_point(p.id, g, loc)
        else:
            if p.delta is not None:
                raise ScenarioError(f"point {p.id}: delta is only given at smooth points")
            loc.branches = _initial_branches(g)
            if p.branches is not None:
                bp = BasePoint(p.id, r, g,
                               [Branch(f"D{i}", {"smooth": True, "singular": False}.get(b))
                                for i, b in enumerate(p.branches)], p.transversal)
                verdict = classify_point_by_discriminant(bp)
                if not verdict.compatible:
                    raise ScenarioError(
                        f"point {p.id}: {g.tag} is incompatible with a {verdict.configuration} "
                        f"discriminant")
        self.tree.points[p.id] = BasePoint(p.id, r, g)
        self.local[p.id] = loc
        if isinstance(g, G.IF):
            self.if_points.add(p.id)

    def _check_smooth_point(self, pid, g, loc):
        cls = nc_class(over_approx(loc, self.membership))
        want = {"std": {"empty"}, "std(ll)": {"smooth"}, "std(dl)": {"node"}, "IF": {"node"}}
        if g.tag in want and cls not in want[g.tag]:
            raise ScenarioError(f"point {pid}: {g.tag} needs a discriminant that is "
                                f"{'/'.join(sorted(want[g.tag]))}, got {cls}")

    # -- snapshots
    def snapshot_text(self) -> str:
        lines = []
        for pid in sorted(self.tree.points, key=_natural_key):
            p = self.tree.points[pid]
            loc = self.local[pid]
            on = ",".join(p.on_curves)
            lines.append(f"P {pid} {p.singularity_index} {p.fiber_germ.tag} {p.left} {p.right} "
                         f"[{on}] root={loc.root} if={pid in self.if_points}")
            if loc.delta is not None:
                lines.append("  delta " + ";".join(
                    f"{i},{j},{c}" for (i, j), c in sorted(loc.delta.coeffs.items())) +
                    f" N={loc.delta.N}")
            for c, eq in sorted(loc.curves.items()):
                lines.append(f"  curve {c} " + ";".join(
                    f"{i},{j},{x}" for (i, j), x in sorted(eq.coeffs.items())))
            for b in loc.branches:
                lines.append(f"  branch {b[0]} {b[1]}")
        for v in self.tree.graph.vertices:
            lines.append(f"V {v.name} {v.self_intersection} {self.membership.get(v.name)} "
                         f"{self.curve_root.get(v.name)}")
        for e in sorted(self.tree.graph.edges, key=lambda e: sorted(e)):
            lines.append(f"E {'-'.join(sorted(e))} {self.tree.graph.edges[e]}")
        return "\n".join(lines) + "\n"

    def snapshot(self) -> str:
        return hashlib.sha256(self.snapshot_text().encode()).hexdigest()

    def difficulty(self) -> str:
        return str(G.total_difficulty(p.fiber_germ for p in self.tree.points.values()))

    def difficulty_value(self) -> tuple:
        d = G.total_difficulty(p.fiber_germ for p in self.tree.points.values())
        return (d.min, d.max)

    # -- helpers
    def sorted_points(self):
        return sorted(self.tree.points, key=_natural_key)

    def _new_curve_record(self, root: str, membership: str):
        name = f"G{self.tree.counter}"
        self.membership[name] = membership
        self.curve_root[name] = root
        return name

    def _smooth_local(self, root, curves: dict, delta: TruncatedSeries) -> tuple:
        loc = Local(delta=delta, curves=curves, root=root)
        cls = nc_class(over_approx(loc, self.membership))
        return loc, cls

    # -- md-links
    def md_step(self, pid: str) -> TraceStep:
        p = self.tree.points[pid]
        g = p.fiber_germ
        loc = self.local[pid]
        try:
            res = G.md_link(g)
        except QConicError as e:
            raise type(e)(f"point {pid}: {e}") from None
        ledger = G.check_ledger(g, res)
        layout = self._md_layout(g, res, loc, pid)
        mod = res.base_modification
        n_chain = len(mod.parts)
        chain_germs = layout["chain"]
        ids = [f"{pid}.{i + 1}" for i in range(n_chain)]
        placeholder = [cg if cg is not None else G.Smooth() for cg in chain_germs]
        tree, new_ids = apply_modification(self.tree, pid, mod, placeholder, ids)
        self.tree = tree
        gamma = self._new_curve_record(loc.root, layout["gamma"])
        del self.local[pid]
        out_ids = []
        for i, nid in enumerate(new_ids):
            np_ = self.tree.points[nid]
            idx = mod.parts[i]
            if idx > 1:
                self.local[nid] = Local(branches=layout["chain_branches"][i], root=loc.root)
                out_ids.append(nid)
                continue
            curves = {}
            if np_.left is not None and np_.right is not None:
                curves[np_.left] = _exact("v")
                curves[np_.right] = _exact("u")
            elif np_.left is not None or np_.right is not None:
                curves[np_.left or np_.right] = _exact("u")
            delta = _exact(layout["chain_delta"][i] or "1")
            nloc, cls = self._smooth_local(loc.root, curves, delta)
            given = chain_germs[i]
            if given is None and (np_.left is None or np_.right is None):
                del self.tree.points[nid]       # a general point of a curve
                continue
            self.tree.points[nid].fiber_germ = given if given is not None else \
                (G.Smooth() if cls == "empty" else G.Gorenstein())
            self.local[nid] = nloc
            out_ids.append(nid)
        for k, (eg, dexpr) in enumerate(layout["extras"]):
            nid = f"{pid}.{n_chain + k + 1}"
            curves = {gamma: _exact("u")}
            nloc, _ = self._smooth_local(loc.root, curves, _exact(dexpr))
            self.tree.points[nid] = BasePoint(nid, 1, eg, [], True, gamma, None, (gamma,))
            self.local[nid] = nloc
            if isinstance(eg, G.IF):
                self.if_points.add(nid)
            out_ids.append(nid)
        fibers = ",".join(f"{i}:{self.tree.points[i].fiber_germ.tag}" for i in out_ids) or "-"
        step = TraceStep(0, pid, g.tag, fibers, str(mod), res.discriminant_rule,
                         ledger.summary(), self.snapshot(), self.difficulty())
        return step

    def _md_layout(self, g, res, loc: Local, pid: str) -> dict:
        """Germs and local discriminants of the points created by an md-link."""
        fib = dict(res.new_fibers)
        br = loc.branches
        parts = res.base_modification.parts
        lay = {"chain": [None] * len(parts), "chain_delta": [None] * len(parts),
               "chain_branches": [[] for _ in parts], "extras": [],
               "gamma": "in" if res.discriminant_rule != "ProperTransform" else "out"}
        gamma = f"G{self.tree.counter + 1}"
        if isinstance(g, G.T):
            lay["chain"] = [fib["o'"], fib["o''"]]
        elif isinstance(g, G.K2A):
            left = next((b for b in br if b[1] == "L" or (b[0] == "curve" and b[1] ==
                                                           self.tree.points[pid].left)), br[0])
            right = next(b for b in br if b is not left)
            lay["chain"] = [fib["o'"], fib["o''"]]
            if parts[0] == 1:
                lay["chain_delta"][0] = "v" if left[0] == "free" else None
            else:
                lay["chain_branches"][0] = [_side(left, "L"), ("curve", gamma)]
            lay["chain_branches"][1] = [_side(right, None), ("curve", gamma)]
        elif isinstance(g, G.IEdual):
            lay["chain"] = [fib["o'"], None]
            lay["chain_branches"][0] = [("free", "L"), ("free", "R")]
        elif isinstance(g, G.IAdualPlusIAdual):
            sd = G.StandardDegenerate(True)
            lay["extras"] = [(sd, "v"), (fib["o''"], "v"), (sd, "v")]
        elif isinstance(g, G.IAdual):
            if loc.xi12 == "no-u":
                raise Undecidable(
                    f"point {pid}: with xi12 free of u the fiber over o'' is not determined")
            lay["extras"] = [(G.Gorenstein(), "v"), (fib["o''"], "u+v^2")]
        elif isinstance(g, G.ID):
            free = [b for b in br if b[0] == "free"]
            if g.m == 2:
                lay["extras"] = [(G.Gorenstein(), "v") for _ in free]
            elif g.m == 1:
                lay["extras"] = [(fib["o'"], f"v^2-u^{g.k - 1}")]
            elif g.square:
                lay["extras"] = [(G.Gorenstein(), "u-v^2") for _ in range(g.k)]
            else:
                lay["extras"] = [(G.Gorenstein(), "v") for _ in range(2 * g.k)]
        return lay

    # -- Gorenstein phase
    def blowup_step(self, pid: str, e_membership: str = "unknown",
                    as_if_link: bool = False) -> TraceStep:
        p = self.tree.points[pid]
        g = p.fiber_germ
        if p.singularity_index != 1:
            raise UndecidableDiscriminant(f"point {pid}: ordinary blowups need a smooth point")
        self.blowups += 1
        if self.blowups > self.sc.blowup_budget:
            raise UndecidableDiscriminant(f"point {pid}: blowup budget exhausted")
        loc = self.local[pid]
        dirs = {}          # (chart, t) -> {"delta": bool, "curves": [...]}
        irr = 0
        delta = loc.delta
        if not delta.is_unit():
            if delta.is_zero() or delta.order() > delta.N:
                raise UndecidableDiscriminant(f"point {pid}: discriminant not determined "
                                              f"at truncation {delta.N}")
            _, facs = factor_form(delta.leading_form())
            for f, e in facs:
                deg = sympy.Poly(f, U, V).total_degree()
                if deg == 1:
                    dirs.setdefault(_direction(f), {"delta": True, "curves": []})["delta"] = True
                elif e == 1:
                    irr += deg
                else:
                    raise UndecidableDiscriminant(
                        f"point {pid}: repeated irrational tangent {f}")
        for c, eq in sorted(loc.curves.items()):
            d = _direction(eq.leading_form())
            dirs.setdefault(d, {"delta": False, "curves": []})["curves"].append(c)
        keys = sorted(dirs, key=lambda k: (k[0], k[1]))
        n_new = len(keys) + irr
        ids = [f"{pid}.{i + 1}" for i in range(n_new)]
        tree, new_ids = apply_modification(self.tree, pid, OrdinaryBlowup(),
                                           [G.Gorenstein()] * n_new, ids)
        self.tree = tree
        E = self._new_curve_record(loc.root, e_membership)
        del self.local[pid]
        self.if_points.discard(pid)
        out = []
        for nid, key in zip(new_ids, keys + [None] * irr):
            np_ = self.tree.points[nid]
            if key is None:
                curves = {E: _exact("u")}
                nd = _exact("v")
                passing = []
            else:
                chart, t = key
                curves = {E: _exact("u" if chart == "U" else "v")}
                passing = dirs[key]["curves"]
                for c in passing:
                    curves[c], _ = blowup_curve_germ(loc.curves[c], chart, t)
                if dirs[key]["delta"]:
                    try:
                        nd, _ = blowup_curve_germ(delta, chart, t)
                    except ZeroWithinTruncation:
                        raise UndecidableDiscriminant(
                            f"point {pid}: strict transform lost within truncation") from None
                else:
                    nd = TruncatedSeries.constant(1, delta.N)
            np_.on_curves = (E, *passing)
            np_.left = E
            np_.right = passing[0] if passing else None
            nloc, cls = self._smooth_local(loc.root, curves, nd)
            self.local[nid] = nloc
            if as_if_link:
                np_.fiber_germ = G.Smooth() if cls == "empty" else G.StandardDegenerate(False)
            elif cls == "empty" and not passing:
                np_.fiber_germ = G.Smooth()
            out.append(nid)
        mod = WeightedBlowup(1) if as_if_link else OrdinaryBlowup()
        if as_if_link:
            res = G.md_link(g)
            ledger = G.check_ledger(g, res).summary()
            rule = res.discriminant_rule
        else:
            ledger, rule = "ok", "Unknown"
        fibers = ",".join(f"{i}:{self.tree.points[i].fiber_germ.tag}" for i in out) or "-"
        return TraceStep(0, pid, g.tag, fibers, str(mod), rule, ledger, self.snapshot(),
                         self.difficulty())

    def point_class(self, pid: str) -> str | None:
        p = self.tree.points[pid]
        if p.singularity_index != 1:
            return None
        return nc_class(over_approx(self.local[pid], self.membership))

    def convert_to_standard(self) -> list[str]:
        out = []
        for pid in self.sorted_points():
            p = self.tree.points[pid]
            if isinstance(p.fiber_germ, G.Gorenstein):
                std = _std_for(self.point_class(pid))
                if std is None:
                    raise UndecidableDiscriminant(f"point {pid}: discriminant is not nc")
                p.fiber_germ = std
                out.append(f"{pid}:{std.tag}")
        return out

    # -- inspection
    def root_graph(self, root: str) -> DualGraph:
        names = {c for c, r in self.curve_root.items() if r == root}
        g = DualGraph()
        for v in self.tree.graph.vertices:
            if v.name in names:
                g.add_vertex(v.name, v.kind, v.self_intersection)
        for e, m in self.tree.graph.edges.items():
            if e <= names:
                a, b = sorted(e)
                g.add_edge(a, b, m)
        return g

    def crepant_graph(self, root: str) -> DualGraph:
        return self.root_graph(root)

    def dot(self) -> str:
        g = DualGraph()
        for v in self.tree.graph.vertices:
            g.add_vertex(v.name, v.kind, v.self_intersection)
        for e, m in self.tree.graph.edges.items():
            a, b = sorted(e)
            g.add_edge(a, b, m)
        marks = {"in": "Delta", "unknown": "Delta?"}
        for tag in ("in", "unknown"):
            hits = [c for c, mem in self.membership.items() if mem == tag]
            if hits:
                g.add_vertex(marks[tag], "branch")
                for c in hits:
                    g.add_edge(marks[tag], c)
        return g.to_dot(self.sc.name.replace("-", "_") or "G")

    def summary(self) -> dict:
        pts = list(self.tree.points.values())
        smooth = all(p.singularity_index == 1 for p in pts)
        gor = all(p.fiber_germ.gorenstein for p in pts)
        std = all(isinstance(p.fiber_germ, (G.Smooth, G.StandardDegenerate)) for p in pts)
        nc = True
        for pid in self.sorted_points():
            cls = self.point_class(pid)
            if cls is None or cls == "other":
                nc = False
        yn = lambda b: "yes" if b else "no"
        return {"base_smooth": yn(smooth), "fibers_gorenstein": yn(gor),
                "fibers_standard": yn(std), "delta_nc": yn(nc), "points": len(pts),
                "curves": len(self.tree.graph.vertices)}


def _side(branch, side):
    return ("free", side) if branch[0] == "free" else branch


def _direction(lin) -> tuple:
    p = sympy.Poly(lin, U, V)
    a, b = p.coeff_monomial(U), p.coeff_monomial(V)
    if b != 0:
        return ("U", str(sympy.Rational(-a, b)))
    return ("V", "0")


# ---------------------------------------------------------------- drivers

class _Run:
    def __init__(self, sc: Scenario, allow_unsupported: bool):
        self.state = State(sc, allow_unsupported)
        self.init = self.state.snapshot()
        self.init_d = self.state.difficulty()
        self.steps: list[TraceStep] = []
        self.skipped: list[str] = []
        self.conversions: list[str] = []

    def record(self, step: TraceStep):
        step.n = len(self.steps) + 1
        self.steps.append(step)

    def pick(self, pred):
        for pid in self.state.sorted_points():
            p = self.state.tree.points[pid]
            if pid in self.skipped_ids:
                continue
            if pred(p):
                return pid
        return None

    @property
    def skipped_ids(self):
        return {s.split()[0] for s in self.skipped}

    def link_phase(self, pred):
        while True:
            pid = self.pick(pred)
            if pid is None:
                return
            g = self.state.tree.points[pid].fiber_germ
            if isinstance(g, (G.IIdual, G.IIdualPlusIIdual)):
                self.skipped.append(f"{pid} {g.tag} unsupported")
                continue
            self.record(self.state.md_step(pid))

    def gorenstein_phase(self):
        st = self.state
        while True:
            target = None
            for pid in st.sorted_points():
                if pid in self.skipped_ids:
                    continue
                if st.point_class(pid) == "other":
                    if pid in st.if_points:
                        raise UndecidableDiscriminant(
                            f"point {pid}: IF germ with a non-nc over-approximated discriminant")
                    target = pid
                    break
            if target is None:
                break
            self.record(st.blowup_step(target))
        for pid in sorted(st.if_points, key=_natural_key):
            if pid in st.tree.points:
                self.record(st.blowup_step(pid, "out", as_if_link=True))
        st.if_points.clear()
        self.conversions = st.convert_to_standard()

    def finish(self, driver: str) -> StandardizationTrace:
        st = self.state
        return StandardizationTrace(driver, st.sc, self.init, self.init_d, self.steps,
                                    self.conversions, st.snapshot(), st.summary(), st.claims,
                                    self.skipped, st)


def resolve_base(sc: Scenario, allow_unsupported: bool = False) -> StandardizationTrace:
    run = _Run(sc, allow_unsupported)
    run.link_phase(lambda p: p.singularity_index > 1)
    return run.finish("resolve-base")


def gorensteinize(sc: Scenario, allow_unsupported: bool = False) -> StandardizationTrace:
    run = _Run(sc, allow_unsupported)
    run.link_phase(lambda p: not p.fiber_germ.gorenstein or p.singularity_index > 1)
    return run.finish("gorensteinize")


def standardize(sc: Scenario, allow_unsupported: bool = False) -> StandardizationTrace:
    run = _Run(sc, allow_unsupported)
    run.link_phase(lambda p: not p.fiber_germ.gorenstein or p.singularity_index > 1)
    run.gorenstein_phase()
    return run.finish("standardize")


DRIVERS = {"resolve-base": resolve_base, "gorensteinize": gorensteinize,
           "standardize": standardize}


def link_once(sc: Scenario, pid: str, allow_unsupported: bool = False):
    """Apply a single md-link at ``pid``; returns (LinkResult, LedgerReport, TraceStep)."""
    st = State(sc, allow_unsupported=True)
    if pid not in st.tree.points:
        raise ScenarioError(f"no point {pid}")
    g = st.tree.points[pid].fiber_germ
    if isinstance(g, G.IF):
        res = G.md_link(g)
        step = st.blowup_step(pid, "out", as_if_link=True)
    else:
        res = G.md_link(g)
        step = st.md_step(pid)
    step.n = 1
    return res, G.check_ledger(g, res), step


# ----------------------------------------------------------------- replay

_STEP_RE = re.compile(r"^STEP (\d+) AT (\S+) GERM (\S+) -> FIBERS (\S+) BASE (\S+) "
                      r"DELTA (\S+) LEDGER (.+)$")


@dataclass
class ReplayResult:
    ok: bool
    mismatches: list


def replay(sc: Scenario, trace_text: str, allow_unsupported: bool = False) -> ReplayResult:
    """Re-apply the recorded steps and compare every snapshot hash."""
    st = State(sc, allow_unsupported)
    bad = []
    snaps = {}
    steps = []
    init = None
    final = None
    for line in trace_text.splitlines():
        m = _STEP_RE.match(line)
        if m:
            steps.append((int(m.group(1)), m.group(2), m.group(5)))
        elif line.startswith("SNAPSHOT "):
            _, n, h, *_ = line.split()
            if n == "final":
                final = h
            else:
                snaps[int(n)] = h
        elif line.startswith("INIT "):
            init = line.split()[1]
    if init != st.snapshot():
        bad.append("INIT")
    for n, pid, base in steps:
        if base.startswith("OrdinaryBlowup"):
            step = st.blowup_step(pid)
        elif base.startswith("WeightedBlowup"):
            step = st.blowup_step(pid, "out", as_if_link=True)
        else:
            step = st.md_step(pid)
        if snaps.get(n) != step.snapshot:
            bad.append(f"STEP {n}")
    if "CONVERT " in trace_text:
        st.if_points.clear()
        st.convert_to_standard()
    if final is not None and final != st.snapshot():
        bad.append("final")
    return ReplayResult(not bad, bad)


# ------------------------------------------------------- random scenarios

_GOR_DELTAS = ("u*v*(u-v)", "v^2-u^3", "u^2-v^2", "v-u^2", "u*(v^2-u^3)", "u^2+v^2",
               "v^2-u^4", "(u-v)*(u+2*v)*v")


def random_scenario(seed: int, max_points: int = 4, rmax: int = 20) -> Scenario:
    """A seeded scenario mixing every supported germ family."""
    import random
    from math import gcd

    rng = random.Random(f"scenario|{seed}")
    sc = Scenario(name=f"random{seed}", truncation_order=12)
    for i in range(rng.randint(1, max_points)):
        kind = rng.choice(("T", "T", "k2A", "IEv", "IAv", "IAv+IAv", "ID", "IF", "gor", "std"))
        if kind == "T":
            r = rng.randint(2, rmax)
            a = rng.choice([x for x in range(1, r) if gcd(r, x) == 1])
            g = G.T(r, a)
        elif kind == "k2A":
            g = G.K2A(rng.randrange(3, rmax + 1, 2))
        elif kind == "ID":
            m = rng.randint(0, 2)
            g = G.ID(2) if m == 2 else G.ID(m, rng.randint(2, 4),
                                            rng.choice((True, False)) if m == 0 else None)
        else:
            g = G.parse_tag(kind)
        delta = rng.choice(_GOR_DELTAS) if kind == "gor" else None
        sc.points.append(PointSpec(f"p{i + 1}", g, delta))
    return sc
