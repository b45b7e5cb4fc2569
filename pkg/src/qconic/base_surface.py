"""Base surface germs: Du Val A-points, modifications and dual graphs."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import IllegalModification, ScenarioError, Undecidable, UnknownGraph

# ------------------------------------------------------------ modifications


@dataclass(frozen=True)
class CrepantExtract:
    """Extract ``len(parts) - 1`` crepant curves from an A_{r-1} point.

    The new points along the chain have indices ``parts`` (summing to r).
    """
    parts: tuple

    @property
    def curves(self) -> int:
        return len(self.parts) - 1

    @property
    def name(self) -> str:
        if all(p == 1 for p in self.parts) and self.curves == 1:
            return "MinimalResolutionStep"
        return "Crepant" if self.curves == 1 else "CrepantTwoCurves"

    def __str__(self):
        return f"{self.name}({sum(self.parts)}->{'+'.join(str(p) for p in self.parts)})"


@dataclass(frozen=True)
class WeightedBlowup:
    """Weighted blowup with weights (1,a) of a smooth point."""
    a: int = 1

    def __str__(self):
        return f"WeightedBlowup(1,{self.a})"


@dataclass(frozen=True)
class OrdinaryBlowup:
    def __str__(self):
        return "OrdinaryBlowup"


# ----------------------------------------------------------------- graphs


@dataclass
class Vertex:
    name: str
    kind: str                       # "exceptional" | "branch"
    self_intersection: Fraction | None = None
    created: int = 0


@dataclass
class DualGraph:
    vertices: list = field(default_factory=list)
    edges: dict = field(default_factory=dict)     # frozenset({a, b}) -> multiplicity

    def add_vertex(self, name, kind="exceptional", self_intersection=None) -> Vertex:
        if any(v.name == name for v in self.vertices):
            raise ValueError(f"duplicate vertex {name}")
        v = Vertex(name, kind, None if self_intersection is None else Fraction(self_intersection),
                   len(self.vertices))
        self.vertices.append(v)
        return v

    def add_edge(self, a: str, b: str, mult: int = 1) -> None:
        key = frozenset((a, b))
        self.edges[key] = self.edges.get(key, 0) + mult

    def vertex(self, name: str) -> Vertex:
        return next(v for v in self.vertices if v.name == name)

    def exceptional(self) -> list:
        return [v for v in self.vertices if v.kind == "exceptional"]

    def branches(self) -> list:
        return [v for v in self.vertices if v.kind == "branch"]

    def neighbors(self, name: str) -> list:
        out = []
        for e in self.edges:
            if name in e:
                (other,) = e - {name} or {name}
                out.append(other)
        return sorted(out)

    def is_chain(self, n: int, self_intersection=-2) -> bool:
        """True iff the exceptional part is a chain of n curves of the given square."""
        exc = self.exceptional()
        if len(exc) != n:
            return False
        if any(v.self_intersection != self_intersection for v in exc):
            return False
        if n == 0:
            return True
        names = {v.name for v in exc}
        sub = {e: m for e, m in self.edges.items() if e <= names}
        if len(sub) != n - 1 or any(m != 1 for m in sub.values()):
            return False
        deg = {v: 0 for v in names}
        for e in sub:
            for v in e:
                deg[v] += 1
        if n == 1:
            return True
        if sorted(deg.values()) != [1, 1] + [2] * (n - 2):
            return False
        # connected
        start = next(v for v, d in deg.items() if d == 1)
        seen, stack = {start}, [start]
        while stack:
            x = stack.pop()
            for e in sub:
                if x in e:
                    for y in e - {x}:
                        if y not in seen:
                            seen.add(y)
                            stack.append(y)
        return seen == names

    def to_dot(self, name: str = "G") -> str:
        """DOT text with exceptional curves first (creation order), then branches."""
        lines = [f"graph {name} {{"]
        order = sorted(self.exceptional(), key=lambda v: v.created) + \
            sorted(self.branches(), key=lambda v: v.created)
        ids = {v.name: f"v{i}" for i, v in enumerate(order)}
        for v in order:
            if v.kind == "exceptional":
                si = "" if v.self_intersection is None else f" ({v.self_intersection})"
                lines.append(f'  {ids[v.name]} [label="{v.name}{si}", shape=box];')
            else:
                lines.append(f'  {ids[v.name]} [label="{v.name}", shape=plaintext];')
        pos = {v.name: i for i, v in enumerate(order)}
        for e in sorted(self.edges, key=lambda e: sorted(pos[x] for x in e)):
            a, b = sorted(e, key=pos.get) if len(e) == 2 else (next(iter(e)),) * 2
            m = self.edges[e]
            attr = f' [label="{m}"]' if m != 1 else ""
            lines.append(f"  {ids[a]} -- {ids[b]}{attr};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def minimal_resolution_chain(n: int) -> DualGraph:
    """Chain of n (-2)-curves resolving an A_n point."""
    if n < 0:
        raise ValueError("n must be non-negative")
    g = DualGraph()
    for i in range(n):
        g.add_vertex(f"G{i + 1}", "exceptional", -2)
        if i:
            g.add_edge(f"G{i}", f"G{i + 1}")
    return g


# ----------------------------------------------------------- base points


@dataclass
class Branch:
    """A branch of the discriminant through a base point.

    ``smooth`` may be None when unknown.  ``complete`` marks global curves for
    which the arithmetic genus and the number of points meeting the rest of
    the discriminant are known.
    """
    name: str
    smooth: bool | None = True
    complete: bool = False
    genus: int | None = None
    meets_rest: int | None = None


@dataclass
class BasePoint:
    id: str
    singularity_index: int
    fiber_germ: object
    branches: list = field(default_factory=list)
    transversal: bool | None = True
    left: str | None = None         # exceptional curve on one side (A-chain position)
    right: str | None = None
    on_curves: tuple = ()           # exceptional curves through a smooth point

    def __post_init__(self):
        from .germs import base_index

        if self.singularity_index < 1:
            raise IllegalModification("singularity index must be positive")
        if base_index(self.fiber_germ) != self.singularity_index:
            raise IllegalModification(
                f"{self.fiber_germ.tag} lives over A{base_index(self.fiber_germ) - 1}, "
                f"not A{self.singularity_index - 1}")


@dataclass
class BaseTree:
    """Points of the base together with the dual graph of all exceptional curves."""
    points: dict = field(default_factory=dict)
    graph: DualGraph = field(default_factory=DualGraph)
    counter: int = 0

    def copy(self) -> "BaseTree":
        import copy
        return copy.deepcopy(self)

    def new_curve(self, self_intersection) -> str:
        self.counter += 1
        name = f"G{self.counter}"
        self.graph.add_vertex(name, "exceptional", self_intersection)
        return name


def apply_modification(tree: BaseTree, point_id: str, mod, new_germs=None,
                       slot_ids=None) -> tuple:
    """Replace a point by the result of ``mod``; returns (tree, new point ids).

    ``new_germs`` lists the fiber germs of the new points along the chain
    (default: smooth fibers over smooth points, unknown otherwise).
    """
    from .germs import Smooth, T_or_smooth

    if point_id not in tree.points:
        raise IllegalModification(f"no point {point_id}")
    out = tree.copy()
    p = out.points.pop(point_id)
    r = p.singularity_index
    new_ids = []
    if isinstance(mod, CrepantExtract):
        if r == 1:
            raise IllegalModification("crepant extraction needs a singular point")
        if sum(mod.parts) != r or any(x < 1 for x in mod.parts):
            raise IllegalModification(f"parts {mod.parts} do not split index {r}")
        curves = [out.new_curve(-2) for _ in range(mod.curves)]
        chain = [p.left] + curves + [p.right]
        for i, idx in enumerate(mod.parts):
            pid = slot_ids[i] if slot_ids else f"{point_id}.{i + 1}"
            germ = new_germs[i] if new_germs else (Smooth() if idx == 1 else T_or_smooth(idx, 1))
            left, right = chain[i], chain[i + 1]
            on = tuple(c for c in (left, right) if c is not None)
            out.points[pid] = BasePoint(pid, idx, germ, [], True, left, right, on)
            if idx == 1 and left is not None and right is not None:
                out.graph.add_edge(left, right)
            new_ids.append(pid)
    elif isinstance(mod, (WeightedBlowup, OrdinaryBlowup)):
        if r != 1:
            raise IllegalModification("weighted blowups are centered at smooth points")
        a = mod.a if isinstance(mod, WeightedBlowup) else 1
        g = out.new_curve(Fraction(-1, a))
        for c in p.on_curves:
            v = out.graph.vertex(c)
            if v.self_intersection is not None:
                v.self_intersection -= 1
            out.graph.add_edge(c, g)
        germs = new_germs or ([Smooth()] if a == 1 else [Smooth(), T_or_smooth(a, 1)])
        for i, germ in enumerate(germs):
            pid = slot_ids[i] if slot_ids else f"{point_id}.{i + 1}"
            from .germs import base_index
            idx = base_index(germ)
            out.points[pid] = BasePoint(pid, idx, germ, [], True, g, None, (g,))
            new_ids.append(pid)
    else:
        raise IllegalModification(f"unknown modification {mod!r}")
    return out, new_ids


# --------------------------------------------------------- germ graphs


def dual_graph_of_germ(g) -> DualGraph:
    from .germs import ID, IF, K2A, IAdual, IAdualPlusIAdual, IEdual

    G = DualGraph()
    if isinstance(g, IEdual):
        for n in ("Theta1", "Theta0", "Theta2"):
            G.add_vertex(n, "exceptional", -2)
        G.add_vertex("Delta1", "branch")
        G.add_vertex("Delta2", "branch")
        G.add_edge("Delta1", "Theta1")
        G.add_edge("Theta1", "Theta0")
        G.add_edge("Theta0", "Theta2")
        G.add_edge("Delta2", "Theta0")
        return G
    if isinstance(g, K2A):
        chain = minimal_resolution_chain(g.r - 1)
        G = chain
        G.add_vertex("Delta1", "branch")
        G.add_vertex("Delta2", "branch")
        G.add_edge("Delta1", "G1")
        G.add_edge("Delta2", f"G{g.r - 1}")
        return G
    if isinstance(g, IAdualPlusIAdual):
        G.add_vertex("Gamma", "exceptional", -2)
        for i in (1, 2, 3):
            G.add_vertex(f"Delta{i}", "branch")
            G.add_edge(f"Delta{i}", "Gamma")
        return G
    if isinstance(g, IAdual):
        G.add_vertex("Gamma", "exceptional", -2)
        G.add_vertex("Delta1", "branch")
        G.add_vertex("Delta2", "branch")
        G.add_edge("Delta1", "Gamma")
        G.add_edge("Delta2", "Gamma", 2)
        return G
    if isinstance(g, ID) and g.m == 2:
        G.add_vertex("Gamma", "exceptional", -2)
        G.add_vertex("Delta1", "branch")
        G.add_vertex("Delta2", "branch")
        G.add_edge("Delta1", "Gamma")
        G.add_edge("Delta2", "Gamma")
        return G
    if isinstance(g, IF):
        G.add_vertex("Delta1", "branch")
        G.add_vertex("Delta2", "branch")
        G.add_edge("Delta1", "Delta2")
        return G
    raise UnknownGraph(f"no resolution graph is recorded for {g.tag}")


# ----------------------------------------------------- discriminant checks


@dataclass(frozen=True)
class Verdict:
    compatible: bool
    configuration: str
    expected: tuple


def discriminant_configuration(point: BasePoint) -> str:
    bs = point.branches
    if not bs:
        return "empty"
    if any(b.smooth is None for b in bs):
        raise Undecidable(f"point {point.id}: branch smoothness unknown")
    if len(bs) == 1:
        return "smooth" if bs[0].smooth else "other"
    if len(bs) == 2 and all(b.smooth for b in bs):
        if point.transversal is None:
            raise Undecidable(f"point {point.id}: transversality unknown")
        return "lc-not-plt" if point.transversal else "other"
    return "other"


def classify_point_by_discriminant(point: BasePoint) -> Verdict:
    from .germs import ID, IF, K2A, Smooth, StandardDegenerate, T, Gorenstein

    conf = discriminant_configuration(point)
    g = point.fiber_germ
    if conf == "empty":
        ok = isinstance(g, (T, Smooth))
        return Verdict(ok, conf, ("T",))
    if conf == "smooth":
        ok = isinstance(g, StandardDegenerate) and not g.double_line
        return Verdict(ok or isinstance(g, Gorenstein), conf, ("std(ll)",))
    if conf == "lc-not-plt":
        ok = isinstance(g, (K2A, IF)) or (isinstance(g, ID) and g.m == 2) or \
            (isinstance(g, StandardDegenerate) and g.double_line)
        return Verdict(ok or isinstance(g, Gorenstein), conf, ("k2A", "ID(2)", "std(dl)"))
    bad = isinstance(g, (T, Smooth, K2A, StandardDegenerate)) or (isinstance(g, ID) and g.m == 2)
    return Verdict(not bad, conf, ("other",))


def check_rational_components(branches) -> None:
    """Reject a complete smooth rational branch meeting the rest of Delta in <= 1 point."""
    for b in branches:
        if b.complete and b.smooth and b.genus == 0 and b.meets_rest is not None \
                and b.meets_rest <= 1:
            raise ScenarioError(
                f"branch {b.name}: a complete rational component meeting the rest of the "
                "discriminant in at most one point cannot occur")
