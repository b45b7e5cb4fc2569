"""Exact toric models of type-T germs.

Vectors are tuples of :class:`fractions.Fraction`.  A :class:`RefinedLattice`
is an overlattice of the standard integer lattice; once its basis is known
all membership and index questions become integer arithmetic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from sympy import Matrix
from sympy.matrices.normalforms import hermite_normal_form, smith_normal_decomp

from .errors import (
    AntiflipRejected,
    BoundaryWall,
    LedgerViolation,
    NonCompactCurve,
    NonCyclicQuotient,
    NonSimplicial,
    NotFlippable,
    NotTerminalCyclic,
    RayOutsideCone,
)

Vec = tuple


def vec(*xs) -> tuple:
    return tuple(Fraction(x) for x in xs)


def _det(cols: Sequence[Sequence[Fraction]]) -> Fraction:
    n = len(cols)
    if n == 1:
        return Fraction(cols[0][0])
    if n == 2:
        return cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1]
    if n == 3:
        (a, b, c), (d, e, f), (g, h, i) = cols
        return a * (e * i - f * h) - d * (b * i - c * h) + g * (b * f - c * e)
    raise ValueError("only ranks 1..3 are supported")


def _solve(cols: Sequence[Sequence[Fraction]], v: Sequence[Fraction]) -> tuple:
    """Coordinates of v in the basis ``cols`` (Cramer's rule)."""
    d = _det(cols)
    if d == 0:
        raise NonSimplicial("generators are linearly dependent")
    out = []
    for k in range(len(cols)):
        swapped = [v if j == k else c for j, c in enumerate(cols)]
        out.append(_det(swapped) / d)
    return tuple(out)


def _lcm_den(xs: Iterable[Fraction]) -> int:
    return math.lcm(*[Fraction(x).denominator for x in xs] or [1])


def _primitive_int(xs: Sequence[Fraction]) -> tuple[int, ...]:
    m = _lcm_den(xs)
    ints = [int(x * m) for x in xs]
    g = math.gcd(*ints)
    return tuple(i // g for i in ints) if g else tuple(ints)


class RefinedLattice:
    """``Z^n`` enlarged by finitely many rational torsion generators.

    >>> L = RefinedLattice(3, [vec(Fraction(1, 5), Fraction(2, 5), Fraction(3, 5))])
    >>> L.index
    5
    """

    def __init__(self, rank: int, torsion_generators: Iterable[Sequence] = ()):
        self.rank = rank
        gens = [tuple(Fraction(x) for x in g) for g in torsion_generators]
        for g in gens:
            if len(g) != rank:
                raise ValueError("torsion generator has wrong length")
        self.torsion_generators = tuple(gens)
        den = _lcm_den([x for g in gens for x in g])
        cols = [[den if i == j else 0 for i in range(rank)] for j in range(rank)]
        cols += [[int(x * den) for x in g] for g in gens]
        A = Matrix(rank, len(cols), lambda i, j: cols[j][i])
        H = hermite_normal_form(A)
        self.basis = tuple(
            tuple(Fraction(int(H[i, j]), den) for i in range(rank)) for j in range(rank)
        )
        self.covolume = abs(_det(self.basis))
        self.index = int(1 / self.covolume)
        inv = Matrix(rank, rank, lambda i, j: self.basis[j][i]).inv()
        self._inv = tuple(tuple(Fraction(int(inv[i, j].p), int(inv[i, j].q)) for j in range(rank))
                          for i in range(rank))
        self._group_cache: dict = {}

    def __repr__(self):
        return f"RefinedLattice({self.rank}, {list(self.torsion_generators)})"

    def coords(self, v: Sequence) -> tuple:
        v = tuple(Fraction(x) for x in v)
        return tuple(sum((a * x for a, x in zip(row, v)), Fraction(0)) for row in self._inv)

    def contains(self, v: Sequence) -> bool:
        return all(c.denominator == 1 for c in self.coords(v))

    def int_coords(self, v: Sequence) -> tuple[int, ...]:
        c = self.coords(v)
        if any(x.denominator != 1 for x in c):
            raise ValueError(f"{v} is not a lattice point")
        return tuple(int(x) for x in c)

    def primitive(self, v: Sequence) -> tuple:
        """The primitive lattice vector on the ray through v."""
        c = self.coords(v)
        p = _primitive_int(c)
        return tuple(sum((Fraction(p[j]) * self.basis[j][i] for j in range(self.rank)), Fraction(0))
                     for i in range(self.rank))

    def is_primitive(self, v: Sequence) -> bool:
        c = self.coords(v)
        return all(x.denominator == 1 for x in c) and math.gcd(*[int(x) for x in c]) == 1

    def multiplicity(self, gens: Sequence[Sequence]) -> int:
        """Index of the span of ``gens`` inside its saturation in this lattice."""
        ints = [self.int_coords(g) for g in gens]
        k = len(ints)
        minors = []
        for rows in itertools.combinations(range(self.rank), k):
            minors.append(int(_det([[Fraction(col[r]) for r in rows] for col in ints])))
        g = math.gcd(*minors)
        if g == 0:
            raise NonSimplicial("generators are linearly dependent")
        return g


# ---------------------------------------------------------------- quotients

@dataclass(frozen=True)
class QuotientSingularity:
    """Cyclic quotient ``1/r(w_1, ..., w_n)`` kept in canonical form.

    The canonical representative is the lexicographically least weight tuple
    among all unit rescalings and permutations.  ``r == 1`` is a smooth point.
    """

    r: int
    weights: tuple

    def __post_init__(self):
        r = self.r
        if r < 1:
            raise ValueError("index must be positive")
        w = tuple(int(x) % r for x in self.weights)
        if r == 1:
            w = tuple(0 for _ in w)
        else:
            w = min(
                tuple(sorted((k * x) % r for x in w))
                for k in range(1, r) if math.gcd(k, r) == 1
            )
        object.__setattr__(self, "weights", w)

    @property
    def is_smooth(self) -> bool:
        return self.r == 1

    def is_terminal(self) -> bool:
        """Terminality test for three-dimensional cyclic quotients."""
        if self.r == 1:
            return True
        if len(self.weights) != 3 or any(math.gcd(x, self.r) != 1 for x in self.weights):
            return False
        return self.t_parameter() is not None

    def t_parameter(self):
        """Return ``a`` with the point equal to 1/r(1, a, -a), or None."""
        r = self.r
        for k in range(1, max(r, 2)):
            if math.gcd(k, r) != 1:
                continue
            w = [(k * x) % r for x in self.weights]
            for i in range(len(w)):
                rest = w[:i] + w[i + 1:]
                if w[i] == 1 % r and len(rest) == 2 and (rest[0] + rest[1]) % r == 0 \
                        and math.gcd(rest[0], r) == 1:
                    return rest[0]
        return None

    def __str__(self):
        if self.r == 1:
            return "smooth"
        return f"1/{self.r}({','.join(str(x) for x in self.weights)})"


SMOOTH = QuotientSingularity(1, (0, 0, 0))


# -------------------------------------------------------------------- cones

@dataclass(frozen=True)
class Cone:
    generators: tuple
    ambient: RefinedLattice = field(compare=False)

    def __post_init__(self):
        gens = tuple(self.ambient.primitive(g) for g in self.generators)
        if _det_any(gens) == 0:
            raise NonSimplicial("cone generators are linearly dependent")
        object.__setattr__(self, "generators", gens)

    @property
    def dim(self) -> int:
        return len(self.generators)


def _det_any(gens) -> Fraction:
    k = len(gens)
    n = len(gens[0]) if gens else 0
    if k > n:
        return Fraction(0)
    best = Fraction(0)
    for rows in itertools.combinations(range(n), k):
        d = _det([[g[r] for r in rows] for g in gens])
        if d:
            return d
    return best


def group_element(cone: Cone) -> tuple[int, tuple[int, ...]]:
    """Order n and the weights ``(b_i)`` of a generator ``(1/n) sum b_i v_i``.

    Raises NonCyclicQuotient when the lattice quotient is not cyclic.
    """
    lat = cone.ambient
    if cone.dim != lat.rank:
        raise NonSimplicial("need a full-dimensional cone")
    hit = lat._group_cache.get(cone.generators)
    if hit is None:
        hit = lat._group_cache[cone.generators] = _group_element(cone)
    return hit


def _group_element(cone: Cone) -> tuple[int, tuple[int, ...]]:
    lat = cone.ambient
    ints = [lat.int_coords(g) for g in cone.generators]
    n = lat.rank
    M = Matrix(n, n, lambda i, j: ints[j][i])
    S, U, V = smith_normal_decomp(M)
    diag = [abs(int(S[i, i])) for i in range(n)]
    if sum(1 for d in diag if d > 1) > 1:
        raise NonCyclicQuotient(f"quotient has invariants {diag}")
    order = max(diag)
    if order == 1:
        return 1, tuple(0 for _ in range(n))
    k = diag.index(order)
    sign = 1 if int(S[k, k]) > 0 else -1
    col = [sign * int(V[i, k]) % order for i in range(n)]
    return order, tuple(col)


def classify_cone(cone: Cone) -> QuotientSingularity:
    """Cyclic quotient type of a simplicial cone; ``SMOOTH`` for a basis cone."""
    if cone.dim != cone.ambient.rank:
        raise NonSimplicial("classify_cone needs a full-dimensional cone")
    n, w = group_element(cone)
    return QuotientSingularity(n, w)


def kawamata_ray(sing: QuotientSingularity) -> tuple:
    """Weights ``(1/r)(1, a, r-a)`` of the Kawamata blowup of 1/r(1,a,-a)."""
    if sing.r == 1:
        raise NotTerminalCyclic("smooth point has no Kawamata blowup")
    a = sing.t_parameter()
    if a is None:
        raise NotTerminalCyclic(f"{sing} is not of the form 1/r(1,a,-a)")
    r = sing.r
    return (Fraction(1, r), Fraction(a, r), Fraction(r - a, r))


def kawamata_ray_of_cone(cone: Cone) -> tuple:
    """The Kawamata ray of a terminal cyclic cone, in ambient coordinates."""
    n, g = group_element(cone)
    if n == 1:
        raise NotTerminalCyclic("smooth cone")
    for k in range(1, n):
        if math.gcd(k, n) != 1:
            continue
        w = [(k * x) % n for x in g]
        for i in range(3):
            rest = [w[j] for j in range(3) if j != i]
            if w[i] == 1 and (rest[0] + rest[1]) % n == 0 and math.gcd(rest[0], n) == 1:
                return tuple(
                    sum((Fraction(w[j], n) * cone.generators[j][c] for j in range(3)), Fraction(0))
                    for c in range(3)
                )
    raise NotTerminalCyclic("cone is not terminal cyclic")


def barycentric(cone: Cone, ray: Sequence) -> tuple:
    gens = cone.generators
    if cone.dim == cone.ambient.rank:
        return _solve(gens, tuple(Fraction(x) for x in ray))
    # lower-dimensional cone: solve on a coordinate subset, then verify
    n = cone.ambient.rank
    for rows in itertools.combinations(range(n), cone.dim):
        sub = [[g[r] for r in rows] for g in gens]
        if _det(sub):
            c = _solve(sub, [Fraction(ray[r]) for r in rows])
            back = [sum((c[j] * gens[j][i] for j in range(cone.dim)), Fraction(0)) for i in range(n)]
            if tuple(back) != tuple(Fraction(x) for x in ray):
                raise RayOutsideCone("ray is not in the span of the cone")
            return c
    raise NonSimplicial("degenerate cone")


def discrepancy_of_ray(cone: Cone, ray: Sequence) -> Fraction:
    """Discrepancy of the toric divisor of ``ray`` over the cone's point.

    >>> L = RefinedLattice(2, [vec(Fraction(2, 5), Fraction(3, 5))])
    >>> discrepancy_of_ray(Cone((vec(1, 0), vec(0, 1)), L), vec(Fraction(2, 5), Fraction(3, 5)))
    Fraction(0, 1)
    """
    c = barycentric(cone, ray)
    if any(x <= 0 for x in c):
        raise RayOutsideCone("ray is not in the relative interior")
    return sum(c, Fraction(0)) - 1


# --------------------------------------------------------------------- fans

Wall = frozenset


@dataclass
class Fan:
    """A germ-local simplicial fan whose rays carry names.

    ``cones`` are tuples of ray names; ``projection`` is the integer matrix of
    the fibration to the base, ``labels`` attaches geometric names to rays
    and walls, and ``created`` records the order in which rays appeared.
    """

    lattice: RefinedLattice
    rays: dict
    cones: tuple
    projection: tuple = ()
    base_lattice: RefinedLattice | None = None
    labels: dict = field(default_factory=dict)

    def copy(self) -> "Fan":
        return Fan(self.lattice, dict(self.rays), tuple(self.cones), self.projection,
                   self.base_lattice, dict(self.labels))

    def cone(self, names: Iterable[str]) -> Cone:
        return Cone(tuple(self.rays[n] for n in names), self.lattice)

    @property
    def maximal_cones(self) -> list:
        return [self.cone(c) for c in self.cones]

    def name_of(self, v: Sequence) -> str:
        v = tuple(Fraction(x) for x in v)
        for k, w in self.rays.items():
            if w == v:
                return k
        raise KeyError(v)

    def walls(self) -> dict:
        """Map each two-dimensional face to the maximal cones containing it."""
        out: dict = {}
        for c in self.cones:
            for pair in itertools.combinations(c, 2):
                out.setdefault(frozenset(pair), []).append(c)
        return out

    def interior_walls(self) -> list:
        return sorted((w for w, cs in self.walls().items() if len(cs) == 2), key=wall_key)

    def project(self, v: Sequence) -> tuple:
        return tuple(sum((Fraction(row[i]) * v[i] for i in range(len(v))), Fraction(0))
                     for row in self.projection)

    def to_text(self) -> str:
        """One cone per line, generators as integer vectors in the lattice basis."""
        lines = []
        for c in self.cones:
            parts = [",".join(str(x) for x in self.lattice.int_coords(self.rays[n])) for n in c]
            lines.append(";".join(parts))
        return "\n".join(lines) + "\n"


def wall_key(w) -> tuple:
    return tuple(sorted(w))


def _as_wall(fan: Fan, wall) -> frozenset:
    names = []
    for x in wall:
        names.append(x if isinstance(x, str) else fan.name_of(x))
    return frozenset(names)


@dataclass(frozen=True)
class WallRelation:
    rays: tuple          # (off_1, off_2, wall_1, wall_2)
    coefficients: tuple  # primitive integers, off-wall entries positive

    def coeff(self, name: str) -> int:
        return dict(zip(self.rays, self.coefficients)).get(name, 0)

    @property
    def sign_pattern(self) -> tuple:
        return tuple((c > 0) - (c < 0) for c in self.coefficients)


def wall_relation(fan: Fan, wall) -> WallRelation:
    w = _as_wall(fan, wall)
    cones = fan.walls().get(w, [])
    if len(cones) != 2:
        raise BoundaryWall(f"wall {sorted(w)} is not shared by two maximal cones")
    on = sorted(w)
    off = [next(n for n in c if n not in w) for c in cones]
    names = off + on
    vs = [fan.rays[n] for n in names]
    # kernel of the 3x4 matrix by signed maximal minors
    coeffs = []
    for i in range(4):
        rest = [vs[j] for j in range(4) if j != i]
        coeffs.append((-1) ** i * _det(rest))
    ints = list(_primitive_int(coeffs))
    if ints[0] < 0:
        ints = [-x for x in ints]
    if ints[0] <= 0 or ints[1] <= 0:
        raise NonSimplicial("adjacent cones lie on the same side of their wall")
    return WallRelation(tuple(names), tuple(ints))


def _curve_scale(fan: Fan, wall: frozenset, rel: WallRelation) -> Fraction:
    """``D_{off_1} . C`` divided by the relation coefficient of ``off_1``."""
    cones = fan.walls()[wall]
    sigma = next(c for c in cones if rel.rays[0] in c)
    tau = fan.lattice.multiplicity([fan.rays[n] for n in sorted(wall)])
    m = fan.lattice.multiplicity([fan.rays[n] for n in sigma])
    return Fraction(tau, m) / rel.coefficients[0]


def _check_compact(fan: Fan, wall) -> frozenset:
    w = _as_wall(fan, wall)
    n = len(fan.walls().get(w, []))
    if n == 0:
        raise BoundaryWall(f"{sorted(w)} is not a face of the fan")
    if n == 1:
        raise NonCompactCurve(f"curve of {sorted(w)} is not complete")
    return w


def intersect_divisor_curve(fan: Fan, wall, ray) -> Fraction:
    """``D_ray . C_wall`` for the toric divisor of ``ray`` and the wall's curve."""
    w = _check_compact(fan, wall)
    rel = wall_relation(fan, w)
    name = ray if isinstance(ray, str) else fan.name_of(ray)
    return rel.coeff(name) * _curve_scale(fan, w, rel)


def canonical_intersect(fan: Fan, wall) -> Fraction:
    """``K . C_wall`` computed as minus the sum of all toric divisors."""
    w = _check_compact(fan, wall)
    rel = wall_relation(fan, w)
    return -sum(rel.coefficients) * _curve_scale(fan, w, rel)


def star_subdivide(fan: Fan, cone, ray: Sequence, name: str = "E") -> Fan:
    names = tuple(cone) if all(isinstance(x, str) for x in cone) else \
        tuple(fan.name_of(g) for g in (cone.generators if isinstance(cone, Cone) else cone))
    key = next((c for c in fan.cones if set(c) == set(names)), None)
    if key is None:
        raise RayOutsideCone("cone is not a maximal cone of the fan")
    ray = tuple(Fraction(x) for x in ray)
    coords = barycentric(fan.cone(key), ray)
    if any(x <= 0 for x in coords):
        raise RayOutsideCone("ray is not in the relative interior of the cone")
    if not fan.lattice.is_primitive(ray):
        raise RayOutsideCone("ray is not a primitive lattice point")
    if name in fan.rays:
        raise ValueError(f"ray name {name!r} already used")
    out = fan.copy()
    out.rays[name] = ray
    new = []
    for c in fan.cones:
        if c != key:
            new.append(c)
            continue
        for i in range(len(c)):
            new.append(tuple(name if j == i else c[j] for j in range(len(c))))
    out.cones = tuple(new)
    out.labels[name] = "E"
    return out


def toric_flip(fan: Fan, wall, allow_flop: bool = True) -> Fan:
    """Replace the two cones through ``wall`` by the cones over the other diagonal."""
    w = _check_compact(fan, wall)
    rel = wall_relation(fan, w)
    if rel.sign_pattern != (1, 1, -1, -1):
        raise NotFlippable(f"relation {rel.coefficients} does not allow the surgery")
    k = canonical_intersect(fan, w)
    if k > 0:
        raise AntiflipRejected(f"K.C = {k} > 0; antiflips are never executed")
    if k == 0 and not allow_flop:
        raise NotFlippable("flop not allowed here")
    off1, off2, on1, on2 = rel.rays
    old = fan.walls()[w]
    out = fan.copy()
    new = [c for c in fan.cones if c not in old]
    new.append((off1, off2, on1))
    new.append((off1, off2, on2))
    out.cones = tuple(new)
    out.labels.pop(w, None)
    out.labels[frozenset((off1, off2))] = "flopped" if k == 0 else "flipped"
    return out


# --------------------------------------------------------- T-germ drivers

def t_germ_fan(r: int, a: int) -> Fan:
    """Quotient of the P^1 x C^2 fan realizing a type-T germ of index r."""
    if not (0 < a < r) or math.gcd(r, a) != 1:
        raise ValueError(f"T({r},{a}) needs 0<a<r and gcd(r,a)=1")
    g = vec(Fraction(1, r), Fraction(a, r), Fraction(r - a, r))
    lat = RefinedLattice(3, [g])
    base = RefinedLattice(2, [g[1:]])
    rays = {"e1": vec(1, 0, 0), "-e1": vec(-1, 0, 0), "e2": vec(0, 1, 0), "e3": vec(0, 0, 1)}
    cones = (("e1", "e2", "e3"), ("-e1", "e2", "e3"))
    labels = {frozenset(("e2", "e3")): "C"}
    return Fan(lat, rays, cones, ((0, 1, 0), (0, 0, 1)), base, labels)


def fan_difficulty(fan: Fan) -> int:
    """Sum of ``index - 1`` over the terminal cyclic points of the fan."""
    total = 0
    for c in fan.maximal_cones:
        q = classify_cone(c)
        if not q.is_terminal():
            raise LedgerViolation(f"non-terminal point {q}")
        total += q.r - 1
    return total


@dataclass
class SurgeryStep:
    kind: str                   # blowup | flip | flop
    wall: tuple = ()
    relation: tuple = ()
    k_dot_c: Fraction | None = None
    e_dot_c: Fraction | None = None
    discrepancy: Fraction | None = None
    d_before: int = 0
    d_after: int = 0
    minus_e_dot_l: tuple = ()   # ((curve, before, after), ...)
    components_before: int = 1
    components_after: int = 1


@dataclass
class VerifiedLink:
    r: int
    a: int
    center: str
    steps: list
    fibers: list                # fiber germs in angular order over the base
    base_indices: list          # indices of the new base points, same order
    k_dot_c: Fraction           # K.C of the original central curve
    k_tilde: Fraction           # K.C of the transformed central curve
    e_dot_c: Fraction           # E.C of the transformed central curve
    discrepancies: list
    ledger: list                # difficulty after each step, starting value first
    fan: Fan

    @property
    def flips(self) -> int:
        return sum(1 for s in self.steps if s.kind == "flip")

    @property
    def flops(self) -> int:
        return sum(1 for s in self.steps if s.kind == "flop")


def _surgery_candidates(fan: Fan):
    out = []
    for w in fan.interior_walls():
        rel = wall_relation(fan, w)
        if rel.sign_pattern != (1, 1, -1, -1):
            continue
        out.append((w, rel, canonical_intersect(fan, w)))
    return out


def _exceptional_names(fan: Fan) -> list:
    return [n for n, lab in fan.labels.items() if isinstance(n, str) and lab == "E"]


def _minus_e_dot(fan: Fan, wall) -> Fraction:
    return -sum((intersect_divisor_curve(fan, wall, e) for e in _exceptional_names(fan)),
                Fraction(0))


def _monotonicity(before: Fan, after: Fan, wall: frozenset) -> tuple:
    """(-E).L before and after, for curves L meeting the flipping curve."""
    rows = []
    touched = before.walls()[wall]
    after_walls = after.walls()
    for c in touched:
        for pair in itertools.combinations(c, 2):
            L = frozenset(pair)
            if L == wall or len(after_walls.get(L, [])) != 2 or len(before.walls()[L]) != 2:
                continue
            rows.append((wall_key(L), _minus_e_dot(before, L), _minus_e_dot(after, L)))
    return tuple(sorted(set(rows)))


def _fiber_types(fan: Fan):
    """Read off the fibration over the subdivided base.

    Returns the fibers in angular order together with their base indices.
    Every maximal cone must contain exactly one fiber ray and every base
    cone must carry exactly two maximal cones.
    """
    from .germs import T_or_smooth

    order = {n: i for i, n in enumerate(fan.rays)}
    groups: dict = {}
    for c in fan.cones:
        fib = [n for n in c if all(x == 0 for x in fan.project(fan.rays[n]))]
        if len(fib) != 1:
            raise LedgerViolation(f"cone {c} is not over a two-dimensional base cone")
        base = frozenset(n for n in c if n != fib[0])
        groups.setdefault(base, []).append((fib[0], c))
    out = []
    for base, members in groups.items():
        if len(members) != 2 or {m[0] for m in members} != {"e1", "-e1"}:
            raise LedgerViolation(f"base cone {sorted(base)} does not carry a P^1 fiber")
        fib, c = next(m for m in members if m[0] == "e1")
        n, g = group_element(fan.cone(c))
        bnames = sorted(base, key=order.get)
        bproj = [fan.project(fan.rays[b]) for b in bnames]
        bidx = fan.base_lattice.multiplicity(bproj)
        if n != bidx:
            raise LedgerViolation(f"fiber index {n} differs from base index {bidx}")
        if n == 1:
            germ = T_or_smooth(1, 0)
        else:
            gf = g[c.index(fib)]
            if math.gcd(gf, n) != 1:
                raise LedgerViolation("fiber weight is not a unit")
            inv = pow(gf, -1, n)
            ws = {nm: (inv * g[c.index(nm)]) % n for nm in bnames}
            if sum(ws.values()) % n:
                raise LedgerViolation("base weights do not cancel; fiber is not of type T")
            germ = T_or_smooth(n, ws[bnames[0]])
        # angular position: slope of the first projected base ray
        ang = min(p[1] / (p[0] + p[1]) for p in bproj)
        out.append((ang, germ, n))
    out.sort(key=lambda t: t[0])
    return [g for _, g, _ in out], [n for _, _, n in out]


def run_T_link(r: int, a: int, center: str = "P") -> VerifiedLink:
    """Execute the md-link of T(r,a) on its toric model.

    ``center`` is ``"P"`` (blow up one point), ``"Q"`` or ``"Both"``.
    """
    if center not in ("P", "Q", "Both"):
        raise ValueError("center must be P, Q or Both")
    if center == "Both" and not 2 * a < r:
        raise ValueError("the two-point link needs a < r/2")
    fan = t_germ_fan(r, a)
    central = frozenset(("e2", "e3"))
    k0 = canonical_intersect(fan, central)
    d = fan_difficulty(fan)
    ledger = [d]
    steps: list = []
    discs = []
    targets = {"P": [("e1", "e2", "e3")], "Q": [("-e1", "e2", "e3")],
               "Both": [("e1", "e2", "e3"), ("-e1", "e2", "e3")]}[center]
    names = {"P": ["E"], "Q": ["E"], "Both": ["E_P", "E_Q"]}[center]
    e_dot = None
    for cone_names, nm in zip(targets, names):
        cone = fan.cone(cone_names)
        w = kawamata_ray_of_cone(cone)
        disc = discrepancy_of_ray(cone, w)
        discs.append(disc)
        fan = star_subdivide(fan, cone_names, w, nm)
        nd = fan_difficulty(fan)
        steps.append(SurgeryStep("blowup", (nm,), discrepancy=disc, d_before=d, d_after=nd))
        d = nd
        ledger.append(d)
    k_tilde = canonical_intersect(fan, central)
    e_dot = sum((intersect_divisor_curve(fan, central, n) for n in names), Fraction(0))

    flopped: set = set()
    while True:
        cands = _surgery_candidates(fan)
        neg = [c for c in cands if c[2] < 0]
        zero = [c for c in cands if c[2] == 0 and c[0] not in flopped]
        if neg:
            wall, rel, k = neg[0]
        elif zero:
            wall, rel, k = zero[0]
        else:
            break
        nxt = toric_flip(fan, wall)
        kind = "flop" if k == 0 else "flip"
        new_wall = frozenset(rel.rays[:2])
        if kind == "flop":
            flopped.add(new_wall)
        mono = _monotonicity(fan, nxt, wall) if kind == "flip" else ()
        e_here = sum((intersect_divisor_curve(fan, wall, n) for n in _exceptional_names(fan)),
                     Fraction(0))
        nd = fan_difficulty(nxt)
        steps.append(SurgeryStep(kind, wall_key(wall), rel.coefficients, k, e_here,
                                 d_before=d, d_after=nd, minus_e_dot_l=mono))
        fan, d = nxt, nd
        ledger.append(d)
        if len(steps) > 16:
            raise LedgerViolation("surgery sequence does not terminate")

    fibers, indices = _fiber_types(fan)
    link = VerifiedLink(r, a, center, steps, fibers, indices, k0, k_tilde, e_dot, discs,
                        ledger, fan)
    check_toric_ledger(link)
    return link


def check_toric_ledger(link: VerifiedLink) -> None:
    """Raise LedgerViolation unless every step obeys the difficulty rules."""
    for s in link.steps:
        if s.kind == "blowup" and s.d_after != s.d_before - 1:
            raise LedgerViolation(f"blowup changed d {s.d_before}->{s.d_after}")
        if s.kind == "flip" and s.d_after > s.d_before - 1:
            raise LedgerViolation(f"flip did not lower d ({s.d_before}->{s.d_after})")
        if s.kind == "flop" and s.d_after != s.d_before:
            raise LedgerViolation(f"flop changed d ({s.d_before}->{s.d_after})")
        if s.kind == "flip":
            for curve, before, after in s.minus_e_dot_l:
                if not before > after:
                    raise LedgerViolation(f"(-E).L did not drop on {curve}: {before} -> {after}")
        if s.components_after > s.components_before:
            raise LedgerViolation("flipped curve has more components than the flipping curve")
    if sum(i - 1 for i in link.base_indices) >= link.r - 1:
        raise LedgerViolation("base measure did not decrease")
