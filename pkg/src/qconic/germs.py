"""Germ taxonomy, numerical invariants, Kawamata blowup data and md-link rules."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import ClassVar

from .errors import (
    BadParameter,
    BirationalTag,
    GorensteinNoMd,
    MissingParams,
    TagParseError,
    UnsupportedGerm,
)
from .lattice_toric import QuotientSingularity

F = Fraction

# ------------------------------------------------------------------ types


@dataclass(frozen=True)
class GermType:
    gorenstein: ClassVar[bool] = False
    birational: ClassVar[bool] = False

    @property
    def tag(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.tag


@dataclass(frozen=True)
class Smooth(GermType):
    """Smooth conic over a smooth base point (point outside the discriminant)."""
    gorenstein: ClassVar[bool] = True

    @property
    def tag(self):
        return "std"


@dataclass(frozen=True)
class StandardDegenerate(GermType):
    """Degenerate fiber of a standard conic bundle: two lines or a double line."""
    double_line: bool = False
    gorenstein: ClassVar[bool] = True

    @property
    def tag(self):
        return "std(dl)" if self.double_line else "std(ll)"


@dataclass(frozen=True)
class Gorenstein(GermType):
    """Gorenstein conic germ over a smooth point whose type is fixed only by its discriminant."""
    gorenstein: ClassVar[bool] = True

    @property
    def tag(self):
        return "gor"


@dataclass(frozen=True)
class IF(GermType):
    """Reducible central fiber through an ordinary double point; discriminant uv = 0."""
    gorenstein: ClassVar[bool] = True

    @property
    def tag(self):
        return "IF"


@dataclass(frozen=True)
class T(GermType):
    r: int
    a: int

    def __post_init__(self):
        if self.r < 2 or not (0 < self.a < self.r) or math.gcd(self.r, self.a) != 1:
            raise BadParameter(f"T({self.r},{self.a}) needs 0<a<r and gcd(r,a)=1")

    @property
    def tag(self):
        return f"T({self.r},{self.a})"

    def canonical(self) -> "T":
        """Swapping the two base coordinates identifies T(r,a) with T(r,r-a)."""
        return T(self.r, min(self.a, self.r - self.a))


@dataclass(frozen=True)
class K2A(GermType):
    r: int

    def __post_init__(self):
        if self.r < 3 or self.r % 2 == 0:
            raise BadParameter(f"k2A needs odd r >= 3, got {self.r}")

    @property
    def tag(self):
        return f"k2A({self.r})"


@dataclass(frozen=True)
class IEdual(GermType):
    @property
    def tag(self):
        return "IEv"


@dataclass(frozen=True)
class IAdual(GermType):
    @property
    def tag(self):
        return "IAv"


@dataclass(frozen=True)
class IAdualPlusIAdual(GermType):
    @property
    def tag(self):
        return "IAv+IAv"


@dataclass(frozen=True)
class IIdual(GermType):
    @property
    def tag(self):
        return "IIv"


@dataclass(frozen=True)
class IIdualPlusIIdual(GermType):
    @property
    def tag(self):
        return "IIv+IIv"


@dataclass(frozen=True)
class ID(GermType):
    m: int
    k: int | None = None
    square: bool | None = None

    def __post_init__(self):
        if self.m not in (0, 1, 2):
            raise BadParameter("ID needs m in {0,1,2}")
        if self.m < 2 and (self.k is None or self.k < 2):
            raise BadParameter("ID with m<2 needs k >= 2")
        if self.m == 2 and (self.k is not None or self.square is not None):
            raise BadParameter("ID(2) takes no further parameters")
        if self.m == 1 and self.square is not None:
            raise BadParameter("the square flag only applies to m=0")

    @property
    def tag(self):
        if self.m == 2:
            return "ID(2)"
        if self.m == 1:
            return f"ID(1,k={self.k})"
        flag = "" if self.square is None else (",sq" if self.square else ",nsq")
        return f"ID(0,k={self.k}{flag})"


# birational tags: only used for blowup data

@dataclass(frozen=True)
class K1A(GermType):
    birational: ClassVar[bool] = True

    @property
    def tag(self):
        return "k1A"


@dataclass(frozen=True)
class K2AGeneral(GermType):
    r: int
    a: int
    m: int
    b: int
    k: int
    birational: ClassVar[bool] = True

    def __post_init__(self):
        r, a, m, b, k = self.r, self.a, self.m, self.b, self.k
        if min(r, m, k) < 1 or math.gcd(r, a) != 1 or math.gcd(m, b) != 1:
            raise BadParameter("k2A data needs gcd(r,a)=gcd(m,b)=1 and positive r,m,k")
        if r < m:
            raise BadParameter("k2A data needs r >= m")
        if self.delta <= 0:
            raise BadParameter(f"delta = {self.delta} must be positive")

    @property
    def delta(self) -> int:
        return self.a * self.m + self.b * self.r - self.m * self.r

    @property
    def tag(self):
        return f"k2A({self.r},{self.a},{self.m},{self.b},{self.k})"


@dataclass(frozen=True)
class IC(GermType):
    r: int
    birational: ClassVar[bool] = True

    def __post_init__(self):
        if self.r < 5 or self.r % 2 == 0:
            raise BadParameter("IC needs odd r >= 5")

    @property
    def tag(self):
        return f"IC({self.r})"


@dataclass(frozen=True)
class IIB(GermType):
    birational: ClassVar[bool] = True

    @property
    def tag(self):
        return "IIB"


@dataclass(frozen=True)
class KAD(GermType):
    r: int
    birational: ClassVar[bool] = True

    def __post_init__(self):
        if self.r < 3 or self.r % 2 == 0:
            raise BadParameter("kAD needs odd r >= 3")

    @property
    def tag(self):
        return f"kAD({self.r})"


@dataclass(frozen=True)
class K3A(GermType):
    r: int
    birational: ClassVar[bool] = True

    def __post_init__(self):
        if self.r < 3 or self.r % 2 == 0:
            raise BadParameter("k3A needs odd r >= 3")

    @property
    def tag(self):
        return f"k3A({self.r})"


def T_or_smooth(r: int, a: int) -> GermType:
    """Type T of index r; index one is a standard smooth fiber."""
    return Smooth() if r == 1 else T(r, a % r)


def k2a_or_standard(r: int) -> GermType:
    return StandardDegenerate(double_line=True) if r == 1 else K2A(r)


def equivalent(g: GermType, h: GermType) -> bool:
    if isinstance(g, T) and isinstance(h, T):
        return g.canonical() == h.canonical()
    return g == h


# ------------------------------------------------------------- tag parsing

_SIMPLE = {
    "std": Smooth, "std(ll)": lambda: StandardDegenerate(False),
    "std(dl)": lambda: StandardDegenerate(True), "gor": Gorenstein, "IF": IF,
    "IEv": IEdual, "IAv": IAdual, "IAv+IAv": IAdualPlusIAdual, "IIv": IIdual,
    "IIv+IIv": IIdualPlusIIdual, "k1A": K1A, "IIB": IIB, "ID(2)": lambda: ID(2),
}


def parse_tag(text: str) -> GermType:
    """Inverse of ``GermType.tag``.

    >>> parse_tag("T(5,2)")
    T(r=5, a=2)
    >>> parse_tag("ID(0,k=2,sq)").tag
    'ID(0,k=2,sq)'
    """
    s = text.strip().replace(" ", "")
    if s in _SIMPLE:
        return _SIMPLE[s]()
    m = re.fullmatch(r"(T|k2A|IC|kAD|k3A)\(([-\d,]+)\)", s)
    try:
        if m:
            name, args = m.group(1), [int(x) for x in m.group(2).split(",")]
            if name == "T":
                if args == [1]:
                    return Smooth()
                return T(*args)
            if name == "k2A":
                return K2A(*args) if len(args) == 1 else K2AGeneral(*args)
            return {"IC": IC, "kAD": KAD, "k3A": K3A}[name](*args)
        m = re.fullmatch(r"ID\(([01]),k=(\d+)(?:,(sq|nsq))?\)", s)
        if m:
            sq = None if m.group(3) is None else m.group(3) == "sq"
            return ID(int(m.group(1)), int(m.group(2)), sq)
    except (TypeError, BadParameter) as exc:
        raise TagParseError(f"bad germ tag {text!r}: {exc}") from exc
    raise TagParseError(f"unknown germ tag {text!r}")


# -------------------------------------------------------------- invariants


@dataclass(frozen=True)
class Difficulty:
    """Exact value, a finite set of possible values, or a lower bound."""
    values: frozenset = frozenset()
    lower: int | None = None

    @classmethod
    def exact(cls, n: int) -> "Difficulty":
        return cls(frozenset({n}))

    @property
    def value(self) -> int | None:
        return next(iter(self.values)) if len(self.values) == 1 and self.lower is None else None

    @property
    def min(self) -> int:
        return self.lower if self.lower is not None else min(self.values)

    @property
    def max(self) -> int | None:
        return None if self.lower is not None else max(self.values)

    def __str__(self):
        if self.lower is not None:
            return f">={self.lower}"
        if len(self.values) == 1:
            return str(self.value)
        return "{" + ",".join(str(v) for v in sorted(self.values)) + "}"


@dataclass(frozen=True)
class GermInvariants:
    base_index: int
    difficulty: Difficulty
    k_dot_c: tuple
    non_gorenstein_points: tuple

    def render(self) -> str:
        base = "smooth" if self.base_index == 1 else f"A{self.base_index - 1}"
        kc = ",".join(str(x) for x in self.k_dot_c) or "unknown"
        pts = ",".join(str(p) for p in self.non_gorenstein_points) or "none"
        return (f"difficulty {self.difficulty}\nbase {base}\nK.C {kc}\n"
                f"non-Gorenstein {pts}")


def base_index(g: GermType) -> int:
    if isinstance(g, (T, K2A)):
        return g.r
    if isinstance(g, IEdual):
        return 4
    if isinstance(g, (IAdual, IAdualPlusIAdual, IIdual, IIdualPlusIIdual, ID)):
        return 2
    return 1


def germ_invariants(g: GermType) -> GermInvariants:
    if g.birational:
        raise BirationalTag(f"{g.tag} is a blowup-only tag, not a fiber germ")
    ex = Difficulty.exact
    if isinstance(g, T):
        r, a = g.r, g.a
        pts = (QuotientSingularity(r, (1, a, -a)), QuotientSingularity(r, (-1, a, -a)))
        return GermInvariants(r, ex(2 * (r - 1)), (F(-2, r),), pts)
    if isinstance(g, K2A):
        r = g.r
        h = (r - 1) // 2
        pts = (QuotientSingularity(r, (h, -1, 1)), QuotientSingularity(r, (h + 1, 1, -1)))
        return GermInvariants(r, ex(2 * (r - 1)), (F(-1, r),), pts)
    if isinstance(g, IEdual):
        return GermInvariants(4, ex(7), (F(-1, 2),), (QuotientSingularity(8, (5, 1, 3)),))
    if isinstance(g, IAdualPlusIAdual):
        return GermInvariants(2, ex(3), (F(-1, 2), F(-1, 2)), (QuotientSingularity(4, (1, 1, 3)),))
    if isinstance(g, IAdual):
        return GermInvariants(2, ex(3), (F(-1, 2),), (QuotientSingularity(4, (1, 1, 3)),))
    if isinstance(g, (IIdual, IIdualPlusIIdual)):
        return GermInvariants(2, Difficulty(lower=3), (), ("cAx/4",))
    if isinstance(g, ID):
        if g.m == 2:
            d = ex(1)
        elif g.m == 1:
            d = ex(2)
        else:
            d = Difficulty(frozenset({1, 2})) if g.square is None else ex(2 if g.square else 1)
        return GermInvariants(2, d, (F(-1),), ("cA/2" if g.m > 0 else "cAx/2",))
    if isinstance(g, Smooth):
        return GermInvariants(1, ex(0), (F(-2),), ())
    if isinstance(g, StandardDegenerate):
        return GermInvariants(1, ex(0), (F(-1),) if g.double_line else (F(-1), F(-1)), ())
    if isinstance(g, IF):
        return GermInvariants(1, ex(0), (F(-1), F(-1)), ())
    if isinstance(g, Gorenstein):
        return GermInvariants(1, ex(0), (), ())
    raise BirationalTag(f"no invariants for {g.tag}")


def difficulty(g: GermType) -> Difficulty:
    return germ_invariants(g).difficulty


# ------------------------------------------------------------ blowup data


@dataclass(frozen=True)
class BlowupData:
    weights: tuple
    e_dot_c: Fraction
    k_tilde_dot_c: Fraction
    unique: bool
    center_index: int
    components: int = 1
    choices: int = 1

    @property
    def discrepancy(self) -> Fraction:
        return F(1, self.center_index)


def _w(den: int, *xs) -> tuple:
    return tuple(F(x, den) for x in xs)


def kawamata_blowup_data(g: GermType | None, params: dict | None = None,
                         choice: int | None = None) -> BlowupData:
    """Kawamata blowup data of a germ.

    ``params`` completes a bare ``"k2A"`` request, e.g.
    ``kawamata_blowup_data(None, {"r": 5, "a": 4, "m": 3, "b": 2, "k": 1})``.
    ``choice`` selects among the k blowups of a k2A germ (default: minimal a').
    """
    if g is None:
        need = ("r", "a", "m", "b", "k")
        if not params or any(x not in params for x in need):
            raise MissingParams(f"k2A blowup data needs {', '.join(need)}")
        g = K2AGeneral(*(params[x] for x in need))
    if g.gorenstein:
        raise GorensteinNoMd(f"{g.tag} is Gorenstein: no Kawamata blowup")
    if isinstance(g, (IIdual, IIdualPlusIIdual)):
        raise UnsupportedGerm(f"{g.tag}: no blowup weights are available for this type")
    if isinstance(g, T):
        r, a = g.r, g.a
        return BlowupData(_w(r, 1, a, r - a), F(1), F(-1, r), True, r)
    if isinstance(g, K2A):
        r = g.r
        return BlowupData(_w(r, 1, 2, r - 2), F(1, 2), F(-1, 2 * r), True, r)
    if isinstance(g, IEdual):
        return BlowupData(_w(8, 5, 1, 3), F(4, 5), F(-2, 5), True, 8)
    if isinstance(g, IAdualPlusIAdual):
        return BlowupData(_w(4, 1, 1, 3), F(2, 3), F(-1, 3), True, 4, components=2)
    if isinstance(g, IAdual):
        return BlowupData(_w(4, 1, 3, 1), F(2, 3), F(-1, 3), True, 4)
    if isinstance(g, ID):
        if g.m == 2:
            return BlowupData(_w(2, 2, 1, 1, 1), F(1), F(-1, 2), True, 2)
        if g.m == 1:
            return BlowupData(_w(2, 1, 3, 1, 2), F(2, 3), F(-2, 3), True, 2)
        if g.square is None:
            raise MissingParams("ID(0) blowup data depends on the square flag")
        k = g.k
        if g.square:
            return BlowupData(_w(2, k + 2, k + 1, 1, 1), F(2, k + 2), F(-(k + 1), k + 2), True, 2)
        return BlowupData(_w(2, k, k + 1, 1, 1), F(2, k + 1), F(-k, k + 1), True, 2)
    if isinstance(g, IC):
        r = g.r
        return BlowupData(_w(r, 2, r - 2, 1), F(1), F(0), True, r)
    if isinstance(g, IIB):
        return BlowupData(_w(4, 3, 2, 1, 5), F(1), F(0), True, 4)
    if isinstance(g, (KAD, K3A)):
        r = g.r
        return BlowupData(_w(r, 2, 1, r - 2), F(1, 2), F(0), True, r)
    if isinstance(g, K2AGeneral):
        r, m, k, delta = g.r, g.m, g.k, g.delta
        j = 0 if choice is None else choice
        if not 0 <= j < k:
            raise BadParameter(f"choice must be in 0..{k - 1}")
        a1 = pow(g.a, -1, r) if r > 1 else 1
        a1 += j * r
        a2 = k * r - a1
        minus_k = F(a1 * delta - m, a1 * r * m)
        return BlowupData(_w(r, a1, a2, 1, r), F(1, a1), -minus_k, k == 1, r, choices=k)
    if isinstance(g, K1A):
        raise MissingParams("k1A carries no blowup data of its own")
    raise UnsupportedGerm(f"no blowup data for {g.tag}")


def k_after_blowup(k_dot_c, r: int, e_dot_c) -> Fraction:
    """``K~.C~ = K.C + E.C~ / r``."""
    return F(k_dot_c) + F(e_dot_c) / r


# -------------------------------------------------------------- link rules

DELTA_RULES = ("ProperTransform", "TotalSetTheoreticPreimage", "ProperPlusGamma", "Unknown")
SLOTS = ("o'", "o''", "o'''")


@dataclass(frozen=True)
class LinkStep:
    kind: str                 # flip | flop
    components: int = 1       # components of the flipping curve
    note: str = ""


@dataclass(frozen=True)
class BlowupCenter:
    point: str
    index: int
    discrepancy: Fraction
    weights: tuple = ()


@dataclass
class LinkResult:
    germ: GermType
    blowup_center: tuple           # BlowupCenter per extracted point
    steps: list
    new_fibers: list               # (slot, GermType)
    base_modification: object      # base_surface.BaseModification
    discriminant_rule: str
    unspecified_tail: bool = False
    rho_trace: list = field(default_factory=list)
    blowup_difficulty: Difficulty | None = None

    @property
    def flips(self) -> int:
        return sum(1 for s in self.steps if s.kind == "flip")

    @property
    def flops(self) -> int:
        return sum(1 for s in self.steps if s.kind == "flop")

    def steps_text(self) -> str:
        s = ",".join(f"{x.kind}" + (f"[{x.components}]" if x.components > 1 else "")
                     for x in self.steps)
        return s + (",...flips" if self.unspecified_tail else "")

    def fibers_text(self) -> str:
        return ",".join(f"{slot}:{g.tag}" for slot, g in self.new_fibers) or "-"

    def render(self) -> str:
        lines = [f"germ {self.germ.tag}"]
        for c in self.blowup_center:
            w = ",".join(str(x) for x in c.weights)
            lines.append(f"blowup {c.point} index {c.index} discrepancy {c.discrepancy} weights ({w})")
        lines.append(f"steps {self.steps_text()}")
        lines.append(f"fibers {self.fibers_text()}")
        lines.append(f"base {self.base_modification}")
        lines.append(f"delta {self.discriminant_rule}")
        lines.append(f"rho {','.join(str(x) for x in self.rho_trace)}")
        return "\n".join(lines)


def _center(label: str, g: GermType) -> BlowupCenter:
    data = kawamata_blowup_data(g)
    return BlowupCenter(label, data.center_index, data.discrepancy, data.weights)


def _after_blowup_difficulty(g: GermType) -> Difficulty:
    """Difficulty of the Kawamata blowup, known exactly for cyclic centers."""
    d = difficulty(g)
    if isinstance(g, (T, K2A, IEdual, IAdual, IAdualPlusIAdual)):
        return Difficulty.exact(d.value - 1)
    if isinstance(g, ID):
        if g.m == 2:       # unique index-2 cyclic point on the blowup
            return Difficulty.exact(1)
        if g.m == 1:
            return Difficulty.exact(2)
        # a flip follows, and Gorenstein terminal threefolds admit none
        return Difficulty(lower=max(d.min - 1, 1))
    return Difficulty(lower=max(d.min - 1, 0))


def md_link(g: GermType) -> LinkResult:
    from .base_surface import CrepantExtract, WeightedBlowup

    if g.birational:
        raise BirationalTag(f"{g.tag} is a blowup-only tag")
    if isinstance(g, (IIdual, IIdualPlusIIdual)):
        raise UnsupportedGerm(
            f"{g.tag}: links for the II-dual types are excluded (no link rule covers them)")
    flip = LinkStep("flip")
    if isinstance(g, IF):
        res = LinkResult(g, (BlowupCenter("node", 1, F(1)),), [LinkStep("flop", 1)],
                         [(SLOTS[0], StandardDegenerate(False)), (SLOTS[1], StandardDegenerate(False))],
                         WeightedBlowup(1), "ProperTransform")
    elif g.gorenstein:
        raise GorensteinNoMd(f"{g.tag} is Gorenstein and carries no md-link")
    elif isinstance(g, T):
        r, a = g.r, g.a
        res = LinkResult(g, (_center("P", g),), [flip],
                         [(SLOTS[0], T_or_smooth(a, (r - a) % a)),
                          (SLOTS[1], T_or_smooth(r - a, a % (r - a)))],
                         CrepantExtract((a, r - a)), "ProperTransform")
    elif isinstance(g, K2A):
        r = g.r
        res = LinkResult(g, (_center("P", g),), [flip],
                         [(SLOTS[0], k2a_or_standard(r - 2)), (SLOTS[1], ID(2))],
                         CrepantExtract((r - 2, 2)), "ProperPlusGamma", unspecified_tail=True)
    elif isinstance(g, IEdual):
        res = LinkResult(g, (_center("P", g),), [LinkStep("flip", 1, "C~")],
                         [(SLOTS[0], K2A(3))], CrepantExtract((3, 1)), "ProperTransform",
                         unspecified_tail=True)
    elif isinstance(g, IAdualPlusIAdual):
        res = LinkResult(g, (_center("P", g),), [LinkStep("flip", 2)],
                         [(SLOTS[1], IF())], CrepantExtract((1, 1)), "ProperPlusGamma")
    elif isinstance(g, IAdual):
        res = LinkResult(g, (_center("P", g),), [flip],
                         [(SLOTS[1], Gorenstein())], CrepantExtract((1, 1)),
                         "TotalSetTheoreticPreimage")
    elif isinstance(g, ID):
        if g.m == 0 and g.square is None:
            raise MissingParams("ID(0) link depends on the square flag")
        proper = g.m == 1 or (g.m == 0 and g.square)
        res = LinkResult(g, (_center("P", g),), [flip], [(SLOTS[0], Gorenstein())],
                         CrepantExtract((1, 1)),
                         "ProperTransform" if proper else "TotalSetTheoreticPreimage")
    else:
        raise UnsupportedGerm(f"no md-link rule for {g.tag}")
    res.rho_trace = [2] * (len(res.steps) + 1)
    if not g.gorenstein:
        res.blowup_difficulty = _after_blowup_difficulty(g)
    return res


def md_link_both(g: GermType) -> LinkResult:
    """Two-point link of T(r,a) with a < r/2: flop, then two disjoint flips."""
    from .base_surface import CrepantExtract

    if not isinstance(g, T):
        raise BadParameter("the two-point link applies to type T only")
    r, a = g.r, g.a
    if not 2 * a < r:
        raise BadParameter(f"T({r},{a}): the two-point link needs a < r/2")
    c = r - 2 * a
    centers = (_center("P", g), _center("Q", T(r, r - a)))
    steps = [LinkStep("flop", 1, "Atiyah-Kulikov"), LinkStep("flip"), LinkStep("flip")]
    fibers = [(SLOTS[0], T_or_smooth(a, (r - a) % a)),
              (SLOTS[1], T_or_smooth(c, a % c if c > 1 else 0)),
              (SLOTS[2], T_or_smooth(a, (r - a) % a))]
    res = LinkResult(g, centers, steps, fibers, CrepantExtract((a, c, a)), "ProperTransform",
                     rho_trace=[2] * 4)
    res.blowup_difficulty = Difficulty.exact(2 * (r - 1) - 2)
    return res


# ------------------------------------------------------------------ ledger


@dataclass
class LedgerCheck:
    name: str
    ok: bool
    detail: str


@dataclass
class LedgerReport:
    checks: list
    chain: tuple

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.ok]

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return "fail:" + ";".join(f"{c.name}({c.detail})" for c in self.failures())

    def render(self) -> str:
        out = [f"chain {' -> '.join(str(x) for x in self.chain)}"]
        out += [f"{'PASS' if c.ok else 'FAIL'} {c.name}: {c.detail}" for c in self.checks]
        return "\n".join(out)


def total_difficulty(germs) -> Difficulty:
    lo, hi, exact = 0, 0, True
    vals = {0}
    for g in germs:
        d = difficulty(g)
        if d.lower is not None:
            exact = False
            lo += d.lower
        else:
            vals = {x + y for x in vals for y in d.values}
    if not exact:
        return Difficulty(lower=lo + min(vals))
    return Difficulty(frozenset(vals))


def check_ledger(g: GermType, res: LinkResult) -> LedgerReport:
    """Check the difficulty ledger and base-index bookkeeping of one link."""
    checks = []
    d0 = difficulty(g)
    new = [x for _, x in res.new_fibers]
    d_final = total_difficulty(new)
    if g.gorenstein:
        ok = d0.value == 0 and d_final.value == 0
        checks.append(LedgerCheck("gorenstein", ok, f"d {d0} -> {d_final}"))
        return LedgerReport(checks, (d0, d_final))

    d1 = res.blowup_difficulty or _after_blowup_difficulty(g)
    ncenters = len(res.blowup_center)
    cyclic = d1.value is not None and d0.value is not None
    if cyclic and ncenters == 1 and isinstance(g, (T, K2A, IEdual, IAdual, IAdualPlusIAdual)):
        ok = d1.value == d0.value - 1
        checks.append(LedgerCheck("blowup", ok, f"{d0} - 1 = {d1}"))
    elif ncenters == 2:
        ok = d1.value == d0.value - 2
        checks.append(LedgerCheck("blowup", ok, f"{d0} - 2 = {d1} (two cyclic centers)"))
    else:
        ok = d1.max is None or d1.max >= d0.min - 1
        checks.append(LedgerCheck("blowup", ok, f"{d1} >= {d0.min} - 1"))

    flips = res.flips
    drop_lo = d1.min - (d_final.max if d_final.max is not None else d_final.min)
    if res.unspecified_tail:
        ok = drop_lo >= flips
        detail = f"{d1} - {d_final} >= {flips} flips, tail bounded by {drop_lo} flips"
    else:
        ok = drop_lo >= flips
        gap = drop_lo - flips
        detail = f"{d1} - {d_final} >= {flips} flips" + (f" (gap {gap})" if gap else "")
    checks.append(LedgerCheck("flips", ok, detail))

    flops = res.flops
    checks.append(LedgerCheck("flops", True, f"{flops} flop(s) preserve d"))

    ok = d_final.max is not None and d0.min > d_final.max
    checks.append(LedgerCheck("decrease", ok, f"{d0} > {d_final}"))

    mod = res.base_modification
    r = base_index(g)
    parts = getattr(mod, "parts", None)
    if parts is not None:
        new_idx = [base_index(x) for _, x in res.new_fibers]
        ok = sum(parts) == r
        det = f"{'+'.join(str(p) for p in parts)} = {r}"
        measure_before = r - 1
        measure_after = sum(p - 1 for p in parts)
        ok = ok and measure_after < measure_before
        det += f"; measure {measure_before} -> {measure_after}"
        singular_new = sorted(i for i in new_idx if i > 1)
        singular_parts = sorted(p for p in parts if p > 1)
        if singular_new != singular_parts:
            ok = False
            det += f"; fiber indices {singular_new} vs parts {singular_parts}"
        checks.append(LedgerCheck("base", ok, det))
    chain = (d0, d1, d_final)
    return LedgerReport(checks, chain)
