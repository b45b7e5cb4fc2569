"""Truncated bivariate series, conic families, discriminants and curve germs.

Series live in Q[[u, v]] modulo monomials of total degree > N.  A series may
carry a grading ``(r, wt_u, wt_v)`` together with a weight: every monomial
u^i v^j then satisfies ``i*wt_u + j*wt_v == weight (mod r)``.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import sympy

from .errors import UnsupportedGerm, WeightMismatch, ZeroWithinTruncation
from .germs import (
    ID,
    IF,
    K2A,
    GermType,
    IAdual,
    IAdualPlusIAdual,
    IEdual,
    Smooth,
    StandardDegenerate,
)

F = Fraction
DEFAULT_N = 10
DEFAULT_DEPTH = 6

U, V = sympy.symbols("u v")
X1, X2, X3, X4 = sympy.symbols("x1 x2 x3 x4")

Grading = tuple  # (r, wt_u, wt_v)


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, sympy.Rational):
        return F(int(c.p), int(c.q))
    if isinstance(c, sympy.Basic):
        if not c.is_Rational:
            raise ValueError(f"non-rational coefficient {c}")
        return F(int(c.p), int(c.q))
    return F(c)


class TruncatedSeries:
    __slots__ = ("coeffs", "N", "grading", "weight")

    def __init__(self, coeffs: Mapping[tuple[int, int], object], N: int,
                 grading: Grading | None = None, weight: int | None = None):
        if N < 0:
            raise ValueError("truncation order must be >= 0")
        clean = {}
        for (i, j), c in coeffs.items():
            if i < 0 or j < 0:
                raise ValueError("negative exponent")
            if i + j > N:
                continue
            c = _frac(c)
            if c:
                clean[(i, j)] = c
        self.coeffs = clean
        self.N = N
        self.grading = tuple(grading) if grading is not None else None
        if self.grading is not None:
            r, wu, wv = self.grading
            ws = {(i * wu + j * wv) % r for i, j in clean}
            if weight is None and len(ws) == 1:
                weight = ws.pop()
            elif weight is not None:
                weight %= r
                if ws - {weight}:
                    raise WeightMismatch(f"monomials of weights {sorted(ws)} in a series of weight {weight}")
            elif len(ws) > 1:
                raise WeightMismatch(f"series is not semi-invariant: weights {sorted(ws)}")
        self.weight = weight

    # -- constructors
    @classmethod
    def zero(cls, N: int = DEFAULT_N, grading=None, weight=None):
        return cls({}, N, grading, weight)

    @classmethod
    def constant(cls, c, N: int = DEFAULT_N, grading=None):
        return cls({(0, 0): c}, N, grading, 0 if grading else None)

    @classmethod
    def monomial(cls, i: int, j: int, c=1, N: int = DEFAULT_N, grading=None):
        return cls({(i, j): c}, N, grading)

    @classmethod
    def parse(cls, expr, N: int = DEFAULT_N, grading=None, weight=None):
        """From a sympy expression or string in u, v (``^`` is accepted)."""
        if isinstance(expr, str):
            expr = sympy.sympify(expr.replace("^", "**"), locals={"u": U, "v": V})
        poly = sympy.Poly(sympy.expand(expr), U, V)
        return cls({m: c for m, c in poly.terms()}, N, grading, weight)

    # -- basic queries
    def __bool__(self):
        return bool(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, mono) -> Fraction:
        return self.coeffs.get(tuple(mono), F(0))

    def constant_term(self) -> Fraction:
        return self[(0, 0)]

    def order(self) -> int:
        if not self.coeffs:
            raise ZeroWithinTruncation(f"series vanishes modulo degree > {self.N}")
        return min(i + j for i, j in self.coeffs)

    multiplicity = order

    def homogeneous_part(self, d: int) -> dict:
        return {m: c for m, c in self.coeffs.items() if sum(m) == d}

    def leading_form(self) -> sympy.Expr:
        return self.to_sympy(self.homogeneous_part(self.order()))

    def is_unit(self) -> bool:
        return self.constant_term() != 0

    def to_sympy(self, coeffs=None) -> sympy.Expr:
        coeffs = self.coeffs if coeffs is None else coeffs
        return sympy.Add(*[sympy.Rational(c.numerator, c.denominator) * U**i * V**j
                           for (i, j), c in sorted(coeffs.items())])

    def __str__(self):
        return str(self.to_sympy()) if self.coeffs else "0"

    def __repr__(self):
        return f"TruncatedSeries({self}, N={self.N})"

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.N == other.N and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.N, frozenset(self.coeffs.items())))

    # -- arithmetic
    def _coerce(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            return other
        w = 0 if self.grading else None
        return TruncatedSeries({(0, 0): other}, self.N, self.grading, w)

    def _grading_with(self, other):
        if self.grading and other.grading and self.grading != other.grading:
            raise WeightMismatch(f"gradings {self.grading} and {other.grading} differ")
        return self.grading or other.grading

    def __add__(self, other):
        other = self._coerce(other)
        g = self._grading_with(other)
        w = None
        if g is not None:
            wa, wb = self.weight, other.weight
            if wa is not None and wb is not None and wa != wb and self and other:
                raise WeightMismatch(f"cannot add weights {wa} and {wb}")
            w = wa if (wa is not None and self) else wb
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) + c
        return TruncatedSeries(out, min(self.N, other.N), g, w)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries({m: -c for m, c in self.coeffs.items()}, self.N,
                               self.grading, self.weight)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            c = _frac(other)
            return TruncatedSeries({m: c * x for m, x in self.coeffs.items()}, self.N,
                                   self.grading, self.weight)
        g = self._grading_with(other)
        N = min(self.N, other.N)
        out: dict = {}
        for (i, j), a in self.coeffs.items():
            for (k, l), b in other.coeffs.items():
                if i + j + k + l <= N:
                    key = (i + k, j + l)
                    out[key] = out.get(key, 0) + a * b
        w = None
        if g is not None and self.weight is not None and other.weight is not None:
            w = (self.weight + other.weight) % g[0]
        return TruncatedSeries(out, N, g, w)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = TruncatedSeries.constant(1, self.N, self.grading)
        for _ in range(n):
            out = out * self
        return out

    def truncate(self, N: int) -> "TruncatedSeries":
        return TruncatedSeries(self.coeffs, min(N, self.N), self.grading, self.weight)

    def scale_unit_free(self) -> "TruncatedSeries":
        """Divide by the leading coefficient of the lowest monomial (sign/unit normal form)."""
        if not self.coeffs:
            return self
        m = min(self.coeffs, key=lambda k: (sum(k), -k[0]))
        return self * (1 / self.coeffs[m])

    def even_in_u(self) -> bool:
        return all(i % 2 == 0 for i, _ in self.coeffs)

    def substitute_u_squared(self) -> "TruncatedSeries":
        """Rewrite a series in u², v as a series in s=u², v; precision follows."""
        if not self.even_in_u():
            raise ValueError("series has odd powers of u")
        return TruncatedSeries({(i // 2, j): c for (i, j), c in self.coeffs.items()},
                               self.N // 2)

    # -- text form
    def to_text(self) -> str:
        lines = [f"{i} {j} {c.numerator}/{c.denominator}"
                 for (i, j), c in sorted(self.coeffs.items())]
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str, N: int = DEFAULT_N, grading=None):
        coeffs = {}
        for raw in text.splitlines():
            raw = raw.strip()
            if not raw or raw.startswith("#"):
                continue
            i, j, c = raw.split()
            coeffs[(int(i), int(j))] = F(c)
        return cls(coeffs, N, grading)


def series_arith(op: str, a: TruncatedSeries, b=None) -> TruncatedSeries:
    """``op`` is Add, Mul or Truncate (for Truncate ``b`` is the new order)."""
    if op == "Add":
        return a + b
    if op == "Mul":
        return a * b
    if op == "Truncate":
        return a.truncate(int(b))
    raise ValueError(f"unknown op {op}")


def semi_invariant_monomials(grading: Grading, weight: int, lo: int, hi: int):
    r, wu, wv = grading
    return [(i, d - i) for d in range(lo, hi + 1) for i in range(d + 1)
            if (i * wu + (d - i) * wv - weight) % r == 0]


def random_series(rng: random.Random, N: int, grading: Grading | None, weight: int,
                  lo: int = 0, hi: int | None = None, density: float = 0.5,
                  span: int = 5) -> TruncatedSeries:
    hi = N if hi is None else min(hi, N)
    g = grading or (1, 0, 0)
    coeffs = {}
    for m in semi_invariant_monomials(g, weight, lo, hi):
        if rng.random() < density:
            c = rng.randint(-span, span)
            if c:
                coeffs[m] = c
    return TruncatedSeries(coeffs, N, grading, weight if grading else None)


def random_unit(rng: random.Random, N: int, grading: Grading | None,
                hi: int = 4) -> TruncatedSeries:
    c = rng.choice([1, 2, 3, -1, -2, F(1, 2)])
    return random_series(rng, N, grading, 0, lo=1, hi=hi, density=0.4, span=3) + c


# ---------------------------------------------------------------- families

Matrix3 = tuple  # 3x3 tuple of TruncatedSeries, symmetric


def _sym_from_quadric(expr, N: int) -> tuple[tuple[TruncatedSeries, ...], ...]:
    poly = sympy.Poly(sympy.expand(expr), X1, X2, X3)
    xs = [[sympy.Integer(0)] * 3 for _ in range(3)]
    for mono, c in poly.terms():
        if sum(mono) != 2:
            raise ValueError(f"not a quadratic form in x1..x3: {expr}")
        idx = [k for k in range(3) for _ in range(mono[k])]
        i, j = idx
        if i == j:
            xs[i][i] += c
        else:
            xs[i][j] += c / 2
            xs[j][i] += c / 2
    return tuple(tuple(TruncatedSeries.parse(xs[i][j], N) for j in range(3)) for i in range(3))


def _quadric_expr(m) -> sympy.Expr:
    xs = (X1, X2, X3)
    out = sympy.Integer(0)
    for i in range(3):
        for j in range(3):
            out += m[i][j].to_sympy() * xs[i] * xs[j]
    return sympy.expand(out)


@dataclass(frozen=True)
class ConicFamily:
    """Either a symmetric 3x3 matrix of series or the index-2 data (θ1, θ2, q1, q2).

    ``weights`` lists residues for x1..x3 (and x4 for index 2) followed by u, v.
    ``params`` records sampler controls such as whether ξ12 carries a linear u term.
    """
    kind: str
    N: int
    matrix: Matrix3 | None = None
    theta1: TruncatedSeries | None = None
    theta2: TruncatedSeries | None = None
    q1: Matrix3 | None = None
    q2: Matrix3 | None = None
    shape: str = ""
    weights: tuple | None = None
    r: int = 1
    params: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind == "general":
            _check_sym(self.matrix)
        elif self.kind == "index2":
            _check_sym(self.q1)
            _check_sym(self.q2)
            if self.theta1.constant_term() or self.theta2.constant_term():
                raise ValueError("θ1 and θ2 must vanish at the origin")
            a = [[self.q1[i][j].constant_term() for j in range(3)] for i in range(3)]
            b = [[self.q2[i][j].constant_term() for j in range(3)] for i in range(3)]
            if _proportional(a, b):
                raise ValueError("q1(0) and q2(0) are proportional")
        else:
            raise ValueError(f"unknown family kind {self.kind}")

    @property
    def param(self) -> dict:
        return dict(self.params)

    def to_text(self) -> str:
        lines = [f"shape {self.shape or '-'}", f"kind {self.kind}", f"truncation {self.N}"]
        if self.weights is not None:
            lines.append("weights " + " ".join(str(w) for w in (self.r, *self.weights)))
        if self.kind == "general":
            lines.append(f"eq = {_quadric_expr(self.matrix)}")
        else:
            for k, (t, q) in enumerate(((self.theta1, self.q1), (self.theta2, self.q2)), 1):
                lines.append(f"eq{k} = {sympy.expand(t.to_sympy() * X4 + _quadric_expr(q))}")
        for k, v in self.params:
            lines.append(f"param {k} {v}")
        return "\n".join(lines) + "\n"


def _check_sym(m):
    if m is None or len(m) != 3 or any(len(row) != 3 for row in m):
        raise ValueError("expected a 3x3 matrix")
    for i in range(3):
        for j in range(i):
            if m[i][j] != m[j][i]:
                raise ValueError("matrix is not symmetric")


def _proportional(a, b) -> bool:
    fa = [x for row in a for x in row]
    fb = [x for row in b for x in row]
    if not any(fa) or not any(fb):
        return True
    return all(fa[i] * fb[j] == fa[j] * fb[i] for i in range(9) for j in range(9))


def general_family(expr, N: int = DEFAULT_N, **kw) -> ConicFamily:
    """From a ternary quadratic form in x1..x3 with coefficients in u, v."""
    if isinstance(expr, str):
        expr = _sympify(expr)
    return ConicFamily("general", N, matrix=_sym_from_quadric(expr, N), **kw)


def index2_family(eq1, eq2, N: int = DEFAULT_N, **kw) -> ConicFamily:
    """From the two equations θ_k x4 + q_k(x1, x2, x3)."""
    parts = []
    for eq in (eq1, eq2):
        if isinstance(eq, str):
            eq = _sympify(eq)
        eq = sympy.expand(eq)
        theta = eq.coeff(X4, 1)
        q = sympy.expand(eq - theta * X4)
        if q.has(X4):
            raise ValueError("x4 may only appear linearly")
        parts.append((TruncatedSeries.parse(theta, N), _sym_from_quadric(q, N)))
    (t1, q1), (t2, q2) = parts
    return ConicFamily("index2", N, theta1=t1, theta2=t2, q1=q1, q2=q2, **kw)


def _sympify(text: str):
    names = {"u": U, "v": V, "x1": X1, "x2": X2, "x3": X3, "x4": X4}
    return sympy.sympify(text.replace("^", "**"), locals=names)


def parse_family(text: str) -> ConicFamily:
    """Parse the family file format written by :meth:`ConicFamily.to_text`."""
    shape, kind, N, weights, r = "", None, DEFAULT_N, None, 1
    eqs: dict = {}
    params = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, val = (s.strip() for s in line.split("=", 1))
            eqs[key] = val
            continue
        key, _, val = line.partition(" ")
        val = val.strip()
        if key == "shape":
            shape = "" if val == "-" else val
        elif key == "kind":
            kind = val
        elif key == "truncation":
            N = int(val)
        elif key == "weights":
            nums = [int(t) for t in val.split()]
            r, weights = nums[0], tuple(nums[1:])
        elif key == "param":
            k, _, v = val.partition(" ")
            params.append((k, v.strip()))
        else:
            raise ValueError(f"unknown family key {key!r}")
    kw = dict(shape=shape, weights=weights, r=r, params=tuple(params))
    if kind is None:
        kind = "index2" if "eq1" in eqs else "general"
    if kind == "general":
        return general_family(eqs["eq"], N, **kw)
    return index2_family(eqs["eq1"], eqs["eq2"], N, **kw)


# ------------------------------------------------------------ equivariance

def _matrix_terms(m, wx, wu, wv):
    for i in range(3):
        for j in range(i, 3):
            for (a, b) in m[i][j].coeffs:
                yield a * wu + b * wv + wx[i] + wx[j]


def check_equivariance(fam: ConicFamily, weights: Iterable[int], r: int) -> bool:
    w = tuple(weights)
    if fam.kind == "general":
        if len(w) != 5:
            raise ValueError("general families need weights (x1,x2,x3;u,v)")
        wx, wu, wv = w[:3], w[3], w[4]
        return len({t % r for t in _matrix_terms(fam.matrix, wx, wu, wv)}) <= 1
    if len(w) != 6:
        raise ValueError("index-2 families need weights (x1,x2,x3,x4;u,v)")
    wx, w4, wu, wv = w[:3], w[3], w[4], w[5]
    for theta, q in ((fam.theta1, fam.q1), (fam.theta2, fam.q2)):
        ws = {t % r for t in _matrix_terms(q, wx, wu, wv)}
        ws |= {(a * wu + b * wv + w4) % r for a, b in theta.coeffs}
        if len(ws) > 1:
            return False
    return True


def predicted_discriminant_weight(fam: ConicFamily, weights, r: int) -> int:
    """Weight of det(θ1 q2 − θ2 q1) forced by semi-invariance of both equations."""
    w = tuple(weights)
    wx, w4, wu, wv = w[:3], w[3], w[4], w[5]

    def eq_weight(theta, q):
        for a, b in theta.coeffs:
            return (a * wu + b * wv + w4) % r
        return next(_matrix_terms(q, wx, wu, wv)) % r

    e1 = eq_weight(fam.theta1, fam.q1)
    e2 = eq_weight(fam.theta2, fam.q2)
    return (3 * (e1 + e2 - w4) - 2 * sum(wx)) % r


# ----------------------------------------------------------- discriminants

def det3(m) -> TruncatedSeries:
    """Cofactor expansion along the first row."""
    (a, b, c), (d, e, f), (g, h, i) = m
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def discriminant_det(fam: ConicFamily) -> TruncatedSeries:
    if fam.kind != "general":
        raise ValueError("discriminant_det needs a general 3x3 family")
    return det3(fam.matrix)


def discriminant_index2(fam: ConicFamily) -> TruncatedSeries:
    if fam.kind != "index2":
        raise ValueError("discriminant_index2 needs an index-2 family")
    m = tuple(tuple(fam.theta1 * fam.q2[i][j] - fam.theta2 * fam.q1[i][j] for j in range(3))
              for i in range(3))
    return det3(m)


def discriminant(fam: ConicFamily) -> TruncatedSeries:
    return discriminant_det(fam) if fam.kind == "general" else discriminant_index2(fam)


def same_up_to_unit(a: TruncatedSeries, b: TruncatedSeries) -> bool | None:
    """Whether a = unit·b, decided by comparing at the precision both carry.

    True/False when decidable; None if b vanishes within truncation.
    """
    if b.is_zero():
        return None if a.is_zero() else False
    if a.is_zero():
        return False
    m = b.order()
    if a.order() != m:
        return False
    # solve a = c·b for a series c of precision N − m
    N = min(a.N, b.N)
    prec = N - m
    lead = min((k for k in b.coeffs if sum(k) == m), key=lambda k: -k[0])
    c: dict = {}
    for d in range(prec + 1):
        for i in range(d, -1, -1):
            j = d - i
            target = (lead[0] + i, lead[1] + j)
            acc = a[target]
            for (p, q), x in c.items():
                mono = (target[0] - p, target[1] - q)
                if mono != lead:
                    acc -= x * b[mono]
            if acc:
                c[(i, j)] = acc / b[lead]
    cs = TruncatedSeries(c, prec)
    if not cs.constant_term():
        return False
    prod = TruncatedSeries(b.coeffs, N) * TruncatedSeries(c, N)
    return all((prod - a)[k] == 0 for k in _monos(N))


def _monos(N):
    return [(i, d - i) for d in range(N + 1) for i in range(d + 1)]


# -------------------------------------------------------------- blowups

def _binom_shift(j: int, t: Fraction):
    """Coefficients of (w + t)^j by power of w."""
    return [(k, math.comb(j, k) * t ** (j - k)) for k in range(j + 1)]


def blowup_curve_germ(s: TruncatedSeries, chart: str = "U",
                      center=0) -> tuple[TruncatedSeries, int]:
    """Strict transform of {s=0} under the point blowup, centred at ``center`` on E.

    Chart U substitutes (u, u(w + t)) and divides by u^m; chart V substitutes
    (v(w + t), v) and divides by v^m.  The result is known exactly up to total
    degree N − m in the new coordinates (u or v stays the exceptional coordinate).
    """
    m = s.order()
    t = _frac(center)
    N2 = s.N - m
    out: dict = {}
    for (i, j), c in s.coeffs.items():
        if chart == "U":
            e, k_pow = i + j - m, j
        elif chart == "V":
            e, k_pow = i + j - m, i
        else:
            raise ValueError("chart must be U or V")
        for k, b in _binom_shift(k_pow, t):
            key = (e, k) if chart == "U" else (k, e)
            out[key] = out.get(key, 0) + c * b
    res = TruncatedSeries(out, N2)
    if res.is_zero():
        raise ZeroWithinTruncation("strict transform vanishes within truncation")
    return res, m


def exceptional_order(strict: TruncatedSeries, chart: str = "U") -> int | None:
    """Intersection number of the strict transform with E at the chart origin."""
    restr = {k[1]: c for k, c in strict.coeffs.items() if k[0] == 0} if chart == "U" else \
        {k[0]: c for k, c in strict.coeffs.items() if k[1] == 0}
    if not restr:
        return None
    return min(restr)


# --------------------------------------------------------- curve germs

@dataclass
class BranchInfo:
    """One analytic branch (or an undecided cluster) through the origin.

    ``multiplicities`` is the multiplicity sequence along the infinitely near
    points; its first entry equals the intersection with the first exceptional line.
    """
    tangent: str
    smooth: bool | None
    multiplicities: tuple
    path: tuple
    rational: bool = True
    decided: bool = True
    tracked: tuple = ()

    @property
    def multiplicity(self):
        return self.multiplicities[0] if self.decided else None


@dataclass
class CurveGermReport:
    multiplicity: int
    tangent_cone_factors: list
    branches: list
    intersections: dict
    resolution_depth_used: int
    truncation_order: int

    @property
    def decided(self) -> bool:
        return all(b.decided for b in self.branches)

    @property
    def all_smooth(self) -> bool | None:
        if not self.decided:
            return None
        return all(b.smooth for b in self.branches)

    def pairwise_transversal(self) -> bool | None:
        vals = list(self.intersections.values())
        if any(v is None for v in vals):
            return None
        return all(v == 1 for v in vals)

    def render(self) -> str:
        lines = [f"multiplicity {self.multiplicity}",
                 "tangent cone " + " * ".join(f"({f})^{e}" for f, e in self.tangent_cone_factors),
                 f"branches {len(self.branches)}"]
        for k, b in enumerate(self.branches):
            sm = "undecided" if not b.decided else ("smooth" if b.smooth else "singular")
            lines.append(f"  B{k} tangent {b.tangent} {sm} mults {list(b.multiplicities)}")
        for (i, j), v in sorted(self.intersections.items()):
            lines.append(f"  I(B{i},B{j}) = {'?' if v is None else v}")
        lines.append(f"depth {self.resolution_depth_used} truncation {self.truncation_order}")
        return "\n".join(lines)


def factor_form(expr) -> tuple[Fraction, list]:
    """Factor a binary form over Q into (constant, [(factor, exponent)])."""
    c, facs = sympy.factor_list(sympy.expand(expr), U, V)
    return c, [(f, int(e)) for f, e in facs]


def _linear_center(f) -> tuple[str, Fraction]:
    p = sympy.Poly(f, U, V)
    a = p.coeff_monomial(U)
    b = p.coeff_monomial(V)
    if b != 0:
        return "U", _frac(-a / b)
    return "V", F(0)


class _Budget:
    def __init__(self, depth):
        self.depth = depth
        self.used = 0


def _local_branches(s: TruncatedSeries, tracked: list, depth: int, key: tuple,
                    budget: _Budget) -> list[BranchInfo]:
    """Branches of {s=0} at the origin with intersections against tracked smooth curves.

    ``tracked`` are smooth curves (series with zero constant term or units); only the
    ones through the origin matter.
    """
    budget.used = max(budget.used, depth)
    through = [not t.is_unit() and not t.is_zero() for t in tracked]
    if s.is_zero() or s.N < 1:
        return [_undecided(key, tracked)]
    m = s.order()
    if m == 0:
        return []
    if m > s.N:
        return [_undecided(key, tracked)]
    lead = s.leading_form()
    _, facs = factor_form(lead)
    tangent_of = [t.leading_form() if th and t.order() == 1 else None
                  for t, th in zip(tracked, through)]
    if m == 1:
        linear = facs[0][0]
        clash = [k for k, tl in enumerate(tangent_of)
                 if tl is not None and sympy.simplify(sympy.cancel(tl / linear)).is_number]
        if not clash:
            return [BranchInfo(str(linear), True, (1,), (key,),
                               tracked=tuple(1 if th else 0 for th in through))]
    if depth >= budget.depth:
        return [_undecided(key, tracked)]
    out: list[BranchInfo] = []
    for f, e in facs:
        deg = sympy.Poly(f, U, V).total_degree()
        if deg == 1 and e == 1 and not any(
                tl is not None and sympy.cancel(tl / f).is_number for tl in tangent_of):
            # a simple tangent line: one smooth branch, transversal to everything else here
            out.append(BranchInfo(str(f), True, (1,), (key,),
                                  tracked=tuple(1 if th else 0 for th in through)))
        elif deg == 1:
            chart, t = _linear_center(f)
            try:
                strict, _ = blowup_curve_germ(s, chart, t)
            except ZeroWithinTruncation:
                out.append(_undecided(key, tracked, str(f)))
                continue
            e_new = TruncatedSeries.monomial(1, 0, N=strict.N) if chart == "U" else \
                TruncatedSeries.monomial(0, 1, N=strict.N)
            new_tracked = [e_new]
            olds = []
            for k, (tr, th) in enumerate(zip(tracked, through)):
                if not th:
                    continue
                try:
                    ts, _ = blowup_curve_germ(tr.truncate(max(tr.N, 2)), chart, t)
                except ZeroWithinTruncation:
                    continue
                if not ts.is_unit():
                    olds.append((k, len(new_tracked)))
                    new_tracked.append(ts)
            subkey = key + ((chart, str(t)),)
            for b in _local_branches(strict, new_tracked, depth + 1, subkey, budget):
                if not b.decided:
                    out.append(_undecided(key, tracked, b.tangent or str(f)))
                    continue
                mult = b.tracked[0]
                tr_out = []
                for k, th in enumerate(through):
                    if not th:
                        tr_out.append(0)
                        continue
                    extra = 0
                    for kk, pos in olds:
                        if kk == k:
                            extra = b.tracked[pos]
                    tr_out.append(mult + extra)
                out.append(BranchInfo(str(f), mult == 1, (mult,) + b.multiplicities,
                                      (key,) + b.path, True, True, tuple(tr_out)))
        elif e == 1:
            # irrational directions: deg smooth branches with distinct tangents
            for n in range(deg):
                out.append(BranchInfo(str(f), True, (1,), (key,),
                                      False, True, tuple(1 if th else 0 for th in through)))
        else:
            out.append(_undecided(key, tracked, str(f)))
    return out


def _undecided(key, tracked, tangent="?") -> BranchInfo:
    return BranchInfo(tangent, None, (), (key,), True, False, tuple(None for _ in tracked))


def _intersection(a: BranchInfo, b: BranchInfo) -> int | None:
    if not a.decided or not b.decided:
        return None
    total = 0
    for k, (pa, pb) in enumerate(zip(a.path, b.path)):
        if pa != pb:
            break
        total += a.multiplicities[k] * b.multiplicities[k]
    return total


def analyze_curve_germ(s: TruncatedSeries, depth: int = DEFAULT_DEPTH) -> CurveGermReport:
    m = s.order()
    _, facs = factor_form(s.leading_form())
    budget = _Budget(depth)
    branches = _local_branches(s, [], 0, ("o",), budget)
    inter = {(i, j): _intersection(branches[i], branches[j])
             for i in range(len(branches)) for j in range(i + 1, len(branches))}
    return CurveGermReport(m, [(str(f), e) for f, e in facs], branches, inter,
                           budget.used, s.N)


# ------------------------------------------------------------- samplers

TABLE_WEIGHTS = {
    "IEv": (4, (3, 1, 2, 1, 1, 3)),
    "IAv+IAv": (2, (1, 1, 0, 1, 1, 1)),
    "IAv": (2, (0, 1, 0, 1, 1, 1)),
    "ID": (2, (0, 1, 0, 1, 1)),
}


def k2a_weights(r: int) -> tuple[int, tuple]:
    a = (r - 1) // 2
    return r, (a % r, -1 % r, 0, 1, -1 % r)


def table_weights(g: GermType) -> tuple[int, tuple] | None:
    if isinstance(g, K2A):
        return k2a_weights(g.r)
    if isinstance(g, ID):
        return TABLE_WEIGHTS["ID"]
    for cls, key in ((IEdual, "IEv"), (IAdualPlusIAdual, "IAv+IAv"), (IAdual, "IAv")):
        if isinstance(g, cls):
            return TABLE_WEIGHTS[key]
    return None


def _diag(a, b, c, N):
    z = TruncatedSeries.zero(N)
    return ((a, z, z), (z, b, z), (z, z, c))


def _sym(entries, N):
    """entries: dict (i,j) i<=j -> series."""
    z = TruncatedSeries.zero(N)
    m = [[z] * 3 for _ in range(3)]
    for (i, j), s in entries.items():
        m[i][j] = s
        m[j][i] = s
    return tuple(tuple(row) for row in m)


def _rand_linear_pair(rng):
    while True:
        a, b, c, d = (rng.randint(-3, 3) for _ in range(4))
        if a * d - b * c:
            return a * U + b * V, c * U + d * V


def _even_series(rng, N, lo, hi=None, density=0.4):
    return random_series(rng, N, (2, 1, 1), 0, lo=lo, hi=hi, density=density, span=4)


def _strip(s: TruncatedSeries) -> TruncatedSeries:
    return TruncatedSeries(s.coeffs, s.N)


def sample_family(g: GermType, seed: int = 0, N: int = DEFAULT_N, **controls) -> ConicFamily:
    """Deterministic random family of the shape attached to ``g``.

    Controls: ``xi12_has_u`` for IAv.  The ID shape is read off the tag.
    """
    rng = random.Random(f"{g.tag}|{seed}|{N}")
    one = TruncatedSeries.constant(1, N)
    if isinstance(g, IEdual):
        r, w = TABLE_WEIGHTS["IEv"]
        gr = (r, w[4], w[5])
        psi, x11, x22 = (random_series(rng, N, gr, 2, lo=2) for _ in range(3))
        x13 = random_series(rng, N, gr, 3, lo=1)
        x23 = random_series(rng, N, gr, 1, lo=1)
        unit = _strip(random_unit(rng, N, gr))
        psi, x11, x22, x13, x23 = map(_strip, (psi, x11, x22, x13, x23))
        q1 = _diag(one, one, psi, N)
        q2 = _sym({(0, 0): x11, (0, 1): one, (1, 1): x22, (0, 2): x13, (1, 2): x23,
                   (2, 2): one}, N)
        uu = TruncatedSeries.monomial(1, 0, N=N)
        vv = TruncatedSeries.monomial(0, 1, N=N)
        q1 = tuple(tuple(unit * x for x in row) for row in q1)
        return ConicFamily("index2", N, theta1=unit * uu, theta2=vv, q1=q1, q2=q2,
                           shape=g.tag, weights=w, r=r)
    if isinstance(g, IAdualPlusIAdual):
        r, w = TABLE_WEIGHTS["IAv+IAv"]
        gr = (2, 1, 1)
        phi, x11, x12 = (_strip(random_series(rng, N, gr, 0, lo=2)) for _ in range(3))
        x13, x23 = (_strip(random_series(rng, N, gr, 1, lo=1)) for _ in range(2))
        unit = _strip(random_unit(rng, N, gr))
        q1 = _diag(one, phi, one, N)
        q2 = _sym({(0, 0): x11, (1, 1): one, (2, 2): one, (0, 1): x12, (0, 2): x13,
                   (1, 2): x23}, N)
        uu = TruncatedSeries.monomial(1, 0, N=N)
        vv = TruncatedSeries.monomial(0, 1, N=N)
        q2 = tuple(tuple(unit * x for x in row) for row in q2)
        return ConicFamily("index2", N, theta1=uu, theta2=unit * vv, q1=q1, q2=q2,
                           shape=g.tag, weights=w, r=r)
    if isinstance(g, IAdual):
        r, w = TABLE_WEIGHTS["IAv"]
        gr = (2, 1, 1)
        has_u = controls.get("xi12_has_u")
        if has_u is None:
            has_u = rng.random() < 0.5
        phi, x11, x22, x13 = (_strip(random_series(rng, N, gr, 0, lo=2)) for _ in range(4))
        x12 = _strip(random_series(rng, N, gr, 1, lo=1))
        x12 = TruncatedSeries({k: c for k, c in x12.coeffs.items() if k != (1, 0)}, N)
        if has_u:
            x12 = x12 + TruncatedSeries.monomial(1, 0, rng.choice([1, -1, 2, -3]), N)
        x23 = _strip(random_series(rng, N, gr, 1, lo=1))
        q1 = _diag(one, one, phi, N)
        q2 = _sym({(0, 0): x11, (1, 1): x22, (2, 2): one, (0, 1): x12, (0, 2): x13,
                   (1, 2): x23}, N)
        uu = TruncatedSeries.monomial(1, 0, N=N)
        vv = TruncatedSeries.monomial(0, 1, N=N)
        return ConicFamily("index2", N, theta1=uu, theta2=vv, q1=q1, q2=q2, shape=g.tag,
                           weights=w, r=r, params=(("xi12_has_u", str(bool(has_u)).lower()),))
    if isinstance(g, K2A):
        r, w = k2a_weights(g.r)
        return general_family(X1**2 + U * X2**2 + V * X3**2, N, shape=g.tag, weights=w, r=r)
    if isinstance(g, ID):
        r, w = TABLE_WEIGHTS["ID"]
        theta = _sample_theta(g, rng, N)
        return ConicFamily("general", N, matrix=_diag(one, one, theta, N), shape=g.tag,
                           weights=w, r=r)
    if isinstance(g, IF):
        unit = _strip(random_unit(rng, N, None))
        uv = TruncatedSeries.monomial(1, 1, N=N)
        return ConicFamily("general", N, matrix=_diag(one, one, unit * uv, N), shape=g.tag,
                           weights=(0, 0, 0, 0, 0), r=1)
    if isinstance(g, Smooth):
        return ConicFamily("general", N, matrix=_diag(one, one, one, N), shape=g.tag,
                           weights=(0, 0, 0, 0, 0), r=1)
    if isinstance(g, StandardDegenerate):
        expr = X1**2 + U * X2**2 + V * X3**2 if g.double_line else X1**2 + X2**2 + V * X3**2
        return general_family(expr, N, shape=g.tag, weights=(0, 0, 0, 0, 0), r=1)
    raise UnsupportedGerm(f"no family sampler for {g.tag}")


def _sample_theta(g: ID, rng: random.Random, N: int) -> TruncatedSeries:
    if g.m == 2:
        while True:
            a, b, c = (rng.randint(-4, 4) for _ in range(3))
            if b * b - 4 * a * c != 0 and (a or b or c):
                break
        quad = TruncatedSeries.parse(a * U**2 + b * U * V + c * V**2, N)
        return quad + _strip(_even_series(rng, N, 4))
    unit = _strip(_even_series(rng, N, 2, 4)) + rng.choice([1, -1, 2])
    if g.m == 1:
        l1, l2 = _rand_linear_pair(rng)
        base = TruncatedSeries.parse(-l1**2 + rng.choice([1, -2, 3]) * l2**(2 * g.k), N)
        return unit * base
    k = g.k
    square = g.square if g.square is not None else rng.random() < 0.5
    if square:
        while True:
            f = sum(rng.randint(-3, 3) * U**i * V**(k - i) for i in range(k + 1))
            if f != 0:
                break
        lead = sympy.expand(f**2)
    else:
        while True:
            lead = sympy.expand(sum(rng.randint(-3, 3) * U**i * V**(2 * k - i)
                                    for i in range(2 * k + 1)))
            if lead != 0 and not is_square_form(lead):
                break
    return unit * (TruncatedSeries.parse(lead, N) + _strip(_even_series(rng, N, 2 * k + 2)))


def is_square_form(expr) -> bool:
    """Whether a binary form is a square over C (all factor exponents even)."""
    _, facs = factor_form(expr)
    return all(e % 2 == 0 for _, e in facs)


def binary_quadratic_rank(s: TruncatedSeries) -> int:
    a, b, c = s[(2, 0)], s[(1, 1)], s[(0, 2)]
    if not (a or b or c):
        return 0
    return 1 if b * b - 4 * a * c == 0 else 2


# -------------------------------------------------------- claim checks

@dataclass
class ClaimCheck:
    name: str
    status: str  # pass | fail | undecided
    detail: str = ""


@dataclass
class ClaimReport:
    germ: str
    discriminant: TruncatedSeries
    checks: list
    truncation_order: int

    @property
    def status(self) -> str:
        st = {c.status for c in self.checks}
        if "fail" in st:
            return "fail"
        if "undecided" in st:
            return "undecided"
        return "pass"

    def render(self) -> str:
        out = [f"germ {self.germ}", f"discriminant {self.discriminant}",
               f"truncation {self.truncation_order}"]
        out += [f"check {c.name} {c.status}" + (f" ({c.detail})" if c.detail else "")
                for c in self.checks]
        out.append(f"status {self.status}")
        return "\n".join(out)


def _ok(b) -> str:
    return "undecided" if b is None else ("pass" if b else "fail")


def _proportional_forms(a, b) -> bool:
    q = sympy.cancel(sympy.expand(a) / sympy.expand(b))
    return bool(q.is_number and q != 0)


def _leading_check(delta: TruncatedSeries, expected) -> ClaimCheck:
    if delta.is_zero():
        return ClaimCheck("leading-form", "undecided", "zero within truncation")
    lf = delta.leading_form()
    return ClaimCheck("leading-form", _ok(_proportional_forms(lf, expected)), f"{sympy.factor(lf)}")


def _line_orbits(branches, grading) -> list[list[int]]:
    """Group rational tangent lines into orbits of the diagonal μ_r action."""
    r, wu, wv = grading
    c = (wu - wv) % r
    order = r // math.gcd(c, r) if c else 1
    keys = []
    for b in branches:
        f = sympy.sympify(b.tangent, locals={"u": U, "v": V})
        p = sympy.Poly(f, U, V)
        a, bb = p.coeff_monomial(U), p.coeff_monomial(V)
        keys.append(None if a == 0 else sympy.Rational(bb) / sympy.Rational(a))
    seen: list[list[int]] = []
    used = set()
    for i, k in enumerate(keys):
        if i in used:
            continue
        orb = [i]
        used.add(i)
        if k not in (None, 0) and order == 2:
            for j in range(i + 1, len(keys)):
                if j not in used and keys[j] == -k:
                    orb.append(j)
                    used.add(j)
        seen.append(orb)
    return seen


def verify_discriminant_claim(g: GermType, fam: ConicFamily,
                              depth: int = DEFAULT_DEPTH) -> ClaimReport:
    delta = discriminant(fam)
    checks: list[ClaimCheck] = []
    tw = table_weights(g)
    if tw is not None:
        r, w = tw
        checks.append(ClaimCheck("equivariance", _ok(check_equivariance(fam, w, r)),
                                 f"weights {w} mod {r}"))
    if fam.kind == "index2" and tw is not None:
        r, w = tw
        pred = predicted_discriminant_weight(fam, w, r)
        ok = all((i * w[4] + j * w[5] - pred) % r == 0 for i, j in delta.coeffs)
        checks.append(ClaimCheck("discriminant-weight", _ok(ok), f"weight {pred}"))
    if delta.is_zero():
        checks.append(ClaimCheck("nonzero", "undecided", "zero within truncation"))
        return ClaimReport(g.tag, delta, checks, fam.N)

    if isinstance(g, IEdual):
        checks.append(_leading_check(delta, U * (U**2 - V**2)))
        rep = analyze_curve_germ(delta, depth)
        checks.append(ClaimCheck("three-smooth-lines-on-cover",
                                 _ok(None if not rep.decided else
                                     len(rep.branches) == 3 and rep.all_smooth
                                     and rep.pairwise_transversal())))
        if rep.decided:
            orbs = _line_orbits(rep.branches, (4, 1, 3))
            sizes = sorted(len(o) for o in orbs)
            checks.append(ClaimCheck("plt-and-lc-branches", _ok(sizes == [1, 2]),
                                     f"orbit sizes {sizes}"))
        from .base_surface import dual_graph_of_germ
        gr = dual_graph_of_germ(g)
        degs = sorted(len(gr.neighbors(v.name)) for v in gr.vertices)
        checks.append(ClaimCheck("dual-graph", _ok(degs == [1, 1, 1, 2, 3]), str(degs)))
    elif isinstance(g, IAdualPlusIAdual):
        checks.append(_leading_check(delta, U * V * (U - V)))
        rep = analyze_curve_germ(delta, depth)
        ok = None if not rep.decided else (len(rep.branches) == 3 and rep.all_smooth
                                           and rep.pairwise_transversal())
        checks.append(ClaimCheck("three-smooth-branches", _ok(ok)))
        # distinct tangent directions give distinct points on Γ after one blowup
        if rep.decided:
            tangents = {b.path[1] if len(b.path) > 1 else b.tangent for b in rep.branches}
            checks.append(ClaimCheck("disjoint-on-resolution",
                                     _ok(len(tangents) == len(rep.branches))))
    elif isinstance(g, IAdual):
        checks.extend(_iadual_checks(delta, fam, depth))
    elif isinstance(g, K2A) or (isinstance(g, StandardDegenerate) and g.double_line) \
            or isinstance(g, IF):
        checks.append(_leading_check(delta, U * V))
        rep = analyze_curve_germ(delta, depth)
        ok = None if not rep.decided else (len(rep.branches) == 2 and rep.all_smooth
                                           and rep.pairwise_transversal())
        checks.append(ClaimCheck("node", _ok(ok)))
        if isinstance(g, K2A):
            exact = TruncatedSeries.parse(U * V, fam.N)
            checks.append(ClaimCheck("exact-uv", _ok(delta == exact)))
    elif isinstance(g, ID):
        checks.extend(_id_checks(g, fam, delta, depth))
    elif isinstance(g, StandardDegenerate):
        checks.append(ClaimCheck("smooth-discriminant", _ok(delta.order() == 1)))
    elif isinstance(g, Smooth):
        checks.append(ClaimCheck("empty-discriminant", _ok(delta.is_unit())))
    else:
        raise UnsupportedGerm(f"no discriminant claim for {g.tag}")
    return ClaimReport(g.tag, delta, checks, fam.N)


def _iadual_checks(delta, fam, depth) -> list[ClaimCheck]:
    out = [_leading_check(delta, U * V**2)]
    if delta.order() != 3:
        return out
    # Δ1: the simple factor u of the tangent cone is a smooth branch
    rep = analyze_curve_germ(delta, depth)
    u_br = [b for b in rep.branches if b.decided and _proportional_forms(
        sympy.sympify(b.tangent, locals={"u": U, "v": V}), U)]
    out.append(ClaimCheck("delta1-smooth", _ok(len(u_br) == 1 and u_br[0].smooth)))
    # chart U of the blowup of the origin; Z' lives in (s=u², w)
    S, _ = blowup_curve_germ(delta, "U", 0)
    out.append(ClaimCheck("even-in-u", _ok(S.even_in_u())))
    ord_gamma = exceptional_order(S, "U")
    restr = sorted(k[1] for k in S.coeffs if k[0] == 0)
    out.append(ClaimCheck("delta2-dot-gamma", _ok(ord_gamma == 2 and restr == [2]),
                          f"order {ord_gamma}"))
    SV, _ = blowup_curve_germ(delta, "V", 0)
    out.append(ClaimCheck("delta1-transverse", _ok(exceptional_order(SV, "V") == 1)))
    if not S.even_in_u() or S.N < 2:
        out.append(ClaimCheck("delta2-smoothness", "undecided"))
        return out
    Shat = S.substitute_u_squared()
    smooth = Shat.order() == 1 if Shat else None
    xi12 = fam.q2[0][1]
    has_u = xi12[(1, 0)] != 0
    out.append(ClaimCheck("delta2-smooth-iff-xi12-has-u",
                          _ok(None if smooth is None else smooth == has_u),
                          f"smooth={smooth} xi12_has_u={has_u}"))
    if "xi12_has_u" in fam.param:
        out.append(ClaimCheck("sampler-control", _ok(fam.param["xi12_has_u"] == str(has_u).lower())))
    return out


def _id_checks(g: ID, fam, delta, depth) -> list[ClaimCheck]:
    theta = fam.matrix[2][2]
    out = []
    out.append(ClaimCheck("diagonal-shape", _ok(
        all(fam.matrix[i][j].is_zero() for i in range(3) for j in range(3) if i != j)
        and fam.matrix[0][0].constant_term() != 0 and fam.matrix[1][1].constant_term() != 0)))
    out.append(ClaimCheck("theta-in-m2", _ok(not theta.is_zero() and theta.order() >= 2)))
    out.append(ClaimCheck("theta-invariant", _ok(all((i + j) % 2 == 0 for i, j in theta.coeffs))))
    out.append(ClaimCheck("delta-is-theta", _ok(same_up_to_unit(delta, theta))))
    rank = binary_quadratic_rank(theta)
    out.append(ClaimCheck("rank-theta2", _ok(rank == g.m), f"rank {rank}"))
    if g.m == 2:
        rep = analyze_curve_germ(theta, depth)
        out.append(ClaimCheck("node", _ok(None if not rep.decided else
                                          len(rep.branches) == 2 and rep.pairwise_transversal())))
    elif g.m == 1:
        rep = analyze_curve_germ(theta, depth)
        ok = None
        if rep.decided:
            ok = (len(rep.branches) == 2 and rep.all_smooth
                  and list(rep.intersections.values()) == [g.k])
        out.append(ClaimCheck("A-type-contact", _ok(ok), f"k={g.k}"))
    else:
        mult = theta.order()
        out.append(ClaimCheck("mult-2k", _ok(mult == 2 * g.k), f"mult {mult}"))
        if g.square is not None and mult <= theta.N:
            sq = is_square_form(theta.leading_form())
            out.append(ClaimCheck("square-flag", _ok(sq == g.square), f"square={sq}"))
    return out
