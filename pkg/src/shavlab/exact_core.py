"""Exact dyadic arithmetic, the affine group GA(Q_2), Baumslag-Solitar normal
forms and piecewise-linear maps of the line with dyadic data.

Conventions
-----------
Words are read as products of maps, so ``w1 w2`` acts as ``w1 o w2``.
The letter ``d`` is the doubling map x -> 2x and ``t`` is x -> x + 1, which
satisfy d t d^-1 = t^2.  The triple (i, p, n) stands for (d^i t^p d^-i) d^n,
the map x -> 2^n x + p 2^i.
"""
from __future__ import annotations

import bisect
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Sequence


@total_ordering
@dataclass(frozen=True, init=False)
class Dyadic:
    """Exact value num / 2**exp, stored canonically (odd num, or 0 with exp 0)."""

    num: int
    exp: int

    def __init__(self, num: int = 0, exp: int = 0):
        num, exp = int(num), int(exp)
        if num == 0:
            exp = 0
        else:
            tz = (num & -num).bit_length() - 1
            num >>= tz
            exp -= tz
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "exp", exp)

    @classmethod
    def coerce(cls, x) -> "Dyadic":
        if isinstance(x, Dyadic):
            return x
        if isinstance(x, int):
            return cls(x, 0)
        if isinstance(x, Fraction):
            d = x.denominator
            if d & (d - 1):
                raise ValueError(f"{x} is not dyadic")
            return cls(x.numerator, d.bit_length() - 1)
        if isinstance(x, float):
            return cls.coerce(Fraction(x))
        if isinstance(x, str):
            return cls.coerce(Fraction(x))
        raise TypeError(f"cannot make a dyadic from {type(x).__name__}")

    def _aligned(self, other: "Dyadic"):
        e = max(self.exp, other.exp)
        return self.num << (e - self.exp), other.num << (e - other.exp), e

    def __add__(self, other):
        other = Dyadic.coerce(other)
        a, b, e = self._aligned(other)
        return Dyadic(a + b, e)

    __radd__ = __add__

    def __sub__(self, other):
        other = Dyadic.coerce(other)
        a, b, e = self._aligned(other)
        return Dyadic(a - b, e)

    def __rsub__(self, other):
        return Dyadic.coerce(other) - self

    def __mul__(self, other):
        other = Dyadic.coerce(other)
        return Dyadic(self.num * other.num, self.exp + other.exp)

    __rmul__ = __mul__

    def __neg__(self):
        return Dyadic(-self.num, self.exp)

    def shift(self, k: int) -> "Dyadic":
        """Multiply by 2**k."""
        return Dyadic(self.num, self.exp - k)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Dyadic.coerce(other)
        if not isinstance(other, Dyadic):
            return NotImplemented
        return self.num == other.num and self.exp == other.exp

    def __hash__(self):
        return hash((self.num, self.exp))

    def __lt__(self, other):
        other = Dyadic.coerce(other)
        a, b, _ = self._aligned(other)
        return a < b

    def compare(self, other) -> int:
        other = Dyadic.coerce(other)
        a, b, _ = self._aligned(other)
        return (a > b) - (a < b)

    def is_integer(self) -> bool:
        return self.exp <= 0

    def to_fraction(self) -> Fraction:
        if self.exp >= 0:
            return Fraction(self.num, 1 << self.exp)
        return Fraction(self.num << -self.exp)

    def __float__(self):
        return float(self.to_fraction())

    def __repr__(self):
        return f"Dyadic({self.to_fraction()})"

    def __str__(self):
        return str(self.to_fraction())


ZERO = Dyadic(0)
ONE = Dyadic(1)


def dyadic_arith(a, b, op: str):
    a, b = Dyadic.coerce(a), Dyadic.coerce(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "compare":
        return a.compare(b)
    raise ValueError(f"unknown op {op!r}")


@dataclass(frozen=True)
class AffineMap:
    """x -> 2**log2_slope * x + offset."""

    log2_slope: int = 0
    offset: Dyadic = ZERO

    def __post_init__(self):
        object.__setattr__(self, "offset", Dyadic.coerce(self.offset))

    def __call__(self, x):
        return Dyadic.coerce(x).shift(self.log2_slope) + self.offset

    def eval_float(self, x):
        return (2.0 ** self.log2_slope) * x + float(self.offset)

    def compose(self, other: "AffineMap") -> "AffineMap":
        """self o other."""
        return AffineMap(self.log2_slope + other.log2_slope,
                         other.offset.shift(self.log2_slope) + self.offset)

    def __matmul__(self, other):
        return self.compose(other)

    def inverse(self) -> "AffineMap":
        return AffineMap(-self.log2_slope, (-self.offset).shift(-self.log2_slope))

    def pq(self):
        """Offset written as p / 2**q with p odd (or 0)."""
        return self.offset.num, self.offset.exp

    def is_identity(self) -> bool:
        return self.log2_slope == 0 and self.offset.num == 0


IDENTITY_AFFINE = AffineMap(0, ZERO)
DOUBLING = AffineMap(1, ZERO)
UNIT_SHIFT = AffineMap(0, ONE)


@dataclass(frozen=True)
class BSWord:
    """(d^i t^p d^-i) d^n with p odd, or p == 0 and i == 0."""

    i: int = 0
    p: int = 0
    n: int = 0

    def to_affine(self) -> AffineMap:
        return AffineMap(self.n, Dyadic(self.p).shift(self.i))

    def __str__(self):
        return f"(d^{self.i} t^{self.p} d^{-self.i}) d^{self.n}"


def _normalize_bs(i: int, p: int, n: int) -> BSWord:
    if p == 0:
        return BSWord(0, 0, n)
    # d^i t^{2k} d^-i = d^{i+1} t^k d^-(i+1), from d t d^-1 = t^2
    while p % 2 == 0:
        p //= 2
        i += 1
    return BSWord(i, p, n)


def affine_to_normal_form(m: AffineMap) -> BSWord:
    p, q = m.pq()
    # (2^n, p/2^q) = (d^-q t^p d^q) d^n
    return _normalize_bs(-q, p, m.log2_slope)


def normal_form_to_affine(w: BSWord) -> AffineMap:
    return w.to_affine()


Word = Sequence[tuple]


def parse_word(text: str) -> list:
    """Parse e.g. ``"t d^-1 t^3 D"``; capital letters are inverses."""
    out = []
    for tok in text.replace("*", " ").split():
        letter, _, power = tok.partition("^")
        k = int(power) if power else 1
        if letter in ("T", "D"):
            letter, k = letter.lower(), -k
        if letter not in ("t", "d"):
            raise ValueError(f"bad letter in {tok!r}")
        out.append((letter, k))
    return out


def bs_reduce(word) -> BSWord:
    """Reduce a free word in t, d to normal form by d t d^-1 = t^2 rewriting.

    The accumulated normal form is multiplied on the right by each letter.
    A factor d^n t^e is rewritten as (d^n t^e d^-n) d^n and conjugates of
    t are merged after lowering both to the smaller conjugation exponent.
    """
    if isinstance(word, str):
        word = parse_word(word)
    i, p, n = 0, 0, 0
    for letter, k in word:
        if letter == "d":
            n += k
            continue
        j = min(i, n)
        p = p * (1 << (i - j)) + k * (1 << (n - j))
        w = _normalize_bs(j, p, n)
        i, p, n = w.i, w.p, w.n
    return _normalize_bs(i, p, n)


def evaluate_word_affine(word) -> AffineMap:
    """Direct composition in GA(Q_2), the oracle for bs_reduce."""
    if isinstance(word, str):
        word = parse_word(word)
    m = IDENTITY_AFFINE
    for letter, k in word:
        g = DOUBLING if letter == "d" else UNIT_SHIFT
        step = AffineMap(g.log2_slope * k, g.offset * k)
        m = m.compose(step)
    return m


def random_bs_word(rng: random.Random, max_len: int = 20) -> list:
    length = rng.randint(0, max_len)
    return [(rng.choice("td"), rng.choice((-1, 1)) * rng.randint(1, 3))
            for _ in range(length)]


class PLMap:
    """Piecewise-linear homeomorphism of R with dyadic breakpoints.

    ``pieces[0]`` acts on (-inf, b_0], ``pieces[j]`` on [b_{j-1}, b_j] and
    ``pieces[-1]`` on [b_last, inf).  Adjacent pieces always differ.
    """

    __slots__ = ("breakpoints", "pieces", "_images", "_hash")

    def __init__(self, breakpoints: Iterable, pieces: Iterable[AffineMap], check=True):
        bps = [Dyadic.coerce(b) for b in breakpoints]
        pcs = list(pieces)
        if len(pcs) != len(bps) + 1:
            raise ValueError("need exactly one more piece than breakpoints")
        if check:
            for a, b in zip(bps, bps[1:]):
                if not a < b:
                    raise ValueError("breakpoints must increase")
            for j, b in enumerate(bps):
                if pcs[j](b) != pcs[j + 1](b):
                    raise ValueError(f"discontinuous at {b}")
        # merge equal neighbours
        keep_b, keep_p = [], [pcs[0]]
        for b, pc in zip(bps, pcs[1:]):
            if pc == keep_p[-1]:
                continue
            keep_b.append(b)
            keep_p.append(pc)
        self.breakpoints = tuple(keep_b)
        self.pieces = tuple(keep_p)
        self._images = tuple(self.pieces[j](b) for j, b in enumerate(self.breakpoints))
        self._hash = None

    @classmethod
    def from_affine(cls, m: AffineMap) -> "PLMap":
        return cls([], [m])

    @classmethod
    def identity(cls) -> "PLMap":
        return cls([], [IDENTITY_AFFINE])

    @classmethod
    def from_unit_interval(cls, knots, pieces) -> "PLMap":
        """Element of F given by its pieces on [0,1]; identity outside."""
        knots = [Dyadic.coerce(k) for k in knots]
        return cls([ZERO, *knots, ONE], [IDENTITY_AFFINE, *pieces, IDENTITY_AFFINE])

    def _index(self, x: Dyadic, side="right") -> int:
        # index of the piece used at x; at a breakpoint 'right' picks the
        # piece to the right of it
        if side == "right":
            return bisect.bisect_right(self.breakpoints, x)
        return bisect.bisect_left(self.breakpoints, x)

    def piece_at(self, x, side="right") -> AffineMap:
        return self.pieces[self._index(Dyadic.coerce(x), side)]

    def __call__(self, x):
        x = Dyadic.coerce(x)
        return self.pieces[self._index(x)](x)

    def eval_float(self, x):
        import numpy as np
        x = np.asarray(x, dtype=float)
        bp = np.array([float(b) for b in self.breakpoints])
        idx = np.searchsorted(bp, x, side="right")
        slopes = np.array([2.0 ** p.log2_slope for p in self.pieces])
        offs = np.array([float(p.offset) for p in self.pieces])
        return slopes[idx] * x + offs[idx]

    def preimage(self, y) -> Dyadic:
        y = Dyadic.coerce(y)
        j = bisect.bisect_right(self._images, y)
        return self.pieces[j].inverse()(y)

    def inverse(self) -> "PLMap":
        return PLMap(self._images, [p.inverse() for p in self.pieces], check=False)

    def compose(self, other: "PLMap") -> "PLMap":
        """self o other."""
        cuts = set(other.breakpoints)
        cuts.update(other.preimage(b) for b in self.breakpoints)
        cuts = sorted(cuts)
        if not cuts:
            probes = [ZERO]
        else:
            probes = [cuts[0] - 1]
            probes += [(a + b).shift(-1) for a, b in zip(cuts, cuts[1:])]
            probes.append(cuts[-1] + 1)
        pieces = [self.piece_at(other(x)).compose(other.piece_at(x)) for x in probes]
        return PLMap(cuts, pieces, check=False)

    def __matmul__(self, other):
        return self.compose(other)

    def __pow__(self, k: int):
        base = self if k >= 0 else self.inverse()
        out = PLMap.identity()
        for _ in range(abs(k)):
            out = out.compose(base)
        return out

    def is_identity(self) -> bool:
        return len(self.pieces) == 1 and self.pieces[0].is_identity()

    def __eq__(self, other):
        if not isinstance(other, PLMap):
            return NotImplemented
        return self.breakpoints == other.breakpoints and self.pieces == other.pieces

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.breakpoints, self.pieces))
        return self._hash

    def __repr__(self):
        bps = ", ".join(str(b) for b in self.breakpoints)
        return f"PLMap([{bps}], {len(self.pieces)} pieces)"

    def intervals(self):
        """(left, right, piece) triples; None marks an infinite end."""
        ends = [None, *self.breakpoints, None]
        return [(ends[j], ends[j + 1], p) for j, p in enumerate(self.pieces)]

    def in_F(self) -> bool:
        if not (self.pieces[0].is_identity() and self.pieces[-1].is_identity()):
            return False
        return all(ZERO <= b <= ONE for b in self.breakpoints)

    def to_json(self) -> str:
        return json.dumps({
            "breakpoints": [[str(b.num), str(b.exp)] for b in self.breakpoints],
            "pieces": [{"n": p.log2_slope, "p": str(p.offset.num), "q": p.offset.exp}
                       for p in self.pieces],
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PLMap":
        obj = json.loads(text)
        bps = [Dyadic(int(n), int(e)) for n, e in obj["breakpoints"]]
        pcs = [AffineMap(int(d["n"]), Dyadic(int(d["p"]), int(d["q"]))) for d in obj["pieces"]]
        return cls(bps, pcs)


def translation(r) -> PLMap:
    return PLMap.from_affine(AffineMap(0, Dyadic.coerce(r)))


def D0() -> PLMap:
    """x on (-inf,0], 2x on [0,1], x+1 on [1,inf)."""
    return PLMap([ZERO, ONE], [IDENTITY_AFFINE, DOUBLING, UNIT_SHIFT])


def _frac(s: str) -> Dyadic:
    return Dyadic.coerce(Fraction(s))


X0 = PLMap.from_unit_interval(
    ["1/2", "3/4"],
    [AffineMap(-1, ZERO), AffineMap(0, _frac("-1/4")), AffineMap(1, Dyadic(-1))],
)
X1 = PLMap.from_unit_interval(
    ["1/2", "3/4", "7/8"],
    [IDENTITY_AFFINE, AffineMap(-1, _frac("1/4")), AffineMap(0, _frac("-1/8")),
     AffineMap(1, Dyadic(-1))],
)
GENERATORS = {"x0": X0, "x1": X1, "X0": X0.inverse(), "X1": X1.inverse()}


def f_word_to_map(word: Sequence[str]) -> PLMap:
    """Product of generator names, e.g. ["x0", "X1"]; capitals are inverses."""
    out = PLMap.identity()
    for g in word:
        out = out.compose(GENERATORS[g])
    return out


def random_f_word(rng: random.Random, max_len: int = 10, min_len: int = 0) -> list:
    names = list(GENERATORS)
    inv = {"x0": "X0", "X0": "x0", "x1": "X1", "X1": "x1"}
    word: list = []
    length = rng.randint(min_len, max_len)
    while len(word) < length:
        g = rng.choice(names)
        if word and inv[word[-1]] == g:
            continue
        word.append(g)
    return word


def slope_exponents_on_refinement(a: PLMap, b: PLMap):
    cuts = sorted(set(a.breakpoints) | set(b.breakpoints))
    if not cuts:
        probes = [ZERO]
    else:
        probes = [cuts[0] - 1] + [(u + v).shift(-1) for u, v in zip(cuts, cuts[1:])] + [cuts[-1] + 1]
    return [(a.piece_at(x).log2_slope, b.piece_at(x).log2_slope) for x in probes]


def log_slope_separation(a: PLMap, b: PLMap) -> int:
    """Max |n_a - n_b| over the common refinement, in log-2 units."""
    return max(abs(na - nb) for na, nb in slope_exponents_on_refinement(a, b))


def ball(radius: int, generators=("x0", "x1")):
    """Elements of F within word length ``radius``; maps to a shortest word."""
    names = []
    for g in generators:
        names += [g, g.upper() if g.islower() else g.lower()]
    seen = {PLMap.identity(): ()}
    frontier = [((), PLMap.identity())]
    for _ in range(radius):
        nxt = []
        for word, h in frontier:
            for g in names:
                m = h.compose(GENERATORS[g])
                if m not in seen:
                    seen[m] = word + (g,)
                    nxt.append((word + (g,), m))
        frontier = nxt
    return seen
