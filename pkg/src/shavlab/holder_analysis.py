"""Hoelder functionals on sampled diffeomorphisms and the averaging operator pi_delta."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exact_core import PLMap, ball as word_ball
from .smooth_embed import SmoothGenerator, theta_f

DEFAULT_DELTA = 1.0 / 3.0


class BallTooSmall(RuntimeError):
    pass


@dataclass
class SampledDiffeo:
    """Values and derivatives of a C^1 map on a sorted grid (uniform on [0,1] by default)."""

    t: np.ndarray
    values: np.ndarray
    derivs: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.derivs = np.asarray(self.derivs, dtype=float)

    @classmethod
    def from_functions(cls, f, fprime, m: int = 512, a: float = 0.0, b: float = 1.0):
        t = np.linspace(a, b, m + 1)
        return cls(t, f(t), fprime(t))

    @classmethod
    def identity(cls, m: int = 512):
        t = np.linspace(0.0, 1.0, m + 1)
        return cls(t, t.copy(), np.ones_like(t))

    @property
    def m(self) -> int:
        return self.t.size - 1

    def validate(self, tol=1e-9):
        if abs(self.values[0]) > tol or abs(self.values[-1] - 1) > tol:
            raise ValueError("not a diffeomorphism of [0,1]: endpoints")
        if np.any(self.derivs <= 0) or np.any(np.diff(self.values) <= 0):
            raise ValueError("not increasing")
        return self

    def coarsen(self, k: int = 2) -> "SampledDiffeo":
        return SampledDiffeo(self.t[::k], self.values[::k], self.derivs[::k])


# ---------------------------------------------------------------- suprema

def holder_quotient_sup(t, g, delta, chunk: int = 1024, with_argmax=False):
    """sup_{i<j} |g_j - g_i| / |t_j - t_i|^delta over grid pairs."""
    t = np.asarray(t, dtype=float)
    g = np.asarray(g, dtype=float)
    best, arg = 0.0, (0, 0)
    n = t.size
    for i0 in range(0, n, chunk):
        ti = t[i0:i0 + chunk, None]
        gi = g[i0:i0 + chunk, None]
        dt = np.abs(t[None, :] - ti)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.abs(g[None, :] - gi) / dt ** delta
        q[~(dt > 0)] = 0.0
        k = int(np.argmax(q))
        if q.flat[k] > best:
            best = float(q.flat[k])
            arg = (i0 + k // n, k % n)
    return (best, arg) if with_argmax else best


def n_delta(f: SampledDiffeo, delta: float) -> float:
    """Hoelder constant of f' on the grid."""
    return holder_quotient_sup(f.t, f.derivs, delta)


def norm_1_delta(f: SampledDiffeo, delta: float) -> float:
    return abs(float(f.derivs[0])) + n_delta(f, delta)


@dataclass
class HolderProfile:
    delta: float
    holder_quotient_sup: float
    norm_1_delta: float
    coarse_norm: float

    @property
    def refinement_gap(self) -> float:
        return self.norm_1_delta - self.coarse_norm


def holder_profile(f: SampledDiffeo, delta: float) -> HolderProfile:
    q = n_delta(f, delta)
    return HolderProfile(delta, q, abs(float(f.derivs[0])) + q, norm_1_delta(f.coarsen(), delta))


def p_delta(f: SampledDiffeo, delta: float) -> float:
    """|log f'(0)| plus the Hoelder quotient sup of log f'."""
    lg = np.log(f.derivs)
    return abs(float(lg[0])) + holder_quotient_sup(f.t, lg, delta)


def sup_norm(f: SampledDiffeo) -> float:
    return float(np.max(np.abs(f.values)))


def difference(f: SampledDiffeo, g: SampledDiffeo) -> SampledDiffeo:
    return SampledDiffeo(f.t, f.values - g.values, f.derivs - g.derivs)


# ---------------------------------------------------------------- group constants

def inverse_holder_constant(C: float, m: float, delta: float) -> float:
    return C / m ** (2.0 + delta)


def compose_holder_constant(C_f: float, C_g: float, M_f: float, M_g: float, delta: float) -> float:
    """Bound for the Hoelder constant of (f o g)'."""
    return C_g * M_f + C_f * M_g ** (1.0 + delta)


def p_delta_continuity_bound(f0: SampledDiffeo, delta: float) -> float:
    """Coefficient K with |p(f) - p(f0)| <= K eps when ||f - f0|| < eps < m/2."""
    m = float(np.min(f0.derivs))
    M = float(np.max(f0.derivs))
    nrm = norm_1_delta(f0, delta)
    return 2.0 / m + 2.0 * M * (m + nrm) / m ** 3


@dataclass(frozen=True)
class CosineDiffeo:
    """t + c sin(2 pi k t) / (2 pi k): fixes 0 and 1, derivative 1 + c cos(2 pi k t)."""
    c: float
    k: int

    def __call__(self, t):
        return t + self.c * np.sin(2 * np.pi * self.k * t) / (2 * np.pi * self.k)

    def deriv(self, t):
        return 1.0 + self.c * np.cos(2 * np.pi * self.k * t)

    def inverse(self, s, iters=60):
        s = np.asarray(s, dtype=float)
        lo, hi = np.zeros_like(s), np.ones_like(s)
        x = s.copy()
        for _ in range(iters):
            fx = self(x) - s
            lo = np.where(fx < 0, x, lo)
            hi = np.where(fx > 0, x, hi)
            xn = x - fx / self.deriv(x)
            x = np.where((xn < lo) | (xn > hi), 0.5 * (lo + hi), xn)
        return x

    def sample(self, m=512) -> SampledDiffeo:
        return SampledDiffeo.from_functions(self, self.deriv, m)


def holder_formula_trial(f: CosineDiffeo, g: CosineDiffeo, delta: float, m: int = 400,
                         m_fine: int = 4000) -> dict:
    """Empirical grid constants of (f^-1)' and (f o g)' against the bounding formulas."""
    fine = np.linspace(0, 1, m_fine + 1)
    C_f = holder_quotient_sup(fine, f.deriv(fine), delta)
    C_g = holder_quotient_sup(fine, g.deriv(fine), delta)
    mf = float(np.min(f.deriv(fine)))
    M_f, M_g = float(np.max(f.deriv(fine))), float(np.max(g.deriv(fine)))
    t = np.linspace(0, 1, m + 1)
    inv_d = 1.0 / f.deriv(f.inverse(t))
    comp_d = f.deriv(g(t)) * g.deriv(t)
    return {
        "inverse_empirical": holder_quotient_sup(t, inv_d, delta),
        "inverse_formula": inverse_holder_constant(C_f, mf, delta),
        "compose_empirical": holder_quotient_sup(t, comp_d, delta),
        "compose_formula": compose_holder_constant(C_f, C_g, M_f, M_g, delta),
    }


# ---------------------------------------------------------------- discontinuity example

def _cbrt_sq(x):
    return np.cbrt(np.asarray(x, dtype=float)) ** 2


def discontinuity_chord(eps: float, as_displayed: bool = False) -> float:
    """|phi(eps) - phi(0)| / eps^{2/3} in closed form.

    Expanding phi(eps) gives (5/6) eps^2 * 2 eps^2 = (5/3) eps^4; the often
    quoted form carries (5/6) eps^4 instead, kept here behind ``as_displayed``.
    """
    c = 5.0 / 6.0 if as_displayed else 5.0 / 3.0
    return abs(-5.0 / 3.0 + (11.0 / 6.0) * eps ** (4.0 / 3.0) + c * eps ** (10.0 / 3.0))


def discontinuity_demo(eps_grid=(0.2, 0.1, 0.05, 0.01, 0.001, 1e-4), m: int = 2000,
                       delta: float = 2.0 / 3.0):
    """On [-1,1]: f = id, f_eps = x - eps + eps x^2, g = (x + x^{5/3}) / 2.

    The norm here is |h'(-1)| + sup quotient.  Rows carry the grid norms, the
    closed form (2 + 2^{4/3}) eps and the chord quotient at (0, eps).
    """
    rows = []
    for eps in eps_grid:
        if not 0 < eps < 0.5:
            raise ValueError("eps must lie in (0, 1/2)")
        t = np.union1d(np.linspace(-1.0, 1.0, m + 1), [0.0, eps])
        d_f = 2.0 * eps * t                                 # (f_eps - f)'
        norm_f = abs(d_f[0]) + holder_quotient_sup(t, d_f, delta)
        fe = t - eps + eps * t * t
        d_gf = (0.5 + (5.0 / 6.0) * _cbrt_sq(fe)) * (1 + 2 * eps * t) - (0.5 + (5.0 / 6.0) * _cbrt_sq(t))
        norm_gf = abs(d_gf[0]) + holder_quotient_sup(t, d_gf, delta)
        i0, ie = np.searchsorted(t, 0.0), np.searchsorted(t, eps)
        chord = abs(d_gf[ie] - d_gf[i0]) / eps ** delta
        rows.append({"eps": eps, "norm_f_diff": norm_f, "norm_f_closed": (2 + 2 ** (4 / 3)) * eps,
                     "norm_gf_diff": norm_gf, "chord": float(chord),
                     "chord_closed": discontinuity_chord(eps),
                     "chord_displayed": discontinuity_chord(eps, as_displayed=True)})
    return rows


# ---------------------------------------------------------------- group ball, r_delta, pi_delta

class GroupBall:
    """Finite word ball of F pushed through theta_f, sampled on [0,1]."""

    def __init__(self, gen: SmoothGenerator, radius: int = 4, generators=("x0", "x1"), m: int = 256):
        self.gen = gen
        self.radius = radius
        self.m = m
        self.words = word_ball(radius, generators)   # PLMap -> word
        self.elements = sorted(self.words, key=lambda h: (len(self.words[h]), self.words[h]))
        self._homeo = {}

    def __len__(self):
        return len(self.elements)

    def homeo(self, h: PLMap):
        if h not in self._homeo:
            self._homeo[h] = theta_f(h, self.gen)
        return self._homeo[h]

    def on_boundary(self, h: PLMap) -> bool:
        return len(self.words[h]) >= self.radius

    def sample(self, h: PLMap, m=None) -> SampledDiffeo:
        m = m or self.m
        t = np.linspace(0.0, 1.0, m + 1)
        vals, ld = self.homeo(h).evaluate(t, with_logderiv=True)
        return SampledDiffeo(t, vals, np.exp(ld))

    def pull(self, h: PLMap, f) -> SampledDiffeo:
        """theta(h)^{-1} o f, exact in the group when f is a PLMap."""
        if isinstance(f, PLMap):
            return self.sample(h.inverse() @ f)
        H = self.homeo(h.inverse())
        vals, ld = H.evaluate(f.values, with_logderiv=True)
        return SampledDiffeo(f.t, vals, np.exp(ld) * f.derivs)

    def compose_left(self, g: PLMap, f: SampledDiffeo) -> SampledDiffeo:
        """theta(g) o f."""
        vals, ld = self.homeo(g).evaluate(f.values, with_logderiv=True)
        return SampledDiffeo(f.t, vals, np.exp(ld) * f.derivs)


@dataclass
class RDeltaResult:
    value: float
    argmin: PLMap
    word: tuple
    interior: bool
    p_values: dict = field(repr=False, default_factory=dict)


def _p_table(f, ball: GroupBall, delta: float) -> dict:
    return {h: p_delta(ball.pull(h, f), delta) for h in ball.elements}


def r_delta(f, ball: GroupBall, delta: float = DEFAULT_DELTA, strict: bool = True) -> RDeltaResult:
    if len(ball) == 0:
        raise ValueError("empty ball")
    table = _p_table(f, ball, delta)
    h = min(ball.elements, key=lambda e: (table[e], len(ball.words[e])))
    interior = not ball.on_boundary(h) or ball.radius == 0
    if strict and not interior:
        raise BallTooSmall(f"argmin {''.join(ball.words[h])} lies on the ball boundary")
    return RDeltaResult(table[h], h, ball.words[h], interior, table)


def theta_cutoff(t):
    t = np.asarray(t, dtype=float)
    return np.where(t < 0, 1.0, np.where(t <= 1, 1.0 - t, 0.0))


@dataclass
class PiDeltaResult:
    value: float
    r: float
    weights: dict


def pi_delta(F: Callable[[PLMap], float], f, ball: GroupBall, delta: float = DEFAULT_DELTA,
             table=None) -> PiDeltaResult:
    """Weighted average of F(h) with weights theta(p(h^-1 f) - r(f))."""
    table = table if table is not None else _p_table(f, ball, delta)
    r = min(table.values())
    raw = {h: float(theta_cutoff(p - r)) for h, p in table.items()}
    active = {h: w for h, w in raw.items() if w > 0}
    for h in active:
        if ball.on_boundary(h) and ball.radius > 0:
            raise BallTooSmall(f"active element {''.join(ball.words[h])} on the boundary")
    total = sum(active[h] for h in sorted(active, key=lambda e: ball.words[e]))
    weights = {h: w / total for h, w in active.items()}
    value = sum(weights[h] * F(h) for h in sorted(weights, key=lambda e: ball.words[e]))
    return PiDeltaResult(float(value), r, weights)


def translate(F: Callable[[PLMap], float], g: PLMap):
    """F_g(h) = F(g^{-1} h)."""
    gi = g.inverse()
    return lambda h: F(gi @ h)
