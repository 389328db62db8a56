"""Smooth re-embedding theta_f of PL_2(R).

A generator f is stored through its derivative profile phi on [0,1] with
integral 2.  Then f(t) = int_0^t phi on [0,1] and f(x+1) = f(x) + 2, so f'
is the periodic extension of phi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from .exact_core import (AffineMap, Dyadic, PLMap, ZERO, ONE, f_word_to_map)


class ProfileInvalid(ValueError):
    pass


class NoInteriorFixedPoint(ValueError):
    pass


class SearchFailed(RuntimeError):
    pass


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def flat_bump(x, lo, hi):
    """C-infinity bump supported on (lo, hi) with peak value 1."""
    x = np.asarray(x, dtype=float)
    s = (x - lo) / (hi - lo)
    out = np.zeros_like(s)
    inside = (s > 0) & (s < 1)
    si = s[inside]
    out[inside] = np.exp(4.0 - 1.0 / (si * (1.0 - si)))
    return out


def _bump_integral(lo, hi):
    x, w = np.polynomial.legendre.leggauss(200)
    s = 0.5 * (x + 1)
    return 0.5 * (hi - lo) * float(np.sum(w * flat_bump(s, 0.0, 1.0)))


@dataclass(frozen=True)
class Profile:
    name: str
    phi: Callable
    params: dict = field(default_factory=dict)


def profile_two_bump(a: float = 0.5, dip=(0.0, 0.4), spike=(0.5, 1.0)) -> Profile:
    """phi = 1 - a b1 + c b2 with c chosen so that the integral is 2."""
    i1 = _bump_integral(*dip)
    i2 = _bump_integral(*spike)
    c = (1.0 + a * i1) / i2

    def phi(x):
        return 1.0 - a * flat_bump(x, *dip) + c * flat_bump(x, *spike)
    return Profile("two_bump", phi, {"a": a, "c": c, "dip": dip, "spike": spike})


def profile_single_bump() -> Profile:
    beta = 1.0 / _bump_integral(0.0, 1.0)

    def phi(x):
        return 1.0 + beta * flat_bump(x, 0.0, 1.0)
    return Profile("single_bump", phi, {"beta": beta})


def profile_trig() -> Profile:
    def phi(x):
        return 2.0 - np.cos(2 * np.pi * np.asarray(x, dtype=float))
    return Profile("trig", phi, {})


PROFILES = {
    "two_bump": profile_two_bump,
    "single_bump": profile_single_bump,
    "trig": profile_trig,
}


def _jet_at(phi, x0, direction, kmax, h=1e-3, npts=7):
    """Derivatives phi^(k)(x0), k < kmax, from a one-sided polynomial fit."""
    s = direction * h * np.arange(npts)
    vals = phi(x0 + s)
    coef = np.polynomial.polynomial.polyfit(s, vals, npts - 1)
    return [coef[k] * math.factorial(k) for k in range(kmax)]


class SmoothGenerator:
    """The map f, with a dense cumulative table for fast accurate evaluation."""

    def __init__(self, profile: Profile, r=math.inf, cells: int = 2048):
        self.profile = profile
        self.phi = profile.phi
        self.r = r
        self.cells = cells
        edges = np.linspace(0.0, 1.0, cells + 1)
        h = 1.0 / cells
        mids = 0.5 * (edges[:-1] + edges[1:])
        nodes = mids[:, None] + 0.5 * h * _GL_X[None, :]
        cell_int = 0.5 * h * (self.phi(nodes) @ _GL_W)
        self._table = np.concatenate([[0.0], np.cumsum(cell_int)])
        self.total = float(self._table[-1])
        self.z = None
        self.C = None

    # f on [0,1] -------------------------------------------------------
    def _F(self, s):
        s = np.asarray(s, dtype=float)
        j = np.clip(np.floor(s * self.cells).astype(int), 0, self.cells - 1)
        left = j / self.cells
        half = 0.5 * (s - left)
        nodes = left[..., None] + half[..., None] * (_GL_X + 1.0)
        part = half * (self.phi(nodes) @ _GL_W)
        return self._table[j] + part

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        return 2.0 * k + self._F(x - k) * (2.0 / self.total)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        return self.phi(x - np.floor(x)) * (2.0 / self.total)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        k = np.floor(y / 2.0)
        target = (y - 2.0 * k) * (self.total / 2.0)
        j = np.clip(np.searchsorted(self._table, target, side="right") - 1, 0, self.cells - 1)
        lo = j / self.cells
        hi = (j + 1) / self.cells
        t0, t1 = self._table[j], self._table[j + 1]
        s = lo + (target - t0) / np.where(t1 > t0, t1 - t0, 1.0) * (hi - lo)
        for _ in range(8):
            fs = self._F(s) - target
            lo = np.where(fs < 0, np.maximum(lo, s), lo)
            hi = np.where(fs > 0, np.minimum(hi, s), hi)
            s_new = s - fs / self.phi(s)
            bad = (s_new < lo) | (s_new > hi)
            s = np.where(bad, 0.5 * (lo + hi), s_new)
        return k + s

    def iterate(self, x, k: int):
        x = np.asarray(x, dtype=float)
        step = self if k >= 0 else self.inverse
        for _ in range(abs(k)):
            x = step(x)
        return x

    def iterate_logderiv(self, x, k: int):
        """(f^k(x), log (f^k)'(x))."""
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        if k >= 0:
            for _ in range(k):
                acc = acc + np.log(self.deriv(x))
                x = self(x)
        else:
            for _ in range(-k):
                x = self.inverse(x)
                acc = acc - np.log(self.deriv(x))
        return x, acc


def _validate(gen: SmoothGenerator, r, tol=1e-5):
    phi = gen.profile.phi
    if abs(gen.total - 2.0) > 1e-10:
        raise ProfileInvalid(f"profile integrates to {gen.total}, not 2")
    xs = np.linspace(0.0, 1.0, 20001)
    if np.min(phi(xs)) <= 0:
        raise ProfileInvalid("profile is not positive")
    kmax = 4 if r == math.inf else min(int(r), 4)
    # f' = phi, f^(k+1) = phi^(k); need phi(0)=1, phi^(k)(0)=0 for 1<=k<r,
    # and matching jets at 1 for the periodic extension
    for side, x0, d in (("0+", 0.0, 1), ("1-", 1.0, -1)):
        jet = _jet_at(phi, x0, d, kmax)
        if abs(jet[0] - 1.0) > tol:
            raise ProfileInvalid(f"f'({side}) = {jet[0]} != 1")
        for k in range(1, kmax):
            if abs(jet[k]) > tol * max(1.0, 10.0 ** k):
                raise ProfileInvalid(f"f^({k + 1})({side}) = {jet[k]:.4g} != 0")


def build_generator(profile="two_bump", r=math.inf, condition_b=True, **params) -> SmoothGenerator:
    if isinstance(profile, str):
        profile = PROFILES[profile](**params)
    gen = SmoothGenerator(profile, r)
    _validate(gen, r)
    xs = np.linspace(0.0, 1.0, 4001)
    g = gen(xs) - xs
    # largest interior root of f(x) - x
    z = None
    for j in range(len(xs) - 2, 0, -1):
        if g[j] == 0.0 or g[j] * g[j + 1] < 0:
            lo, hi = xs[j], xs[j + 1]
            z = optimize.brentq(lambda s: float(gen(s)) - s, lo, hi, xtol=1e-15, rtol=1e-15)
            break
    if z is not None and 0 < z < 1:
        slope = float(gen.deriv(z))
        if slope > 1:
            gen.z, gen.C = z, math.log(slope)
    if condition_b and gen.z is None:
        raise NoInteriorFixedPoint(f"profile {profile.name!r} has no repelling interior fixed point")
    return gen


def bar_map(r, f: SmoothGenerator) -> float:
    """r = p/2^q  ->  f^{-q}(p)."""
    r = Dyadic.coerce(r)
    if r.is_integer():
        return float(r)
    return float(f.iterate(float(r.num), -r.exp))


class SmoothHomeo:
    """theta_f(h): on [bar x_j, bar x_{j+1}) it is f^{-q} T_p f^{q+n}."""

    def __init__(self, h: PLMap, f: SmoothGenerator):
        self.h = h
        self.f = f
        self.bar_breaks = np.array([bar_map(b, f) for b in h.breakpoints])
        self.words = []
        for piece in h.pieces:
            p, q = piece.pq()
            self.words.append((p, q, piece.log2_slope))

    def piece_table(self):
        ends = [-math.inf, *self.bar_breaks.tolist(), math.inf]
        return [((ends[j], ends[j + 1]), w) for j, w in enumerate(self.words)]

    def _index(self, t, side):
        return np.searchsorted(self.bar_breaks, t, side=side)

    def evaluate(self, t, side="right", with_logderiv=False):
        t = np.asarray(t, dtype=float)
        flat = t.reshape(-1)
        idx = self._index(flat, side)
        out = np.empty_like(flat)
        ld = np.zeros_like(flat)
        for j in np.unique(idx):
            sel = idx == j
            p, q, n = self.words[j]
            u, l1 = self.f.iterate_logderiv(flat[sel], q + n)
            u = u + p
            w, l2 = self.f.iterate_logderiv(u, -q)
            out[sel] = w
            ld[sel] = l1 + l2
        if with_logderiv:
            return out.reshape(t.shape), ld.reshape(t.shape)
        return out.reshape(t.shape)

    def __call__(self, t):
        return self.evaluate(t)

    def log_derivative(self, t, side="right"):
        return self.evaluate(t, side, with_logderiv=True)[1]

    def derivative(self, t, side="right"):
        return np.exp(self.log_derivative(t, side))

    # holder_analysis treats these as maps of [0,1]
    def deriv(self, t):
        return self.derivative(t)


def theta_f(h: PLMap, f: SmoothGenerator) -> SmoothHomeo:
    return SmoothHomeo(h, f)


def theta_derivative(H: SmoothHomeo, t, side="right"):
    return H.derivative(t, side)


def f0_reference(f: SmoothGenerator, t):
    """x below 0, f on [0,1], x+1 above 1."""
    t = np.asarray(t, dtype=float)
    return np.where(t < 0, t, np.where(t > 1, t + 1, f(np.clip(t, 0, 1))))


@dataclass
class Witness:
    h_word: str
    t_star: float
    value: float
    C: float

    def to_json(self):
        import json
        return json.dumps({"h_word": self.h_word, "t_star": self.t_star,
                           "value": self.value, "C": self.C}, sort_keys=True)


def condition_b_point(h: PLMap, f: SmoothGenerator):
    """Conjugated fixed point of f^n on the first non-identity piece."""
    if h.is_identity():
        raise ValueError("condition (b) needs h != identity")
    x = None
    for left, right, piece in h.intervals():
        if left is None or left < ZERO:
            continue
        if not piece.is_identity():
            x = left
            n = piece.log2_slope
            break
    if x is None:
        raise ValueError("h is not an element of F")
    # theta_f(T_x)(z) with x = p/2^q, using f^q(z) = z
    if x.is_integer():
        w = float(x) + f.z
    else:
        w = float(f.iterate(f.z + x.num, -x.exp))
    return x, n, w


def verify_condition_b(h: PLMap, f: SmoothGenerator, word="", grid=2001, tol=1e-6) -> Witness:
    if f.C is None:
        raise NoInteriorFixedPoint("generator has no condition-(b) constant")
    H = theta_f(h, f)
    _, _, w = condition_b_point(h, f)
    ts = np.linspace(0.0, 1.0, grid)
    vals = np.abs(H.log_derivative(ts))
    j = int(np.argmax(vals))
    lo, hi = ts[max(j - 1, 0)], ts[min(j + 1, grid - 1)]
    res = optimize.minimize_scalar(lambda s: -abs(float(H.log_derivative(s))),
                                   bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    cands = [(float(vals[j]), float(ts[j])), (-float(res.fun), float(res.x)),
             (abs(float(H.log_derivative(w))), float(w))]
    value, t_star = max(cands)
    if value < f.C - tol:
        raise SearchFailed(f"max |log theta'| = {value} < C = {f.C}")
    return Witness(word, t_star, value, f.C)


def embed_word(word, f: SmoothGenerator) -> SmoothHomeo:
    return theta_f(f_word_to_map(word), f)
