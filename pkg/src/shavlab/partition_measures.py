"""Partitions of [0,1], the densities u_{1,n} and u_n, J_n, and a sampler for u_n.

Coordinates.  A partition x of [0,1] into n pieces has lengths l_1..l_n and the
convention l_0 = l_n.  Then y_k = l_k / l_n and z_k = log(y_k) / 2, so that
z_0 = z_n = 0.  The sampler works with t = (t_1, ..., t_{2n-1}) where the even
entries are z_k and the odd entries are auxiliary convolution variables.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .special_functions import log_T_n, v, v1


class ChainDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class Partition:
    interior: tuple

    def __post_init__(self):
        x = np.asarray(self.interior, dtype=float)
        if x.size and (np.any(np.diff(x) <= 0) or x[0] <= 0 or x[-1] >= 1):
            raise ValueError("interior points must increase strictly inside (0,1)")

    @classmethod
    def uniform(cls, n: int) -> "Partition":
        return cls(tuple(k / n for k in range(1, n)))

    @classmethod
    def from_lengths(cls, lengths) -> "Partition":
        l = np.asarray(lengths, dtype=float)
        x = np.cumsum(l / l.sum())[:-1]
        return cls(tuple(x.tolist()))

    @property
    def n(self) -> int:
        return len(self.interior) + 1

    @property
    def points(self) -> np.ndarray:
        return np.concatenate([[0.0], np.asarray(self.interior, dtype=float), [1.0]])

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.points)

    @property
    def mesh(self) -> float:
        return float(np.max(self.lengths))


# ---------------------------------------------------------------- transforms

def transforms(x):
    """x (..., n-1) -> dict of l, y, z (each with indices 0..n) and Jacobians."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pts = np.concatenate([np.zeros(x.shape[:-1] + (1,)), x, np.ones(x.shape[:-1] + (1,))], axis=-1)
    l = np.diff(pts, axis=-1)
    ln = l[..., -1:]
    l = np.concatenate([ln, l], axis=-1)          # l_0 = l_n
    y = l / ln
    z = 0.5 * np.log(y)
    n = x.shape[-1] + 1
    jac_B = ln[..., 0] ** (-n)
    jac_Cinv = 2.0 ** (n - 1) * np.prod(y[..., 1:n], axis=-1)
    return {"l": l, "y": y, "z": z, "jac_A": np.ones_like(jac_B), "jac_B": jac_B,
            "jac_Cinv": jac_Cinv}


def inverse_transforms(z):
    """z_1..z_{n-1} -> x_1..x_{n-1}, through y and l."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    logl = log_lengths_from_z(z)
    return np.cumsum(np.exp(logl), axis=-1)[..., :-1]


def log_lengths_from_z(z):
    """log l_1..log l_n from z_1..z_{n-1}; stable for huge |z|."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    full = np.concatenate([2.0 * z, np.zeros(z.shape[:-1] + (1,))], axis=-1)
    return full - logsumexp(full, axis=-1, keepdims=True)


def x_from_y(y):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return np.cumsum(y, axis=-1) / (1.0 + np.sum(y, axis=-1, keepdims=True))


def equality_arguments(x):
    """(x_k - x_{k-2}) / (2 sqrt(l_k l_{k-1})) for k = 1..n, in x form."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pts = np.concatenate([x[..., -1:] - 1.0, np.zeros(x.shape[:-1] + (1,)), x,
                          np.ones(x.shape[:-1] + (1,))], axis=-1)
    lk = pts[..., 2:] - pts[..., 1:-1]
    lkm = pts[..., 1:-1] - pts[..., :-2]
    return (pts[..., 2:] - pts[..., :-2]) / (2.0 * np.sqrt(lk * lkm))


# ---------------------------------------------------------------- densities

def log_u1n_from_log_lengths(logl):
    """log u_{1,n} with logl = (log l_1, ..., log l_n)."""
    logl = np.asarray(logl, dtype=float)
    prev = np.concatenate([logl[..., -1:], logl[..., :-1]], axis=-1)
    return np.sum(-logl + np.log(v1(0.5 * np.abs(logl - prev))), axis=-1)


def log_u1n(x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pts = np.concatenate([np.zeros(x.shape[:-1] + (1,)), x, np.ones(x.shape[:-1] + (1,))], axis=-1)
    return log_u1n_from_log_lengths(np.log(np.diff(pts, axis=-1)))


def u1n(x, logspace: bool = True):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if logspace:
        return np.exp(log_u1n(x))
    pts = np.concatenate([np.zeros(x.shape[:-1] + (1,)), x, np.ones(x.shape[:-1] + (1,))], axis=-1)
    return np.prod(v(equality_arguments(x)) / np.diff(pts, axis=-1), axis=-1)


def log_Jn(n: int) -> float:
    """J_n = 2^{n-1} T_{2n-1}."""
    if n == 1:
        return math.log(math.pi)
    return (n - 1) * math.log(2.0) + log_T_n(2 * n - 1)


def Jn(n: int) -> float:
    return math.exp(log_Jn(n))


def un(x, n=None):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.shape[-1] + 1 if n is None else n
    return np.exp(log_u1n(x) - log_Jn(n))


def Jn_bracket(nmax: int = 10):
    rows = []
    for n in range(1, nmax + 1):
        r = math.exp(log_Jn(n) - (3 * n - 1) * math.log(2) - math.lgamma(2 * n + 1))
        rows.append({"n": n, "J_n": Jn(n), "ratio": r})
    ratios = [row["ratio"] for row in rows]
    return rows, min(ratios), max(ratios)


# ---------------------------------------------------------------- importance sampling

Z_MAX = 1e9


def _propose_z(rng, size, n, lam, zmax=Z_MAX):
    """Increments |dz| = expm1(E), E ~ Exp(lam) truncated at log1p(zmax), random sign.

    Beyond |dz| ~ 1e9 the log-length arithmetic loses accuracy, while the
    target mass out there is about 1e-7 of J_n.
    """
    d = n - 1
    emax = math.log1p(zmax)
    cut = -math.expm1(-lam * emax)
    e = -np.log1p(-cut * rng.random((size, d))) / lam
    s = rng.integers(0, 2, (size, d)) * 2 - 1
    dz = s * np.expm1(e)
    logq = np.sum(math.log(lam / cut) - lam * e - np.log(2.0 * (1.0 + np.abs(dz))), axis=1)
    return np.cumsum(dz, axis=1), logq


def importance_sample(n: int, size: int, rng, lam: float = 0.15):
    """(z, log w) with w = u_{1,n}(x(z)) |dx/dz| / q(z); E[w] = J_n."""
    z, logq = _propose_z(rng, size, n, lam)
    logl = log_lengths_from_z(z)
    log_jac = n * logl[:, -1] + (n - 1) * math.log(2.0) + 2.0 * np.sum(z, axis=1)
    return z, log_u1n_from_log_lengths(logl) + log_jac - logq


@dataclass
class MCEstimate:
    estimate: float
    stderr: float
    samples: int

    def z_score(self, target):
        return (self.estimate - target) / self.stderr


def Jn_mc(n: int, samples: int = 10 ** 7, seed: int = 0, batch: int = 10 ** 6,
          lam: float = 0.15, workers: int = 1) -> MCEstimate:
    nb = -(-samples // batch)

    def one(b):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n, b)))
        m = min(batch, samples - b * batch)
        _, lw = importance_sample(n, m, rng, lam)
        w = np.exp(lw)
        return m, float(np.sum(w)), float(np.sum(w * w))

    with ThreadPoolExecutor(max(1, workers)) as ex:
        parts = list(ex.map(one, range(nb)))
    N = sum(p[0] for p in parts)
    s1 = sum(p[1] for p in parts)
    s2 = sum(p[2] for p in parts)
    mean = s1 / N
    var = max(s2 / N - mean * mean, 0.0)
    return MCEstimate(mean, math.sqrt(var / N), N)


def importance_expectation(fn, n: int, samples: int = 10 ** 6, seed: int = 0,
                           lam: float = 0.15) -> MCEstimate:
    """Self-normalized E_{u_n}[fn(log lengths)] with a delta-method stderr."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n, 99)))
    z, lw = importance_sample(n, samples, rng, lam)
    w = np.exp(lw - np.max(lw))
    g = np.asarray(fn(log_lengths_from_z(z)), dtype=float)
    mu = float(np.sum(w * g) / np.sum(w))
    wn = w / np.sum(w)
    se = math.sqrt(float(np.sum(wn * wn * (g - mu) ** 2)))
    return MCEstimate(mu, se, samples)


# ---------------------------------------------------------------- MCMC in t

@dataclass(frozen=True)
class ChainConfig:
    chains: int = 256
    groups: int = 4
    burn_in: int = 1500
    sweeps: int = 2000
    thin: int = 4
    seed: int = 0
    target_acc: tuple = (0.30, 0.45)
    scale_span: float = 1e4
    workers: int = 1


@dataclass
class ChainResult:
    n: int
    z: np.ndarray                 # (kept, chains, n-1)
    acceptance: dict
    base_step: float
    config: ChainConfig = field(repr=False)

    def log_lengths(self):
        return log_lengths_from_z(self.z)

    def partitions(self):
        for row in inverse_transforms(self.z.reshape(-1, self.n - 1)):
            yield Partition(tuple(row.tolist()))

    def estimate(self, stat) -> MCEstimate:
        """stat maps log lengths (..., n) to values; stderr from chain means."""
        vals = np.asarray(stat(self.log_lengths()), dtype=float)
        per_chain = vals.mean(axis=0)
        C = per_chain.size
        se = float(per_chain.std(ddof=1) / math.sqrt(C))
        return MCEstimate(float(per_chain.mean()), se, int(vals.size))

    def ess(self, stat) -> float:
        vals = np.asarray(stat(self.log_lengths()), dtype=float)
        se = self.estimate(stat).stderr
        var = float(vals.var())
        return float("inf") if se == 0 else var / se ** 2


def _log1p_sq(d):
    a = np.abs(d)
    big = a > 1e8
    safe = np.where(big, 1.0, a)
    return np.where(big, 2.0 * np.log(np.where(big, a, 1.0)), np.log1p(safe * safe))


def _logpi(t):
    pad = np.zeros(t.shape[:-1] + (1,))
    tt = np.concatenate([pad, t, pad], axis=-1)
    return -0.5 * np.sum(_log1p_sq(np.diff(tt, axis=-1)), axis=-1)


class _Chains:
    def __init__(self, n, chains, rng, base):
        self.n, self.d, self.rng, self.base = n, 2 * n - 1, rng, base
        self.t = rng.standard_normal((chains, self.d))
        self.lp = _logpi(self.t)

    def _local(self, j, col):
        left = self.t[:, j - 1] if j > 0 else 0.0
        right = self.t[:, j + 1] if j < self.d - 1 else 0.0
        return -0.5 * (_log1p_sq(col - left) + _log1p_sq(right - col))

    def sweep(self, span):
        rng, C = self.rng, self.t.shape[0]
        acc = np.zeros(3)
        lspan = math.log(span)
        for j in range(self.d):
            scale = self.base * np.exp(rng.uniform(-lspan, lspan, C))
            new = self.t[:, j] + scale * rng.standard_normal(C)
            diff = self._local(j, new) - self._local(j, self.t[:, j])
            ok = np.log(rng.random(C)) < diff
            self.t[ok, j] = new[ok]
            self.lp = self.lp + np.where(ok, diff, 0.0)
            acc[0] += ok.mean() / self.d
        # dilation t -> lam t
        lam = np.exp(rng.normal(0.0, 1.0, C))
        prop = self.t * lam[:, None]
        lq = _logpi(prop)
        ok = np.log(rng.random(C)) < lq - self.lp + self.d * np.log(lam)
        self.t[ok], self.lp[ok] = prop[ok], lq[ok]
        acc[1] = ok.mean()
        # shift of a contiguous block
        i = int(rng.integers(0, self.d))
        k = int(rng.integers(i, self.d)) + 1
        shift = self.base * np.exp(rng.uniform(-lspan, lspan, C)) * rng.standard_normal(C)
        prop = self.t.copy()
        prop[:, i:k] += shift[:, None]
        lq = _logpi(prop)
        ok = np.log(rng.random(C)) < lq - self.lp
        self.t[ok], self.lp[ok] = prop[ok], lq[ok]
        acc[2] = ok.mean()
        return acc


def _run_group(n, cfg: ChainConfig, g: int, chains: int):
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(n, g)))
    ch = _Chains(n, chains, rng, 1.0)
    lo, hi = cfg.target_acc
    # tune the base step during burn-in
    window = max(1, cfg.burn_in // 30)
    acc_w = 0.0
    for s in range(cfg.burn_in):
        acc_w += ch.sweep(cfg.scale_span)[0]
        if (s + 1) % window == 0:
            a = acc_w / window
            if a < lo:
                ch.base *= 0.7
            elif a > hi:
                ch.base *= 1.4
            acc_w = 0.0
    kept = []
    acc = np.zeros(3)
    for s in range(cfg.sweeps):
        acc += ch.sweep(cfg.scale_span)
        if (s + 1) % cfg.thin == 0:
            kept.append(ch.t[:, 1::2].copy())
    return np.stack(kept), acc / cfg.sweeps, ch.base


def sample_un(n: int, cfg: ChainConfig = ChainConfig()) -> ChainResult:
    """Metropolis chains for u_n in t-coordinates; deterministic for a given cfg.seed."""
    if n < 2:
        raise ValueError("sample_un needs n >= 2")
    per = [cfg.chains // cfg.groups + (1 if g < cfg.chains % cfg.groups else 0)
           for g in range(cfg.groups)]
    with ThreadPoolExecutor(max(1, cfg.workers)) as ex:
        parts = list(ex.map(lambda g: _run_group(n, cfg, g, per[g]), range(cfg.groups)))
    z = np.concatenate([p[0] for p in parts], axis=1)
    acc = np.mean([p[1] for p in parts], axis=0)
    acceptance = {"componentwise": float(acc[0]), "dilation": float(acc[1]), "block": float(acc[2])}
    if acc[0] < 0.01:
        raise ChainDiverged(f"componentwise acceptance {acc[0]:.4f} < 1%")
    return ChainResult(n, z, acceptance, float(np.mean([p[2] for p in parts])), cfg)


# ---------------------------------------------------------------- lemma checks

def mesh_exceeds(eps):
    return lambda logl: np.max(logl, axis=-1) > math.log(eps)


def min_ratio_at_most(r):
    """min_k (l_k + l_{k-1}) / (2 sqrt(l_k l_{k-1})) <= r, cyclic in k."""
    a = math.acosh(r) if r >= 1 else -1.0

    def stat(logl):
        prev = np.concatenate([logl[..., -1:], logl[..., :-1]], axis=-1)
        return np.min(0.5 * np.abs(logl - prev), axis=-1) <= a
    return stat


def ratio_k_at_most(r, k):
    a = math.acosh(r)

    def stat(logl):
        return 0.5 * np.abs(logl[..., k - 1] - logl[..., k - 2]) <= a
    return stat


@dataclass
class LemmaRow:
    n: int
    estimate: float
    stderr: float
    ess: float
    extra: dict = field(default_factory=dict)


def check_SL5(ns, eps: float, cfg: ChainConfig = ChainConfig()):
    rows = []
    for n in ns:
        if eps >= 1:
            rows.append(LemmaRow(n, 0.0, 0.0, float("inf")))
            continue
        res = sample_un(n, cfg)
        st = mesh_exceeds(eps)
        e = res.estimate(st)
        rows.append(LemmaRow(n, e.estimate, e.stderr, res.ess(st),
                             {"acceptance": res.acceptance}))
    return rows


def sl6_per_k_bound(n: int, r: float) -> float:
    a = math.acosh(r)
    return 8 * math.pi * a * (1 + a) * math.exp(log_Jn(n - 1) - log_Jn(n))


def check_SL6(ns, r: float, cfg: ChainConfig = ChainConfig()):
    rows = []
    for n in ns:
        if r <= 1:
            rows.append(LemmaRow(n, 0.0, 0.0, float("inf")))
            continue
        res = sample_un(n, cfg)
        st = min_ratio_at_most(r)
        e = res.estimate(st)
        k = max(2, n // 2)
        ek = res.estimate(ratio_k_at_most(r, k))
        rows.append(LemmaRow(n, e.estimate, e.stderr, res.ess(st), {
            "per_k": ek.estimate, "per_k_stderr": ek.stderr,
            "per_k_bound": sl6_per_k_bound(n, r), "acceptance": res.acceptance}))
    return rows


def strictly_decreasing(rows, sigmas: float = 2.0) -> bool:
    for a, b in zip(rows[:-1], rows[1:]):
        gap = a.estimate - b.estimate
        if gap <= sigmas * math.hypot(a.stderr, b.stderr):
            return False
    return True


def odd_inequality_grid(a_values=(0.1, 0.5, 1.0, 2.0), npts: int = 200) -> bool:
    """1 + p^2 <= (1 + q^2) 4 (1 + a)^2 whenever |p| <= |q| + a."""
    for a in a_values:
        q = np.linspace(-20, 20, npts)
        frac = np.linspace(-1, 1, npts)
        Q, Fr = np.meshgrid(q, frac)
        P = Fr * (np.abs(Q) + a)
        if np.any(1 + P ** 2 > (1 + Q ** 2) * 4 * (1 + a) ** 2):
            return False
    return True
