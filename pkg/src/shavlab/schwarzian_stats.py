"""Schwarzian derivative, C_g and c4, the S-L8 concentration experiment and the S-L9 ratio check."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .special_functions import v1
from .wiener_engine import RngConfig, sample_paths, c4_from


class ConstructionImpossible(ValueError):
    pass


class BoundViolated(AssertionError):
    pass


# ---------------------------------------------------------------- test maps

@dataclass(frozen=True)
class SmoothTestMap:
    name: str
    g: Callable
    d1: Callable
    d2: Callable
    d3: Callable


def sine_family(a: float = 0.25) -> SmoothTestMap:
    """g(t) = t + a (1 - cos 2 pi t) / (2 pi); g(0)=0, g(1)=1, g'(0)=g'(1)=1."""
    if not abs(a) < 1:
        raise ValueError("|a| < 1 keeps g' > 0")
    w = 2 * np.pi
    return SmoothTestMap(
        f"sine(a={a})",
        lambda t: t + a * (1 - np.cos(w * np.asarray(t))) / w,
        lambda t: 1 + a * np.sin(w * np.asarray(t)),
        lambda t: a * w * np.cos(w * np.asarray(t)),
        lambda t: -a * w * w * np.sin(w * np.asarray(t)),
    )


def identity_map() -> SmoothTestMap:
    return SmoothTestMap("identity", lambda t: np.asarray(t, dtype=float),
                         lambda t: np.ones_like(np.asarray(t, dtype=float)),
                         lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                         lambda t: np.zeros_like(np.asarray(t, dtype=float)))


def affine_map(slope: float, shift: float) -> SmoothTestMap:
    return SmoothTestMap("affine", lambda t: slope * np.asarray(t) + shift,
                         lambda t: np.full_like(np.asarray(t, dtype=float), slope),
                         lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                         lambda t: np.zeros_like(np.asarray(t, dtype=float)))


def mobius_map(c: float) -> SmoothTestMap:
    """t / (1 + c (1 - t)) fixes 0 and 1; its Schwarzian vanishes."""
    def g(t):
        t = np.asarray(t, dtype=float)
        return t / (1 + c * (1 - t))

    def d1(t):
        t = np.asarray(t, dtype=float)
        return (1 + c) / (1 + c * (1 - t)) ** 2

    def d2(t):
        t = np.asarray(t, dtype=float)
        return 2 * c * (1 + c) / (1 + c * (1 - t)) ** 3

    def d3(t):
        t = np.asarray(t, dtype=float)
        return 6 * c * c * (1 + c) / (1 + c * (1 - t)) ** 4
    return SmoothTestMap(f"mobius(c={c})", g, d1, d2, d3)


# ---------------------------------------------------------------- Schwarzian and constants

def schwarzian(g: SmoothTestMap, t, form: int = 2):
    """form 1: (g''/g')' - (g''/g')^2 / 2;  form 2: g'''/g' - 3/2 (g''/g')^2."""
    d1, d2, d3 = g.d1(t), g.d2(t), g.d3(t)
    r = d2 / d1
    if form == 1:
        dr = (d3 * d1 - d2 * d2) / (d1 * d1)
        return dr - 0.5 * r * r
    return d3 / d1 - 1.5 * r * r


def schwarzian_fd(g: SmoothTestMap, t: float, h: float = 1e-3) -> float:
    """Schwarzian from finite differences of g alone (oracle)."""
    f = lambda s: float(g.g(s))
    vals = np.array([f(t + j * h) for j in range(-3, 4)])
    # 4th-order central stencils
    d1 = (-vals[5] + 8 * vals[4] - 8 * vals[2] + vals[1]) / (12 * h)
    d2 = (-vals[5] + 16 * vals[4] - 30 * vals[3] + 16 * vals[2] - vals[1]) / (12 * h * h)
    d3 = (-vals[6] + 8 * vals[5] - 13 * vals[4] + 13 * vals[2] - 8 * vals[1] + vals[0]) / (8 * h ** 3)
    return d3 / d1 - 1.5 * (d2 / d1) ** 2


def C_g(g: SmoothTestMap, m: int = 10_000, refine: bool = True) -> float:
    """1 + max (|g''/g'| + (g''/g')^2 + |g'''/g'|) on a grid (refined once)."""
    def on(mm):
        t = np.linspace(0, 1, mm + 1)
        r = g.d2(t) / g.d1(t)
        return 1.0 + float(np.max(np.abs(r) + r * r + np.abs(g.d3(t) / g.d1(t))))
    c = on(m)
    return max(c, on(2 * m)) if refine else c


def C_lemma9(g: SmoothTestMap, m: int = 10_000) -> float:
    """max over t1, t2 of |g''(t1) / g'(t2)|."""
    t = np.linspace(0, 1, m + 1)
    return float(np.max(np.abs(g.d2(t))) / np.min(g.d1(t)))


# ---------------------------------------------------------------- X_k, Y_k

def f1_f2_sample(g: SmoothTestMap, x, qs):
    """f1 = sum X_k and f2 = sum Y_k for one tuple of sampled diffeos q_1..q_n."""
    pts = np.concatenate([[0.0], np.asarray(x, dtype=float), [1.0]])
    l = np.diff(pts)
    rho = g.d2(pts) / g.d1(pts)
    X, Y = [], []
    for k, q in enumerate(qs):
        Xk = l[k] * (rho[k] * q.derivs[0] - rho[k + 1] * q.derivs[-1])
        integrand = schwarzian(g, pts[k] + l[k] * q.values) * q.derivs ** 2
        Yk = l[k] ** 2 * np.trapezoid(integrand, q.t)
        X.append(Xk)
        Y.append(Yk)
    X, Y = np.array(X), np.array(Y)
    return float(X.sum()), float(Y.sum()), X, Y


def _xy_batch(g: SmoothTestMap, pts, paths):
    """Vectorised X_k, Y_k with q_k = B(path_k); paths shape (trials, n, m+1)."""
    trials, n, m1 = paths.shape
    m = m1 - 1
    l = np.diff(pts)
    rho = g.d2(pts) / g.d1(pts)
    shift = np.max(paths, axis=-1, keepdims=True)
    e = np.exp(paths - shift)
    cum = np.concatenate([np.zeros(e.shape[:-1] + (1,)),
                          np.cumsum(0.5 / m * (e[..., 1:] + e[..., :-1]), axis=-1)], axis=-1)
    total = cum[..., -1:]
    qv = cum / total
    qd = e / total
    X = l * (rho[:-1] * qd[..., 0] - rho[1:] * qd[..., -1])
    s = schwarzian(g, pts[:-1, None] + l[:, None] * qv)
    integ = s * qd * qd
    Y = l * l * (0.5 / m) * np.sum(integ[..., 1:] + integ[..., :-1], axis=-1)
    return X, Y, qd[..., 0], qd[..., -1], (0.5 / m) * np.sum(qd[..., 1:] ** 2 + qd[..., :-1] ** 2, axis=-1)


@dataclass
class SL8Report:
    eps: float
    n: int
    trials: int
    C_g: float
    c4: float
    M1: float
    M2: float
    I: float
    threshold: float
    frequency: float
    freq_stderr: float
    bound: float
    var_f1: float
    var_f1_bound: float
    mean_abs_f2: float
    mean_abs_f2_stderr: float
    mean_abs_f2_bound: float
    mesh: float
    EX_ratio_max: float
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.frequency <= self.bound + 3 * self.freq_stderr


def check_SL8(g: SmoothTestMap, eps: float, n: int, trials: int = 10_000, m: int = 256,
              rng_cfg: RngConfig = RngConfig(stream=8), batch: int = 250, x=None) -> SL8Report:
    """Empirical P(|f1 + f2| > 4 c4 C_g eps^{1/3}) for independent q_k = B(Wiener path).

    M1, M2 and I (hence c4) are estimated from the same q samples.
    """
    pts = np.linspace(0, 1, n + 1) if x is None else np.concatenate([[0.0], np.asarray(x), [1.0]])
    mesh = float(np.max(np.diff(pts)))
    Cg = C_g(g)
    f1s, f2s, Xs = [], [], []
    s_d0 = s_d0sq = s_I = 0.0
    count = 0
    for b in range(-(-trials // batch)):
        size = min(batch, trials - b * batch)
        rng = rng_cfg.generator(b)
        paths = sample_paths(m, size * n, rng).reshape(size, n, m + 1)
        X, Y, d0, d1, energy = _xy_batch(g, pts, paths)
        f1s.append(X.sum(axis=1))
        f2s.append(Y.sum(axis=1))
        Xs.append(X)
        s_d0 += math.fsum(d0.ravel()) + math.fsum(d1.ravel())
        s_d0sq += math.fsum((d0 ** 2).ravel()) + math.fsum((d1 ** 2).ravel())
        s_I += math.fsum(energy.ravel())
        count += d0.size
    f1 = np.concatenate(f1s)
    f2 = np.concatenate(f2s)
    X = np.concatenate(Xs)
    # q'(0) and q'(1) share their law, so both sides feed the moment estimates
    M1 = s_d0 / (2 * count)
    M2 = s_d0sq / (2 * count)
    I = s_I / count
    c4 = c4_from(M1, M2, I)
    thr = 4 * c4 * Cg * eps ** (1 / 3)
    hit = np.abs(f1 + f2) > thr
    p = float(hit.mean())
    l = np.diff(pts)
    ex_ratio = np.abs(X.mean(axis=0)) / (l ** 2 * Cg * M1)
    return SL8Report(
        eps, n, trials, Cg, c4, M1, M2, I, thr, p, math.sqrt(max(p * (1 - p), 1.0 / trials) / trials),
        2 * eps ** (1 / 3), float(f1.var(ddof=1)), 4 * eps * Cg * M2,
        float(np.mean(np.abs(f2))), float(np.std(np.abs(f2), ddof=1) / math.sqrt(trials)),
        1.5 * c4 * Cg * eps, mesh, float(np.max(ex_ratio)),
        {"mean_f1": float(f1.mean()), "f1_stderr": float(f1.std(ddof=1) / math.sqrt(trials)),
         "p_f1": float(np.mean(np.abs(f1) > 3 * c4 * Cg * eps ** (1 / 3))), "p_f1_bound": 0.5 * eps ** (1 / 3),
         "p_f2": float(np.mean(np.abs(f2) > c4 * Cg * eps ** (1 / 3))), "p_f2_bound": 1.5 * eps ** (2 / 3),
         "EX_stderr_ratio_max": float(np.max(X.std(axis=0, ddof=1) / math.sqrt(trials) / (l ** 2 * Cg * M1)))})


# ---------------------------------------------------------------- R ratios

def R_ratio_closed(a, b, A, B):
    """R^g / R from the quadratic Taylor form."""
    return (1 + (A * a * a + B * b * b) / (a + b)) / np.sqrt((1 + A * a) * (1 + B * b))


def R_ratio_direct(a, b, A, B):
    """Same ratio from R = (a+b)/(2 sqrt(ab)) and R^g built from a(1+Aa), b(1+Bb)."""
    ga, gb = a * (1 + A * a), b * (1 + B * b)
    R = (a + b) / (2 * np.sqrt(a * b))
    Rg = (ga + gb) / (2 * np.sqrt(ga * gb))
    return Rg / R


def tau_beta(t, alpha):
    """tau = acosh t and the increment beta with acosh(t (1+alpha)) = tau + beta, via u = 1/t^2."""
    t = np.asarray(t, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    u = 1.0 / (t * t)
    s = np.sqrt(1 - u)
    tau = np.log(t) + np.log1p(s)
    inner = (1.0 / (1 + s)) * (1 + (2 + alpha) / (s + np.sqrt((1 + alpha) ** 2 - u)))
    return tau, np.log1p(alpha * inner)


def _tau_beta_log(log_t, alpha):
    """tau_beta with t given by its log (t may exceed float range)."""
    log_t = np.asarray(log_t, dtype=float)
    u = np.exp(-2 * log_t)
    s = np.sqrt(1 - u)
    tau = log_t + np.log1p(s)
    inner = (1.0 / (1 + s)) * (1 + (2 + alpha) / (s + np.sqrt((1 + alpha) ** 2 - u)))
    return tau, np.log1p(alpha * inner)


def log_estimates_check(npts: int = 10_000) -> dict:
    y = np.linspace(-0.5, 0.5, npts)
    a = np.all(np.abs(np.log1p(y)) <= 2 * np.abs(y) + 1e-15)
    y2 = np.linspace(-0.1, 0.1, npts)
    b = np.all(np.abs(np.log1p(3 * y2)) <= 4 * np.abs(y2) + 1e-15)
    x = np.linspace(-1, 1, npts)
    c = np.all(np.abs(np.expm1(x)) <= 2 * np.abs(x) + 1e-15)
    if not (a and b and c):
        raise BoundViolated("log/exp estimate failed")
    return {"log1p_2y": bool(a), "log1p_3y_4y": bool(b), "expm1_2x": bool(c)}


# ---------------------------------------------------------------- S-L9

def sine_mean_slope(a_coef: float, x, log_l):
    """(g(x + l) - g(x)) / l for the sine family, stable for l -> 0."""
    x = np.asarray(x, dtype=float)
    log_l = np.asarray(log_l, dtype=float)
    l = np.exp(log_l)
    small = log_l < -18
    pl = np.pi * l
    sinc = np.where(small, 1.0 - pl * pl / 6.0, np.sin(pl) / np.where(small, 1.0, pl))
    return 1.0 + a_coef * sinc * np.sin(2 * np.pi * x + pl)


@dataclass
class SL9Report:
    n: int
    eps: float
    C: float
    delta1: float
    log_r: float
    mesh: float
    min_log_R: float
    hypotheses_met: dict
    log_prod_R: float
    prod_R_minus_1: float
    log_prod_v: float
    chain: dict

    @property
    def ok(self) -> bool:
        return abs(self.prod_R_minus_1) <= self.eps


def ratio_terms(log_l, a_coef: float):
    """Per-k log(R^g/R), log R, d_k, alpha_k for a partition given by log lengths (cyclic)."""
    log_l = np.asarray(log_l, dtype=float)
    lmax = np.max(log_l)
    lengths = np.exp(log_l - lmax)
    lengths = lengths / lengths.sum()
    log_l = np.log(lengths) if np.all(lengths > 0) else log_l - (lmax + np.log(np.sum(np.exp(log_l - lmax))))
    pts = np.concatenate([[0.0], np.cumsum(np.exp(log_l))[:-1]])      # left ends x_{k-1}
    m = sine_mean_slope(a_coef, pts, log_l)
    La, Lb = log_l, np.roll(log_l, 1)                                 # a_k = l_k, b_k = l_{k-1}
    ma, mb = m, np.roll(m, 1)
    diff = Lb - La
    w = np.where(diff > 0, 1.0 / (1.0 + np.exp(-np.abs(diff))), np.exp(-np.abs(diff)) / (1.0 + np.exp(-np.abs(diff))))
    log_ratio = np.log(ma + (mb - ma) * w) - 0.5 * (np.log(ma) + np.log(mb))
    absd = np.abs(diff)
    log_R = 0.5 * absd - math.log(2.0) + np.log1p(np.exp(-absd))
    d = np.exp(La) + np.exp(Lb)
    return {"log_ratio": log_ratio, "log_R": log_R, "d": d, "alpha": np.expm1(log_ratio),
            "mesh": float(np.exp(np.max(log_l))), "log_l": log_l}


def check_SL9(a_coef: float, eps: float, log_l, require: bool = False) -> SL9Report:
    g = sine_family(a_coef) if a_coef != 0 else identity_map()
    C = C_lemma9(g)
    delta1 = 1.0 / (400 * (C + 1))
    log_r = 8000 * (C + 1) / eps
    T = ratio_terms(log_l, a_coef)
    hyp = {"mesh<delta1": T["mesh"] < delta1, "minR>r": float(np.min(T["log_R"])) > log_r}
    if require and not all(hyp.values()):
        raise ConstructionImpossible(f"hypotheses not met: {hyp}")
    alpha = T["alpha"]
    tau, beta = _tau_beta_log(T["log_R"], alpha)
    vr = np.log(v1(tau + beta)) - np.log(v1(tau))
    with np.errstate(divide="ignore", invalid="ignore"):
        omega_fn = np.where(beta != 0, np.expm1(vr) * tau / beta, 0.0)
        log_t = T["log_R"]
        omega_k = np.where(beta != 0, omega_fn * beta * log_t / (tau * T["d"]), 0.0)
        beta_ratio = np.where(alpha != 0, np.abs(beta) / np.abs(alpha), 1.0)
    sigma = float(np.sum(vr))
    lp = float(np.sum(T["log_ratio"]))
    chain = {
        "alpha_max": float(np.max(np.abs(alpha))),
        "alpha_le_5/2Cd": bool(np.all(np.abs(alpha) <= 2.5 * C * T["d"] + 1e-15)),
        "alpha_lt_1/80": bool(np.all(np.abs(alpha) < 1 / 80)),
        "beta_ratio_min": float(np.min(beta_ratio)),
        "beta_ratio_max": float(np.max(beta_ratio)),
        "beta_in_[1/4,4]alpha": bool(np.all((beta_ratio >= 0.25) & (beta_ratio <= 4))),
        "omega_max": float(np.max(np.abs(omega_k))),
        "omega_le_200C": bool(np.all(np.abs(omega_k) <= 200 * C)),
        "sigma": sigma,
        "sigma_le_eps/10": abs(sigma) <= eps / 10,
    }
    return SL9Report(len(T["log_l"]), eps, C, delta1, log_r, T["mesh"], float(np.min(T["log_R"])),
                     hyp, lp, math.expm1(lp), sigma, chain)


def three_piece_partition(log_r: float, margin: float = 10.0):
    """Lengths ~ (1, e^-L, e^-2L) with every adjacent ratio beyond 2 acosh(r)."""
    L = 2 * (log_r + math.log(2.0)) + margin
    return np.array([math.log1p(-math.exp(-L)), -L, -2 * L])


def alternating_partition(pairs: int, gap: float, rng=None, jitter: float = 0.0):
    """pairs of (big, tiny) lengths; log tiny = log big - gap - jitter * U."""
    rng = rng or np.random.default_rng(0)
    big = np.log(rng.uniform(0.5, 1.5, pairs)) if jitter else np.zeros(pairs)
    tiny = big - gap - jitter * rng.random(pairs)
    out = np.empty(2 * pairs)
    out[0::2], out[1::2] = big, tiny
    return out


def full_hypothesis_partition(C: float, eps: float, margin: float = 10.0):
    delta1 = 1.0 / (400 * (C + 1))
    log_r = 8000 * (C + 1) / eps
    pairs = int(math.ceil(1.0 / delta1)) + 1
    gap = 2 * (log_r + math.log(2.0)) + margin
    return alternating_partition(pairs, gap)


def moderate_r_check(a_coef: float = 0.25, r: float = 1e3, partitions: int = 100,
                     pairs: int = 1300, seed: int = 0):
    """|log(R^g/R)| <= 2 (200 C) d_k / log r on random admissible partitions."""
    g = sine_family(a_coef)
    C = C_lemma9(g)
    rng = np.random.default_rng(seed)
    gap = 2 * math.acosh(r) + 0.5 + math.log(3.0)   # big lengths vary within a factor 3
    worst = 0.0
    for _ in range(partitions):
        ll = alternating_partition(pairs, gap, rng, jitter=3.0)
        T = ratio_terms(ll, a_coef)
        if np.min(T["log_R"]) <= math.log(r):
            raise ConstructionImpossible("partition not admissible")
        bound = 2 * 200 * C * T["d"] / math.log(r)
        worst = max(worst, float(np.max(np.abs(T["log_ratio"]) / bound)))
    return {"C": C, "r": r, "partitions": partitions, "worst_ratio": worst, "ok": worst <= 1.0}
