"""Wiener measure on C_0[0,1], the maps A and B, and Monte Carlo moments of q = B(x)."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special, stats

from .holder_analysis import SampledDiffeo
from .partition_measures import MCEstimate

M1_LOWER = 1.0 / (2.0 * (math.sqrt(math.e) - 1.0))
I_UPPER = (math.e ** 2 - 1.0) / 2.0


@dataclass(frozen=True)
class RngConfig:
    seed: int = 0
    stream: int = 0
    counter: int = 0

    def generator(self, batch: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, self.counter + batch))
        return np.random.default_rng(ss)


def time_grid(m: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, m + 1)


def sample_paths(m: int, N: int, rng) -> np.ndarray:
    """N paths on the grid k/m, shape (N, m+1), x(0) = 0."""
    if m < 2:
        raise ValueError("m must be >= 2")
    inc = rng.standard_normal((N, m)) * math.sqrt(1.0 / m)
    out = np.zeros((N, m + 1))
    np.cumsum(inc, axis=1, out=out[:, 1:])
    return out


def sample_path(m: int, rng) -> np.ndarray:
    return sample_paths(m, 1, rng)[0]


def time_reverse(x):
    """(Tx)(t) = x(1-t) - x(1); works on the last axis."""
    x = np.asarray(x, dtype=float)
    return x[..., ::-1] - x[..., -1:]


# ---------------------------------------------------------------- cylinder sets

def cylinder_probability(times, lower, upper, kind: str = "positions") -> float:
    """w{x : lower_i <= x(t_i) <= upper_i} or the same box for the increments x(t_i) - x(t_{i-1})."""
    t = np.asarray(times, dtype=float)
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if np.any(np.diff(t) <= 0) or t[0] <= 0 or t[-1] > 1:
        raise ValueError("times must increase within (0, 1]")
    if kind == "increments":
        sd = np.sqrt(np.diff(np.concatenate([[0.0], t])) * 2.0)
        return float(np.prod(0.5 * (special.erf(hi / sd) - special.erf(lo / sd))))
    if kind != "positions":
        raise ValueError(kind)
    if np.all(np.isinf(lo)) and np.all(np.isinf(hi)):
        return 1.0
    if t.size == 1:
        sd = math.sqrt(2.0 * t[0])
        return float(0.5 * (special.erf(hi[0] / sd) - special.erf(lo[0] / sd)))
    cov = np.minimum.outer(t, t)
    mvn = stats.multivariate_normal(mean=np.zeros(t.size), cov=cov)
    return float(mvn.cdf(hi, lower_limit=lo))


def cylinder_mc(times, lower, upper, N: int, rng, kind="positions", m: int = 64):
    grid = time_grid(m)
    idx = np.searchsorted(grid, np.asarray(times))
    if not np.allclose(grid[idx], times):
        raise ValueError("times must lie on the k/m grid")
    x = sample_paths(m, N, rng)[:, idx]
    if kind == "increments":
        x = np.diff(np.concatenate([np.zeros((N, 1)), x], axis=1), axis=1)
    hit = np.all((x >= lower) & (x <= upper), axis=1)
    p = float(hit.mean())
    return MCEstimate(p, math.sqrt(max(p * (1 - p), 1e-300) / N), N)


# ---------------------------------------------------------------- A and B

def _cumulative(e, h, rule):
    """Cumulative integral of grid values e (last axis) with spacing h."""
    if rule == "trapezoid":
        c = np.concatenate([np.zeros(e.shape[:-1] + (1,)),
                            np.cumsum(0.5 * h * (e[..., 1:] + e[..., :-1]), axis=-1)], axis=-1)
        return c
    if rule == "gregory":
        # cubic interpolation on each cell from 4 neighbouring nodes (4th order)
        n = e.shape[-1] - 1
        if n < 3:
            return _cumulative(e, h, "trapezoid")
        cell = np.empty(e.shape[:-1] + (n,))
        w_mid = np.array([-1.0, 13.0, 13.0, -1.0]) * h / 24.0
        w_left = np.array([9.0, 19.0, -5.0, 1.0]) * h / 24.0
        cell[..., 1:n - 1] = (w_mid[0] * e[..., 0:n - 2] + w_mid[1] * e[..., 1:n - 1]
                              + w_mid[2] * e[..., 2:n] + w_mid[3] * e[..., 3:n + 1])
        cell[..., 0] = (w_left[0] * e[..., 0] + w_left[1] * e[..., 1]
                        + w_left[2] * e[..., 2] + w_left[3] * e[..., 3])
        cell[..., n - 1] = (w_left[0] * e[..., n] + w_left[1] * e[..., n - 1]
                            + w_left[2] * e[..., n - 2] + w_left[3] * e[..., n - 3])
        return np.concatenate([np.zeros(e.shape[:-1] + (1,)), np.cumsum(cell, axis=-1)], axis=-1)
    raise ValueError(f"unknown rule {rule!r}")


def map_B(x, rule: str = "trapezoid") -> SampledDiffeo:
    """q(t) = int_0^t e^x / int_0^1 e^x, with q' = e^{x(t)} / int_0^1 e^x."""
    x = np.asarray(x, dtype=float)
    m = x.size - 1
    t = time_grid(m)
    shift = float(np.max(x))
    e = np.exp(x - shift)
    c = _cumulative(e, 1.0 / m, rule)
    return SampledDiffeo(t, c / c[-1], e / c[-1])


def map_A(q: SampledDiffeo) -> np.ndarray:
    """log q'(t) - log q'(0)."""
    lg = np.log(q.derivs)
    return lg - lg[0]


def endpoint_slopes(paths, rule: str = "trapezoid"):
    """(q'(0), q'(1), int_0^1 q'^2) for each path, vectorised."""
    paths = np.asarray(paths, dtype=float)
    m = paths.shape[-1] - 1
    shift = np.max(paths, axis=-1, keepdims=True)
    e = np.exp(paths - shift)
    total = _cumulative(e, 1.0 / m, rule)[..., -1:]
    qd = e / total
    energy = 0.5 / m * np.sum(qd[..., 1:] ** 2 + qd[..., :-1] ** 2, axis=-1)
    return qd[..., 0], qd[..., -1], energy


# ---------------------------------------------------------------- Monte Carlo engine

StatFn = Callable[[np.ndarray], dict]


def run_mc(stat_fn: StatFn, N: int, m: int, rng_cfg: RngConfig, batch: int = 10_000,
           workers: int = 1) -> dict:
    """Evaluate stat_fn on N paths in batches; means and stderrs per statistic.

    Each batch has its own counter-based stream and the reduction runs in
    batch order, so the result does not depend on the worker count.
    """
    nb = -(-N // batch)

    def one(b):
        rng = rng_cfg.generator(b)
        size = min(batch, N - b * batch)
        out = stat_fn(sample_paths(m, size, rng))
        return size, {k: (float(np.sum(v)), float(np.sum(np.square(v)))) for k, v in out.items()}

    with ThreadPoolExecutor(max(1, workers)) as ex:
        parts = list(ex.map(one, range(nb)))
    total = sum(p[0] for p in parts)
    res = {}
    for key in parts[0][1]:
        s1 = math.fsum(p[1][key][0] for p in parts)
        s2 = math.fsum(p[1][key][1] for p in parts)
        mean = s1 / total
        var = max(s2 / total - mean * mean, 0.0) * total / max(total - 1, 1)
        res[key] = MCEstimate(mean, math.sqrt(var / total), total)
    return res


def moment_stats(lmax: int = 6, exp_pairs=((0.25, 1), (0.25, 2), (1.0, 1), (1.0, 2)),
                 rule: str = "trapezoid") -> StatFn:
    """All moment statistics of one path batch in a single pass."""
    def fn(paths):
        m = paths.shape[1] - 1
        d0, d1, energy = endpoint_slopes(paths, rule)
        out = {"I": energy, "x1": paths[:, -1], "x1_sq": paths[:, -1] ** 2}
        for l in range(1, lmax + 1):
            a, b = d0 ** l, d1 ** l
            out[f"M{l}_side0"] = a
            out[f"M{l}_side1"] = b
            out[f"M{l}_diff"] = b - a
        for s, l in exp_pairs:
            out[f"exp_s{s}_l{l}"] = np.exp(-l * paths[:, int(round(s * m))])
        return out
    return fn


def increment_table_stats(times=((0.0, 0.25), (0.25, 0.75), (0.5, 1.0), (0.0, 1.0)),
                          orders=(1, 2, 4)) -> StatFn:
    """Increment moments of x and of its time reversal Tx."""
    def fn(paths):
        m = paths.shape[1] - 1
        rev = time_reverse(paths)
        out = {}
        for a, b in times:
            i, j = int(round(a * m)), int(round(b * m))
            for k in orders:
                u = (paths[:, j] - paths[:, i]) ** k
                w = (rev[:, j] - rev[:, i]) ** k
                out[f"inc[{a},{b}]^{k}"] = u
                out[f"rev_inc[{a},{b}]^{k}"] = w
                out[f"diff_inc[{a},{b}]^{k}"] = w - u
        return out
    return fn


def moment_Ml(l: int, side: int, N: int = 100_000, m: int = 1024, rng_cfg=RngConfig(),
              workers: int = 1) -> MCEstimate:
    res = run_mc(moment_stats(lmax=l, exp_pairs=()), N, m, rng_cfg, workers=workers)
    return res[f"M{l}_side{side}"]


def exp_moment(s: float, l: float, N: int = 1_000_000, m: int = 1024, rng_cfg=RngConfig(),
               workers: int = 1) -> MCEstimate:
    if l == 0:
        return MCEstimate(1.0, 0.0, N)
    res = run_mc(moment_stats(lmax=1, exp_pairs=((s, l),)), N, m, rng_cfg, workers=workers)
    return res[f"exp_s{s}_l{l}"]


def I_energy(N: int = 100_000, m: int = 1024, rng_cfg=RngConfig(), workers: int = 1) -> MCEstimate:
    return run_mc(moment_stats(lmax=1, exp_pairs=()), N, m, rng_cfg, workers=workers)["I"]


def c4_from(M1: float, M2: float, I: float) -> float:
    return 1.0 + M1 + M2 + I


# ---------------------------------------------------------------- Hoelder diagnostics

def dyadic_lag_quotients(paths, delta: float, m_levels=(2 ** 8, 2 ** 9, 2 ** 10, 2 ** 11, 2 ** 12)):
    """sup over dyadic lags of |x(t+h) - x(t)| / h^delta, on each coarser subgrid.

    Only lags 2^j grid steps are scanned, which keeps each level O(m log m);
    for Brownian paths the supremum sits at the shortest lags anyway.
    """
    paths = np.asarray(paths, dtype=float)
    M = paths.shape[-1] - 1
    out = np.empty((paths.shape[0], len(m_levels)))
    for c, m in enumerate(m_levels):
        sub = paths[:, :: M // m]
        best = np.zeros(paths.shape[0])
        lag = 1
        while lag <= m:
            h = lag / m
            q = np.max(np.abs(sub[:, lag:] - sub[:, :-lag]), axis=1) / h ** delta
            best = np.maximum(best, q)
            lag *= 2
        out[:, c] = best
    return out


@dataclass
class HolderSupportReport:
    delta: float
    levels: tuple
    median_quotients: list
    bounded_fraction: float
    growth_factors: list


def holder_support_check(delta: float, N: int = 1000, rng_cfg=RngConfig(stream=7),
                         levels=(2 ** 8, 2 ** 9, 2 ** 10, 2 ** 11, 2 ** 12),
                         bounded_ratio: float = 1.25) -> HolderSupportReport:
    """Refinement sweep of grid Hoelder quotients; a path counts as bounded when
    the finest-level quotient stays within ``bounded_ratio`` of the coarsest."""
    rng = rng_cfg.generator(0)
    paths = sample_paths(max(levels), N, rng)
    if delta == 0:
        q = np.max(paths, axis=1) - np.min(paths, axis=1)
        return HolderSupportReport(0.0, tuple(levels), [float(np.median(q))] * len(levels), 1.0,
                                   [1.0] * (len(levels) - 1))
    q = dyadic_lag_quotients(paths, delta, levels)
    med = np.median(q, axis=0)
    bounded = np.mean(q[:, -1] <= bounded_ratio * q[:, 0])
    return HolderSupportReport(delta, tuple(levels), med.tolist(), float(bounded),
                               (med[1:] / med[:-1]).tolist())


# ---------------------------------------------------------------- dumps

def dump_paths(path, paths, m: int, seed: int):
    path = Path(path)
    np.asarray(paths, dtype="<f8").tofile(path)
    meta = {"m": m, "seed": seed, "count": int(np.shape(paths)[0]), "dtype": "<f8"}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, sort_keys=True))


def load_paths(path):
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    arr = np.fromfile(path, dtype="<f8").reshape(meta["count"], meta["m"] + 1)
    return arr, meta


def estimates_json(res: dict) -> str:
    return json.dumps({k: asdict(v) for k, v in sorted(res.items())}, sort_keys=True)
