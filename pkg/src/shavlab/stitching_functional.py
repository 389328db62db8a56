"""Affine distortion, the Q_n stitching and Monte Carlo estimates of L_{delta,n}."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .holder_analysis import DEFAULT_DELTA, BallTooSmall, GroupBall, SampledDiffeo, p_delta, pi_delta
from .partition_measures import ChainConfig, MCEstimate, sample_un
from .schwarzian_stats import SmoothTestMap
from .wiener_engine import RngConfig, map_B, sample_paths


@dataclass
class DistortedPiece:
    """(phi; [x, x+j], [y, y+k]) : t -> y + k phi((t - x) / j)."""

    phi: SampledDiffeo
    x: float
    j: float
    y: float
    k: float
    slope: float = None    # k / j, kept separately when the lengths underflow

    def __post_init__(self):
        if self.slope is None:
            self.slope = self.k / self.j

    def __call__(self, t):
        s = (np.asarray(t, dtype=float) - self.x) / self.j
        return self.y + self.k * np.interp(s, self.phi.t, self.phi.values)

    def deriv(self, t):
        s = (np.asarray(t, dtype=float) - self.x) / self.j
        return self.slope * np.interp(s, self.phi.t, self.phi.derivs)

    @property
    def left_slope(self) -> float:
        return self.slope * float(self.phi.derivs[0])

    @property
    def right_slope(self) -> float:
        return self.slope * float(self.phi.derivs[-1])

    def nodes(self):
        """Grid nodes of phi mapped into J, with values and derivatives."""
        return (self.x + self.j * self.phi.t, self.y + self.k * self.phi.values,
                self.slope * self.phi.derivs)


@dataclass
class StitchedDiffeo:
    x: np.ndarray          # domain knots including 0 and 1
    y: np.ndarray          # range knots including 0 and 1
    pieces: list
    _sampled: SampledDiffeo = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.pieces)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.x, t, side="right") - 1, 0, self.n - 1)
        out = np.empty_like(t)
        for k in np.unique(i):
            sel = i == k
            out[sel] = self.pieces[k](t[sel])
        return out

    def knot_mismatch(self) -> float:
        """max relative gap between left and right derivatives at interior knots."""
        worst = 0.0
        for a, b in zip(self.pieces[:-1], self.pieces[1:]):
            worst = max(worst, abs(a.right_slope - b.left_slope) / b.left_slope)
        return worst

    def sampled(self) -> SampledDiffeo:
        """All piece nodes concatenated (shared knots kept once)."""
        if self._sampled is None:
            ts, vs, ds = [], [], []
            for i, p in enumerate(self.pieces):
                t, v, d = p.nodes()
                cut = None if i == self.n - 1 else -1
                ts.append(t[:cut])
                vs.append(v[:cut])
                ds.append(d[:cut])
            self._sampled = SampledDiffeo(np.concatenate(ts), np.concatenate(vs), np.concatenate(ds))
        return self._sampled


def stitch(y, phis: Sequence[SampledDiffeo], x1: float = 1.0) -> StitchedDiffeo:
    """Q_n(y, phi): propagate derivative matching from an arbitrary first length, then rescale."""
    y = np.concatenate([[0.0], np.asarray(y, dtype=float).ravel(), [1.0]])
    k = np.diff(y)
    if np.any(k <= 0):
        raise ValueError("need increasing y")
    return stitch_log(np.log(k), phis, x1)


def stitch_log(log_k, phis: Sequence[SampledDiffeo], x1: float = 1.0) -> StitchedDiffeo:
    """stitch with the range partition given by log lengths (safe when lengths underflow)."""
    log_k = np.asarray(log_k, dtype=float)
    n = log_k.size
    if len(phis) != n:
        raise ValueError(f"need {n} pieces, got {len(phis)}")
    d0 = np.array([p.derivs[0] for p in phis], dtype=float)
    d1 = np.array([p.derivs[-1] for p in phis], dtype=float)
    if np.any(d0 <= 0) or np.any(d1 <= 0):
        raise ValueError("need positive endpoint derivatives")
    log_k = log_k - (log_k.max() + math.log(np.sum(np.exp(log_k - log_k.max()))))
    logj = np.empty(n)
    logj[0] = math.log(x1)
    for i in range(n - 1):
        # (k_i / j_i) phi_i'(1) = (k_{i+1} / j_{i+1}) phi_{i+1}'(0)
        logj[i + 1] = logj[i] + log_k[i + 1] + math.log(d0[i + 1]) - log_k[i] - math.log(d1[i])
    logj -= logj.max() + math.log(np.sum(np.exp(logj - logj.max())))
    j, k = np.exp(logj), np.exp(log_k)
    x = np.concatenate([[0.0], np.cumsum(j)])
    y = np.concatenate([[0.0], np.cumsum(k)])
    x[-1] = y[-1] = 1.0
    pieces = [DistortedPiece(phis[i], x[i], j[i], y[i], k[i], math.exp(log_k[i] - logj[i]))
              for i in range(n)]
    return StitchedDiffeo(x, y, pieces)


# ---------------------------------------------------------------- functionals

Functional = Callable[[SampledDiffeo], float]


def sup_clamp(scale: float = 10.0) -> Functional:
    """min(1, scale * ||f - id||_inf) on the nodes of f."""
    def F(f: SampledDiffeo) -> float:
        return min(1.0, scale * float(np.max(np.abs(f.values - f.t))))
    return F


def value_clamp(t0: float = 0.5) -> Functional:
    def F(f: SampledDiffeo) -> float:
        return float(np.clip(np.interp(t0, f.t, f.values), 0.0, 1.0))
    return F


def constant(c: float) -> Functional:
    return lambda f: float(c)


def smooth_inverse(g: SmoothTestMap, s, iters: int = 60):
    """g^{-1}(s) by safeguarded Newton on [0, 1]."""
    s = np.asarray(s, dtype=float)
    lo, hi = np.zeros_like(s), np.ones_like(s)
    t = s.copy()
    for _ in range(iters):
        r = g.g(t) - s
        lo = np.where(r < 0, t, lo)
        hi = np.where(r > 0, t, hi)
        step = t - r / g.d1(t)
        bad = (step <= lo) | (step >= hi)
        t_new = np.where(bad, 0.5 * (lo + hi), step)
        if np.max(np.abs(t_new - t)) < 1e-16:
            t = t_new
            break
        t = t_new
    return t


def pullback(F: Functional, g: SmoothTestMap) -> Functional:
    """F_g(f) = F(g^{-1} o f)."""
    def Fg(f: SampledDiffeo) -> float:
        v = smooth_inverse(g, f.values)
        return F(SampledDiffeo(f.t, v, f.derivs / g.d1(v)))
    return Fg


# ---------------------------------------------------------------- L_{delta,n}

@dataclass
class StitchSample:
    """Partitions and path tuples shared by paired estimates."""

    n: int
    log_k: np.ndarray         # (N, n) log lengths of the range partition
    paths: np.ndarray         # (N, n, m+1)

    def __len__(self):
        return self.log_k.shape[0]

    def stitched(self, i: int) -> StitchedDiffeo:
        return stitch_log(self.log_k[i], [map_B(p) for p in self.paths[i]])


def draw_sample(n: int, N: int, m: int = 256, seed: int = 0, chain: ChainConfig | None = None,
                workers: int = 1) -> StitchSample:
    """y ~ u_n by the t-chain (thinned evenly to N draws) and n iid Wiener paths per draw."""
    if n < 2:
        raise ValueError("n >= 2")
    cfg = chain or ChainConfig(seed=seed, workers=workers)
    res = sample_un(n, cfg)
    parts = res.log_lengths().reshape(-1, n)
    idx = np.linspace(0, parts.shape[0] - 1, N).round().astype(int)
    rng = RngConfig(seed=seed, stream=1000 + n).generator(0)
    paths = sample_paths(m, N * n, rng).reshape(N, n, m + 1)
    return StitchSample(n, parts[idx], paths)


def L_delta_n(Fs: dict, sample: StitchSample, bounds: dict | None = None) -> dict:
    """Plain averages of each named functional over the stitched sample (common draws)."""
    vals = {name: np.empty(len(sample)) for name in Fs}
    for i in range(len(sample)):
        f = sample.stitched(i).sampled()
        for name, F in Fs.items():
            vals[name][i] = F(f)
    out = {}
    for name, v in vals.items():
        if bounds and name in bounds and np.max(np.abs(v)) > bounds[name]:
            raise ValueError(f"functional {name} exceeded its certified bound")
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        out[name] = MCEstimate(float(np.mean(v)), se, int(v.size))
    out["_values"] = vals
    return out


@dataclass
class S3Row:
    n: int
    estimate_F: float
    estimate_Fg: float
    paired_diff: float
    stderr: float


def check_S3(F: Functional, g: SmoothTestMap, ns=(2, 4, 8), N: int = 4000, m: int = 256,
             seed: int = 0, workers: int = 1, chain: Callable[[int], ChainConfig] | None = None) -> list:
    """Paired estimates of L(F) and L(F_g); F and F_g see the same partitions and paths."""
    rows = []
    Fg = pullback(F, g)
    for n in ns:
        s = draw_sample(n, N, m, seed, chain(n) if chain else None, workers)
        r = L_delta_n({"F": F, "Fg": Fg}, s)
        d = r["_values"]["Fg"] - r["_values"]["F"]
        rows.append(S3Row(n, r["F"].estimate, r["Fg"].estimate, float(abs(d.mean())),
                          float(d.std(ddof=1) / math.sqrt(d.size))))
    return rows


def s3_decreasing(rows, sigmas: float = 2.0) -> bool:
    """Each paired difference below the previous one by more than sigmas combined stderrs."""
    return all(b.paired_diff < a.paired_diff - sigmas * math.hypot(a.stderr, b.stderr)
               for a, b in zip(rows[:-1], rows[1:]))


def mean_on_group(Fs: dict, sample: StitchSample, ball: GroupBall, delta: float = DEFAULT_DELTA,
                  skip_boundary: bool = False) -> dict:
    """Average of pi_delta F over stitched draws (finite-n surrogate for the mean on G).

    The p_delta table over the ball is built once per draw and shared by all
    functionals in Fs.  BallTooSmall propagates from pi_delta unless
    skip_boundary is set; then such draws are dropped and counted under "_skipped".
    """
    vals = {name: [] for name in Fs}
    skipped = 0
    for i in range(len(sample)):
        f = sample.stitched(i).sampled()
        table = {h: p_delta(ball.pull(h, f), delta) for h in ball.elements}
        try:
            row = {name: pi_delta(F, f, ball, delta, table=table).value for name, F in Fs.items()}
        except BallTooSmall:
            if not skip_boundary:
                raise
            skipped += 1
            continue
        for name, v in row.items():
            vals[name].append(v)
    out = {}
    for name, v in vals.items():
        v = np.array(v)
        if v.size == 0:
            raise BallTooSmall("every draw has active elements on the ball boundary")
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        out[name] = MCEstimate(float(v.mean()), se, int(v.size))
    out["_skipped"] = skipped
    return out


def holder_membership(f: StitchedDiffeo, delta: float = DEFAULT_DELTA) -> float:
    """p_delta of the stitched map on its nodes; finite means membership at grid level."""
    return p_delta(f.sampled(), delta)
