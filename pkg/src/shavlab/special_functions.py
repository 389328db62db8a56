"""The kernel H = K0, the convolution v1, v, and the moment integrals T_n."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

EULER_GAMMA = 0.57721566490153286061
RATIO_LIMIT = 2.0 * math.exp(-EULER_GAMMA) / math.pi


class DomainError(ValueError):
    pass


class BoundViolated(AssertionError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


# ---------------------------------------------------------------- H = K0

def _H_watson(y, mmax=40):
    """-(log(y/2) + gamma) I0(y) + sum (y^2/4)^m / (m!)^2 * harm(m)."""
    y = np.asarray(y, dtype=float)
    q = 0.25 * y * y
    term = np.ones_like(y)
    i0 = np.ones_like(y)
    tail = np.zeros_like(y)
    harm = 0.0
    for m in range(1, mmax + 1):
        term = term * q / (m * m)
        harm += 1.0 / m
        i0 = i0 + term
        tail = tail + term * harm
    return -(np.log(0.5 * y) + EULER_GAMMA) * i0 + tail


def _H_watson_mp(y: float) -> float:
    """Watson series in extended precision; needed once y is large."""
    import mpmath
    with mpmath.workprec(64 + int(3 * y)):
        y = mpmath.mpf(y)
        q = y * y / 4
        term, i0, tail, harm = mpmath.mpf(1), mpmath.mpf(1), mpmath.mpf(0), mpmath.mpf(0)
        m = 0
        while True:
            m += 1
            term = term * q / (m * m)
            harm += mpmath.mpf(1) / m
            i0 += term
            tail += term * harm
            if m > q and term * harm < mpmath.mpf(2) ** (-100) * abs(tail):
                break
        return float(-(mpmath.log(y / 2) + mpmath.euler) * i0 + tail)


def _H_exp_integral(y, h=0.05):
    """Trapezoid rule for int_0^inf exp(-y cosh t) dt (spectrally accurate)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.empty_like(y)
    for j, yy in enumerate(y):
        T = math.acosh(max(745.0 / yy, 1.0)) + h
        t = np.arange(0.0, T + h, h)
        f = np.exp(-yy * np.cosh(t))
        out[j] = h * (f.sum() - 0.5 * f[0])
    return out


_GL40 = np.polynomial.legendre.leggauss(40)


def _H_alternating(y, nterms=80, rounds=40):
    """0.5 H_0 + sum (-1)^n H_n, the sum over half-periods of cos u / sqrt(y^2+u^2).

    The tail is summed with repeated averaging of partial sums.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    gx, gw = _GL40
    out = np.empty_like(y)
    for j, yy in enumerate(y):
        # [0, pi/2] split further for small y where 1/sqrt(y^2+u^2) is sharp
        edges = np.concatenate([[0.0], np.geomspace(min(yy, 1e-3) * 1e-3, np.pi / 2, 30)])
        head = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            u = 0.5 * (b - a) * (gx + 1) + a
            head += 0.5 * (b - a) * np.sum(gw * np.cos(u) / np.sqrt(yy * yy + u * u))
        x = 0.5 * np.pi * gx
        n = np.arange(1, nterms + 1)[:, None]
        hn = 0.5 * np.pi * np.sum(gw * np.cos(x) / np.sqrt(yy * yy + (x + n * np.pi) ** 2), axis=1)
        partial = np.cumsum(((-1.0) ** n[:, 0]) * hn)
        s = partial
        for _ in range(rounds):
            s = 0.5 * (s[1:] + s[:-1])
        out[j] = head + s[-1]
    return out


@dataclass(frozen=True)
class KernelEvaluator:
    method: str = "auto"
    tolerance: float = 1e-12

    def __call__(self, y):
        return H(y, self.method)


def H(y, method: str = "auto"):
    """K0(y) for y > 0."""
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(~(y > 0)):
        raise DomainError("H needs y > 0")
    if method == "auto":
        out = np.empty_like(y)
        small = y < 2.0
        out[small] = _H_watson(y[small])
        if np.any(~small):
            out[~small] = _H_exp_integral(y[~small])
    elif method in ("watson", "watson_series"):
        out = np.array([_H_watson_mp(yy) if yy >= 2.0 else float(_H_watson(yy)) for yy in y])
    elif method == "exp_integral":
        out = _H_exp_integral(y)
    elif method in ("alternating", "alternating_series"):
        out = _H_alternating(y)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(out[0]) if scalar else out


@dataclass
class HBoundReport:
    eps: float
    y_grid_min: float
    upper_ok: bool
    lower_ok: bool
    decay_ok: bool
    worst_decay_ratio: float

    @property
    def ok(self):
        return self.upper_ok and self.lower_ok and self.decay_ok


def verify_H_bounds(npts: int = 2000, ymin: float = 1e-10) -> HBoundReport:
    """Find eps with -log(y/eps) <= H(y) <= -log(y/4) on (0, eps), and check |H| <= sqrt2 pi / y."""
    top = 4.0 - math.pi
    ys = np.geomspace(ymin, top, npts, endpoint=False)
    hy = H(ys)
    upper = hy <= -np.log(ys / 4.0)
    if not np.all(upper):
        j = int(np.argmin(upper))
        raise BoundViolated("H(y) > -log(y/4)", float(ys[j]))
    # lower bound holds at y iff eps <= y e^{H(y)}; keep eps below the running min
    g = ys * np.exp(hy)
    eps = top
    for yy, gg in zip(ys, g):
        if yy >= eps:
            break
        eps = min(eps, gg)
    lower = np.all(hy[ys < eps] >= -np.log(ys[ys < eps] / eps) - 1e-14)
    big = np.geomspace(eps, 1e3, npts)
    ratio = np.abs(H(big)) * big / (math.sqrt(2) * math.pi)
    if not bool(lower):
        raise BoundViolated("lower bound failed", eps)
    if np.max(ratio) > 1:
        raise BoundViolated("|H(y)| > sqrt2 pi / y", float(big[int(np.argmax(ratio))]))
    return HBoundReport(float(eps), ymin, True, True, True, float(np.max(ratio)))


# ---------------------------------------------------------------- v1, v

def v1(tau):
    """int ds / sqrt((1+s^2)(1+(tau-s)^2)), as a complete elliptic integral."""
    tau = np.asarray(tau, dtype=float)
    w = 4.0 + tau * tau
    return 4.0 * special.ellipkm1(4.0 / w) / np.sqrt(w)


def v1_quad(tau):
    """Direct quadrature of the defining integral (oracle)."""
    def g(u):  # s = sinh u
        return 1.0 / math.sqrt(1.0 + (tau - math.sinh(u)) ** 2)
    c = math.asinh(tau)
    return (integrate.quad(g, c - 45, c, limit=200, epsabs=1e-14, epsrel=1e-13)[0]
            + integrate.quad(g, c, c + 45, limit=200, epsabs=1e-14, epsrel=1e-13)[0])


def v1_fourier(tau):
    """(4/pi) int_0^inf K0(w)^2 cos(w tau) dw (oracle)."""
    f = lambda w: special.k0(w) ** 2
    if tau == 0:
        a = integrate.quad(f, 0, 1, limit=200, epsabs=1e-13)[0]
        b = integrate.quad(f, 1, math.inf, limit=200, epsabs=1e-13)[0]
        return 4.0 / math.pi * (a + b)
    a = integrate.quad(f, 0, 1, weight="cos", wvar=tau, limit=400, epsabs=1e-13)[0]
    b = integrate.quad(f, 1, 60, weight="cos", wvar=tau, limit=400, epsabs=1e-13)[0]
    return 4.0 / math.pi * (a + b)


def v1_prime(tau: float) -> float:
    """v1'(tau) by quadrature of the differentiated integrand."""
    tau = float(tau)

    def g(u):
        d = tau - math.sinh(u)
        return d / (1.0 + d * d) ** 1.5
    c = math.asinh(tau)
    pts = sorted({c - 1.0, c, c + 1.0})
    pieces = [(c - 45, pts[0]), *zip(pts[:-1], pts[1:]), (pts[-1], c + 45)]
    total = sum(integrate.quad(g, a, b, limit=200, epsabs=1e-15, epsrel=1e-12)[0]
                for a, b in pieces)
    return -total


def v1_prime_analytic(tau):
    """Derivative of the elliptic closed form (cross-check)."""
    tau = np.asarray(tau, dtype=float)
    w = 4.0 + tau * tau
    m1 = 4.0 / w
    m = 1.0 - m1
    K = special.ellipkm1(m1)
    E = special.ellipe(m)
    dK_dm = (E - m1 * K) / (2.0 * m * m1)
    dm_dtau = 8.0 * tau / (w * w)
    return 4.0 * (dK_dm * dm_dtau / np.sqrt(w) - K * tau / w ** 1.5)


def v(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 1):
        raise DomainError("v needs t >= 1")
    return v1(np.arccosh(t))


def v_of_lengths(log_a, log_b):
    """v((a+b)/(2 sqrt(ab))) from log a, log b; never forms the ratio."""
    return v1(0.5 * np.abs(np.asarray(log_a) - np.asarray(log_b)))


def equality_ratio(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return (a + b) / (2.0 * np.sqrt(a * b))


@dataclass
class SL2Report:
    grid: np.ndarray
    deriv: np.ndarray
    values: np.ndarray
    worst_bound_ratio: float
    limit_ratios: dict

    @property
    def ok(self):
        return self.worst_bound_ratio <= 1.0


def verify_SL2(grid=None) -> SL2Report:
    if grid is None:
        pos = np.geomspace(1e-2, 1e3, 100)
        grid = np.concatenate([-pos[::-1], pos])
    grid = np.asarray(grid, dtype=float)
    if np.any(grid == 0):
        raise DomainError("grid must avoid t = 0")
    d = np.array([v1_prime(t) for t in grid])
    vals = v1(grid)
    if np.any(np.sign(d) != -np.sign(grid)):
        j = int(np.argmax(np.sign(d) != -np.sign(grid)))
        raise BoundViolated("v1' has the wrong sign", float(grid[j]))
    ratio = np.abs(d) * np.abs(grid) / (4.0 * vals)
    if np.max(ratio) > 1.0:
        raise BoundViolated("|v1'| > 4 v1 / |t|", float(grid[int(np.argmax(ratio))]))
    lim = {(r, t): float(v1(t - r) / v1(t)) for r in (-3, -1, 1, 3) for t in (10, 50, 200)}
    return SL2Report(grid, d, vals, float(np.max(ratio)), lim)


# ---------------------------------------------------------------- T_n

def _gl_composite(a, b, panels, order=30):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


_TN_CACHE: dict = {}


def _tn_nodes():
    if "nodes" not in _TN_CACHE:
        # [0,1] via y = e^{-u}, u in [0, 400]
        u, wu = _gl_composite(0.0, 400.0, 400)
        left_y, left_w = np.exp(-u), wu * np.exp(-u)
        # [1, 60]
        right_y, right_w = _gl_composite(1.0, 60.0, 120)
        _TN_CACHE["nodes"] = (np.log(H(left_y)), np.log(left_w),
                              np.log(H(right_y)), np.log(right_w))
    return _TN_CACHE["nodes"]


def log_T_n(n: int) -> float:
    """log of (2^{n+1}/pi) int_0^inf H^{n+1}."""
    if n < 1:
        raise DomainError("T_n needs n >= 1")
    lh_l, lw_l, lh_r, lw_r = _tn_nodes()
    with np.errstate(divide="ignore"):
        terms = np.concatenate([(n + 1) * lh_l + lw_l, (n + 1) * lh_r + lw_r])
    m = np.max(terms)
    return (n + 1) * math.log(2.0) - math.log(math.pi) + m + math.log(np.sum(np.exp(terms - m)))


def T_n(n: int) -> float:
    return math.exp(log_T_n(n))


def T_ratio(n: int) -> float:
    """T_n / (2^{n+1} (n+1)!)."""
    return math.exp(log_T_n(n) - (n + 1) * math.log(2.0) - math.lgamma(n + 2))


def T_table(nmax: int = 20):
    rows = []
    c1, c2 = math.inf, -math.inf
    for n in range(1, nmax + 1):
        r = T_ratio(n)
        c1, c2 = min(c1, r), max(c2, r)
        rows.append({"n": n, "T_n": T_n(n), "ratio": r, "c1": c1, "c2": c2})
    return rows


# ---------------------------------------------------------------- S-L4

@dataclass
class SL4Report:
    eps: float
    r: float
    R: float
    c_star: float
    c3: float
    nodes: int
    worst_ratio: float

    @property
    def ok(self):
        return self.worst_ratio <= 1.0


def find_R(r: float, step: float = 0.5, tmax: float = 1e4) -> float:
    """Smallest scanned R > r with v1(t - r) <= 2 v1(t) for t >= R (checked to tmax)."""
    R = r + step
    while R < tmax:
        ts = np.concatenate([np.linspace(R, R + 50, 2001), np.geomspace(R + 50, tmax, 2000)])
        if np.all(v1(ts - r) <= 2.0 * v1(ts)):
            lo, hi = R - step, R
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                tt = np.linspace(mid, R, 200)
                if mid > r and np.all(v1(tt - r) <= 2.0 * v1(tt)):
                    hi = mid
                else:
                    lo = mid
            return hi
        R += step
    raise BoundViolated("no R found", r)


def check_SL4(eps: float, npts: int = 20) -> SL4Report:
    r = -0.5 * math.log(eps)
    R = find_R(r)
    c_star = max(2.0, math.pi / float(v1(R)))
    c3 = math.pi * c_star ** 2
    a = np.linspace(eps, 1.0, npts, endpoint=False)
    y = np.geomspace(1e-12, 0.5, npts)
    A, Y1, Y2 = np.meshgrid(a, y, y, indexing="ij")
    la, l1, l2 = np.log(A), np.log(Y1), np.log(Y2)
    lhs = v_of_lengths(l1, la) * v_of_lengths(la, l2)
    rhs = c3 * v_of_lengths(l1, l2)
    worst = float(np.max(lhs / rhs))
    return SL4Report(eps, r, R, c_star, c3, int(A.size), worst)
