"""Run configuration and budget presets for the check suites."""
from __future__ import annotations

import json
import os
import zlib
from dataclasses import asdict, dataclass, field, fields, replace

SUBCOMMANDS = ("group-algebra", "theta-embed", "holder", "special-fn", "partitions",
               "wiener", "schwarzian", "stitch")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Budget:
    """Sample sizes for one budget level."""

    bs_words: int = 1000
    f_pairs: int = 500
    theta_splits: int = 200
    theta_cond_b: int = 50
    theta_grid: int = 501
    ball_radius: int = 4
    sl2_points: int = 200
    sl4_npts: int = 20
    jn_samples: int = 10_000_000
    jn_bracket_nmax: int = 10
    chain_chains: int = 256
    chain_burn: int = 1500
    chain_sweeps: int = 2000
    lemma_ns: tuple = (4, 8, 16)
    wiener_N: int = 1_000_000
    wiener_m: int = 1024
    reversal_N: int = 200_000
    holder_support_N: int = 1000
    sl8_trials: int = 10_000
    sl8_m: int = 256
    sl9_partitions: int = 100
    s3_ns: tuple = (2, 4, 8)
    s3_N: int = 4000
    s3_m: int = 256


BUDGETS = {
    "smoke": Budget(bs_words=100, f_pairs=50, theta_splits=20, theta_cond_b=8, theta_grid=201,
                    ball_radius=3, sl2_points=40, sl4_npts=8, jn_samples=200_000, jn_bracket_nmax=10,
                    chain_chains=32, chain_burn=200, chain_sweeps=200, lemma_ns=(4, 8),
                    wiener_N=20_000, wiener_m=256, reversal_N=20_000, holder_support_N=100,
                    sl8_trials=300, sl8_m=128, sl9_partitions=10, s3_ns=(2, 4), s3_N=100, s3_m=64),
    "standard": Budget(),
    "full": Budget(jn_samples=40_000_000, lemma_ns=(4, 8, 16, 32), wiener_N=4_000_000,
                   reversal_N=1_000_000, sl8_trials=40_000, s3_ns=(2, 4, 8, 16), s3_N=16_000),
}


@dataclass(frozen=True)
class RunConfig:
    subcommand: str = "all"
    seed: int = 42
    workers: int = 1
    out: str = field(default_factory=lambda: os.environ.get("SHAV_LAB_OUT", "shavlab_out"))
    tolerance_scale: float = 1.0
    budget: str = "standard"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS + ("all",):
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.budget not in BUDGETS:
            raise ConfigError(f"unknown budget {self.budget!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.tolerance_scale > 0:
            raise ConfigError("tolerance scale must be positive")

    @property
    def sizes(self) -> Budget:
        """Budget preset with any matching --param overrides applied."""
        base = BUDGETS[self.budget]
        names = {f.name: f for f in fields(Budget)}
        upd = {}
        for k, v in self.params.items():
            if k in names:
                default = getattr(base, k)
                upd[k] = tuple(int(x) for x in v) if isinstance(default, tuple) else type(default)(v)
        return replace(base, **upd)

    def check_seed(self, check_id: str) -> int:
        """Per-check seed, independent of scheduling order."""
        return (self.seed * 1_000_003 + zlib.crc32(check_id.encode())) % (2 ** 32)

    def tol(self, x: float) -> float:
        return x * self.tolerance_scale

    def to_json(self) -> dict:
        """Serialised config; worker count and output dir are left out so reports compare across them."""
        d = asdict(self)
        d.pop("workers")
        d.pop("out")
        return json.loads(json.dumps(d, sort_keys=True, default=list))


def parse_params(items) -> dict:
    """k=v pairs; values are JSON when they parse, plain strings otherwise."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--param expects k=v, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = json.loads(v)
        except json.JSONDecodeError:
            out[k.strip()] = v
    known = {f.name for f in fields(Budget)}
    unknown = sorted(set(out) - known)
    if unknown:
        raise ConfigError(f"unknown parameter(s): {', '.join(unknown)}")
    return out
