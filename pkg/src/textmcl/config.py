"""Flat key = value configuration files.

Keys mirror the algorithm parameter symbols (sigma_obs, r_max, rho, d_xy,
d_theta, tau, ...). Precedence is defaults < config file < command-line
flags; unknown keys are rejected rather than silently ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .evaluate import FilterParams
from .strategies import SeedLocation, StrategyConfig


@dataclass(frozen=True)
class Config:
    # filter
    particles: int = 300
    sigma_odom: tuple[float, float, float] = (0.02, 0.02, 0.02)
    sigma_obs: float = 2.0
    r_max: float = 15.0
    d_xy: float = 0.05
    d_theta: float = 0.05
    stride: int = 1
    # text map
    tau: float = 0.0
    cell_size: float = 0.25
    # strategies
    strategy: str = "none"
    rho: float = 0.5
    sigma_inject: float = 0.05
    sm1_w_in: float = 1.0
    sm1_w_out: float = 0.1
    sm2_sigma: float = 2.0
    text_validity: float = 1.0
    # misc
    seed: int = 0

    def __post_init__(self):
        if any(s < 0 for s in self.sigma_odom) or self.sigma_obs < 0:
            raise ValueError("noise parameters must be non-negative")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must be in [0, 1)")
        if self.particles < 1:
            raise ValueError("particles must be >= 1")

    def filter_params(self) -> FilterParams:
        return FilterParams(
            n_particles=self.particles,
            sigma_odom=self.sigma_odom,
            sigma_obs=self.sigma_obs,
            r_max=self.r_max,
            d_xy=self.d_xy,
            d_theta=self.d_theta,
            stride=self.stride,
        )

    def strategy_config(self, seeds: dict[str, SeedLocation] | None = None) -> StrategyConfig:
        return StrategyConfig(
            mode=self.strategy,
            rho=self.rho,
            sigma_inject=self.sigma_inject,
            sm1_w_in=self.sm1_w_in,
            sm1_w_out=self.sm1_w_out,
            sm2_sigma=self.sm2_sigma,
            text_validity=self.text_validity,
            seeds=seeds or {},
        )


_INT_KEYS = {"particles", "stride", "seed"}
_STR_KEYS = {"strategy"}
_TUPLE_KEYS = {"sigma_odom"}


def parse_value(key: str, raw: str):
    if key in _STR_KEYS:
        return raw.strip()
    if key in _INT_KEYS:
        return int(raw)
    if key in _TUPLE_KEYS:
        parts = [float(v) for v in raw.split()]
        if len(parts) != 3:
            raise ValueError(f"{key} takes exactly 3 values")
        return tuple(parts)
    return float(raw)


def load_config(path, base: Config | None = None) -> Config:
    """Read a config file over the defaults (or over ``base``)."""
    cfg = base or Config()
    known = {f.name for f in fields(Config)}
    overrides = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                overrides[key] = parse_value(key, raw)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return replace(cfg, **overrides)
