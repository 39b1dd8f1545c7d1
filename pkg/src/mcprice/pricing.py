"""European option pricing: Monte-Carlo under GBM and the Black-Scholes closed form."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from mcprice import rng

# Paths are simulated and reduced in fixed-size blocks of the counter stream.
CHUNK_PATHS = 1 << 16


class InvalidOptionError(ValueError):
    """An option or simulation parameter failed validation."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class OptionKind(enum.Enum):
    CALL = "call"
    PUT = "put"

    @classmethod
    def parse(cls, value: "str | OptionKind") -> "OptionKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidOptionError("kind", f"expected 'call' or 'put', got {value!r}") from None


@dataclass(frozen=True)
class OptionSpec:
    spot: float
    strike: float
    rate: float
    volatility: float
    expiry: float
    kind: OptionKind = OptionKind.CALL

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", OptionKind.parse(self.kind))
        for name in ("spot", "strike", "rate", "volatility", "expiry"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise InvalidOptionError(name, f"not a number: {value!r}") from None
            if not math.isfinite(value):
                raise InvalidOptionError(name, f"must be finite, got {value}")
            object.__setattr__(self, name, value)
        for name in ("spot", "strike", "expiry"):
            if getattr(self, name) <= 0.0:
                raise InvalidOptionError(name, f"must be > 0, got {getattr(self, name)}")
        if self.volatility < 0.0:
            raise InvalidOptionError("volatility", f"must be >= 0, got {self.volatility}")

    @property
    def discount(self) -> float:
        return math.exp(-self.rate * self.expiry)

    @property
    def forward(self) -> float:
        return self.spot * math.exp(self.rate * self.expiry)


@dataclass(frozen=True)
class SimParams:
    paths: int
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.paths, bool) or not isinstance(self.paths, (int, np.integer)):
            raise InvalidOptionError("paths", f"must be an integer, got {self.paths!r}")
        if self.paths < 1:
            raise InvalidOptionError("paths", f"must be >= 1, got {self.paths}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise InvalidOptionError("seed", f"must be an integer, got {self.seed!r}")
        if not 0 <= self.seed < 1 << 64:
            raise InvalidOptionError("seed", f"must fit in 64 unsigned bits, got {self.seed}")
        object.__setattr__(self, "paths", int(self.paths))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class PriceEstimate:
    price: float
    std_error: float
    paths_used: int


def _terminal_chunks(spec: OptionSpec, sim: SimParams) -> Iterator[np.ndarray]:
    drift = (spec.rate - 0.5 * spec.volatility**2) * spec.expiry
    diffusion = spec.volatility * math.sqrt(spec.expiry)
    for start in range(0, sim.paths, CHUNK_PATHS):
        count = min(CHUNK_PATHS, sim.paths - start)
        z = rng.normals(sim.seed, start, count)
        yield spec.spot * np.exp(drift + diffusion * z)


def simulate_terminal(spec: OptionSpec, sim: SimParams) -> np.ndarray:
    """Terminal prices ``S_T`` sampled exactly from the GBM log-normal law, one per path."""
    return np.concatenate(list(_terminal_chunks(spec, sim)))


def _payoff(spec: OptionSpec, terminal: np.ndarray) -> np.ndarray:
    if spec.kind is OptionKind.CALL:
        return np.maximum(terminal - spec.strike, 0.0)
    return np.maximum(spec.strike - terminal, 0.0)


def _block_moments(x: np.ndarray) -> tuple[float, float]:
    first = x[0]
    if np.all(x == first):
        return float(first), 0.0
    mean = float(x.mean())
    dev = x - mean
    return mean, float(np.dot(dev, dev))


def price_mc(spec: OptionSpec, sim: SimParams) -> PriceEstimate:
    """Discounted mean payoff over ``sim.paths`` terminal samples.

    Mean and variance are accumulated in one pass over fixed blocks of the
    random stream; blocks are combined in stream order with the pairwise
    (Chan et al.) update, so the result does not depend on how the work was
    scheduled.
    """
    n = 0
    mean = 0.0
    m2 = 0.0
    for terminal in _terminal_chunks(spec, sim):
        b_mean, b_m2 = _block_moments(_payoff(spec, terminal))
        b_n = terminal.size
        total = n + b_n
        delta = b_mean - mean
        mean += delta * (b_n / total)
        m2 += b_m2 + delta * delta * (n * b_n / total)
        n = total
    disc = spec.discount
    if n > 1 and m2 > 0.0:
        std_error = disc * math.sqrt(m2 / (n - 1)) / math.sqrt(n)
    else:
        std_error = 0.0
    return PriceEstimate(price=disc * mean, std_error=std_error, paths_used=n)


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def price_bs(spec: OptionSpec) -> float:
    """Black-Scholes value; zero volatility collapses to the discounted intrinsic value."""
    disc_strike = spec.strike * spec.discount
    if spec.volatility == 0.0:
        if spec.kind is OptionKind.CALL:
            return max(spec.spot - disc_strike, 0.0)
        return max(disc_strike - spec.spot, 0.0)
    vol_sqrt_t = spec.volatility * math.sqrt(spec.expiry)
    d1 = (math.log(spec.spot / spec.strike)
          + (spec.rate + 0.5 * spec.volatility**2) * spec.expiry) / vol_sqrt_t
    d2 = d1 - vol_sqrt_t
    if spec.kind is OptionKind.CALL:
        return spec.spot * norm_cdf(d1) - disc_strike * norm_cdf(d2)
    return disc_strike * norm_cdf(-d2) - spec.spot * norm_cdf(-d1)
