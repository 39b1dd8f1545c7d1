"""Request and result types for the pricing service, plus their JSON forms."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from mcprice.pricing import InvalidOptionError, OptionSpec

MAX_OPTIONS = 10_000
MAX_PATHS = 2**32 - 1
SEED_MASK = 2**64 - 1

OK = "OK"
INVALID_OPTION = "InvalidOption"
LANE_ERROR = "LaneError"
BACKEND_ERROR = "BackendError"


class RequestError(ValueError):
    """Malformed request; ``field`` names the offending parameter."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class PricingRequest:
    options: tuple[OptionSpec, ...]
    paths: int
    seed_base: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "options", tuple(self.options))
        if not 1 <= len(self.options) <= MAX_OPTIONS:
            raise RequestError("options", f"expected 1..{MAX_OPTIONS} options, got {len(self.options)}")
        if isinstance(self.paths, bool) or not isinstance(self.paths, int) or not 1 <= self.paths <= MAX_PATHS:
            raise RequestError("paths", f"expected an integer in [1, {MAX_PATHS}], got {self.paths!r}")
        if isinstance(self.seed_base, bool) or not isinstance(self.seed_base, int) or not 0 <= self.seed_base <= SEED_MASK:
            raise RequestError("seed_base", f"expected a 64-bit unsigned integer, got {self.seed_base!r}")

    def seed_for(self, index: int) -> int:
        return (self.seed_base + index) & SEED_MASK


@dataclass(frozen=True)
class SubRequest:
    """A contiguous slice of a request; ``offset`` is the global index of its first option."""

    offset: int
    options: tuple[OptionSpec, ...]
    seeds: tuple[int, ...]
    paths: int

    def __len__(self) -> int:
        return len(self.options)


@dataclass(frozen=True)
class OptionResult:
    price: float
    std_error: float
    status: str = OK

    def to_json(self) -> dict:
        return {"price": self.price, "std_error": self.std_error, "status": self.status}


@dataclass
class PriceResult:
    results: list[OptionResult]
    processing_s: float
    e2e_s: float
    backend: str = ""
    cold: bool = False
    sub_batches: int = 0
    processing_max_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "results": [r.to_json() for r in self.results],
            "timing": {
                "processing_s": self.processing_s,
                "e2e_s": self.e2e_s,
                "processing_max_s": self.processing_max_s,
                "cold": self.cold,
                "sub_batches": self.sub_batches,
            },
            "backend": self.backend,
        }


def _number(src: Mapping[str, Any], key: str, where: str, default: Any = None) -> float:
    if key not in src:
        if default is not None:
            return default
        raise RequestError(where, "missing")
    value = src[key]
    if isinstance(value, bool):
        raise RequestError(where, f"not a number: {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise RequestError(where, f"not a number: {value!r}") from None


def _integer(src: Mapping[str, Any], key: str, default: Optional[int] = None) -> int:
    if key not in src:
        if default is not None:
            return default
        raise RequestError(key, "missing")
    value = src[key]
    if isinstance(value, bool):
        raise RequestError(key, f"not an integer: {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise RequestError(key, f"not an integer: {value!r}")
        return int(value)
    try:
        return int(value)
    except (TypeError, ValueError):
        raise RequestError(key, f"not an integer: {value!r}") from None


def option_from_mapping(src: Mapping[str, Any], where: str = "") -> OptionSpec:
    """Build an ``OptionSpec`` from wire names (``vol`` for volatility)."""
    prefix = f"{where}." if where else ""
    vol_key = "vol" if "vol" in src else "volatility"
    try:
        return OptionSpec(
            spot=_number(src, "spot", prefix + "spot"),
            strike=_number(src, "strike", prefix + "strike"),
            rate=_number(src, "rate", prefix + "rate"),
            volatility=_number(src, vol_key, prefix + "vol"),
            expiry=_number(src, "expiry", prefix + "expiry"),
            kind=src.get("kind", "call"),
        )
    except InvalidOptionError as exc:
        name = "vol" if exc.field == "volatility" else exc.field
        raise RequestError(prefix + name, str(exc).split(": ", 1)[-1]) from None


def request_from_json(body: Any) -> PricingRequest:
    if not isinstance(body, dict):
        raise RequestError("body", "expected a JSON object")
    options = body.get("options")
    if not isinstance(options, list):
        raise RequestError("options", "expected a list")
    specs = []
    for i, o in enumerate(options):
        if not isinstance(o, dict):
            raise RequestError(f"options[{i}]", "expected an object")
        specs.append(option_from_mapping(o, f"options[{i}]"))
    return PricingRequest(tuple(specs), _integer(body, "paths"), _integer(body, "seed_base", 0))


def request_from_query(params: Mapping[str, str]) -> PricingRequest:
    return PricingRequest((option_from_mapping(params),), _integer(params, "paths"), _integer(params, "seed", 0))


def request_to_json(request: PricingRequest, backend: Optional[str] = None) -> dict:
    body = {
        "options": [
            {"spot": o.spot, "strike": o.strike, "rate": o.rate, "vol": o.volatility,
             "expiry": o.expiry, "kind": o.kind.value}
            for o in request.options
        ],
        "paths": request.paths,
        "seed_base": request.seed_base,
    }
    if backend is not None:
        body["backend"] = backend
    return body
