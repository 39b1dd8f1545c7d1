"""Monte-Carlo option pricing as a split/balanced microservice with a UDP accelerator node."""

from mcprice.pricing import (
    InvalidOptionError,
    OptionKind,
    OptionSpec,
    PriceEstimate,
    SimParams,
    price_bs,
    price_mc,
    simulate_terminal,
)

__version__ = "0.1.0"

__all__ = [
    "InvalidOptionError", "OptionKind", "OptionSpec", "PriceEstimate", "SimParams",
    "price_bs", "price_mc", "simulate_terminal",
]
