from __future__ import annotations

from typing import Iterable, Sequence

from mcprice.gateway.models import OptionResult, PricingRequest, SubRequest


def split(request: PricingRequest, chunk_size: int) -> list[SubRequest]:
    """Cut a request into consecutive sub-batches of at most ``chunk_size`` options.

    Each option keeps the seed of its global index, so prices do not depend on
    how the request was cut.
    """
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    subs = []
    for start in range(0, len(request.options), chunk_size):
        opts = request.options[start:start + chunk_size]
        subs.append(SubRequest(
            offset=start,
            options=opts,
            seeds=tuple(request.seed_for(start + i) for i in range(len(opts))),
            paths=request.paths,
        ))
    return subs


def merge(total: int, parts: Iterable[tuple[SubRequest, Sequence[OptionResult]]]) -> list[OptionResult]:
    """Place each sub-batch's results at its offset; completion order is irrelevant."""
    merged: list = [None] * total
    for sub, results in parts:
        if len(results) != len(sub):
            raise ValueError(f"sub-batch at {sub.offset} returned {len(results)} results for {len(sub)} options")
        for i, r in enumerate(results):
            if merged[sub.offset + i] is not None:
                raise ValueError(f"option {sub.offset + i} merged twice")
            merged[sub.offset + i] = r
    missing = [i for i, r in enumerate(merged) if r is None]
    if missing:
        raise ValueError(f"options without results: {missing[:10]}")
    return merged
