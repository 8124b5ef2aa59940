"""Independent reference implementations used to cross-check the package.

Everything in here trades speed for obviousness: the auction oracle
enumerates every feasible allocation outright, and the win-probability
oracle simulates opponent draws instead of summing binomial terms.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Sequence

import numpy as np

from hetmarket.auction import AuctionRequest


@lru_cache(maxsize=None)
def _allocation_table(quantities: tuple[int, ...], capacity: int) -> np.ndarray:
    """All integer allocations w with 0 <= w_i <= q_i and sum(w) <= capacity."""
    axes = [range(min(q, capacity) + 1) for q in quantities]
    rows = [row for row in itertools.product(*axes) if sum(row) <= capacity]
    return np.array(rows, dtype=np.int64)


def bruteforce_welfare(
    requests: Sequence[AuctionRequest], capacity: int, reserve: float
) -> tuple[float, dict[int, float]]:
    """Exhaustive welfare maximisation over reserve-eligible requests.

    Returns the best attainable total bid value and, per bidder, the best
    value attainable with that bidder removed from the market.
    """
    eligible = [r for r in requests if r.per_unit_bid >= reserve]
    absent = {r.bidder_id: 0.0 for r in requests}
    if not eligible:
        return 0.0, absent
    bids = np.array([r.per_unit_bid for r in eligible], dtype=np.float64)
    table = _allocation_table(tuple(r.quantity for r in eligible), capacity)
    values = table @ bids
    best = float(values.max())
    without = dict(absent)
    for column, request in enumerate(eligible):
        mask = table[:, column] == 0
        without[request.bidder_id] = float(values[mask].max())
    for request in requests:
        if request.per_unit_bid < reserve:
            # A bidder priced out by the reserve never affects the others.
            without[request.bidder_id] = best
    return best, without


def bruteforce_payment(
    bidder_id: int,
    won: int,
    bid: float,
    best: float,
    without: dict[int, float],
    reserve: float,
) -> float:
    """Per-unit externality charge with the reserve floor applied."""
    others_alongside = best - won * bid
    harm = without[bidder_id] - others_alongside
    return max(reserve, harm / won)


def simulate_win_probability(
    prices: Sequence[float],
    bid: float,
    competitors: int,
    capacity: int,
    draws: int = 100_000,
    seed: int = 0,
) -> float:
    """Monte Carlo estimate of winning at least one unit.

    Each competitor independently resamples one historical price; the
    bidder is served whenever fewer than `capacity` of those samples
    strictly exceed the bid.
    """
    if competitors <= 0 or capacity > competitors:
        return 1.0
    rng = np.random.default_rng(seed)
    pool = np.asarray(list(prices), dtype=np.float64)
    samples = rng.choice(pool, size=(draws, competitors))
    stronger = (samples > bid).sum(axis=1)
    return float((stronger < capacity).mean())
