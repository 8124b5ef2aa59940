"""Bidding policies built on broadcast clearing prices.

Everything a policy may look at is packed into a ``MarketObservation`` built
from previous rounds only; policies are pure functions of it, which keeps the
simultaneous-move semantics honest and makes decisions replayable.
"""

from __future__ import annotations

import math
from bisect import bisect_right, insort
from dataclasses import dataclass
from typing import Iterable, Sequence

from .netmodel import SBS
from .valuation import UrgencyState, channel_valuation

GRID_SIZE = 11


class NoPriceData(ValueError):
    """Raised when a statistic is requested from an empty price history."""


class EmpiricalPriceModel:
    """Clearing prices heard from one station, kept in broadcast order."""

    __slots__ = ("_history", "_sorted")

    def __init__(self, prices: Iterable[float] = ()):
        self._history: list[float] = [float(p) for p in prices]
        self._sorted: list[float] = sorted(self._history)

    def append(self, price: float) -> None:
        price = float(price)
        self._history.append(price)
        insort(self._sorted, price)

    def __len__(self) -> int:
        return len(self._history)

    @property
    def history(self) -> tuple[float, ...]:
        return tuple(self._history)

    @property
    def last(self) -> float:
        if not self._history:
            raise NoPriceData("no clearing prices observed yet")
        return self._history[-1]

    def cdf(self, x: float) -> float:
        """Fraction of observed prices at or below x (right-continuous step)."""
        if not self._sorted:
            raise NoPriceData("no clearing prices observed yet")
        return bisect_right(self._sorted, x) / len(self._sorted)

    def mean(self) -> float:
        if not self._history:
            raise NoPriceData("no clearing prices observed yet")
        return math.fsum(self._history) / len(self._history)


def empirical_cdf(prices: EmpiricalPriceModel, x: float) -> float:
    return prices.cdf(x)


def expected_payment(prices: EmpiricalPriceModel) -> float:
    return prices.mean()


def win_probability_given_cdf(cdf_at_bid: float, competitors: int, capacity: int) -> float:
    """Chance that fewer than ``capacity`` of ``competitors`` outbid us.

    Competitor bids are modeled as independent draws from the observed price
    distribution; a draw counts against us only when strictly above our bid.
    """
    if not 0.0 <= cdf_at_bid <= 1.0:
        raise ValueError("cdf value must lie in [0, 1]")
    if competitors < 0:
        raise ValueError("competitors cannot be negative")
    if capacity < 1:
        raise ValueError("capacity must be at least 1")
    p_leq = cdf_at_bid
    p_above = 1.0 - cdf_at_bid
    total = 0.0
    for j in range(min(capacity - 1, competitors) + 1):
        total += math.comb(competitors, j) * p_above**j * p_leq ** (competitors - j)
    return min(1.0, total)


def win_probability(
    bid: float, competitors: int, capacity: int, prices: EmpiricalPriceModel
) -> float:
    return win_probability_given_cdf(prices.cdf(bid), competitors, capacity)


def expected_utility(
    bid: float,
    valuation: float,
    prices: EmpiricalPriceModel,
    competitors: int,
    capacity: int,
) -> float:
    """Win probability times the expected surplus over the mean clearing price."""
    prob = win_probability(bid, competitors, capacity, prices)
    return prob * (valuation - prices.mean())


def candidate_bids(
    valuation: float, last_clearing: float, reserve: float, budget_cap: float
) -> list[float]:
    """Small search grid bracketing the valuation and the last clearing price.

    Anchors at both plus nine evenly spaced points between 80% of the smaller
    and 120% of the larger, everything clipped to [reserve, budget_cap] and
    deduplicated.  Empty when the cap cannot even cover the reserve.
    """
    if budget_cap < reserve:
        return []
    lo = max(reserve, 0.8 * min(valuation, last_clearing))
    hi = min(1.2 * max(valuation, last_clearing), budget_cap)
    points = [valuation, last_clearing]
    points.extend(lo + k * (hi - lo) / (GRID_SIZE - 3) for k in range(GRID_SIZE - 2))
    clipped = (min(max(p, reserve), budget_cap) for p in points)
    return sorted(set(clipped))


@dataclass(frozen=True)
class StationView:
    """Everything one user knows about one station before bidding."""

    station_id: int
    tier: str
    capacity: int
    reserve_price: float
    rate_mbps: float
    demand: int
    competitors: int
    price_history: EmpiricalPriceModel


@dataclass(frozen=True)
class MarketObservation:
    """Decision input for one user in one round; built from past rounds only."""

    round_index: int
    rounds_total: int
    budget: float
    entrance_fee: float
    urgency: UrgencyState
    stations: tuple[StationView, ...]

    @property
    def rounds_remaining(self) -> int:
        """Rounds left including the current one."""
        return self.rounds_total - self.round_index + 1


@dataclass(frozen=True)
class BidDecision:
    """Either an abstention or a single (station, price, quantity) request."""

    station_id: int | None
    per_unit_bid: float = 0.0
    quantity: int = 0
    rationale: str = ""
    fallback: bool = False

    @property
    def abstained(self) -> bool:
        return self.station_id is None


def abstain(rationale: str = "", fallback: bool = False) -> BidDecision:
    return BidDecision(station_id=None, rationale=rationale, fallback=fallback)


def effective_prices(view: StationView) -> EmpiricalPriceModel:
    """Observed history, or a one-point prior at the reserve before any data."""
    if len(view.price_history) > 0:
        return view.price_history
    return EmpiricalPriceModel([view.reserve_price])


def per_unit_budget_cap(observation: MarketObservation, view: StationView) -> float:
    """Highest per-unit bid that keeps fee plus worst-case payment affordable."""
    return (observation.budget - observation.entrance_fee) / view.demand


def grid_argmax(
    observation: MarketObservation,
) -> tuple[float, float, StationView] | None:
    """Best (expected utility, bid, station) over every station's bid grid.

    Ties prefer the cheaper bid, then the lower station id.  None when no
    station admits any affordable grid point.
    """
    best: tuple[float, float, StationView] | None = None
    best_key: tuple[float, float, float] | None = None
    for view in sorted(observation.stations, key=lambda v: v.station_id):
        prices = effective_prices(view)
        cap = per_unit_budget_cap(observation, view)
        value = channel_valuation(observation.urgency, view.rate_mbps)
        grid = candidate_bids(value, prices.last, view.reserve_price, cap)
        for bid in grid:
            utility = expected_utility(bid, value, prices, view.competitors, view.capacity)
            key = (utility, -bid, -view.station_id)
            if best_key is None or key > best_key:
                best_key = key
                best = (utility, bid, view)
    return best


def greedy_decide(observation: MarketObservation) -> BidDecision:
    """Bid wherever expected utility is maximal, abstain unless it is positive."""
    best = grid_argmax(observation)
    if best is None:
        return abstain("no affordable station")
    utility, bid, view = best
    if utility <= 0.0:
        return abstain("no positive expected utility")
    return BidDecision(
        station_id=view.station_id,
        per_unit_bid=bid,
        quantity=view.demand,
        rationale=f"expected utility {utility:.4f}",
    )


def myopic_decide(observation: MarketObservation) -> BidDecision:
    """Truthful bid at the fastest station, clamped to budget, never shopping.

    Rate ties go to small cells first, then the lower station id.  The user
    abstains only when a single channel at the chosen station's reserve is
    unaffordable; a clamped bid below the reserve is still submitted.
    """
    if not observation.stations:
        return abstain("no serving station")
    view = min(
        observation.stations,
        key=lambda v: (-v.rate_mbps, v.tier != SBS, v.station_id),
    )
    affordable = observation.budget - observation.entrance_fee
    if affordable < view.reserve_price:
        return abstain("reserve price unaffordable")
    value = channel_valuation(observation.urgency, view.rate_mbps)
    bid = min(value, affordable / view.demand)
    return BidDecision(
        station_id=view.station_id,
        per_unit_bid=bid,
        quantity=view.demand,
        rationale=f"truthful at {value:.4f}",
    )
