"""Sealed-bid multi-unit auction with externality pricing.

Each station sells ``capacity`` identical sub-channels per round.  A request
names a quantity and a single per-unit bid; requests below the station's
reservation price are discarded.  Remaining requests are expanded into unit
claims and the highest claims win, so partial fills are possible.  A winner
pays its externality: the best total value the others could have realized
without it, minus the value the others actually realized, spread evenly over
its units and never below the reservation price.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .netmodel import BaseStation


@dataclass(frozen=True)
class AuctionRequest:
    """One bidder's sealed request: quantity at a flat per-unit price."""

    bidder_id: int
    quantity: int
    per_unit_bid: float

    def __post_init__(self) -> None:
        if self.quantity < 1:
            raise ValueError("quantity must be at least 1")
        if self.per_unit_bid < 0:
            raise ValueError("per_unit_bid cannot be negative")


@dataclass(frozen=True)
class AuctionOutcome:
    """Allocation, pricing, and the public clearing price for one round."""

    allocations: dict[int, int] = field(default_factory=dict)
    per_unit_payments: dict[int, float] = field(default_factory=dict)
    clearing_price: float = 0.0
    seller_utility_terms: dict[int, float] = field(default_factory=dict)


def reservation_price(bs: BaseStation) -> float:
    """Per-channel energy cost the station refuses to sell below."""
    return bs.power_unit_price * bs.tx_power_watts


def run_vcg(
    requests: list[AuctionRequest], capacity: int, reserve: float
) -> AuctionOutcome:
    """Clear one round at a single station.

    Ties on the per-unit bid are broken toward the lower bidder id.  The
    clearing price reported to everyone is the highest rejected per-unit bid
    among reserve-meeting claims, falling back to the reservation price when
    nothing was rejected; a partially filled bidder's unserved units count as
    rejected claims at its own bid.
    """
    if capacity < 1:
        raise ValueError("capacity must be at least 1")
    if reserve < 0:
        raise ValueError("reserve cannot be negative")
    seen: set[int] = set()
    for req in requests:
        if req.bidder_id in seen:
            raise ValueError(f"duplicate bidder id {req.bidder_id}")
        seen.add(req.bidder_id)

    eligible = [r for r in requests if r.per_unit_bid >= reserve]
    claims: list[tuple[float, int]] = []
    for req in eligible:
        claims.extend((req.per_unit_bid, req.bidder_id) for _ in range(req.quantity))
    claims.sort(key=lambda c: (-c[0], c[1]))

    winning = claims[:capacity]
    allocations: dict[int, int] = {}
    for _, bidder_id in winning:
        allocations[bidder_id] = allocations.get(bidder_id, 0) + 1

    if len(claims) > capacity:
        clearing_price = claims[capacity][0]
    else:
        clearing_price = reserve

    winning_value = sum(bid for bid, _ in winning)
    bids_by_id = {r.bidder_id: r.per_unit_bid for r in eligible}

    per_unit_payments: dict[int, float] = {}
    for bidder_id, won in allocations.items():
        others = [bid for bid, owner in claims if owner != bidder_id]
        value_without = sum(others[:capacity])
        others_value_with = winning_value - won * bids_by_id[bidder_id]
        externality = value_without - others_value_with
        per_unit_payments[bidder_id] = max(reserve, externality / won)

    outcome = AuctionOutcome(
        allocations=allocations,
        per_unit_payments=per_unit_payments,
        clearing_price=clearing_price,
    )
    outcome.seller_utility_terms.update(seller_utility(outcome, reserve))
    return outcome


def seller_utility(outcome: AuctionOutcome, reserve: float) -> dict[int, float]:
    """Station margin per winner: units sold times payment above energy cost."""
    return {
        bidder_id: won * (outcome.per_unit_payments[bidder_id] - reserve)
        for bidder_id, won in outcome.allocations.items()
    }
