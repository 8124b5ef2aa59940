"""Round loop tying the physical layer, valuations, auctions, and policies.

One simulation run draws user positions and service classes from a per-run
seed, then plays a fixed number of rounds.  Every round is sealed-bid and
simultaneous: users decide from broadcast history only, entrance fees are
charged to everyone who bids, each station clears independently, winners pay,
loss streaks update, and every station's clearing price is broadcast to all
users.  Multiple runs fork child seeds from the master seed so a report is a
pure function of its configuration.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .auction import AuctionRequest, reservation_price, run_vcg
from .llm_agent import (
    ChatCompletionClient,
    ForesightPolicy,
    LlmEndpointConfig,
    foresight_decide,
    llm_decide,
)
from .netmodel import (
    MBS,
    SBS,
    BaseStation,
    ChannelModel,
    Topology,
    UserEquipment,
    achievable_rate_bps,
    channel_demand,
)
from .strategy import (
    BidDecision,
    EmpiricalPriceModel,
    MarketObservation,
    StationView,
    abstain,
    greedy_decide,
    myopic_decide,
)
from .valuation import UrgencyState, record_outcome, urgency_factor

MYOPIC = "myopic"
GREEDY = "greedy"
LLM = "llm"
FORESIGHT = "foresight"
STRATEGIES = (LLM, FORESIGHT, GREEDY, MYOPIC)

COMPETITORS_UNIFORM = "uniform"
COMPETITORS_ORACLE = "oracle"


class ConfigurationError(ValueError):
    """One or more configuration problems, each listed in ``problems``."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class TopologyConfig:
    """One macro station at the origin, small cells evenly spaced on a ring."""

    num_small_cells: int = 2
    mbs_power_watts: float = 40.0
    sbs_power_watts: float = 4.0
    channels_per_station: int = 4
    power_unit_price: float = 0.05
    macro_radius_m: float = 500.0
    sbs_ring_radius_m: float = 250.0
    channel: ChannelModel = field(default_factory=ChannelModel)

    def build(self) -> Topology:
        stations = [
            BaseStation(
                id=0,
                tier=MBS,
                position=(0.0, 0.0),
                tx_power_watts=self.mbs_power_watts,
                num_channels=self.channels_per_station,
                power_unit_price=self.power_unit_price,
            )
        ]
        for k in range(self.num_small_cells):
            angle = 2.0 * math.pi * k / self.num_small_cells
            stations.append(
                BaseStation(
                    id=k + 1,
                    tier=SBS,
                    position=(
                        self.sbs_ring_radius_m * math.cos(angle),
                        self.sbs_ring_radius_m * math.sin(angle),
                    ),
                    tx_power_watts=self.sbs_power_watts,
                    num_channels=self.channels_per_station,
                    power_unit_price=self.power_unit_price,
                )
            )
        return Topology(stations=tuple(stations), channel=self.channel)


@dataclass(frozen=True)
class PopulationConfig:
    """How many users, their money, their rate classes, and their policies."""

    num_ues: int = 40
    budget: float = 15.0
    qos_classes_mbps: tuple[float, ...] = (2.0, 4.0, 8.0)
    strategy_counts: dict[str, int] = field(
        default_factory=lambda: {MYOPIC: 40, GREEDY: 0, LLM: 0, FORESIGHT: 0}
    )

    def roster(self) -> list[str]:
        """Strategy per user id, in a fixed canonical order."""
        names: list[str] = []
        for strategy in STRATEGIES:
            names.extend([strategy] * self.strategy_counts.get(strategy, 0))
        return names


@dataclass(frozen=True)
class UrgencyConfig:
    """Per service class valuation factors; scalars broadcast to all classes."""

    base_value_per_mbps: tuple[float, ...] = (0.5,)
    max_value_per_mbps: tuple[float, ...] = (1.0,)
    saturation_losses: tuple[int, ...] = (5,)

    def for_class(self, class_index: int, num_classes: int) -> UrgencyState:
        def pick(values, name):
            if len(values) == 1:
                return values[0]
            if len(values) != num_classes:
                raise ConfigurationError(
                    [f"{name} must have 1 entry or one per service class"]
                )
            return values[class_index]

        return UrgencyState(
            base_value_per_mbps=pick(self.base_value_per_mbps, "base_value_per_mbps"),
            max_value_per_mbps=pick(self.max_value_per_mbps, "max_value_per_mbps"),
            consecutive_losses=0,
            saturation_losses=pick(self.saturation_losses, "saturation_losses"),
        )


@dataclass(frozen=True)
class AuctionConfig:
    entrance_fee: float = 0.1
    competitor_mode: str = COMPETITORS_UNIFORM


@dataclass(frozen=True)
class SimulationConfig:
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    population: PopulationConfig = field(default_factory=PopulationConfig)
    auction: AuctionConfig = field(default_factory=AuctionConfig)
    urgency: UrgencyConfig = field(default_factory=UrgencyConfig)
    endpoint: LlmEndpointConfig = field(default_factory=LlmEndpointConfig)
    foresight: ForesightPolicy = field(default_factory=ForesightPolicy)
    episodes: int = 40
    runs: int = 1
    seed: int = 0
    jobs: int = 1
    offline: bool = True

    def validate(self) -> list[str]:
        problems = []
        if self.episodes < 1:
            problems.append("episodes must be at least 1")
        if self.runs < 1:
            problems.append("runs must be at least 1")
        if self.jobs < 1:
            problems.append("jobs must be at least 1")
        if self.population.num_ues < 1:
            problems.append("num_ues must be at least 1")
        if self.population.budget <= 0:
            problems.append("budget must be positive")
        if not self.population.qos_classes_mbps:
            problems.append("qos_classes_mbps cannot be empty")
        if any(c <= 0 for c in self.population.qos_classes_mbps):
            problems.append("qos_classes_mbps entries must be positive")
        unknown = set(self.population.strategy_counts) - set(STRATEGIES)
        if unknown:
            problems.append(f"unknown strategies: {sorted(unknown)}")
        if any(v < 0 for v in self.population.strategy_counts.values()):
            problems.append("strategy counts cannot be negative")
        total = sum(self.population.strategy_counts.get(s, 0) for s in STRATEGIES)
        if not unknown and total != self.population.num_ues:
            problems.append(
                f"strategy counts sum to {total}, expected num_ues={self.population.num_ues}"
            )
        if self.auction.entrance_fee < 0:
            problems.append("entrance_fee cannot be negative")
        if self.auction.competitor_mode not in (COMPETITORS_UNIFORM, COMPETITORS_ORACLE):
            problems.append(f"unknown competitor_mode {self.auction.competitor_mode!r}")
        if self.topology.num_small_cells < 0:
            problems.append("num_small_cells cannot be negative")
        for name, values in (
            ("base_value_per_mbps", self.urgency.base_value_per_mbps),
            ("max_value_per_mbps", self.urgency.max_value_per_mbps),
            ("saturation_losses", self.urgency.saturation_losses),
        ):
            if len(values) not in (1, len(self.population.qos_classes_mbps)):
                problems.append(f"{name} must have 1 entry or one per service class")
        return problems


@dataclass(frozen=True)
class UeRoundRecord:
    ue_id: int
    strategy: str
    station_id: int | None
    per_unit_bid: float
    quantity: int
    abstained: bool
    fallback: bool
    channels_won: int
    per_unit_payment: float
    fee_paid: float
    gross_utility: float
    budget_after: float
    value_factor: float
    losses_after: int


@dataclass(frozen=True)
class StationRoundRecord:
    station_id: int
    clearing_price: float
    allocations: dict[int, int]
    per_unit_payments: dict[int, float]
    seller_utility_terms: dict[int, float]
    fees_collected: float
    revenue: float


@dataclass(frozen=True)
class RoundLog:
    round_index: int
    ues: tuple[UeRoundRecord, ...]
    stations: tuple[StationRoundRecord, ...]


@dataclass(frozen=True)
class RunResult:
    run_index: int
    seed: int
    roster: dict[int, str]
    rounds: tuple[RoundLog, ...]


@dataclass(frozen=True)
class UeMetrics:
    run_index: int
    seed: int
    ue_id: int
    strategy: str
    episodes: int
    gross_utility: float
    net_utility: float
    channels_won: int
    bids_placed: int
    wins: int
    bid_precision: float | None
    fees_paid: float
    payments_paid: float
    fallbacks: int


@dataclass(frozen=True)
class StrategySummary:
    strategy: str
    num_ue_runs: int
    avg_gross_utility: float
    avg_net_utility: float
    avg_channels_won: float
    avg_bids_placed: float
    avg_bid_precision: float | None
    fallback_rounds: int


@dataclass(frozen=True)
class MetricsReport:
    per_ue: tuple[UeMetrics, ...]
    per_strategy: dict[str, StrategySummary]


@dataclass(frozen=True)
class SimulationReport:
    results: tuple[RunResult, ...]
    metrics: MetricsReport


@dataclass
class _UeRuntime:
    ue: UserEquipment
    strategy: str
    budget: float
    urgency: UrgencyState
    # static per-run market data keyed by station id
    rate_mbps: dict[int, float]
    demand: dict[int, int]


class SimulationRun:
    """Mutable state for one seeded run; drives rounds and collects logs."""

    def __init__(self, config: SimulationConfig, run_index: int, run_seed: int):
        self.config = config
        self.run_index = run_index
        self.seed = run_seed
        self.topology = config.topology.build()
        self.stations = self.topology.stations
        self.reserves = {bs.id: reservation_price(bs) for bs in self.stations}
        self.fee = config.auction.entrance_fee
        self.price_models = {bs.id: EmpiricalPriceModel() for bs in self.stations}
        self.prev_request_counts: dict[int, int] | None = None
        self._client: ChatCompletionClient | None = None
        self.ues = self._build_population(np.random.default_rng(run_seed))

    def _build_population(self, rng: np.random.Generator) -> list[_UeRuntime]:
        pop = self.config.population
        classes = pop.qos_classes_mbps
        roster = pop.roster()
        ues: list[_UeRuntime] = []
        for uid in range(pop.num_ues):
            radius = self.config.topology.macro_radius_m * math.sqrt(rng.random())
            theta = 2.0 * math.pi * rng.random()
            position = (radius * math.cos(theta), radius * math.sin(theta))
            class_index = int(rng.integers(len(classes)))
            ue = UserEquipment(
                id=uid,
                position=position,
                qos_rate_bps=classes[class_index] * 1e6,
                initial_budget=pop.budget,
            )
            rates: dict[int, float] = {}
            demands: dict[int, int] = {}
            for bs in self.stations:
                rate = achievable_rate_bps(bs, ue, self.topology)
                need = channel_demand(ue, rate)
                # stations that cannot cover the QoS rate within their own
                # capacity are not candidates at all
                if need is None or need > bs.num_channels:
                    continue
                rates[bs.id] = rate / 1e6
                demands[bs.id] = need
            ues.append(
                _UeRuntime(
                    ue=ue,
                    strategy=roster[uid],
                    budget=pop.budget,
                    urgency=self.config.urgency.for_class(class_index, len(classes)),
                    rate_mbps=rates,
                    demand=demands,
                )
            )
        return ues

    def _competitors(self, station_id: int) -> int:
        if (
            self.config.auction.competitor_mode == COMPETITORS_ORACLE
            and self.prev_request_counts is not None
        ):
            return max(0, self.prev_request_counts.get(station_id, 0) - 1)
        return max(0, self.config.population.num_ues // len(self.stations) - 1)

    def observation_for(self, runtime: _UeRuntime, round_index: int) -> MarketObservation:
        views = tuple(
            StationView(
                station_id=bs.id,
                tier=bs.tier,
                capacity=bs.num_channels,
                reserve_price=self.reserves[bs.id],
                rate_mbps=runtime.rate_mbps[bs.id],
                demand=runtime.demand[bs.id],
                competitors=self._competitors(bs.id),
                price_history=self.price_models[bs.id],
            )
            for bs in self.stations
            if bs.id in runtime.rate_mbps
        )
        return MarketObservation(
            round_index=round_index,
            rounds_total=self.config.episodes,
            budget=runtime.budget,
            entrance_fee=self.fee,
            urgency=runtime.urgency,
            stations=views,
        )

    def _decide(self, runtime: _UeRuntime, observation: MarketObservation) -> BidDecision:
        if runtime.strategy == MYOPIC:
            return myopic_decide(observation)
        if runtime.strategy == GREEDY:
            return greedy_decide(observation)
        if runtime.strategy == FORESIGHT:
            return foresight_decide(observation, self.config.foresight)
        if runtime.strategy == LLM:
            if self.config.offline:
                return foresight_decide(observation, self.config.foresight)
            if self._client is None:
                self._client = ChatCompletionClient(self.config.endpoint)
            return llm_decide(observation, self.config.endpoint, client=self._client)
        raise ConfigurationError([f"unknown strategy {runtime.strategy!r}"])

    def run_round(self, round_index: int) -> RoundLog:
        """Play one sealed-bid round and append its broadcasts to history."""
        decisions: list[tuple[_UeRuntime, BidDecision, float]] = []
        for runtime in self.ues:  # ascending user id
            if runtime.budget < self.fee:
                decision = abstain("entrance fee unaffordable")
            else:
                decision = self._decide(runtime, self.observation_for(runtime, round_index))
            decisions.append((runtime, decision, urgency_factor(runtime.urgency)))

        requests_by_station: dict[int, list[AuctionRequest]] = {
            bs.id: [] for bs in self.stations
        }
        fees_by_station: dict[int, float] = {bs.id: 0.0 for bs in self.stations}
        for runtime, decision, _ in decisions:
            if decision.abstained:
                continue
            runtime.budget -= self.fee
            fees_by_station[decision.station_id] += self.fee
            requests_by_station[decision.station_id].append(
                AuctionRequest(
                    bidder_id=runtime.ue.id,
                    quantity=decision.quantity,
                    per_unit_bid=decision.per_unit_bid,
                )
            )

        outcomes = {
            bs.id: run_vcg(requests_by_station[bs.id], bs.num_channels, self.reserves[bs.id])
            for bs in self.stations
        }

        ue_records = []
        for runtime, decision, value_factor in decisions:
            won = 0
            per_unit_payment = 0.0
            gross = 0.0
            fee_paid = 0.0
            if not decision.abstained:
                fee_paid = self.fee
                outcome = outcomes[decision.station_id]
                won = outcome.allocations.get(runtime.ue.id, 0)
                if won > 0:
                    per_unit_payment = outcome.per_unit_payments[runtime.ue.id]
                    runtime.budget -= won * per_unit_payment
                    value = value_factor * runtime.rate_mbps[decision.station_id]
                    gross = won * (value - per_unit_payment)
            runtime.urgency = record_outcome(runtime.urgency, won > 0)
            ue_records.append(
                UeRoundRecord(
                    ue_id=runtime.ue.id,
                    strategy=runtime.strategy,
                    station_id=decision.station_id,
                    per_unit_bid=decision.per_unit_bid,
                    quantity=decision.quantity,
                    abstained=decision.abstained,
                    fallback=decision.fallback,
                    channels_won=won,
                    per_unit_payment=per_unit_payment,
                    fee_paid=fee_paid,
                    gross_utility=gross,
                    budget_after=runtime.budget,
                    value_factor=value_factor,
                    losses_after=runtime.urgency.consecutive_losses,
                )
            )

        station_records = []
        for bs in self.stations:
            outcome = outcomes[bs.id]
            sold = math.fsum(
                won * outcome.per_unit_payments[uid]
                for uid, won in outcome.allocations.items()
            )
            station_records.append(
                StationRoundRecord(
                    station_id=bs.id,
                    clearing_price=outcome.clearing_price,
                    allocations=dict(outcome.allocations),
                    per_unit_payments=dict(outcome.per_unit_payments),
                    seller_utility_terms=dict(outcome.seller_utility_terms),
                    fees_collected=fees_by_station[bs.id],
                    revenue=fees_by_station[bs.id] + sold,
                )
            )
            self.price_models[bs.id].append(outcome.clearing_price)

        self.prev_request_counts = {
            bs_id: len(reqs) for bs_id, reqs in requests_by_station.items()
        }
        return RoundLog(
            round_index=round_index,
            ues=tuple(ue_records),
            stations=tuple(station_records),
        )

    def _market_exhausted(self) -> bool:
        cheapest_entry = min(self.reserves.values()) + self.fee
        return all(r.budget < cheapest_entry for r in self.ues)

    def execute(self) -> RunResult:
        logs: list[RoundLog] = []
        for t in range(1, self.config.episodes + 1):
            if self._market_exhausted():
                break
            logs.append(self.run_round(t))
        return RunResult(
            run_index=self.run_index,
            seed=self.seed,
            roster={r.ue.id: r.strategy for r in self.ues},
            rounds=tuple(logs),
        )


def spawn_run_seeds(master_seed: int, runs: int) -> list[int]:
    """Independent child seeds, stable for a given master seed."""
    children = np.random.SeedSequence(master_seed).spawn(runs)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def _execute_run(args: tuple[SimulationConfig, int, int]) -> RunResult:
    config, run_index, run_seed = args
    return SimulationRun(config, run_index, run_seed).execute()


def run_simulation(config: SimulationConfig) -> SimulationReport:
    """Execute every run and aggregate metrics; raises before round one on bad config."""
    problems = config.validate()
    if problems:
        raise ConfigurationError(problems)
    seeds = spawn_run_seeds(config.seed, config.runs)
    tasks = [(config, i, seeds[i]) for i in range(config.runs)]
    if config.jobs > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_execute_run, tasks))
    else:
        results = [_execute_run(task) for task in tasks]
    return SimulationReport(results=tuple(results), metrics=compute_metrics(results))


def compute_metrics(results: Sequence[RunResult]) -> MetricsReport:
    """Reduce round logs to per-user rows and per-strategy averages."""
    per_ue: list[UeMetrics] = []
    for result in results:
        gross: dict[int, float] = {uid: 0.0 for uid in result.roster}
        fees: dict[int, float] = {uid: 0.0 for uid in result.roster}
        payments: dict[int, float] = {uid: 0.0 for uid in result.roster}
        channels: dict[int, int] = {uid: 0 for uid in result.roster}
        bids: dict[int, int] = {uid: 0 for uid in result.roster}
        wins: dict[int, int] = {uid: 0 for uid in result.roster}
        fallbacks: dict[int, int] = {uid: 0 for uid in result.roster}
        for log in result.rounds:
            for rec in log.ues:
                gross[rec.ue_id] += rec.gross_utility
                fees[rec.ue_id] += rec.fee_paid
                payments[rec.ue_id] += rec.channels_won * rec.per_unit_payment
                channels[rec.ue_id] += rec.channels_won
                if not rec.abstained:
                    bids[rec.ue_id] += 1
                if rec.channels_won > 0:
                    wins[rec.ue_id] += 1
                if rec.fallback:
                    fallbacks[rec.ue_id] += 1
        for uid in sorted(result.roster):
            n_bids = bids[uid]
            per_ue.append(
                UeMetrics(
                    run_index=result.run_index,
                    seed=result.seed,
                    ue_id=uid,
                    strategy=result.roster[uid],
                    episodes=len(result.rounds),
                    gross_utility=gross[uid],
                    net_utility=gross[uid] - fees[uid],
                    channels_won=channels[uid],
                    bids_placed=n_bids,
                    wins=wins[uid],
                    bid_precision=(wins[uid] / n_bids) if n_bids else None,
                    fees_paid=fees[uid],
                    payments_paid=payments[uid],
                    fallbacks=fallbacks[uid],
                )
            )

    per_strategy: dict[str, StrategySummary] = {}
    for strategy in STRATEGIES:
        rows = [m for m in per_ue if m.strategy == strategy]
        if not rows:
            continue
        n = len(rows)
        precisions = [m.bid_precision for m in rows if m.bid_precision is not None]
        per_strategy[strategy] = StrategySummary(
            strategy=strategy,
            num_ue_runs=n,
            avg_gross_utility=math.fsum(m.gross_utility for m in rows) / n,
            avg_net_utility=math.fsum(m.net_utility for m in rows) / n,
            avg_channels_won=math.fsum(m.channels_won for m in rows) / n,
            avg_bids_placed=math.fsum(m.bids_placed for m in rows) / n,
            avg_bid_precision=(
                math.fsum(precisions) / len(precisions) if precisions else None
            ),
            fallback_rounds=sum(m.fallbacks for m in rows),
        )
    return MetricsReport(per_ue=tuple(per_ue), per_strategy=per_strategy)
