"""Over-the-counter market simulator.

One asset passes between classes of traders.  Each period the game ends
with probability ``1 - beta`` and the holder consumes the payoff; otherwise
the next buyer class is drawn from the owner's row of the network and the
sale executes at the equilibrium price schedule of the coordination game,
evaluated at the buyer's realized signal.  Prices are not rediscovered in
the simulation; the point of the exercise is that the realized transaction
prices track the schedule and, as trade becomes frequent, the consensus.

Randomness flows through numpy's PCG64 generator with explicit seeding.  A
batch of runs seeds run k with ``SeedSequence(seed).spawn(n)[k]``; a single
run with integer seed s uses ``SeedSequence(s)`` directly.  Draw order
within a run is fixed and documented in :func:`simulate_market`.
"""

from __future__ import annotations

import os
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PreconditionError
from .game import GameSolution, solve_beta_game
from .interaction import SignalIndex
from .model import ModelSpec
from .spectral import eigenvector_centrality

_CHUNK = 4096


def worker_count() -> int:
    """Worker cap from the CONSENSUS_LAB_THREADS environment variable."""
    raw = os.environ.get("CONSENSUS_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class TradeEvent:
    period: int
    seller: str
    buyer: str
    price: float
    buyer_signal: str


@dataclass(frozen=True)
class MarketRun:
    """A single completed run: realized draw, holder path, and every trade.

    ``seed`` records the entropy and spawn key of the run's generator, so
    the run can be reproduced exactly.
    """

    beta: float
    seed: tuple
    state: str
    signal_profile: tuple[str, ...]
    holders: tuple[str, ...]
    events: tuple[TradeEvent, ...]
    terminal_payoff: float

    @property
    def duration(self) -> int:
        """Periods until consumption; one more than the number of trades."""
        return len(self.holders)


@dataclass(frozen=True)
class NatureDraw:
    """State and signal profile drawn from a generating distribution.

    ``joint`` has one axis for the states and one per agent, in
    declaration order, and sums to one.
    """

    joint: np.ndarray


@dataclass(frozen=True)
class FixedDraw:
    """State and signal profile fixed by the caller."""

    state: str
    profile: tuple[str, ...]


def product_generating(spec: ModelSpec) -> NatureDraw:
    """Canonical generating distribution for a general model.

    Signals are independent across agents with each agent's
    influence-representing pseudoprior as the marginal; the state is
    independent of the signals, drawn from the first agent's
    prior-implied state distribution (uniform over states when the model
    carries no priors).  Under this distribution and a
    centrality-distributed initial owner, every transaction price has
    expectation exactly equal to the consensus, at every beta.
    """
    from .consensus import pseudopriors

    lam = pseudopriors(spec)
    if spec.priors is not None and spec.agents[0] in spec.priors:
        a0 = spec.agents[0]
        mu = spec.priors[a0]
        theta = np.zeros(spec.n_states)
        for k, t in enumerate(spec.signals[a0]):
            theta += mu[k] * spec.beliefs[t].state_marginal
    else:
        theta = np.full(spec.n_states, 1.0 / spec.n_states)
    joint = theta
    for a in spec.agents:
        joint = np.multiply.outer(joint, lam[a])
    return NatureDraw(joint)


def cis_generating(cis, prior_agent: str | None = None) -> NatureDraw:
    """Generating distribution of a common-interpretation model.

    The state is drawn from the named agent's prior (default: the first
    agent's), then signals independently from the shared technologies.
    """
    if prior_agent is None:
        prior_agent = cis.agents[0]
    joint = np.asarray(cis.rho[prior_agent], dtype=float)
    for a in cis.agents:
        # axis 0 stays the state; technologies are state-indexed rows
        joint = joint[..., None] * _expand_eta(cis.eta[a], joint.ndim)
    return NatureDraw(joint)


def _expand_eta(eta: np.ndarray, lead_axes: int) -> np.ndarray:
    shape = (eta.shape[0],) + (1,) * (lead_axes - 1) + (eta.shape[1],)
    return np.asarray(eta).reshape(shape)


class _Uniforms:
    """Sequential uniforms drawn in chunks; identical stream to repeated
    single calls on the same generator."""

    def __init__(self, rng):
        self.rng = rng
        self.buf = rng.random(_CHUNK)
        self.pos = 0

    def __call__(self) -> float:
        if self.pos == len(self.buf):
            self.buf = self.rng.random(_CHUNK)
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return float(u)


def _resolve_draw(spec: ModelSpec, draw, index: SignalIndex, uniforms):
    if isinstance(draw, FixedDraw):
        if draw.state not in spec.states:
            raise PreconditionError(f"fixed draw: unknown state {draw.state!r}")
        if len(draw.profile) != spec.n_agents:
            raise PreconditionError(
                f"fixed draw: profile needs one signal per agent"
                f" ({spec.n_agents}), got {len(draw.profile)}"
            )
        theta = spec.states.index(draw.state)
        profile = []
        for k, a in enumerate(spec.agents):
            if draw.profile[k] not in spec.signals[a]:
                raise PreconditionError(
                    f"fixed draw: {draw.profile[k]!r} is not a signal of {a}"
                )
            profile.append(spec.signals[a].index(draw.profile[k]))
        return theta, profile
    if isinstance(draw, NatureDraw):
        joint = np.asarray(draw.joint, dtype=float)
        shape = (spec.n_states,) + tuple(len(spec.signals[a]) for a in spec.agents)
        if joint.shape != shape:
            raise PreconditionError(
                f"generating distribution: expected shape {shape}, got {joint.shape}"
            )
        flat = joint.reshape(-1)
        cum = np.cumsum(flat)
        k = int(np.searchsorted(cum, uniforms() * cum[-1], side="right"))
        k = min(k, len(flat) - 1)
        coords = np.unravel_index(k, shape)
        return int(coords[0]), [int(c) for c in coords[1:]]
    raise PreconditionError(
        "draw must be a NatureDraw (generating distribution) or a FixedDraw"
    )


def _resolve_initial_owner(spec: ModelSpec, initial_owner, uniforms) -> int:
    if isinstance(initial_owner, str):
        if initial_owner == "centrality":
            dist = eigenvector_centrality(spec.network)
        else:
            return spec.agents.index(initial_owner)
    elif isinstance(initial_owner, (int, np.integer)):
        return int(initial_owner)
    else:
        dist = np.asarray(initial_owner, dtype=float)
        if dist.shape != (spec.n_agents,):
            raise PreconditionError("initial owner distribution: wrong length")
    cum = np.cumsum(dist)
    k = int(np.searchsorted(cum, uniforms() * cum[-1], side="right"))
    return min(k, spec.n_agents - 1)


def _gamma_cumsums(spec: ModelSpec, allow_own_market: bool) -> list[list[float]]:
    g = spec.network.weights
    if not allow_own_market and np.any(np.diag(g) > 0):
        raise PreconditionError(
            "owner's class has positive self-weight; pass allow_own_market=True"
            " to let the asset be resold into the owner's own market"
        )
    return [list(np.cumsum(row)) for row in g]


def simulate_market(
    spec: ModelSpec,
    beta: float,
    seed,
    draw,
    y=None,
    prices: GameSolution | None = None,
    initial_owner=0,
    allow_own_market: bool = False,
) -> MarketRun:
    """Simulate one run of the trading game.

    Draw order, fixed for reproducibility: (1) state and signal profile
    (one uniform, nature mode only), (2) initial owner (one uniform,
    only when given as a distribution), then per period (3) a
    continuation uniform and, if trade continues, (4) a buyer-class
    uniform.  ``prices`` may carry a precomputed schedule; otherwise the
    game is solved at ``beta``.
    """
    if not 0.0 <= beta < 1.0:
        raise PreconditionError(f"beta must lie in [0, 1), got {beta}")
    if prices is None:
        prices = solve_beta_game(spec, beta, y)
    index = SignalIndex.from_spec(spec)
    yvec = (spec.y if y is None else y)
    yvals = yvec.values if hasattr(yvec, "values") else np.asarray(yvec, float)
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    rng = np.random.default_rng(seed)
    uniforms = _Uniforms(rng)
    gamma_cum = _gamma_cumsums(spec, allow_own_market)

    theta, profile = _resolve_draw(spec, draw, index, uniforms)
    owner = _resolve_initial_owner(spec, initial_owner, uniforms)
    signal_of_class = [
        index.block(k).start + profile[k] for k in range(spec.n_agents)
    ]
    holders = [owner]
    events: list[TradeEvent] = []
    period = 1
    while uniforms() >= 1.0 - beta:
        buyer = bisect_right(gamma_cum[owner], uniforms())
        buyer = min(buyer, spec.n_agents - 1)
        sig = signal_of_class[buyer]
        events.append(
            TradeEvent(
                period,
                spec.agents[owner],
                spec.agents[buyer],
                float(prices.actions[sig]),
                index.labels[sig],
            )
        )
        owner = buyer
        holders.append(owner)
        period += 1
    return MarketRun(
        beta,
        (seed.entropy, seed.spawn_key),
        spec.states[theta],
        tuple(spec.signals[a][profile[k]] for k, a in enumerate(spec.agents)),
        tuple(spec.agents[h] for h in holders),
        tuple(events),
        float(yvals[theta]),
    )


@dataclass(frozen=True)
class MarketBatch:
    """Compact aggregate of many runs.

    Per run: duration, trade count, the per-class buy counts, and the
    per-class price implied by the run's signal profile.  This is enough
    to reconstruct the full multiset of transaction prices.
    """

    beta: float
    durations: np.ndarray
    class_counts: np.ndarray
    class_prices: np.ndarray
    terminal_payoffs: np.ndarray
    agents: tuple[str, ...]

    @property
    def n_runs(self) -> int:
        return len(self.durations)

    @property
    def trade_counts(self) -> np.ndarray:
        return self.class_counts.sum(axis=1)

    @property
    def price_sums(self) -> np.ndarray:
        return (self.class_counts * self.class_prices).sum(axis=1)


def _run_compact(spec, beta, seed_seq, draw, prices, initial_owner,
                 gamma_cum, signal_prices_cache):
    rng = np.random.default_rng(seed_seq)
    uniforms = _Uniforms(rng)
    index, n_agents = signal_prices_cache
    theta, profile = _resolve_draw(spec, draw, index, uniforms)
    owner = _resolve_initial_owner(spec, initial_owner, uniforms)
    class_price = [
        float(prices.actions[index.block(k).start + profile[k]])
        for k in range(n_agents)
    ]
    counts = [0] * n_agents
    duration = 1
    while uniforms() >= 1.0 - beta:
        owner = min(bisect_right(gamma_cum[owner], uniforms()), n_agents - 1)
        counts[owner] += 1
        duration += 1
    return theta, duration, counts, class_price


def simulate_batch(
    spec: ModelSpec,
    beta: float,
    n_runs: int,
    seed,
    draw,
    y=None,
    prices: GameSolution | None = None,
    initial_owner=0,
    allow_own_market: bool = False,
) -> MarketBatch:
    """Simulate independent runs; run k is bit-identical to
    ``simulate_market`` seeded with ``SeedSequence(seed).spawn(n_runs)[k]``.

    Runs execute on up to CONSENSUS_LAB_THREADS workers; results are
    assembled in run order, so the aggregate does not depend on the
    schedule.
    """
    if prices is None:
        prices = solve_beta_game(spec, beta, y)
    index = SignalIndex.from_spec(spec)
    gamma_cum = _gamma_cumsums(spec, allow_own_market)
    yvec = (spec.y if y is None else y)
    yvals = yvec.values if hasattr(yvec, "values") else np.asarray(yvec, float)
    seeds = np.random.SeedSequence(seed).spawn(n_runs)
    cache = (index, spec.n_agents)

    def work(k):
        return _run_compact(
            spec, beta, seeds[k], draw, prices, initial_owner, gamma_cum, cache
        )

    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, range(n_runs)))
    else:
        results = [work(k) for k in range(n_runs)]

    durations = np.array([r[1] for r in results], dtype=int)
    counts = np.array([r[2] for r in results], dtype=int)
    class_prices = np.array([r[3] for r in results], dtype=float)
    payoffs = np.array([float(yvals[r[0]]) for r in results])
    return MarketBatch(beta, durations, counts, class_prices, payoffs, spec.agents)


@dataclass(frozen=True)
class PriceStats:
    """Deterministic aggregation of transaction prices and durations."""

    n_runs: int
    n_trades: int
    mean_price: float | None
    price_se: float | None
    price_min: float | None
    price_max: float | None
    class_means: dict[str, float | None]
    class_quantiles: dict[str, tuple[float, float, float] | None]
    mean_duration: float
    duration_counts: dict[int, int]


def _weighted_quantiles(values, weights, qs=(0.1, 0.5, 0.9)):
    order = np.argsort(values)
    v = np.asarray(values)[order]
    w = np.asarray(weights, dtype=float)[order]
    cum = np.cumsum(w)
    out = []
    for q in qs:
        k = int(np.searchsorted(cum, q * cum[-1], side="left"))
        out.append(float(v[min(k, len(v) - 1)]))
    return tuple(out)


def empirical_price_stats(data) -> PriceStats:
    """Summarize runs (a list of :class:`MarketRun` or a :class:`MarketBatch`).

    The price standard error is cluster-robust over runs: runs, not
    individual trades, are the independent units.
    """
    if isinstance(data, MarketBatch):
        agents = data.agents
        durations = data.durations
        counts = data.class_counts
        cprices = data.class_prices
    else:
        runs = list(data)
        if not runs:
            raise PreconditionError("no runs to aggregate")
        agents = tuple(
            sorted({e.buyer for r in runs for e in r.events})
        ) or tuple()
        durations = np.array([r.duration for r in runs], dtype=int)
        counts = np.zeros((len(runs), len(agents)), dtype=int)
        cprices = np.zeros((len(runs), len(agents)))
        for ri, r in enumerate(runs):
            for e in r.events:
                k = agents.index(e.buyer)
                counts[ri, k] += 1
                cprices[ri, k] = e.price

    n_runs = len(durations)
    n_trades = int(counts.sum())
    mean_price = se = pmin = pmax = None
    class_means: dict[str, float | None] = {}
    class_q: dict[str, tuple | None] = {}
    if n_trades > 0:
        sums = (counts * cprices).sum(axis=1)
        mean_price = float(sums.sum() / n_trades)
        resid = sums - mean_price * counts.sum(axis=1)
        se = float(np.sqrt((resid**2).sum()) / n_trades)
        traded = counts.sum(axis=0) > 0
        all_prices = cprices[counts > 0]
        pmin = float(all_prices.min())
        pmax = float(all_prices.max())
        for k, a in enumerate(agents):
            if traded[k]:
                w = counts[:, k]
                class_means[a] = float((w * cprices[:, k]).sum() / w.sum())
                nz = w > 0
                class_q[a] = _weighted_quantiles(cprices[nz, k], w[nz])
            else:
                class_means[a] = None
                class_q[a] = None
    else:
        class_means = {a: None for a in agents}
        class_q = {a: None for a in agents}
    uniq, cnt = np.unique(durations, return_counts=True)
    return PriceStats(
        n_runs,
        n_trades,
        mean_price,
        se,
        pmin,
        pmax,
        class_means,
        class_q,
        float(durations.mean()),
        {int(u): int(c) for u, c in zip(uniq, cnt)},
    )
