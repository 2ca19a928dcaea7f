"""Primitive model objects: states, agents, signals, beliefs, network, priors.

Labels are opaque strings.  All numerics run over dense numpy arrays whose
index order is the declaration order of the labels.  Objects are immutable
after construction (arrays are marked read-only) and safe for concurrent
reads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import PreconditionError

#: Default absolute tolerance for probability-vector checks.  Validation
#: accepts an override for parsed inputs with coarser rounding.
PROB_TOL = 1e-12


def freeze(values, dtype=float) -> np.ndarray:
    """Copy ``values`` into a read-only float array."""
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def is_probability_vector(v: np.ndarray, tol: float = PROB_TOL) -> bool:
    return v.ndim == 1 and np.all(v >= -tol) and abs(float(v.sum()) - 1.0) <= tol


@dataclass(frozen=True)
class InterimBelief:
    """One agent's conditional belief after observing one of his signals.

    Parameters
    ----------
    state_marginal : array over the state space
        Probability of each state given the signal.
    signal_marginals : mapping, other agent label -> array
        Probability over that agent's signals given the owner's signal.
        Agents the owner never weights may be omitted.
    full : optional array
        Joint distribution over (state, other agents' signal profile).
        Axis 0 runs over states; the remaining axes run over the other
        agents' signals in agent declaration order.  Only needed for
        operations that inspect correlation across opponents (common
        prior checks); everything else uses the marginals.
    """

    state_marginal: np.ndarray
    signal_marginals: Mapping[str, np.ndarray]
    full: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "state_marginal", freeze(self.state_marginal))
        object.__setattr__(
            self,
            "signal_marginals",
            {j: freeze(v) for j, v in self.signal_marginals.items()},
        )
        if self.full is not None:
            object.__setattr__(self, "full", freeze(self.full))

    @property
    def mode(self) -> str:
        return "full" if self.full is not None else "marginal"

    @classmethod
    def from_full(cls, full, other_agents: Sequence[str]) -> "InterimBelief":
        """Build a belief from a joint array, deriving all marginals.

        ``full`` has axis 0 over states and one axis per entry of
        ``other_agents`` (in that order).
        """
        full = np.asarray(full, dtype=float)
        if full.ndim != 1 + len(other_agents):
            raise PreconditionError(
                f"joint belief needs {1 + len(other_agents)} axes, got {full.ndim}"
            )
        signal_axes = tuple(range(1, full.ndim))
        state_marginal = full.sum(axis=signal_axes)
        marginals = {}
        for k, j in enumerate(other_agents):
            keep = 1 + k
            axes = tuple(a for a in range(full.ndim) if a != keep)
            marginals[j] = full.sum(axis=axes)
        return cls(state_marginal, marginals, full)


@dataclass(frozen=True)
class Network:
    """Row-stochastic matrix of coordination weights between agents."""

    weights: np.ndarray
    diagonal_allowed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "weights", freeze(self.weights))

    @property
    def n(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class BasicVariable:
    """A state-measurable payoff with values inside ``[0, bound]``."""

    values: np.ndarray
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "values", freeze(self.values))
        object.__setattr__(self, "bound", float(self.bound))


@dataclass(frozen=True)
class ModelSpec:
    """A complete model instance.

    ``signals`` maps each agent to its ordered signal labels; labels are
    globally unique.  ``beliefs`` maps each signal label to the interim
    belief held after observing it.  ``priors`` optionally gives each
    agent an ex ante distribution over his own signals.
    """

    states: tuple[str, ...]
    agents: tuple[str, ...]
    signals: Mapping[str, tuple[str, ...]]
    beliefs: Mapping[str, InterimBelief]
    network: Network
    priors: Mapping[str, np.ndarray] | None = None
    y: BasicVariable | None = None

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(
            self, "signals", {a: tuple(ts) for a, ts in self.signals.items()}
        )
        if self.priors is not None:
            object.__setattr__(
                self, "priors", {a: freeze(v) for a, v in self.priors.items()}
            )

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def agent_index(self, agent: str) -> int:
        return self.agents.index(agent)

    def all_signals(self) -> tuple[str, ...]:
        return tuple(t for a in self.agents for t in self.signals[a])

    def agent_of(self, signal: str) -> str:
        for a in self.agents:
            if signal in self.signals[a]:
                return a
        raise KeyError(signal)


def _check_prob(violations, location, vec, n, tol):
    if len(vec) != n:
        violations.append(f"{location}: expected length {n}, got {len(vec)}")
        return
    s = float(np.sum(vec))
    if np.any(np.asarray(vec) < -tol):
        violations.append(f"{location}: negative entry")
    if abs(s - 1.0) > tol:
        violations.append(f"{location}: sums to {s!r} (expected 1 within {tol})")


def validate_model(spec: ModelSpec, tol: float = PROB_TOL) -> list[str]:
    """Check every model invariant; return the violations (empty list = valid).

    Each violation is a human-readable string prefixed with the location
    of the offending field.
    """
    v: list[str] = []
    if spec.n_states < 1:
        v.append("states: need at least one state")
    if spec.n_agents < 2:
        v.append("agents: need at least two agents")
    if len(set(spec.agents)) != spec.n_agents:
        v.append("agents: duplicate agent label")

    seen: dict[str, str] = {}
    for a in spec.agents:
        ts = spec.signals.get(a)
        if not ts:
            v.append(f"signals.{a}: agent needs at least one signal")
            continue
        for t in ts:
            if t in seen:
                v.append(f"signals.{a}.{t}: label already used by agent {seen[t]}")
            seen[t] = a

    g = spec.network.weights
    if g.shape != (spec.n_agents, spec.n_agents):
        v.append(
            f"network: shape {g.shape} does not match {spec.n_agents} agents"
        )
    else:
        if np.any(g < 0):
            v.append("network: negative weight")
        bad = np.nonzero(np.abs(g.sum(axis=1) - 1.0) > tol)[0]
        for i in bad:
            v.append(
                f"network.row[{spec.agents[i]}]: sums to {float(g[i].sum())!r}"
                f" (expected 1 within {tol})"
            )
        if not spec.network.diagonal_allowed:
            for i in np.nonzero(np.abs(np.diag(g)) > 0)[0]:
                v.append(
                    f"network.diagonal[{spec.agents[i]}]: self-weight"
                    " present but diagonal_allowed is false"
                )

    for a in spec.agents:
        others = [j for j in spec.agents if j != a]
        for t in spec.signals.get(a, ()):
            b = spec.beliefs.get(t)
            if b is None:
                v.append(f"beliefs.{t}: missing belief")
                continue
            loc = f"beliefs.{t}"
            _check_prob(v, f"{loc}.state", b.state_marginal, spec.n_states, tol)
            for j, m in b.signal_marginals.items():
                if j == a or j not in spec.agents:
                    v.append(f"{loc}.signals.{j}: not another agent")
                    continue
                _check_prob(v, f"{loc}.signals.{j}", m, len(spec.signals[j]), tol)
            if b.full is not None:
                shape = (spec.n_states,) + tuple(len(spec.signals[j]) for j in others)
                if b.full.shape != shape:
                    v.append(f"{loc}.full: shape {b.full.shape}, expected {shape}")
                    continue
                if np.any(b.full < -tol):
                    v.append(f"{loc}.full: negative entry")
                if abs(float(b.full.sum()) - 1.0) > tol:
                    v.append(f"{loc}.full: sums to {float(b.full.sum())!r}")
                rebuilt = InterimBelief.from_full(b.full, others)
                if np.max(np.abs(rebuilt.state_marginal - b.state_marginal)) > tol:
                    v.append(f"{loc}.state: inconsistent with full joint")
                for j in b.signal_marginals:
                    if j in others and len(b.signal_marginals[j]) == len(
                        spec.signals[j]
                    ):
                        gap = np.max(
                            np.abs(rebuilt.signal_marginals[j] - b.signal_marginals[j])
                        )
                        if gap > tol:
                            v.append(f"{loc}.signals.{j}: inconsistent with full joint")

    if spec.priors is not None:
        for a, mu in spec.priors.items():
            if a not in spec.agents:
                v.append(f"priors.{a}: unknown agent")
                continue
            _check_prob(v, f"priors.{a}", mu, len(spec.signals[a]), tol)

    if spec.y is not None:
        if len(spec.y.values) != spec.n_states:
            v.append(
                f"y: {len(spec.y.values)} values for {spec.n_states} states"
            )
        if spec.y.bound <= 0:
            v.append("y: bound must be positive")
        elif np.any(spec.y.values < 0) or np.any(spec.y.values > spec.y.bound):
            v.append(f"y: values outside [0, {spec.y.bound}]")
    return v


def ex_ante_expectation(spec: ModelSpec, agent: str, prior, z) -> float:
    """Ex ante expectation of ``z`` for one agent under a prior over his signals.

    ``z`` is either a per-signal array over the agent's signals or a
    :class:`BasicVariable`; in the latter case each signal's value is the
    conditional expectation of the variable under the signal's
    state marginal.
    """
    labels = spec.signals[agent]
    prior = np.asarray(prior, dtype=float)
    if prior.shape != (len(labels),):
        raise PreconditionError(
            f"prior for {agent}: expected length {len(labels)}, got {prior.shape}"
        )
    if isinstance(z, BasicVariable):
        z = z.values
        per_signal = np.array(
            [float(spec.beliefs[t].state_marginal @ z) for t in labels]
        )
    else:
        per_signal = np.asarray(z, dtype=float)
        if per_signal.shape != (len(labels),):
            raise PreconditionError(
                f"z for {agent}: expected length {len(labels)}, got {per_signal.shape}"
            )
    return float(prior @ per_signal)
