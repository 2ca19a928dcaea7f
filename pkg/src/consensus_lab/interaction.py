"""The interaction structure: a Markov matrix on the union of all signals.

The transition weight from a signal of agent i to a signal of agent j is the
network weight i places on j times i's interim probability of j's signal.
This module builds that matrix, the first-order map sending state payoffs to
per-signal expectations, and the connectivity analysis of the result
(strongly connected components, terminal components, periods).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Mapping

import numpy as np
import scipy.sparse
from scipy.sparse.csgraph import connected_components

from .errors import PreconditionError
from .model import ModelSpec


@dataclass(frozen=True)
class SignalIndex:
    """Dense index over the union of all agents' signals.

    Blocks are contiguous in declaration order: agent k's signals occupy
    ``blocks[k]``.  ``agent_of[s]`` is the agent index owning signal s.
    """

    labels: tuple[str, ...]
    agents: tuple[str, ...]
    agent_of: np.ndarray
    blocks: tuple[slice, ...]

    @classmethod
    def from_spec(cls, spec: ModelSpec) -> "SignalIndex":
        labels: list[str] = []
        owner: list[int] = []
        blocks: list[slice] = []
        for k, a in enumerate(spec.agents):
            start = len(labels)
            labels.extend(spec.signals[a])
            owner.extend([k] * len(spec.signals[a]))
            blocks.append(slice(start, len(labels)))
        idx = np.array(owner, dtype=int)
        idx.setflags(write=False)
        return cls(tuple(labels), spec.agents, idx, tuple(blocks))

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def block(self, agent) -> slice:
        if isinstance(agent, str):
            agent = self.agents.index(agent)
        return self.blocks[agent]


@dataclass(frozen=True)
class FirstOrderMap:
    """Matrix sending a state payoff vector to per-signal expectations."""

    matrix: np.ndarray
    index: SignalIndex
    states: tuple[str, ...]

    def __post_init__(self):
        self.matrix.setflags(write=False)

    def apply(self, y) -> np.ndarray:
        return self.matrix @ np.asarray(y, dtype=float)


@dataclass(frozen=True)
class InteractionStructure:
    """Row-stochastic matrix over all signals plus its connectivity flags."""

    matrix: np.ndarray
    index: SignalIndex
    irreducible: bool
    aperiodic: bool

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.index.labels


def build_first_order_map(spec: ModelSpec) -> FirstOrderMap:
    """Stack every signal's state marginal into the first-order map."""
    index = SignalIndex.from_spec(spec)
    rows = []
    for t in index.labels:
        b = spec.beliefs.get(t)
        if b is None or b.state_marginal is None:
            raise PreconditionError(f"signal {t}: no state marginal available")
        if len(b.state_marginal) != spec.n_states:
            raise PreconditionError(
                f"signal {t}: state marginal has length {len(b.state_marginal)},"
                f" expected {spec.n_states}"
            )
        rows.append(b.state_marginal)
    return FirstOrderMap(np.array(rows, dtype=float), index, spec.states)


def build_interaction_structure(
    spec: ModelSpec,
    type_dependent_weights: Mapping[str, np.ndarray] | None = None,
) -> InteractionStructure:
    """Assemble the interaction structure from network weights and beliefs.

    With ``type_dependent_weights`` each signal carries its own row of
    network weights (a probability vector over agents), replacing the
    owner's row of the network.  A positive self-weight contributes to
    the diagonal: an agent is certain of his own signal.
    """
    index = SignalIndex.from_spec(spec)
    n = len(index)
    B = np.zeros((n, n))
    for s, t in enumerate(index.labels):
        i = index.agent_of[s]
        agent = spec.agents[i]
        if type_dependent_weights is not None:
            row = np.asarray(type_dependent_weights[t], dtype=float)
            if row.shape != (spec.n_agents,):
                raise PreconditionError(
                    f"type-dependent weights for {t}: expected length"
                    f" {spec.n_agents}, got {row.shape}"
                )
        else:
            row = spec.network.weights[i]
        belief = spec.beliefs[t]
        for j, a_j in enumerate(spec.agents):
            w = row[j]
            if w == 0.0:
                continue
            if j == i:
                # own signal is known with certainty
                B[s, s] += w
                continue
            marg = belief.signal_marginals.get(a_j)
            if marg is None:
                raise PreconditionError(
                    f"signal {t}: agent {agent} weights {a_j} but carries no"
                    f" belief marginal over {a_j}'s signals"
                )
            B[s, index.block(j)] = w * marg
    comps = strongly_connected_components(B)
    irreducible = len(comps) == 1
    terminal = _terminal_components(B, comps)
    aperiodic = all(component_period(B, c) == 1 for c in terminal)
    return InteractionStructure(B, index, irreducible, aperiodic)


def strongly_connected_components(matrix) -> list[tuple[int, ...]]:
    """SCCs of the directed graph of nonzero entries, sorted by least member."""
    matrix = _as_matrix(matrix)
    n_comp, labels = connected_components(
        scipy.sparse.csr_matrix(matrix != 0), directed=True, connection="strong"
    )
    comps = [tuple(np.nonzero(labels == c)[0]) for c in range(n_comp)]
    return sorted(comps, key=lambda c: c[0])


def _terminal_components(matrix, comps) -> list[tuple[int, ...]]:
    out = []
    for comp in comps:
        members = set(comp)
        rows = matrix[list(comp)]
        targets = np.nonzero(rows.any(axis=0))[0]
        if all(t in members for t in targets):
            out.append(comp)
    return out


def component_period(matrix, component) -> int:
    """Period of one strongly connected component (gcd of its cycle lengths).

    Returns 0 for a singleton without a self-loop, which supports no cycle.
    """
    matrix = _as_matrix(matrix)
    comp = list(component)
    members = {s: k for k, s in enumerate(comp)}
    if len(comp) == 1:
        return 1 if matrix[comp[0], comp[0]] != 0 else 0
    # BFS levels from the first member; period = gcd over edges of
    # level(u) + 1 - level(v)
    level = {comp[0]: 0}
    frontier = [comp[0]]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.nonzero(matrix[u])[0]:
                if v in members and v not in level:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    g = 0
    for u in comp:
        for v in np.nonzero(matrix[u])[0]:
            if v in members:
                g = gcd(g, level[u] + 1 - level[v])
    return abs(g)


def _as_matrix(obj) -> np.ndarray:
    if isinstance(obj, InteractionStructure):
        return obj.matrix
    if hasattr(obj, "weights"):
        return obj.weights
    if hasattr(obj, "matrix"):
        return obj.matrix
    return np.asarray(obj, dtype=float)


def _labels_of(obj, indices):
    if isinstance(obj, InteractionStructure):
        return tuple(obj.index.labels[i] for i in indices)
    return tuple(indices)


def joint_connectedness(B):
    """Whether the interaction structure is irreducible.

    Returns ``(True, None)`` when every signal communicates with every
    other.  Otherwise returns ``(False, certificate)`` where the
    certificate is a nonempty proper closed set of signals: the first
    terminal component in index order.
    """
    matrix = _as_matrix(B)
    comps = strongly_connected_components(matrix)
    if len(comps) == 1:
        return True, None
    terminal = _terminal_components(matrix, comps)
    return False, _labels_of(B, terminal[0])


def absorbing_components(B) -> list[tuple]:
    """Terminal strongly connected components (no outgoing edges), by index order."""
    matrix = _as_matrix(B)
    comps = strongly_connected_components(matrix)
    return [_labels_of(B, c) for c in _terminal_components(matrix, comps)]


def aperiodicity(B) -> bool:
    """True when every terminal component has period one, so powers converge."""
    matrix = _as_matrix(B)
    comps = strongly_connected_components(matrix)
    return all(
        component_period(matrix, c) == 1 for c in _terminal_components(matrix, comps)
    )
