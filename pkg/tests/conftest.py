"""Shared instance generators and independent oracles.

Oracles here deliberately avoid the library's matrix pipeline: the
recursion oracle walks the model dictionaries, reachability uses boolean
closure, and connectivity of beliefs enumerates product events.
"""

import os

import numpy as np
import pytest

from consensus_lab.model import (
    BasicVariable,
    InterimBelief,
    ModelSpec,
    Network,
)

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")


@pytest.fixture
def scenarios_dir():
    return SCENARIOS


def scenario_path(name):
    return os.path.join(SCENARIOS, name + ".json")


def dirichlet(rng, n, concentration=1.0):
    v = rng.gamma(concentration, 1.0, size=n)
    return v / v.sum()


def random_model(
    rng,
    n_agents=3,
    n_states=2,
    max_signals=3,
    full_support=True,
    network_density=1.0,
    with_y=True,
):
    """Random marginal-mode model; full-support beliefs unless disabled."""
    agents = tuple(f"ag{i}" for i in range(n_agents))
    states = tuple(f"st{k}" for k in range(n_states))
    signals = {
        a: tuple(f"{a}s{k}" for k in range(rng.integers(1, max_signals + 1)))
        for a in agents
    }
    g = np.zeros((n_agents, n_agents))
    for i in range(n_agents):
        others = [j for j in range(n_agents) if j != i]
        keep = [j for j in others if rng.random() < network_density]
        if not keep:
            keep = [others[rng.integers(len(others))]]
        w = dirichlet(rng, len(keep))
        for j, wj in zip(keep, w):
            g[i, j] = wj
    beliefs = {}
    for a in agents:
        for t in signals[a]:
            marginals = {}
            for b in agents:
                if b == a:
                    continue
                m = dirichlet(rng, len(signals[b]))
                if not full_support:
                    mask = rng.random(len(m)) < 0.4
                    if mask.all():
                        mask[rng.integers(len(m))] = False
                    m = np.where(mask, 0.0, m)
                    m = m / m.sum()
                marginals[b] = m
            beliefs[t] = InterimBelief(dirichlet(rng, n_states), marginals)
    y = BasicVariable(rng.random(n_states), 1.0) if with_y else None
    return ModelSpec(states, agents, signals, beliefs, Network(g), y=y)


def random_cps_model(rng, n_agents=3, n_states=2, n_signals=2, common_state_belief=False):
    """Full-mode model with a common prior over signal profiles.

    State assessments given a full profile are arbitrary per agent
    unless ``common_state_belief`` forces a single shared one (which
    also equalizes ex ante expectations).
    """
    agents = tuple(f"ag{i}" for i in range(n_agents))
    states = tuple(f"st{k}" for k in range(n_states))
    signals = {a: tuple(f"{a}s{k}" for k in range(n_signals)) for a in agents}
    shape = (n_signals,) * n_agents
    joint = rng.gamma(1.0, 1.0, size=shape) + 0.05
    joint = joint / joint.sum()
    shared_g = rng.random(shape + (n_states,)) + 0.05
    shared_g = shared_g / shared_g.sum(axis=-1, keepdims=True)
    beliefs = {}
    priors = {}
    for i, a in enumerate(agents):
        mu = joint.sum(axis=tuple(k for k in range(n_agents) if k != i))
        priors[a] = mu
        if common_state_belief:
            g = shared_g
        else:
            g = rng.random(shape + (n_states,)) + 0.05
            g = g / g.sum(axis=-1, keepdims=True)
        for ti in range(n_signals):
            sl = [slice(None)] * n_agents
            sl[i] = ti
            cond = joint[tuple(sl)] / mu[ti]
            full = np.moveaxis(
                cond[..., None] * g[tuple(sl)], -1, 0
            )
            beliefs[signals[a][ti]] = InterimBelief.from_full(full, [b for b in agents if b != a])
    g_net = np.zeros((n_agents, n_agents))
    for i in range(n_agents):
        others = [j for j in range(n_agents) if j != i]
        w = dirichlet(rng, len(others))
        g_net[i, others] = w
    y = BasicVariable(rng.random(n_states), 1.0)
    return ModelSpec(states, agents, signals, beliefs, Network(g_net), priors=priors, y=y)


def recursive_hoae(spec, yvals, n):
    """The defining recursion over model dictionaries; no matrices."""
    yvals = np.asarray(yvals, dtype=float)
    x = {}
    for a in spec.agents:
        for t in spec.signals[a]:
            x[t] = float(spec.beliefs[t].state_marginal @ yvals)
    for _ in range(n - 1):
        new = {}
        for i, a in enumerate(spec.agents):
            for t in spec.signals[a]:
                total = 0.0
                for j, b in enumerate(spec.agents):
                    w = float(spec.network.weights[i, j])
                    if w == 0.0:
                        continue
                    if b == a:
                        total += w * x[t]
                    else:
                        m = spec.beliefs[t].signal_marginals[b]
                        total += w * sum(
                            float(m[k]) * x[tj]
                            for k, tj in enumerate(spec.signals[b])
                        )
                new[t] = total
        x = new
    return np.array([x[t] for a in spec.agents for t in spec.signals[a]])


def closure_matrix(A):
    """Boolean reachability (paths of length >= 0) via iterated squaring."""
    R = (np.asarray(A) != 0) | np.eye(A.shape[0], dtype=bool)
    for _ in range(int(np.ceil(np.log2(A.shape[0] + 1))) + 1):
        R = R | (R.astype(int) @ R.astype(int) > 0)
    return R


def irreducible_oracle(A):
    R = closure_matrix(A)
    return bool(R.all())


def beliefs_connected_oracle(spec):
    """No nontrivial public product event; needs all marginals present."""
    from itertools import product

    supports = {}
    for a in spec.agents:
        for t in spec.signals[a]:
            for b, m in spec.beliefs[t].signal_marginals.items():
                supports[(t, b)] = {
                    spec.signals[b][k] for k in np.nonzero(np.asarray(m) > 0)[0]
                }

    def nonempty_subsets(labels):
        out = []
        for mask in range(1, 2 ** len(labels)):
            out.append({labels[k] for k in range(len(labels)) if mask >> k & 1})
        return out

    blocks = [nonempty_subsets(spec.signals[a]) for a in spec.agents]
    for combo in product(*blocks):
        if all(
            len(combo[i]) == len(spec.signals[a])
            for i, a in enumerate(spec.agents)
        ):
            continue  # the full event is trivially public
        closed = True
        for i, a in enumerate(spec.agents):
            for t in combo[i]:
                for j, other in enumerate(spec.agents):
                    if other == a:
                        continue
                    if not supports[(t, other)] <= combo[j]:
                        closed = False
                        break
                if not closed:
                    break
            if not closed:
                break
        if closed:
            return False
    return True


def split_signal(spec, signal, weights=(0.5, 0.5)):
    """Duplicate one signal into two identical copies; every other agent
    splits the marginal mass over the copies by ``weights``."""
    owner = spec.agent_of(signal)
    new_labels = (signal + "_a", signal + "_b")
    signals = {}
    for a in spec.agents:
        if a == owner:
            out = []
            for t in spec.signals[a]:
                out.extend(new_labels if t == signal else [t])
            signals[a] = tuple(out)
        else:
            signals[a] = spec.signals[a]
    beliefs = {}
    for a in spec.agents:
        for t in spec.signals[a]:
            b = spec.beliefs[t]
            marginals = {}
            for j, m in b.signal_marginals.items():
                if j == owner:
                    m = np.asarray(m)
                    out = []
                    for k, tj in enumerate(spec.signals[j]):
                        if tj == signal:
                            out.extend([m[k] * weights[0], m[k] * weights[1]])
                        else:
                            out.append(m[k])
                    marginals[j] = np.array(out)
                else:
                    marginals[j] = m
            belief = InterimBelief(b.state_marginal, marginals)
            if t == signal:
                beliefs[new_labels[0]] = belief
                beliefs[new_labels[1]] = belief
            else:
                beliefs[t] = belief
    return ModelSpec(
        spec.states, spec.agents, signals, beliefs, spec.network,
        priors=None, y=spec.y,
    )
