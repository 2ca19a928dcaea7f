import numpy as np
import pytest

from consensus_lab.errors import PreconditionError
from consensus_lab.interaction import (
    absorbing_components,
    aperiodicity,
    build_first_order_map,
    build_interaction_structure,
    component_period,
    joint_connectedness,
    strongly_connected_components,
)
from consensus_lab.io import load_scenario
from consensus_lab.model import BasicVariable, InterimBelief, ModelSpec, Network

from conftest import (
    beliefs_connected_oracle,
    irreducible_oracle,
    random_model,
    scenario_path,
)


def complete_info_spec(gamma):
    """One signal per agent; the structure must collapse onto the network."""
    n = len(gamma)
    agents = tuple(f"ag{i}" for i in range(n))
    beliefs = {
        f"t{i}": InterimBelief(
            [1.0],
            {f"ag{j}": [1.0] for j in range(n) if j != i},
        )
        for i in range(n)
    }
    return ModelSpec(
        ("s",),
        agents,
        {a: (f"t{i}",) for i, a in enumerate(agents)},
        beliefs,
        Network(gamma),
        y=BasicVariable([1.0], 2.0),
    )


def test_first_order_map_rows_and_single_state():
    spec = complete_info_spec([[0.0, 1.0], [1.0, 0.0]])
    F = build_first_order_map(spec)
    assert np.array_equal(F.matrix, np.ones((2, 1)))


def test_first_order_map_deterministic_beliefs_are_unit_rows():
    beliefs = {
        "a1": InterimBelief([1.0, 0.0], {"bob": [1.0]}),
        "a2": InterimBelief([0.0, 1.0], {"bob": [1.0]}),
        "b1": InterimBelief([1.0, 0.0], {"ann": [0.5, 0.5]}),
    }
    spec = ModelSpec(
        ("g", "b"),
        ("ann", "bob"),
        {"ann": ("a1", "a2"), "bob": ("b1",)},
        beliefs,
        Network([[0.0, 1.0], [1.0, 0.0]]),
    )
    F = build_first_order_map(spec)
    assert np.array_equal(F.matrix, [[1, 0], [0, 1], [1, 0]])
    assert np.allclose(F.matrix.sum(axis=1), 1.0)


def test_first_order_apply_dot_products():
    beliefs = {
        "a1": InterimBelief([0.7, 0.3], {"bob": [1.0]}),
        "a2": InterimBelief([0.2, 0.8], {"bob": [1.0]}),
        "b1": InterimBelief([0.5, 0.5], {"ann": [0.5, 0.5]}),
    }
    spec = ModelSpec(
        ("g", "b"),
        ("ann", "bob"),
        {"ann": ("a1", "a2"), "bob": ("b1",)},
        beliefs,
        Network([[0.0, 1.0], [1.0, 0.0]]),
    )
    F = build_first_order_map(spec)
    assert np.allclose(F.apply([0.0, 1.0])[:2], [0.3, 0.8])


def test_complete_information_reduces_to_network():
    gamma = np.array([[0.0, 0.3, 0.7], [0.5, 0.0, 0.5], [1.0, 0.0, 0.0]])
    spec = complete_info_spec(gamma)
    B = build_interaction_structure(spec)
    assert np.allclose(B.matrix, gamma, atol=0)


def test_missing_marginal_for_weighted_neighbor_raises():
    spec = complete_info_spec([[0.0, 1.0], [1.0, 0.0]])
    beliefs = {
        "t0": InterimBelief([1.0], {}),
        "t1": InterimBelief([1.0], {"ag0": [1.0]}),
    }
    broken = ModelSpec(
        spec.states, spec.agents, spec.signals, beliefs, spec.network
    )
    with pytest.raises(PreconditionError, match="no belief marginal"):
        build_interaction_structure(broken)


def test_cycle_fixture_is_a_single_permutation_cycle():
    spec = load_scenario(scenario_path("cycle"))
    B = build_interaction_structure(spec)
    assert B.irreducible and not B.aperiodic
    # deterministic beliefs on a cycle: a 0/1 matrix with one 1 per row
    assert set(np.unique(B.matrix)) == {0.0, 1.0}
    assert np.allclose(B.matrix.sum(axis=1), 1.0)
    assert component_period(B.matrix, tuple(range(6))) == 6


def test_counterexample_fixture_reducible_with_certificate():
    spec = load_scenario(scenario_path("counterexample"))
    B = build_interaction_structure(spec)
    ok, cert = joint_connectedness(B)
    assert not ok
    assert cert == ("a1", "a2", "a3")
    comps = absorbing_components(B)
    assert comps == [("a1", "a2", "a3"), ("b1", "b2", "b3")]


def test_positive_network_is_jointly_connected():
    rng = np.random.default_rng(3)
    spec = random_model(rng, n_agents=3, full_support=True)
    B = build_interaction_structure(spec)
    ok, cert = joint_connectedness(B)
    assert ok and cert is None


def test_block_row_sums_reproduce_network():
    rng = np.random.default_rng(17)
    for _ in range(10):
        spec = random_model(rng, n_agents=3, network_density=0.7)
        B = build_interaction_structure(spec)
        assert np.max(np.abs(B.matrix.sum(axis=1) - 1.0)) < 1e-12
        for s, t in enumerate(B.index.labels):
            i = B.index.agent_of[s]
            for j in range(spec.n_agents):
                blk = B.matrix[s, B.index.block(j)].sum()
                assert blk == pytest.approx(
                    spec.network.weights[i, j], abs=1e-12
                )


def test_type_dependent_weights():
    rng = np.random.default_rng(23)
    spec = random_model(rng, n_agents=3)
    labels = [t for a in spec.agents for t in spec.signals[a]]
    weights = {}
    for t in labels:
        i = spec.agents.index(spec.agent_of(t))
        row = rng.dirichlet(np.ones(3))
        row[i] = 0.0
        weights[t] = row / row.sum()
    B = build_interaction_structure(spec, type_dependent_weights=weights)
    assert np.max(np.abs(B.matrix.sum(axis=1) - 1.0)) < 1e-12
    for s, t in enumerate(B.index.labels):
        for j in range(spec.n_agents):
            assert B.matrix[s, B.index.block(j)].sum() == pytest.approx(
                weights[t][j], abs=1e-12
            )


def test_joint_connectedness_agrees_with_closure_oracle():
    rng = np.random.default_rng(41)
    seen = {True: 0, False: 0}
    for _ in range(60):
        spec = random_model(
            rng,
            n_agents=int(rng.integers(2, 5)),
            max_signals=3,
            full_support=False,
            network_density=0.6,
        )
        B = build_interaction_structure(spec)
        if len(B.index) > 12:
            continue
        ok, cert = joint_connectedness(B)
        assert ok == irreducible_oracle(B.matrix)
        seen[ok] += 1
        if not ok:
            # the certificate really is closed
            members = [B.index.labels.index(t) for t in cert]
            outside = [k for k in range(len(B.index)) if k not in members]
            assert B.matrix[np.ix_(members, outside)].sum() == 0.0
    assert seen[True] > 0 and seen[False] > 0


def test_period_examples():
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert component_period(swap, (0, 1)) == 2
    assert not aperiodicity(swap)
    lazy = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert aperiodicity(lazy)
    # a positive diagonal in each terminal component forces period 1
    rng = np.random.default_rng(2)
    for _ in range(5):
        n = int(rng.integers(2, 6))
        Q = rng.random((n, n)) + 0.01
        Q = Q / Q.sum(axis=1, keepdims=True)
        assert aperiodicity(Q)


def test_absorbing_components_of_reducible_chain():
    # two separate 2-cycles joined by a transient state
    Q = np.zeros((5, 5))
    Q[0, 1] = Q[1, 0] = 1.0
    Q[2, 3] = Q[3, 2] = 1.0
    Q[4, 0] = 0.5
    Q[4, 2] = 0.5
    comps = absorbing_components(Q)
    assert comps == [(0, 1), (2, 3)]
    assert not aperiodicity(Q)


def test_sufficiency_complete_network_and_connected_beliefs():
    rng = np.random.default_rng(7)
    tested = 0
    while tested < 25:
        spec = random_model(
            rng, n_agents=3, max_signals=2, full_support=False, network_density=1.0
        )
        if not beliefs_connected_oracle(spec):
            continue
        tested += 1
        B = build_interaction_structure(spec)
        assert B.irreducible


def test_sufficiency_connected_network_and_full_support_beliefs():
    rng = np.random.default_rng(9)
    tested = 0
    while tested < 25:
        spec = random_model(
            rng, n_agents=4, max_signals=3, full_support=True, network_density=0.4
        )
        if not irreducible_oracle(spec.network.weights):
            continue
        tested += 1
        B = build_interaction_structure(spec)
        assert B.irreducible


def test_scc_ordering_is_deterministic():
    Q = np.zeros((4, 4))
    Q[0, 0] = 1.0
    Q[1, 1] = 1.0
    Q[2, 3] = Q[3, 2] = 1.0
    assert strongly_connected_components(Q) == [(0,), (1,), (2, 3)]


def test_self_loops_in_every_terminal_component_force_aperiodicity():
    Q = np.zeros((4, 4))
    Q[0, 0] = 0.5
    Q[0, 1] = 0.5
    Q[1, 0] = 1.0
    Q[2, 2] = 0.3
    Q[2, 3] = 0.7
    Q[3, 2] = 1.0
    assert absorbing_components(Q) == [(0, 1), (2, 3)]
    assert aperiodicity(Q)
