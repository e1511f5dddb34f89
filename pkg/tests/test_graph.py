import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import null_space

from gossip_learning import example1
from gossip_learning.errors import MultipleRecurrentClassesError, ValidationError
from gossip_learning.graph import (
    DirectedNetwork,
    SelectionMatrix,
    custom_selection_matrix,
    from_edge_list,
    is_strongly_connected,
    recurrent_classes,
    stationary_distribution,
    uniform_selection_matrix,
)

EX1_EDGES = [(j - 1, i - 1) for j, i in example1.EDGES]

# independent linear-solve oracle value for the benchmark chain
EX1_PI = (1 / 6, 1 / 3, 1 / 4, 1 / 6, 1 / 12, 0.0, 0.0, 0.0)


def ex1_net() -> DirectedNetwork:
    return from_edge_list(8, EX1_EDGES)


def _random_net_and_rows(rng, n):
    """A random digraph plus a row-stochastic matrix supported on it."""
    while True:
        mask = rng.random((n, n)) < 0.5
        np.fill_diagonal(mask, False)
        edges = [(j, i) for i in range(n) for j in range(n) if mask[j, i]]
        net = from_edge_list(n, edges)
        rows = np.zeros((n, n))
        for i in range(n):
            allowed = list(net.in_neighbors(i)) + [i]
            w = rng.random(len(allowed)) + 0.05
            rows[i, allowed] = w / w.sum()
        return net, rows


class TestDirectedNetwork:
    def test_example_in_neighborhoods(self):
        net = ex1_net()
        expected = {0: (2,), 1: (0, 3), 2: (1,), 3: (2, 4), 4: (1,), 5: (2,), 6: (0,), 7: (6,)}
        for i, nbrs in expected.items():
            assert net.in_neighbors(i) == nbrs
            assert net.degree(i) == len(nbrs)

    def test_rejects_self_loop(self):
        with pytest.raises(ValidationError, match="self-loop"):
            from_edge_list(3, [(0, 0)])

    def test_rejects_out_of_range_endpoint(self):
        with pytest.raises(ValidationError, match="outside"):
            from_edge_list(3, [(0, 3)])

    def test_rejects_duplicate_edge(self):
        with pytest.raises(ValidationError, match="duplicate"):
            from_edge_list(3, [(0, 1), (0, 1)])

    def test_rejects_empty_network(self):
        with pytest.raises(ValidationError):
            from_edge_list(0, [])

    def test_successors_inverts_in_neighbors(self):
        net = ex1_net()
        succ = net.successors()
        for i in range(net.n):
            for j in net.in_neighbors(i):
                assert i in succ[j]


class TestSelectionMatrix:
    def test_uniform_rows_on_example(self):
        p = uniform_selection_matrix(ex1_net()).probs
        assert np.array_equal(p[0], np.eye(8)[2])
        assert p[1, 0] == p[1, 3] == 0.5
        assert p[3, 2] == p[3, 4] == 0.5
        for i in (2, 4, 5, 6, 7):
            assert p[i].sum() == 1.0 and np.count_nonzero(p[i]) == 1
        assert np.all(np.diag(p) == 0.0)  # every agent here has a neighbor

    def test_uniform_isolated_agent_self_selects(self):
        net = from_edge_list(3, [(0, 1)])
        p = uniform_selection_matrix(net).probs
        assert p[0, 0] == 1.0 and p[2, 2] == 1.0 and p[1, 0] == 1.0

    def test_rows_must_sum_to_one(self):
        with pytest.raises(ValidationError, match="sum"):
            SelectionMatrix(n=2, probs=np.array([[0.5, 0.4], [0.0, 1.0]]))

    def test_all_zero_row_has_specific_message(self):
        with pytest.raises(ValidationError, match="zero mass on every entry"):
            SelectionMatrix(n=2, probs=np.array([[0.0, 0.0], [0.0, 1.0]]))

    def test_rejects_negative_and_nonfinite(self):
        with pytest.raises(ValidationError):
            SelectionMatrix(n=2, probs=np.array([[1.5, -0.5], [0.0, 1.0]]))
        with pytest.raises(ValidationError):
            SelectionMatrix(n=2, probs=np.array([[np.nan, 1.0], [0.0, 1.0]]))

    def test_custom_rejects_mass_outside_neighborhood(self):
        net = from_edge_list(3, [(0, 1)])
        rows = [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]
        with pytest.raises(ValidationError, match="neither an in-neighbor"):
            custom_selection_matrix(net, rows)

    def test_custom_allows_self_weight(self):
        net = from_edge_list(2, [(0, 1)])
        p = custom_selection_matrix(net, [[1.0, 0.0], [0.3, 0.7]])
        assert p.probs[1, 1] == 0.7

    def test_support_indices(self):
        p = uniform_selection_matrix(ex1_net())
        assert list(p.support(1)) == [0, 3]
        assert list(p.support(7)) == [6]


class TestStructure:
    def test_example_not_strongly_connected(self):
        assert not is_strongly_connected(ex1_net())

    def test_cycle_is_strongly_connected(self):
        net = from_edge_list(3, [(0, 1), (1, 2), (2, 0)])
        assert is_strongly_connected(net)

    def test_example_recurrent_class_and_transients(self):
        rc = recurrent_classes(uniform_selection_matrix(ex1_net()))
        assert rc.classes == ((0, 1, 2, 3, 4),)
        assert rc.transient == (5, 6, 7)
        for i in range(8):
            assert rc.reachable_from[i] == (0,)

    def test_identity_chain_has_singleton_classes(self):
        net = from_edge_list(3, [(0, 1), (1, 2)])
        p = custom_selection_matrix(net, np.eye(3))
        rc = recurrent_classes(p)
        assert rc.classes == ((0,), (1,), (2,))
        assert rc.transient == ()

    def test_strong_connectivity_matches_networkx(self):
        rng = np.random.default_rng(7)
        for _ in range(40):
            n = int(rng.integers(2, 12))
            net, _ = _random_net_and_rows(rng, n)
            g = nx.DiGraph()
            g.add_nodes_from(range(n))
            g.add_edges_from(net.edges)
            assert is_strongly_connected(net) == nx.is_strongly_connected(g)

    def test_recurrent_classes_match_networkx_condensation(self):
        rng = np.random.default_rng(21)
        for _ in range(40):
            n = int(rng.integers(2, 12))
            net, rows = _random_net_and_rows(rng, n)
            P = custom_selection_matrix(net, rows)
            g = nx.DiGraph()
            g.add_nodes_from(range(n))
            for i in range(n):
                for j in P.support(i):
                    g.add_edge(i, int(j))  # i can step to j
            cond = nx.condensation(g)
            expected = sorted(
                tuple(sorted(cond.nodes[c]["members"]))
                for c in cond.nodes
                if cond.out_degree(c) == 0
            )
            rc = recurrent_classes(P)
            assert sorted(rc.classes) == expected
            for i in range(n):
                reachable = nx.descendants(g, i) | {i}
                expected_idx = tuple(
                    k for k, cls in enumerate(rc.classes) if set(cls) <= reachable
                )
                assert rc.reachable_from[i] == expected_idx


class TestStationary:
    def test_example_matches_linear_solve_oracle(self, ex1_pi):
        assert np.max(np.abs(ex1_pi.pi - np.array(EX1_PI))) <= 1e-10

    def test_example_fixed_point_residual(self, ex1_cfg, ex1_pi):
        P = ex1_cfg.selection.probs
        assert np.max(np.abs(ex1_pi.pi @ P - ex1_pi.pi)) <= 1e-10

    def test_zero_mass_on_transient_agents(self, ex1_pi):
        assert np.all(ex1_pi.pi[5:] == 0.0)

    def test_direct_and_power_agree_with_scipy_oracle(self):
        rng = np.random.default_rng(1905)
        for _ in range(20):
            n = int(rng.integers(2, 10))
            net = from_edge_list(n, [(j, i) for i in range(n) for j in range(n) if i != j])
            rows = rng.random((n, n)) + 0.02
            rows /= rows.sum(axis=1, keepdims=True)
            P = custom_selection_matrix(net, rows)

            ns = null_space(P.probs.T - np.eye(n))
            assert ns.shape[1] == 1
            oracle = ns[:, 0] / ns[:, 0].sum()

            for method in ("direct", "power"):
                pi = stationary_distribution(P, method=method).pi
                assert np.max(np.abs(pi - oracle)) <= 1e-9

    def test_periodic_two_cycle(self):
        net = from_edge_list(2, [(0, 1), (1, 0)])
        P = uniform_selection_matrix(net)
        for method in ("direct", "power"):
            pi = stationary_distribution(P, method=method).pi
            assert np.allclose(pi, [0.5, 0.5], atol=1e-12)

    def test_relabeling_permutes_stationary_vector(self, ex1_cfg, ex1_pi):
        rng = np.random.default_rng(3)
        perm = rng.permutation(8)
        P = ex1_cfg.selection.probs
        permuted_edges = [(perm[j], perm[i]) for j, i in ex1_cfg.network.edges]
        net2 = from_edge_list(8, permuted_edges)
        rows2 = np.zeros((8, 8))
        rows2[np.ix_(perm, perm)] = P
        pi2 = stationary_distribution(custom_selection_matrix(net2, rows2)).pi
        assert np.max(np.abs(pi2[perm] - ex1_pi.pi)) <= 1e-12

    def test_two_disjoint_cycles_is_ambiguous(self):
        net = from_edge_list(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
        P = uniform_selection_matrix(net)
        with pytest.raises(MultipleRecurrentClassesError) as exc:
            stationary_distribution(P)
        assert exc.value.classes == ((0, 1), (2, 3))

    def test_unknown_method_rejected(self, ex1_cfg):
        with pytest.raises(ValidationError, match="solver"):
            stationary_distribution(ex1_cfg.selection, method="qr")

    def test_single_agent_chain(self):
        net = from_edge_list(1, [])
        pi = stationary_distribution(uniform_selection_matrix(net)).pi
        assert pi.tolist() == [1.0]


@settings(max_examples=60, deadline=None)
@given(data=st.data(), n=st.integers(2, 8))
def test_stationary_contract_on_random_dense_chains(data, n):
    rows = []
    for i in range(n):
        w = data.draw(
            st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n),
            label=f"row{i}",
        )
        w = np.array(w)
        rows.append(w / w.sum())
    net = from_edge_list(n, [(j, i) for i in range(n) for j in range(n) if i != j])
    P = custom_selection_matrix(net, rows)
    pi = stationary_distribution(P).pi
    assert np.all(pi >= 0.0)
    assert abs(pi.sum() - 1.0) <= 1e-12
    assert np.max(np.abs(pi @ P.probs - pi)) <= 1e-10
