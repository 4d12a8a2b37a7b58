"""Property-based checks of invariants that hold for every input."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from spatialci.bayes.sampler import _from_eta, _to_eta
from spatialci.datagen import ScenarioConfig, replication_rng
from spatialci.errors import NonPositiveDefiniteError
from spatialci.estimands import lambda_mix, network_local_effect, pair_effects
from spatialci.graphs import ScenarioDag, d_separated
from spatialci.spatial import (
    car_precision,
    from_edge_list,
    joint_precision,
    neighbor_average,
    read_edge_list,
    second_degree,
    write_edge_list,
)

from test_graphs import oracle_separated


@st.composite
def graphs(draw, min_n=2, max_n=9, connected_ring=False):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    if connected_ring:
        chosen = sorted(set(chosen) | {(i, i + 1) for i in range(1, n)} | ({(1, n)} if n > 2 else set()))
    return from_edge_list(n, chosen)


vectors = st.floats(-100, 100, allow_nan=False)


@given(graphs(connected_ring=True), st.data())
def test_neighbor_average_is_linear_and_preserves_constants(adj, data):
    n = adj.n
    a = np.array(data.draw(st.lists(vectors, min_size=n, max_size=n)))
    b = np.array(data.draw(st.lists(vectors, min_size=n, max_size=n)))
    k = data.draw(st.floats(-5, 5))
    lhs = neighbor_average(adj, a + k * b)
    assert np.allclose(lhs, neighbor_average(adj, a) + k * neighbor_average(adj, b), atol=1e-9)
    assert np.allclose(neighbor_average(adj, np.full(n, 3.5)), 3.5)
    avg = neighbor_average(adj, a)
    # averages stay within the range of the inputs
    assert np.all(avg >= a.min() - 1e-9) and np.all(avg <= a.max() + 1e-9)


@given(graphs(), st.data())
def test_second_degree_is_monotone_and_contains_first(adj, data):
    two = second_degree(adj)
    m1, m2 = adj.matrix, two.matrix
    assert np.array_equal(m2, m2.T) and np.all(np.diag(m2) == 0)
    assert np.all(m2 >= m1)
    extra = data.draw(st.lists(st.sampled_from([(i, j) for i in range(1, adj.n + 1) for j in range(i + 1, adj.n + 1)]), max_size=4))
    bigger = from_edge_list(adj.n, sorted({(i + 1, j + 1) for i, j in adj.edges()} | set(extra)))
    assert np.all(second_degree(bigger).matrix >= m2)


@given(graphs(min_n=3, connected_ring=True), st.floats(0.1, 3), st.floats(-0.99, 0.99))
def test_car_precision_symmetric_and_positive_definite(adj, tau, phi):
    p = car_precision(adj, tau, phi).entries
    assert np.array_equal(p, p.T)
    assert np.linalg.eigvalsh(p).min() > 0


@settings(max_examples=60)
@given(graphs(min_n=3, connected_ring=True), st.floats(-0.95, 0.95), st.floats(-0.95, 0.95), st.floats(-0.99, 0.99))
def test_joint_precision_pd_exactly_when_scaled_spectrum_allows(adj, phi_u, phi_z, rho):
    d = adj.degrees
    lam = np.linalg.eigvalsh(adj.matrix / np.sqrt(np.outer(d, d)))
    margin = np.min((1 - phi_u * lam) * (1 - phi_z * lam) - rho**2)
    assume(abs(margin) > 1e-6)
    g = car_precision(adj, 1.3, phi_u, "conditional-U")
    h = car_precision(adj, 0.7, phi_z, "conditional-Z")
    if margin > 0:
        joint_precision(g, h, rho)
    else:
        with pytest.raises(NonPositiveDefiniteError):
            joint_precision(g, h, rho)


@settings(max_examples=30)
@given(graphs())
def test_edge_list_round_trip(tmp_path_factory, adj):
    path = tmp_path_factory.mktemp("el") / "g.txt"
    write_edge_list(adj, path)
    assert np.array_equal(read_edge_list(path, n=adj.n).matrix, adj.matrix)


@st.composite
def dags(draw):
    n = draw(st.integers(2, 7))
    nodes = [f"V{i}" for i in range(n)]
    pairs = [(nodes[i], nodes[j]) for i in range(n) for j in range(i + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True))
    return ScenarioDag("random", frozenset(nodes), frozenset(edges))


@settings(max_examples=300)
@given(dags(), st.data())
def test_d_separation_matches_trail_oracle_on_random_dags(dag, data):
    nodes = sorted(dag.nodes)
    x, y = data.draw(st.lists(st.sampled_from(nodes), min_size=2, max_size=2, unique=True))
    rest = [v for v in nodes if v not in (x, y)]
    cond = set(data.draw(st.lists(st.sampled_from(rest), unique=True))) if rest else set()
    sep = d_separated(dag, x, y, tuple(cond))
    assert sep == oracle_separated(dag, x, y, cond)
    assert sep == d_separated(dag, y, x, tuple(cond))


th_strategy = st.tuples(
    st.floats(0.05, 20), st.floats(0.05, 20), st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(-0.99, 0.99)
)


@given(th_strategy)
def test_sampler_transforms_invert(raw):
    tu, tz, a, b, rho = raw
    th = [tu, tz, min(a, b) * 0.999, max(a, b), rho]
    for k in range(5):
        assert _from_eta(k, _to_eta(k, th), th) == pytest.approx(th[k], rel=1e-9, abs=1e-12)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_lambda_mix_is_a_convex_combination(l0, l1, p, q, w):
    assert min(l0, l1) - 1e-9 <= lambda_mix(l0, l1, p) <= max(l0, l1) + 1e-9
    mixed = lambda_mix(l0, l1, w * p + (1 - w) * q)
    assert mixed == pytest.approx(w * lambda_mix(l0, l1, p) + (1 - w) * lambda_mix(l0, l1, q), abs=1e-9)


@settings(max_examples=40)
@given(graphs(min_n=2, max_n=7, connected_ring=True), st.floats(0, 1), st.floats(-2, 2), st.floats(-2, 2))
def test_linear_outcome_local_effect_is_the_slope(adj, pi, bz, bzbar):
    config = ScenarioConfig.for_scenario("2f", betaZ=bz, betaZbar=bzbar)
    lam = network_local_effect(config, adj, None, None, pi, exact=True)
    assert np.allclose(lam, bz, atol=1e-9)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-3, 3))
def test_pair_effects_do_not_depend_on_u_without_interaction(bz, bzbar, u):
    config = ScenarioConfig.for_scenario("2f", "binary-pair", betaZ=bz, betaZbar=bzbar)
    e = pair_effects(config, u=(u, -u))
    assert e.local == pytest.approx(bz, abs=1e-9)
    assert e.interference == pytest.approx(bzbar, abs=1e-9)


@given(st.integers(0, 2**32), st.lists(st.integers(0, 1000), max_size=3))
def test_replication_streams_are_reproducible_and_distinct(seed, key):
    a = replication_rng(seed, *key).random(4)
    assert np.array_equal(a, replication_rng(seed, *key).random(4))
    assert not np.array_equal(a, replication_rng(seed, *key, 1).random(4))
