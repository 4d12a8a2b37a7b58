import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from spatialci.errors import InvalidArgumentError, IsolatedUnitError, NonPositiveDefiniteError
from spatialci.spatial import (
    AdjacencyStructure,
    car_precision,
    cholesky_pd,
    from_edge_list,
    joint_precision,
    kernel_adjacency,
    line_adjacency,
    neighbor_average,
    pair_adjacency,
    read_edge_list,
    sample_from_precision,
    second_degree,
    write_edge_list,
)


class TestConstructors:
    def test_single_pair(self):
        adj = pair_adjacency(1)
        assert_array_equal(adj.matrix, [[0, 1], [1, 0]])
        assert_array_equal(adj.degrees, [1, 1])

    def test_two_pairs_block_diagonal(self):
        adj = pair_adjacency(2)
        assert adj.n == 4
        assert adj.matrix[0, 2] == 0
        assert adj.matrix[2, 3] == 1

    def test_hundred_pairs_median_degree(self):
        assert pair_adjacency(100).median_degree == 1

    @pytest.mark.parametrize("bad", [0, -3, 1.5])
    def test_pair_rejects_bad_counts(self, bad):
        with pytest.raises(InvalidArgumentError):
            pair_adjacency(bad)

    def test_line_degrees(self):
        assert_array_equal(line_adjacency(3).degrees, [1, 2, 1])
        assert line_adjacency(100).median_degree == 2

    def test_line_of_two_is_a_pair(self):
        assert line_adjacency(2) == pair_adjacency(1)

    def test_line_rejects_single_unit(self):
        with pytest.raises(InvalidArgumentError):
            line_adjacency(1)

    def test_edge_list_degrees(self):
        assert_array_equal(from_edge_list(3, [(1, 2)]).degrees, [1, 1, 0])

    def test_edge_list_coalesces_duplicates(self):
        adj = from_edge_list(3, [(1, 2), (2, 1)])
        assert adj.degrees[1] == 1

    def test_edge_list_rejects_self_loop_and_range(self):
        with pytest.raises(InvalidArgumentError):
            from_edge_list(2, [(1, 1)])
        with pytest.raises(InvalidArgumentError):
            from_edge_list(2, [(1, 3)])

    def test_adjacency_validation(self):
        with pytest.raises(InvalidArgumentError):
            AdjacencyStructure(np.array([[0, 1], [0, 0]]))
        with pytest.raises(InvalidArgumentError):
            AdjacencyStructure(np.eye(2))

    def test_matrix_is_read_only(self):
        adj = line_adjacency(4)
        with pytest.raises(ValueError):
            adj.matrix[0, 1] = 5

    def test_kernel_weights(self):
        d = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], float)
        adj = kernel_adjacency(d)
        assert adj.matrix[0, 1] == pytest.approx(np.exp(-1))
        assert adj.matrix[0, 0] == 0
        assert not adj.is_binary


class TestSecondDegree:
    def test_line_two_hops(self):
        a2 = second_degree(line_adjacency(4))
        assert a2.matrix[0, 2] == 1
        assert a2.matrix[0, 3] == 0

    def test_pairs_unchanged(self):
        assert second_degree(pair_adjacency(5)) == pair_adjacency(5)

    def test_complete_graph_unchanged(self):
        k3 = AdjacencyStructure(np.ones((3, 3)) - np.eye(3))
        assert second_degree(k3) == k3


class TestNeighborAverage:
    def test_pair_swaps(self):
        assert_array_equal(neighbor_average(pair_adjacency(1), [1.0, 0.0]), [0.0, 1.0])

    def test_line_midpoint(self):
        assert_array_equal(neighbor_average(line_adjacency(3), [1.0, 0.0, 1.0]), [0.0, 1.0, 0.0])

    def test_constants_preserved(self):
        adj = second_degree(line_adjacency(9))
        assert_allclose(neighbor_average(adj, np.full(9, 3.25)), 3.25)

    def test_isolated_unit_raises(self):
        adj = from_edge_list(3, [(1, 2)])
        with pytest.raises(IsolatedUnitError):
            neighbor_average(adj, np.zeros(3))

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            neighbor_average(line_adjacency(3), np.zeros(4))


class TestPrecision:
    def test_car_formula(self):
        g = car_precision(line_adjacency(3), 1.0, 0.5)
        assert_allclose(g.entries, [[1, -0.5, 0], [-0.5, 2, -0.5], [0, -0.5, 1]])

    def test_car_independence(self):
        adj = line_adjacency(5)
        assert_allclose(car_precision(adj, 2.0, 0.0).entries, 4 * np.diag(adj.degrees))

    def test_car_near_unit_phi_factorizes(self):
        low = car_precision(line_adjacency(50), 1.0, 0.99).cholesky()
        assert np.all(np.diag(low) > 0)

    @pytest.mark.parametrize("tau,phi", [(0.0, 0.5), (-1.0, 0.5), (1.0, 1.0), (1.0, -1.2)])
    def test_car_rejects_invalid(self, tau, phi):
        with pytest.raises(InvalidArgumentError):
            car_precision(line_adjacency(3), tau, phi)

    def test_joint_coupling_value(self):
        adj = pair_adjacency(1)
        g = car_precision(adj, 1.0, 0.2)
        h = car_precision(adj, 2.0, 0.2)
        p = joint_precision(g, h, 0.35)
        assert p.entries[0, 2] == pytest.approx(-0.7)
        assert p.entries[0, 3] == 0.0

    def test_joint_rho_zero_is_direct_sum(self):
        adj = line_adjacency(6)
        g = car_precision(adj, 1.3, 0.6)
        h = car_precision(adj, 0.7, 0.4)
        p = joint_precision(g, h, 0.0)
        expect = np.zeros((12, 12))
        expect[:6, :6] = g.entries
        expect[6:, 6:] = h.entries
        assert_array_equal(p.entries, expect)

    def test_joint_defaults_positive_definite(self):
        adj = line_adjacency(100)
        p = joint_precision(car_precision(adj, 1.0, 0.6), car_precision(adj, 1.0, 0.4), 0.35)
        assert p.kind == "joint-UZ"
        cholesky_pd(p.entries)

    def test_joint_cross_block_is_exactly_diagonal(self):
        adj = second_degree(line_adjacency(20))
        p = joint_precision(car_precision(adj, 1.1, 0.3), car_precision(adj, 0.9, 0.5), -0.4).entries
        cross = p[:20, 20:]
        assert_array_equal(cross, np.diag(np.diag(cross)))

    def test_joint_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            joint_precision(car_precision(line_adjacency(3), 1, 0), car_precision(line_adjacency(4), 1, 0), 0.1)

    def test_joint_not_positive_definite(self):
        # near-unit phi leaves little room for a strong coupling
        adj = line_adjacency(10)
        g = car_precision(adj, 1.0, 0.99)
        h = car_precision(adj, 1.0, 0.99)
        with pytest.raises(NonPositiveDefiniteError):
            joint_precision(g, h, 0.9)

    def test_cholesky_rejects_indefinite(self):
        with pytest.raises(NonPositiveDefiniteError):
            cholesky_pd(np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestSampler:
    def test_empirical_covariance_matches_dense_inverse(self, rng):
        adj = line_adjacency(12)
        p = joint_precision(car_precision(adj, 1.0, 0.6), car_precision(adj, 1.0, 0.4), 0.35)
        mean = np.linspace(-1, 1, 24)
        x = sample_from_precision(p, mean, rng, size=10_000)
        assert x.shape == (10_000, 24)
        assert np.max(np.abs(np.cov(x.T) - np.linalg.inv(p.entries))) < 0.1
        assert np.max(np.abs(x.mean(axis=0) - mean)) < 0.1

    def test_single_draw_shape(self, rng):
        p = car_precision(line_adjacency(4), 1.0, 0.2)
        assert sample_from_precision(p, np.zeros(4), rng).shape == (4,)


class TestEdgeListFiles:
    def test_round_trip(self, tmp_path):
        adj = second_degree(line_adjacency(7))
        path = tmp_path / "edges.txt"
        write_edge_list(adj, path, header="test graph")
        assert read_edge_list(path) == adj

    def test_comments_and_explicit_n(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("# header\n1 2\n\n2 3\n")
        adj = read_edge_list(path, n=5)
        assert adj.n == 5
        assert_array_equal(adj.isolated(), [3, 4])

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("1 2 3\n")
        with pytest.raises(InvalidArgumentError):
            read_edge_list(path)
