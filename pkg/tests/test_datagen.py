import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from spatialci.datagen import (
    BETA_C,
    GAMMA_C,
    ScenarioConfig,
    generate_covariates,
    generate_network_dataset,
    generate_paired_binary_dataset,
    main_simulation_config,
    read_dataset,
    replication_rng,
    sample_joint_uz,
    sample_outcome,
    write_dataset,
)
from spatialci.errors import InvalidArgumentError, NonPositiveDefiniteError
from spatialci.spatial import (
    car_precision,
    joint_precision,
    line_adjacency,
    neighbor_average,
    pair_adjacency,
    second_degree,
)


class TestConfig:
    @pytest.mark.parametrize(
        "sid,forced",
        [
            ("2a", ("betaZbar", "betaUbar")),
            ("2b", ("betaU", "betaUbar", "rho")),
            ("2c", ("betaZbar",)),
            ("2d", ("betaUbar",)),
            ("2e", ("betaU", "betaUbar")),
        ],
    )
    def test_scenario_constraints(self, sid, forced):
        cfg = ScenarioConfig.for_scenario(sid)
        for name in forced:
            assert getattr(cfg, name) == 0
            with pytest.raises(InvalidArgumentError):
                cfg.replace(**{name: 0.3})

    def test_pair_design_constrains_exposure_predictor(self):
        cfg = ScenarioConfig.for_scenario("2b", "binary-pair")
        assert cfg.betaUZ == 0
        with pytest.raises(InvalidArgumentError):
            cfg.replace(betaUZ=1.0)

    def test_full_scenario_unconstrained(self):
        ScenarioConfig.for_scenario("2f", betaZbar=0.8, betaUbar=0.5, rho=0.35)

    def test_main_defaults(self):
        net = main_simulation_config("2f")
        assert (net.phiU, net.phiZ, net.rho, net.tauU2, net.tauZ2) == (0.6, 0.4, 0.35, 1.0, 1.0)
        assert net.gammaC == GAMMA_C == (-0.35, -0.64, 0.49, 0.06)
        assert net.betaC == BETA_C == (0.06, 0.85, 0.02, 0.33)
        assert (net.betaZ, net.betaZbar) == (1.0, 0.8)
        pairs = main_simulation_config("2f", paired=True)
        assert (pairs.tauU2, pairs.tauZ2) == (2.0, 2.0)

    @pytest.mark.parametrize("bad", [dict(tauU2=0.0), dict(phiU=1.0), dict(rho=-1.2), dict(design="grid")])
    def test_invalid_values(self, bad):
        with pytest.raises(InvalidArgumentError):
            ScenarioConfig(**bad)

    def test_coefficient_lengths_must_match(self):
        with pytest.raises(InvalidArgumentError):
            ScenarioConfig(betaC=(1.0,), gammaC=())


class TestCovariates:
    def test_moments_and_determinism(self):
        c = generate_covariates(500, 4, replication_rng(1, 0))
        assert c.shape == (500, 4)
        assert np.all(np.abs(c.mean(axis=0)) < 4 / np.sqrt(500))
        assert_array_equal(c, generate_covariates(500, 4, replication_rng(1, 0)))

    def test_empty(self):
        assert generate_covariates(10, 0, replication_rng(0)).shape == (10, 0)


class TestJointSampler:
    def test_decoupled_case_uncorrelated(self):
        adj = pair_adjacency(500)
        cfg = ScenarioConfig(phiU=0.0, phiZ=0.0, rho=0.0)
        rng = replication_rng(2)
        draws = [sample_joint_uz(adj, cfg, np.zeros((adj.n, 0)), rng) for _ in range(10)]
        u = np.concatenate([d[0] for d in draws])
        z = np.concatenate([d[1] for d in draws])
        assert abs(np.corrcoef(u, z)[0, 1]) < 0.05

    def test_pair_covariance_matches_dense_inverse(self):
        adj = pair_adjacency(3)
        cfg = main_simulation_config("2f", paired=True)
        c = generate_covariates(adj.n, 4, replication_rng(3))
        rng = replication_rng(4)
        draws = np.array([np.concatenate(sample_joint_uz(adj, cfg, c, rng)) for _ in range(10_000)])
        g = car_precision(adj, np.sqrt(cfg.tauU2), cfg.phiU)
        h = car_precision(adj, np.sqrt(cfg.tauZ2), cfg.phiZ)
        cov = np.linalg.inv(joint_precision(g, h, cfg.rho).entries)
        assert np.max(np.abs(np.cov(draws.T) - cov)) < 0.1
        mu_z = c @ np.array(cfg.gammaC)
        assert np.max(np.abs(draws[:, adj.n :].mean(axis=0) - mu_z)) < 0.05

    def test_inadmissible_parameters(self):
        cfg = ScenarioConfig(phiU=0.99, phiZ=0.99, rho=0.95)
        with pytest.raises(NonPositiveDefiniteError):
            sample_joint_uz(line_adjacency(10), cfg, np.zeros((10, 0)), replication_rng(0))

    def test_linear_functionals_pass_ks(self):
        adj = line_adjacency(8)
        cfg = ScenarioConfig()
        g = car_precision(adj, 1.0, cfg.phiU)
        h = car_precision(adj, 1.0, cfg.phiZ)
        cov = np.linalg.inv(joint_precision(g, h, cfg.rho).entries)
        rng = replication_rng(5)
        c = np.zeros((8, 0))
        draws = np.array([np.concatenate(sample_joint_uz(adj, cfg, c, rng)) for _ in range(2000)])
        arng = np.random.default_rng(6)
        trials, passed = 200, 0
        for _ in range(trials):
            a = arng.standard_normal(16)
            passed += stats.kstest(draws @ a, "norm", args=(0.0, np.sqrt(a @ cov @ a))).pvalue > 0.01
        assert passed >= 0.95 * trials


class TestOutcome:
    def test_noiseless_formula(self):
        cfg = ScenarioConfig(beta0=0.5, betaZ=1.0, sigmaY2=0.0)
        y = sample_outcome(cfg, np.ones(3), np.zeros(3), np.zeros((3, 0)), np.zeros(3), np.zeros(3), replication_rng(0))
        assert_allclose(y, 1.5)

    def test_no_confounder_dependence_under_interference_only(self):
        cfg = ScenarioConfig.for_scenario("2b", sigmaY2=0.0)
        z = np.linspace(0, 1, 5)
        base = sample_outcome(cfg, z, z[::-1], np.zeros((5, 0)), np.zeros(5), np.zeros(5), replication_rng(0))
        moved = sample_outcome(cfg, z, z[::-1], np.zeros((5, 0)), np.full(5, 9.0), np.full(5, -4.0), replication_rng(0))
        assert_array_equal(base, moved)

    def test_residual_variance(self):
        cfg = ScenarioConfig(sigmaY2=2.5)
        n = 10_000
        zeros = np.zeros(n)
        y = sample_outcome(cfg, zeros, zeros, np.zeros((n, 0)), zeros, zeros, replication_rng(7))
        assert abs(np.var(y) / 2.5 - 1) < 0.1

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            sample_outcome(ScenarioConfig(), np.zeros(3), np.zeros(2), np.zeros((3, 0)), np.zeros(3), np.zeros(3), replication_rng(0))


class TestDatasets:
    def test_network_dataset_consistency(self):
        adj = line_adjacency(60)
        ds = generate_network_dataset(adj, main_simulation_config("2f"), 4, replication_rng(8))
        assert_array_equal(ds.zbar, neighbor_average(adj, ds.z))
        assert_array_equal(ds.ubar, neighbor_average(adj, ds.u))
        assert ds.c.shape == (60, 4)
        assert ds.covariate_names == ("c1", "c2", "c3", "c4")

    def test_network_dataset_deterministic(self):
        adj = second_degree(line_adjacency(30))
        a = generate_network_dataset(adj, main_simulation_config("2c"), 4, replication_rng(9, 1))
        b = generate_network_dataset(adj, main_simulation_config("2c"), 4, replication_rng(9, 1))
        for name in ("y", "z", "u", "c"):
            assert_array_equal(getattr(a, name), getattr(b, name))

    def test_covariate_count_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            generate_network_dataset(line_adjacency(10), main_simulation_config("2f"), 3, replication_rng(0))

    def test_binary_marginal_without_confounding(self):
        cfg = ScenarioConfig.for_scenario("2b", "binary-pair")
        z = np.concatenate([generate_paired_binary_dataset(1000, cfg, replication_rng(10, b)).z for b in range(10)])
        assert abs(z.mean() - 0.5) < 0.02
        assert set(np.unique(z)) == {0.0, 1.0}

    def test_binary_within_pair_confounder_correlation(self):
        cfg = ScenarioConfig.for_scenario("2a", "binary-pair")
        u = np.concatenate([generate_paired_binary_dataset(1000, cfg, replication_rng(11, b)).u for b in range(10)])
        u = u.reshape(-1, 2)
        assert abs(np.corrcoef(u[:, 0], u[:, 1])[0, 1] - 0.7) < 0.03

    def test_binary_deterministic(self):
        cfg = ScenarioConfig.for_scenario("2f", "binary-pair")
        a = generate_paired_binary_dataset(50, cfg, replication_rng(12))
        b = generate_paired_binary_dataset(50, cfg, replication_rng(12))
        assert_array_equal(a.y, b.y)

    def test_missing_values_rejected(self):
        adj = line_adjacency(3)
        from spatialci.datagen import Dataset

        with pytest.raises(InvalidArgumentError):
            Dataset(adj, np.array([1.0, np.nan, 0.0]), np.zeros(3), np.zeros(3), np.zeros((3, 0)))

    def test_csv_round_trip_is_lossless(self, tmp_path):
        ds = generate_network_dataset(line_adjacency(25), main_simulation_config("2f"), 4, replication_rng(13))
        write_dataset(ds, tmp_path / "d.csv")
        back = read_dataset(tmp_path / "d.csv")
        for name in ("y", "z", "zbar", "c", "u", "ubar"):
            assert_array_equal(getattr(back, name), getattr(ds, name))
        assert back.adjacency == ds.adjacency


def test_replication_streams_are_independent_of_call_order():
    a = replication_rng(5, 3).standard_normal(4)
    replication_rng(5, 1).standard_normal(100)
    assert_array_equal(a, replication_rng(5, 3).standard_normal(4))
    assert not np.array_equal(a, replication_rng(5, 4).standard_normal(4))
