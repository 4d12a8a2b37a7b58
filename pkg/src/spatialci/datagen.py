"""Synthetic data generators for the paired-binary and Gaussian CAR designs."""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import InvalidArgumentError
from .spatial import (
    AdjacencyStructure,
    car_precision,
    joint_precision,
    neighbor_average,
    pair_adjacency,
    read_edge_list,
    sample_from_precision,
    write_edge_list,
)

SCENARIO_IDS = ("2a", "2b", "2c", "2d", "2e", "2f")
DESIGNS = ("binary-pair", "gaussian")

# Coefficients of the measured covariates used throughout the main simulations.
GAMMA_C = (-0.35, -0.64, 0.49, 0.06)
BETA_C = (0.06, 0.85, 0.02, 0.33)


def _zeroed(scenario_id: str, design: str) -> tuple[str, ...]:
    """Coefficients a scenario forces to zero."""
    if scenario_id == "2a":
        return ("betaZbar", "betaUbar")
    if scenario_id == "2b":
        return ("betaU", "betaUbar", "betaUZ" if design == "binary-pair" else "rho")
    if scenario_id == "2c":
        return ("betaZbar",)
    if scenario_id == "2d":
        return ("betaUbar",)
    if scenario_id == "2e":
        return ("betaU", "betaUbar")
    if scenario_id == "2f":
        return ()
    raise InvalidArgumentError(f"unknown scenario {scenario_id!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str = "2f"
    design: str = "gaussian"
    beta0: float = 0.0
    betaZ: float = 1.0
    betaZbar: float = 0.8
    betaU: float = 1.0
    betaUbar: float = 0.5
    betaC: tuple = ()
    gamma0: float = 0.0
    gammaC: tuple = ()
    tauU2: float = 1.0
    tauZ2: float = 1.0
    phiU: float = 0.6
    phiZ: float = 0.4
    rho: float = 0.35
    sigmaY2: float = 1.0
    betaUZ: float = 1.0

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise InvalidArgumentError(f"unknown design {self.design!r}")
        object.__setattr__(self, "betaC", tuple(float(b) for b in self.betaC))
        object.__setattr__(self, "gammaC", tuple(float(g) for g in self.gammaC))
        if len(self.betaC) != len(self.gammaC):
            raise InvalidArgumentError("betaC and gammaC must have the same length")
        for name in _zeroed(self.scenario_id, self.design):
            if getattr(self, name) != 0:
                raise InvalidArgumentError(
                    f"scenario {self.scenario_id} requires {name} = 0, got {getattr(self, name)}"
                )
        if self.tauU2 <= 0 or self.tauZ2 <= 0 or self.sigmaY2 < 0:
            raise InvalidArgumentError("variances must be positive")
        for name in ("phiU", "phiZ", "rho"):
            if not abs(getattr(self, name)) < 1:
                raise InvalidArgumentError(f"|{name}| must be < 1")

    @property
    def p(self) -> int:
        return len(self.betaC)

    @classmethod
    def for_scenario(cls, scenario_id: str, design: str = "gaussian", **overrides) -> "ScenarioConfig":
        """Defaults with the scenario's constrained coefficients set to zero."""
        base = {}
        if design == "binary-pair":
            base.update(phiU=0.7, phiZ=0.5, betaUZ=1.0, rho=0.0)
        for name in _zeroed(scenario_id, design):
            base[name] = 0.0
        base.update(overrides)
        return cls(scenario_id=scenario_id, design=design, **base)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def main_simulation_config(scenario_id: str, paired: bool = False, **overrides) -> ScenarioConfig:
    """Gaussian design with four covariates; tau^2 = 2 for pairs, 1 for networks."""
    tau2 = 2.0 if paired else 1.0
    kw = dict(betaC=BETA_C, gammaC=GAMMA_C, tauU2=tau2, tauZ2=tau2)
    kw.update(overrides)
    return ScenarioConfig.for_scenario(scenario_id, "gaussian", **kw)


@dataclass(frozen=True)
class Dataset:
    adjacency: AdjacencyStructure
    y: np.ndarray
    z: np.ndarray
    zbar: np.ndarray
    c: np.ndarray
    u: np.ndarray | None = None
    ubar: np.ndarray | None = None
    seed: int | None = None
    covariate_names: tuple = field(default=())

    def __post_init__(self):
        n = self.adjacency.n
        for name in ("y", "z", "zbar", "u", "ubar"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=float)
            if v.shape != (n,):
                raise InvalidArgumentError(f"{name} must have length {n}, got shape {v.shape}")
            if not np.all(np.isfinite(v)):
                raise InvalidArgumentError(f"{name} contains missing or non-finite values")
            object.__setattr__(self, name, v)
        c = np.asarray(self.c, dtype=float).reshape(n, -1)
        if not np.all(np.isfinite(c)):
            raise InvalidArgumentError("covariates contain missing or non-finite values")
        object.__setattr__(self, "c", c)
        if not self.covariate_names:
            object.__setattr__(self, "covariate_names", tuple(f"c{j + 1}" for j in range(c.shape[1])))

    @property
    def n(self) -> int:
        return self.adjacency.n

    @property
    def p(self) -> int:
        return self.c.shape[1]

    @property
    def has_latent(self) -> bool:
        return self.u is not None


def generate_covariates(n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1 or p < 0:
        raise InvalidArgumentError("need n >= 1 and p >= 0")
    return rng.standard_normal((n, p))


def sample_joint_uz(adj: AdjacencyStructure, config: ScenarioConfig, c, rng: np.random.Generator):
    """Draw ``(U, Z)`` jointly from the CAR-coupled Gaussian given covariates."""
    g = car_precision(adj, np.sqrt(config.tauU2), config.phiU, "conditional-U")
    h = car_precision(adj, np.sqrt(config.tauZ2), config.phiZ, "conditional-Z")
    p = joint_precision(g, h, config.rho)
    c = np.asarray(c, dtype=float).reshape(adj.n, -1)
    mu_z = config.gamma0 + (c @ np.asarray(config.gammaC) if config.p else 0.0)
    mean = np.concatenate([np.zeros(adj.n), mu_z * np.ones(adj.n)])
    x = sample_from_precision(p, mean, rng)
    return x[: adj.n], x[adj.n :]


def sample_outcome(config: ScenarioConfig, z, zbar, c, u, ubar, rng: np.random.Generator) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    n = z.shape[0]
    parts = [np.asarray(v, dtype=float) for v in (zbar, u, ubar)]
    if any(v.shape != (n,) for v in parts):
        raise InvalidArgumentError("z, zbar, u and ubar must have equal length")
    c = np.asarray(c, dtype=float).reshape(n, -1)
    if c.shape[1] != config.p:
        raise InvalidArgumentError(f"expected {config.p} covariates, got {c.shape[1]}")
    zbar, u, ubar = parts
    mean = (
        config.beta0
        + config.betaZ * z
        + config.betaZbar * zbar
        + config.betaU * u
        + config.betaUbar * ubar
    )
    if config.p:
        mean = mean + c @ np.asarray(config.betaC)
    return mean + np.sqrt(config.sigmaY2) * rng.standard_normal(n)


def generate_network_dataset(adj: AdjacencyStructure, config: ScenarioConfig, p: int | None, rng, seed=None) -> Dataset:
    p = config.p if p is None else p
    if p != config.p:
        raise InvalidArgumentError(f"config has {config.p} covariate coefficients but p={p}")
    c = generate_covariates(adj.n, p, rng)
    u, z = sample_joint_uz(adj, config, c, rng)
    zbar = neighbor_average(adj, z)
    ubar = neighbor_average(adj, u)
    y = sample_outcome(config, z, zbar, c, u, ubar, rng)
    return Dataset(adj, y, z, zbar, c, u, ubar, seed)


def _bivariate_pairs(n_pairs: int, corr: float, rng) -> np.ndarray:
    """Unit-variance pairs with correlation ``corr``, flattened pair by pair."""
    a = rng.standard_normal((n_pairs, 2))
    b0 = a[:, 0]
    b1 = corr * a[:, 0] + np.sqrt(1 - corr**2) * a[:, 1]
    return np.column_stack([b0, b1]).ravel()


def generate_paired_binary_dataset(n_pairs: int, config: ScenarioConfig, rng, seed=None) -> Dataset:
    """Binary exposure through a logistic link on ``betaUZ * U + eps_Z``."""
    adj = pair_adjacency(n_pairs)
    u = _bivariate_pairs(n_pairs, config.phiU, rng)
    eps = _bivariate_pairs(n_pairs, config.phiZ, rng)
    z = (rng.random(adj.n) < expit(config.betaUZ * u + eps)).astype(float)
    zbar = neighbor_average(adj, z)
    ubar = neighbor_average(adj, u)
    c = np.zeros((adj.n, 0))
    y = sample_outcome(config.replace(betaC=(), gammaC=()), z, zbar, c, u, ubar, rng)
    return Dataset(adj, y, z, zbar, c, u, ubar, seed)


def replication_rng(seed: int, *stream) -> np.random.Generator:
    """Generator for an index-keyed stream; independent of call order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(s) for s in stream)))


# -- serialisation -----------------------------------------------------------


def write_dataset(ds: Dataset, path, edges_path=None) -> None:
    path = Path(path)
    edges_path = Path(edges_path) if edges_path else path.with_suffix(".edges")
    header = ["y", "z", "zbar", *ds.covariate_names]
    cols = [ds.y, ds.z, ds.zbar, *ds.c.T]
    if ds.has_latent:
        header += ["u", "ubar"]
        cols += [ds.u, ds.ubar]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([f"{x:.17g}" for x in row])
    write_edge_list(ds.adjacency, edges_path)


def read_dataset(path, edges_path=None) -> Dataset:
    path = Path(path)
    edges_path = Path(edges_path) if edges_path else path.with_suffix(".edges")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float).reshape(len(rows) - 1, len(rows[0]))
    col = {name: body[:, k] for k, name in enumerate(header)}
    cov = [h for h in header if h not in ("y", "z", "zbar", "u", "ubar")]
    adj = read_edge_list(edges_path, n=body.shape[0])
    return Dataset(
        adj,
        col["y"],
        col["z"],
        col["zbar"],
        body[:, [header.index(h) for h in cov]],
        col.get("u"),
        col.get("ubar"),
        covariate_names=tuple(cov),
    )
