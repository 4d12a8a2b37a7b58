"""Shared builders for the Bayesian tests."""

import math

import numpy as np

from spatialci.bayes import McmcState, SpatialModel, default_priors
from spatialci.datagen import generate_network_dataset, main_simulation_config, replication_rng
from spatialci.spatial import line_adjacency, pair_adjacency, second_degree


def small_problem(kind="line", n=12, seed=0, scenario="2f"):
    """Return ``(dataset, priors, gh_adjacency, model)`` for a tiny problem."""
    if kind == "line":
        adj, gh = line_adjacency(n), None
    elif kind == "decoupled":
        adj, gh = second_degree(line_adjacency(n)), line_adjacency(n)
    elif kind == "pairs":
        adj, gh = pair_adjacency(n // 2), None
    else:
        raise ValueError(kind)
    cfg = main_simulation_config(scenario, paired=kind == "pairs")
    ds = generate_network_dataset(adj, cfg, 4, replication_rng(seed, 17))
    priors = default_priors(ds, gh)
    return ds, priors, gh, SpatialModel(ds, priors, gh)


def random_theta(model, rng):
    while True:
        phi_z = rng.uniform(0.05, 0.95)
        phi_u = phi_z * rng.uniform(0.05, 0.95)
        rho = rng.uniform(-0.8, 0.8)
        if np.all((1 - phi_u * model.lam) * (1 - phi_z * model.lam) - rho**2 > 1e-3):
            break
    lo, hi = 1 / model.priors.tauZ_upper, 1 / model.priors.tauZ_lower
    return dict(
        tauU=math.exp(rng.uniform(-1, 1)),
        tauZ=float(rng.uniform(lo * 1.01, min(hi, 10 * lo) * 0.99)),
        phiU=phi_u,
        phiZ=phi_z,
        rho=rho,
    )


def random_block(block, model, rng, state=None):
    p, n = model.p, model.n
    if block == "beta":
        return dict(beta0=rng.normal(), betaZ=rng.normal(), betaZbar=rng.normal(), betaUbar=rng.normal(0, 0.4), betaC=rng.normal(size=p))
    if block == "sigma2":
        return dict(sigmaY2=math.exp(rng.normal(0, 0.7)))
    if block == "gamma":
        return dict(gamma0=rng.normal(), gammaC=rng.normal(size=p))
    if block == "U":
        return dict(U=rng.normal(size=n))
    if block == "theta":
        return random_theta(model, rng)
    raise ValueError(block)


def random_state(model, rng):
    fields = {}
    for block in ("beta", "sigma2", "gamma", "U", "theta"):
        fields.update(random_block(block, model, rng))
    return McmcState(**fields)
