"""Local and interference estimands under the linear structural model.

Effects are obtained by differencing potential-outcome means rather than by
reading coefficients, so they double as an oracle for the estimators.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, IsolatedUnitError
from .spatial import AdjacencyStructure

MAX_ENUM_DEGREE = 10


@dataclass(frozen=True)
class EffectPair:
    local: float
    interference: float
    conditioning_level: object = None


def po_mean(config, z, zbar, c=(), u=0.0, ubar=0.0):
    """Mean potential outcome ``E[Y_i(z, zbar) | c, u, ubar]``; broadcasts."""
    out = (
        config.beta0
        + config.betaZ * np.asarray(z, dtype=float)
        + config.betaZbar * np.asarray(zbar, dtype=float)
        + config.betaU * np.asarray(u, dtype=float)
        + config.betaUbar * np.asarray(ubar, dtype=float)
    )
    c = np.asarray(c, dtype=float)
    if c.size:
        if c.shape[-1] != config.p:
            raise InvalidArgumentError(f"expected {config.p} covariates, got {c.shape[-1]}")
        out = out + c @ np.asarray(config.betaC)
    elif config.p and c.ndim and c.shape[-1] not in (0, config.p):
        raise InvalidArgumentError("covariate length mismatch")
    return out if out.ndim else float(out)


def pair_effects(config, level: int = 0, unit: int = 0, u=(0.0, 0.0), c=None) -> EffectPair:
    """``lambda_i(z)`` and ``iota_i(z)`` for a pair by potential-outcome differencing."""
    if level not in (0, 1):
        raise InvalidArgumentError("level must be 0 or 1")
    ui, uj = (u[0], u[1]) if unit == 0 else (u[1], u[0])
    ci = () if c is None else c
    local = po_mean(config, 1, level, ci, ui, uj) - po_mean(config, 0, level, ci, ui, uj)
    interference = po_mean(config, level, 1, ci, ui, uj) - po_mean(config, level, 0, ci, ui, uj)
    return EffectPair(float(local), float(interference), level)


def lambda_mix(lambda0: float, lambda1: float, pi: float) -> float:
    """``pi * lambda(1) + (1 - pi) * lambda(0)``."""
    if not 0 <= pi <= 1:
        raise InvalidArgumentError(f"pi must lie in [0, 1], got {pi}")
    return pi * lambda1 + (1 - pi) * lambda0


def _neighbors(adj: AdjacencyStructure):
    iso = adj.isolated()
    if iso.size:
        raise IsolatedUnitError(iso)
    return [np.flatnonzero(adj.matrix[i]) for i in range(adj.n)]


def _avg_outcome_mc(config, adj, c, u, z_own, pi, n_draws, rng):
    """Per-unit Monte Carlo draws of the policy-averaged outcome.

    Returns an ``(n_draws, n)`` array; the neighbours' exposures are iid
    Bernoulli(pi) and the unit's own exposure is fixed at ``z_own``.
    """
    nb = _neighbors(adj)
    w = adj.matrix / adj.degrees[:, None]
    ubar = w @ u
    draws = np.empty((n_draws, adj.n))
    for i in range(adj.n):
        zn = rng.random((n_draws, nb[i].size)) < pi
        zbar = zn @ w[i, nb[i]]
        draws[:, i] = po_mean(config, z_own, zbar, c[i], u[i], ubar[i])
    return draws


def _avg_outcome_exact(config, adj, c, u, z_own, pi):
    nb = _neighbors(adj)
    w = adj.matrix / adj.degrees[:, None]
    ubar = w @ u
    out = np.empty(adj.n)
    for i in range(adj.n):
        k = nb[i].size
        if k > MAX_ENUM_DEGREE:
            raise InvalidArgumentError(f"unit {i} has degree {k} > {MAX_ENUM_DEGREE}; use Monte Carlo")
        total = 0.0
        for assign in itertools.product((0.0, 1.0), repeat=k):
            a = np.array(assign)
            prob = np.prod(np.where(a == 1, pi, 1 - pi))
            total += prob * po_mean(config, z_own, a @ w[i, nb[i]], c[i], u[i], ubar[i])
        out[i] = total
    return out


def _prep(config, adj, c, u):
    c = np.zeros((adj.n, 0)) if c is None else np.asarray(c, dtype=float).reshape(adj.n, -1)
    u = np.zeros(adj.n) if u is None else np.asarray(u, dtype=float)
    return c, u


def network_local_effect(config, adj, c, u, pi, n_draws=1000, rng=None, exact=False, return_se=False):
    """Per-unit ``lambda_i(pi)`` with neighbours treated iid Bernoulli(pi)."""
    if not 0 <= pi <= 1:
        raise InvalidArgumentError("pi must lie in [0, 1]")
    c, u = _prep(config, adj, c, u)
    if exact:
        return _avg_outcome_exact(config, adj, c, u, 1.0, pi) - _avg_outcome_exact(config, adj, c, u, 0.0, pi)
    if n_draws < 1:
        raise InvalidArgumentError("n_draws must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    d1 = _avg_outcome_mc(config, adj, c, u, 1.0, pi, n_draws, rng)
    d0 = _avg_outcome_mc(config, adj, c, u, 0.0, pi, n_draws, rng)
    return _mc_contrast(d1, d0, return_se)


def network_interference_effect(config, adj, c, u, z, pi, pi_prime, n_draws=1000, rng=None, exact=False, return_se=False):
    """Per-unit ``iota_i(pi, pi'; z)``: own exposure fixed at ``z``."""
    if z not in (0, 1):
        raise InvalidArgumentError("z must be 0 or 1")
    for p in (pi, pi_prime):
        if not 0 <= p <= 1:
            raise InvalidArgumentError("pi must lie in [0, 1]")
    c, u = _prep(config, adj, c, u)
    if pi == pi_prime:
        zeros = np.zeros(adj.n)
        return (zeros, zeros.copy()) if return_se else zeros
    if exact:
        return _avg_outcome_exact(config, adj, c, u, z, pi_prime) - _avg_outcome_exact(config, adj, c, u, z, pi)
    if n_draws < 1:
        raise InvalidArgumentError("n_draws must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    d1 = _avg_outcome_mc(config, adj, c, u, z, pi_prime, n_draws, rng)
    d0 = _avg_outcome_mc(config, adj, c, u, z, pi, n_draws, rng)
    return _mc_contrast(d1, d0, return_se)


def _mc_contrast(d1, d0, return_se):
    est = d1.mean(axis=0) - d0.mean(axis=0)
    if not return_se:
        return est
    m = d1.shape[0]
    if m < 2:
        return est, np.full(est.shape, np.inf)
    se = np.sqrt((d1.var(axis=0, ddof=1) + d0.var(axis=0, ddof=1)) / m)
    return est, se
