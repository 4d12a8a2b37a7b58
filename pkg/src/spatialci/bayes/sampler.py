"""Metropolis-within-Gibbs sampler and the chain container."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from ..errors import InvalidArgumentError, NonPositiveDefiniteError
from ..ols import fit_ols
from .model import THETA_NAMES, McmcState, SpatialModel

DEFAULT_N_ITER = 25_000
DEFAULT_BURNIN = 7_000
DEFAULT_THIN = 60
TARGET_ACCEPT = 0.35
INITIAL_STEP = 0.3


# Unconstrained coordinates for each hyperparameter.  The ordering
# phiU < phiZ makes the phiU map depend on the current phiZ, so every map
# takes the full theta tuple ``(tauU, tauZ, phiU, phiZ, rho)``.  ``_log_jac``
# is log |d theta_k / d eta_k|.


def _logit(x):
    return math.log(x) - math.log1p(-x)


def _expit(x):
    return 1.0 / (1.0 + math.exp(-x)) if x >= 0 else math.exp(x) / (1.0 + math.exp(x))


def _to_eta(k: int, th) -> float:
    v = th[k]
    if k < 2:
        return math.log(v)
    if k == 2:
        return _logit(v / th[3])
    return math.atanh(v)


def _from_eta(k: int, eta: float, th) -> float:
    if k < 2:
        return math.exp(eta)
    if k == 2:
        return th[3] * _expit(eta)
    return math.tanh(eta)


def _log_jac(k: int, th) -> float:
    v = th[k]
    if k < 2:
        return math.log(v)
    if k == 2:
        r = v / th[3]
        if not 0 < r < 1:
            return -math.inf
        return math.log(v) + math.log1p(-r)
    return math.log1p(-v * v) if abs(v) < 1 else -math.inf


@dataclass
class Tuning:
    """Per-hyperparameter random-walk step sizes on the unconstrained scale."""

    steps: dict = field(default_factory=lambda: {k: INITIAL_STEP for k in THETA_NAMES})
    accepted: dict = field(default_factory=lambda: {k: 0 for k in THETA_NAMES})
    proposed: dict = field(default_factory=lambda: {k: 0 for k in THETA_NAMES})
    rejected_pd: int = 0

    @classmethod
    def fixed(cls, step: float) -> "Tuning":
        return cls(steps={k: step for k in THETA_NAMES})

    def reset_counts(self):
        self.accepted = {k: 0 for k in THETA_NAMES}
        self.proposed = {k: 0 for k in THETA_NAMES}

    def rates(self) -> dict:
        return {k: (self.accepted[k] / self.proposed[k] if self.proposed[k] else float("nan")) for k in THETA_NAMES}


def _draw_from_system(prec, lin, rng) -> np.ndarray:
    """Draw from ``N(prec^{-1} lin, prec^{-1})`` with ``prec = R'R``."""
    r, info = lapack.dpotrf(prec, lower=0, clean=1)
    if info:
        raise NonPositiveDefiniteError("conditional precision is not positive definite")
    mean, _ = lapack.dpotrs(r, lin, lower=0)
    x, _ = lapack.dtrtrs(r, rng.standard_normal(lin.shape[0]), lower=0)
    return mean + x


def mcmc_step(state: McmcState, model: SpatialModel, tuning: Tuning, rng, last_accept=None) -> McmcState:
    """One sweep: beta, sigma^2, gamma, U (Gibbs), then the five hyperparameters (MH)."""
    ubar = model.W_sp @ state.U
    state = state.with_beta(_draw_from_system(*model.beta_system(state, ubar), rng))

    a, b = model.sigma2_conditional(state, ubar)
    state = state.replace(sigmaY2=float(b / rng.gamma(a)))

    state = state.with_gamma(_draw_from_system(*model.gamma_system(state), rng))

    state = state.replace(U=model.draw_u(state, rng))

    suff = model.uz_stats(state)
    th = list(state.theta())
    cur = model.theta_log_target(th, suff)
    for k, name in enumerate(THETA_NAMES):
        step = tuning.steps[name]
        tuning.proposed[name] += 1
        eps = rng.standard_normal()
        log_u = math.log(rng.random())
        if step == 0.0:
            if last_accept is not None:
                last_accept[name] = 0.0
            continue
        prop = th.copy()
        prop[k] = _from_eta(k, _to_eta(k, th) + step * eps, th)
        new_lp = model.theta_log_target(prop, suff)
        if new_lp == -math.inf:
            if model.theta_log_prior(prop) > -math.inf:
                tuning.rejected_pd += 1
            ok = False
        else:
            ok = log_u < new_lp - cur + _log_jac(k, prop) - _log_jac(k, th)
        if ok:
            th, cur = prop, new_lp
            tuning.accepted[name] += 1
        if last_accept is not None:
            last_accept[name] = 1.0 if ok else 0.0
    return state.replace(**dict(zip(THETA_NAMES, th)))


# -- initial values ------------------------------------------------------------


def initial_state(model: SpatialModel, rng=None, jitter: bool = True) -> McmcState:
    """OLS coefficients, prior-centre hyperparameters and ``U = 0``.

    With ``jitter`` the start is over-dispersed by about one prior standard
    deviation in each hyperparameter so that between-chain diagnostics mean
    something.
    """
    ds, pr = model.dataset, model.priors
    fy = fit_ols(ds.y, model.xbase)
    fz = fit_ols(ds.z, model.xg)
    b = fy.coefficients
    beta = np.concatenate([b[:3], [0.0], b[3:]])
    gamma = fz.coefficients.copy()
    tau_u, tau_z = pr.tau_centers()
    st = dict(sigmaY2=pr.sigma2Y_tilde, tauU=tau_u, tauZ=tau_z, phiU=0.3, phiZ=0.5, rho=0.0)
    if jitter:
        if rng is None:
            raise InvalidArgumentError("jitter needs a random generator")
        se = np.concatenate([fy.standard_errors[:3], [math.sqrt(pr.sigma2_prior_ubar)], fy.standard_errors[3:]])
        beta = beta + rng.uniform(-1, 1, beta.size) * se
        gamma = gamma + rng.uniform(-1, 1, gamma.size) * fz.standard_errors
        st["sigmaY2"] *= math.exp(rng.uniform(-0.3, 0.3))
        st["tauU"] = tau_u * math.exp(rng.uniform(-0.5, 0.5))
        lo, hi = 1 / pr.tauZ_upper, 1 / pr.tauZ_lower
        st["tauZ"] = float(np.clip(tau_z * math.exp(rng.uniform(-0.3, 0.3)), lo * 1.001, hi * 0.999))
        st["phiZ"] = rng.uniform(0.3, 0.8)
        st["phiU"] = st["phiZ"] * rng.uniform(0.3, 0.8)
        st["rho"] = rng.uniform(-0.4, 0.4)
    state = McmcState(
        beta0=float(beta[0]),
        betaZ=float(beta[1]),
        betaZbar=float(beta[2]),
        betaUbar=float(beta[3]),
        betaC=np.asarray(beta[4:], dtype=float),
        gamma0=float(gamma[0]),
        gammaC=np.asarray(gamma[1:], dtype=float),
        U=np.zeros(model.n),
        **st,
    )
    if model.theta_log_prior(state.theta()) == -math.inf:
        raise NonPositiveDefiniteError("initial hyperparameters fall outside the prior support")
    return state


# -- chains --------------------------------------------------------------------

SCALAR_PARAMS = ("beta0", "betaZ", "betaZbar", "betaU", "betaUbar", "sigmaY2", "gamma0", "tauU", "tauZ", "phiU", "phiZ", "rho")


def param_names(p: int) -> tuple:
    """Stored column order for ``p`` measured covariates."""
    return (
        ("beta0", "betaZ", "betaZbar", "betaU", "betaUbar")
        + tuple(f"betaC{j + 1}" for j in range(p))
        + ("sigmaY2", "gamma0")
        + tuple(f"gammaC{j + 1}" for j in range(p))
        + THETA_NAMES
    )


def _flatten(state: McmcState, p: int) -> list:
    return (
        [state.beta0, state.betaZ, state.betaZbar, McmcState.betaU, state.betaUbar]
        + list(state.betaC)
        + [state.sigmaY2, state.gamma0]
        + list(state.gammaC)
        + [getattr(state, k) for k in THETA_NAMES]
    )


@dataclass
class PosteriorChain:
    """Thinned post-burn-in draws of one chain, stored column-wise."""

    draws: dict
    acceptance_rates: dict
    seed: int | None
    n_burnin: int
    thin: int
    n_iter: int
    U: np.ndarray | None = None
    p: int = 0
    pd_rejections: int = 0

    @property
    def n_draws(self) -> int:
        return len(next(iter(self.draws.values()))) if self.draws else 0

    @property
    def names(self) -> tuple:
        return tuple(self.draws)

    def __getitem__(self, name) -> np.ndarray:
        return self.draws[name]

    @property
    def states(self):
        """Stored draws as :class:`McmcState` objects (``U`` only if kept)."""
        p = self.p
        for k in range(self.n_draws):
            d = {name: self.draws[name][k] for name in self.draws}
            yield McmcState(
                beta0=d["beta0"],
                betaZ=d["betaZ"],
                betaZbar=d["betaZbar"],
                betaUbar=d["betaUbar"],
                betaC=np.array([d[f"betaC{j + 1}"] for j in range(p)]),
                gamma0=d["gamma0"],
                gammaC=np.array([d[f"gammaC{j + 1}"] for j in range(p)]),
                sigmaY2=d["sigmaY2"],
                tauU=d["tauU"],
                tauZ=d["tauZ"],
                phiU=d["phiU"],
                phiZ=d["phiZ"],
                rho=d["rho"],
                U=self.U[k] if self.U is not None else np.empty(0),
            )


def expected_draws(n_iter: int, n_burnin: int, thin: int) -> int:
    return (n_iter - n_burnin) // thin


def run_chain(
    dataset,
    priors,
    n_iter: int = DEFAULT_N_ITER,
    n_burnin: int = DEFAULT_BURNIN,
    thin: int = DEFAULT_THIN,
    seed=0,
    rng=None,
    gh_adjacency=None,
    keep_u: bool = False,
    jitter: bool = True,
    initial: McmcState | None = None,
    tuning: Tuning | None = None,
    adapt: bool = True,
    model: SpatialModel | None = None,
) -> PosteriorChain:
    """Run one chain; step sizes adapt during burn-in and are frozen afterwards.

    Post burn-in, iteration ``t`` (1-based, counted after burn-in) is stored
    when ``t % thin == 0``.
    """
    if not n_iter > n_burnin >= 0:
        raise InvalidArgumentError("need n_iter > n_burnin >= 0")
    if thin < 1:
        raise InvalidArgumentError("thin must be >= 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    model = SpatialModel(dataset, priors, gh_adjacency) if model is None else model
    state = initial if initial is not None else initial_state(model, rng, jitter)
    tuning = Tuning() if tuning is None else tuning
    p = model.p
    names = param_names(p)
    n_keep = expected_draws(n_iter, n_burnin, thin)
    out = np.empty((n_keep, len(names)))
    u_out = np.empty((n_keep, model.n)) if keep_u else None
    acc = {}
    k = 0
    for it in range(n_iter):
        burning = it < n_burnin
        state = mcmc_step(state, model, tuning, rng, acc)
        if burning and adapt:
            gain = min(0.5, 2.0 / math.sqrt(it + 1.0))
            for name in THETA_NAMES:
                if tuning.steps[name] > 0:
                    tuning.steps[name] *= math.exp(gain * (acc[name] - TARGET_ACCEPT))
        if it + 1 == n_burnin:
            tuning.reset_counts()
        if not burning and (it + 1 - n_burnin) % thin == 0 and k < n_keep:
            out[k] = _flatten(state, p)
            if keep_u:
                u_out[k] = state.U
            k += 1
    draws = {name: out[:, j].copy() for j, name in enumerate(names)}
    return PosteriorChain(
        draws=draws,
        acceptance_rates=tuning.rates(),
        seed=seed if isinstance(seed, (int, np.integer)) else None,
        n_burnin=n_burnin,
        thin=thin,
        n_iter=n_iter,
        U=u_out,
        p=p,
        pd_rejections=tuning.rejected_pd,
    )
