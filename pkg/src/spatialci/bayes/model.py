"""Joint outcome / confounder / exposure model: state, precomputations, densities.

Two independent routes to the same posterior live here.  ``log_joint`` builds
the dense ``2n x 2n`` precision and evaluates every density with scipy; the
``SpatialModel`` methods use O(n) identities and are what the sampler runs.
The test suite checks one against the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy import stats
from scipy.linalg import lapack
from scipy.sparse.csgraph import reverse_cuthill_mckee

from ..errors import InvalidStateError, NonPositiveDefiniteError
from ..spatial import AdjacencyStructure

LOG_2PI = math.log(2 * math.pi)
THETA_NAMES = ("tauU", "tauZ", "phiU", "phiZ", "rho")
# Beyond this half-bandwidth (relative to n) a dense factorisation is cheaper.
DENSE_BAND_FRACTION = 0.25


@dataclass(frozen=True)
class McmcState:
    beta0: float
    betaZ: float
    betaZbar: float
    betaUbar: float
    betaC: np.ndarray
    gamma0: float
    gammaC: np.ndarray
    sigmaY2: float
    tauU: float
    tauZ: float
    phiU: float
    phiZ: float
    rho: float
    U: np.ndarray

    betaU = 1.0  # fixed scale of the latent confounder; never sampled

    def replace(self, **changes) -> "McmcState":
        unknown = changes.keys() - self.__dict__.keys()
        if unknown:
            raise TypeError(f"unknown state fields {sorted(unknown)}")
        # frozen dataclass: copy the instance dict rather than re-running __init__
        new = object.__new__(McmcState)
        new.__dict__.update(self.__dict__)
        new.__dict__.update(changes)
        return new

    @property
    def beta_vector(self) -> np.ndarray:
        """``(beta0, betaZ, betaZbar, betaUbar, betaC...)``."""
        return np.concatenate([[self.beta0, self.betaZ, self.betaZbar, self.betaUbar], self.betaC])

    @property
    def gamma_vector(self) -> np.ndarray:
        return np.concatenate([[self.gamma0], self.gammaC])

    def with_beta(self, b) -> "McmcState":
        b = np.asarray(b, dtype=float)
        return self.replace(beta0=float(b[0]), betaZ=float(b[1]), betaZbar=float(b[2]), betaUbar=float(b[3]), betaC=b[4:].copy())

    def with_gamma(self, g) -> "McmcState":
        g = np.asarray(g, dtype=float)
        return self.replace(gamma0=float(g[0]), gammaC=g[1:].copy())

    def theta(self) -> tuple:
        return tuple(getattr(self, k) for k in THETA_NAMES)

    def violations(self) -> list[str]:
        out = []
        if not self.sigmaY2 > 0:
            out.append("sigmaY2 must be positive")
        if not (self.tauU > 0 and self.tauZ > 0):
            out.append("tau parameters must be positive")
        if not 0 < self.phiU < self.phiZ < 1:
            out.append(f"need 0 < phiU < phiZ < 1, got phiU={self.phiU}, phiZ={self.phiZ}")
        if not -1 < self.rho < 1:
            out.append("rho must lie in (-1, 1)")
        return out


class SpatialModel:
    """Data-dependent constants shared by every sweep of one chain.

    ``gh_adjacency`` (defaults to the exposure adjacency) defines the CAR
    precisions ``G`` and ``H``; the exposure adjacency defines the averaging
    operator behind ``Zbar`` and ``Ubar``.
    """

    def __init__(self, dataset, priors, gh_adjacency: AdjacencyStructure | None = None):
        self.dataset = dataset
        self.priors = priors
        self.gh = dataset.adjacency if gh_adjacency is None else gh_adjacency
        n = self.n = dataset.n
        self.p = dataset.p
        if self.gh.n != n:
            raise ValueError("G/H adjacency does not match the data size")
        self.y = dataset.y
        self.z = dataset.z
        self.W = dataset.adjacency.averaging_operator()
        self.A = np.asarray(self.gh.matrix)
        self.d = np.asarray(self.gh.degrees)
        if np.any(self.d <= 0):
            raise ValueError("G/H adjacency has isolated units")
        self.sum_log_d = float(np.sum(np.log(self.d)))
        # sparse copies for the per-sweep products
        self.A_sp = scipy.sparse.csr_matrix(self.A)
        self.W_sp = scipy.sparse.csr_matrix(self.W)
        self.Wt_sp = scipy.sparse.csr_matrix(self.W.T)
        s = 1 / np.sqrt(self.d)
        self.lam = np.linalg.eigvalsh(s[:, None] * self.A * s[None, :])

        ones = np.ones(n)
        self.xbase = np.column_stack([ones, self.z, dataset.zbar, dataset.c])  # no Ubar column
        self.xg = np.column_stack([ones, dataset.c])
        pr = priors
        self.beta_prior_var = np.concatenate(
            [[pr.sigma2_prior, pr.sigma2_prior_effects, pr.sigma2_prior_effects, pr.sigma2_prior_ubar], np.full(self.p, pr.sigma2_prior)]
        )
        self.gamma_prior_var = np.full(1 + self.p, pr.sigma2_prior)
        self.beta_prior_prec = 1.0 / self.beta_prior_var
        self.gamma_prior_prec = np.diag(1.0 / self.gamma_prior_var)
        k = self.xbase.shape[1] + 1
        self._diag_k = np.diag_indices(k)
        # xbase columns are (1, Z, Zbar, C); Ubar is appended last
        self.beta_order = np.array([0, 1, 2, k - 1, *range(3, k - 1)])
        self._no_ubar = np.array([0, 1, 2, *range(4, k)])
        self._order_rows, self._order_cols = np.ix_(self.beta_order, self.beta_order)
        self.xtx_base = self.xbase.T @ self.xbase
        self.xty_base = self.xbase.T @ self.y
        self._ld_key = None
        self._ld_val = 0.0

        # gamma-block pieces: Xg' H Xg = tauZ^2 (K1 - phiZ K2) and friends
        axg = self.A @ self.xg
        self.g_k1 = self.xg.T @ (self.d[:, None] * self.xg)
        self.g_k2 = self.xg.T @ axg
        self.g_dz = self.xg.T @ (self.d * self.z)
        self.g_az = axg.T @ self.z
        self._prepare_band()

    # -- banded structure for the latent-confounder update -------------------

    def _prepare_band(self):
        n = self.n
        w = self.W
        comps = {
            "D": np.diag(self.d),
            "A": self.A,
            "I": np.eye(n),
            "S": w + w.T,
            "T": w.T @ w,
        }
        pattern = np.zeros((n, n), dtype=bool)
        for m in comps.values():
            pattern |= m != 0
        perm = reverse_cuthill_mckee(scipy.sparse.csr_matrix(pattern), symmetric_mode=True)
        pp = pattern[np.ix_(perm, perm)]
        ii, jj = np.nonzero(pp)
        bw = int(np.max(np.abs(ii - jj))) if ii.size else 0
        self.perm = np.asarray(perm)
        self.iperm = np.argsort(self.perm)
        self.bandwidth = bw
        self.dense_u = bw > max(8, DENSE_BAND_FRACTION * n)
        if self.dense_u:
            self.u_comps = comps
            return
        self.u_comps = {k: _to_upper_band(m[np.ix_(perm, perm)], bw) for k, m in comps.items()}

    def u_precision_band(self, state: McmcState):
        """Full-conditional precision of ``U`` (upper band, permuted) or dense."""
        c = self.u_comps
        t2 = state.tauU**2
        s = 1.0 / state.sigmaY2
        b = state.betaUbar
        return t2 * (c["D"] - state.phiU * c["A"]) + s * (c["I"] + b * c["S"] + (b * b) * c["T"])

    def u_linear_term(self, state: McmcState) -> np.ndarray:
        e = self.z - self.xg @ state.gamma_vector
        b = state.beta_vector
        r0 = self.y - self.xbase @ b[self._no_ubar]
        lik = r0 + state.betaUbar * (self.Wt_sp @ r0)
        return state.rho * state.tauU * state.tauZ * self.d * e + lik / state.sigmaY2

    def u_conditional(self, state: McmcState):
        """Dense ``(mean, precision)`` of ``U`` given everything else."""
        t2 = state.tauU**2
        m = np.eye(self.n) + state.betaUbar * self.W
        prec = t2 * (np.diag(self.d) - state.phiU * self.A) + m.T @ m / state.sigmaY2
        mean = scipy.linalg.solve(prec, self.u_linear_term(state), assume_a="pos")
        return mean, prec

    def draw_u(self, state: McmcState, rng) -> np.ndarray:
        h = self.u_linear_term(state)
        w = rng.standard_normal(self.n)
        lam = self.u_precision_band(state)
        if self.dense_u:
            up = scipy.linalg.cholesky(lam, lower=False)
            y1 = scipy.linalg.solve_triangular(up, h, trans="T")
            return scipy.linalg.solve_triangular(up, y1 + w)
        cb, info = lapack.dpbtrf(lam, lower=0)
        if info:
            raise NonPositiveDefiniteError(f"latent precision is not positive definite (info={info})")
        hp = h[self.perm][:, None]
        y1, info = lapack.dtbtrs(cb, hp, uplo="U", trans="T")
        x, info2 = lapack.dtbtrs(cb, y1 + w[:, None], uplo="U", trans="N")
        if info or info2:
            raise NonPositiveDefiniteError("banded triangular solve failed")
        return x[:, 0][self.iperm]

    # -- conjugate blocks ----------------------------------------------------

    def beta_design(self, state: McmcState) -> np.ndarray:
        ubar = self.W @ state.U
        x = self.xbase
        return np.column_stack([x[:, :3], ubar, x[:, 3:]])

    def beta_system(self, state: McmcState, ubar=None):
        """``(precision, linear term)`` of the coefficient block, state order."""
        ubar = self.W_sp @ state.U if ubar is None else ubar
        s = 1.0 / state.sigmaY2
        xb = self.xbase
        k = xb.shape[1] + 1
        xtx = np.empty((k, k))
        xtx[:-1, :-1] = self.xtx_base
        cross = xb.T @ ubar
        xtx[:-1, -1] = cross
        xtx[-1, :-1] = cross
        xtx[-1, -1] = ubar @ ubar
        xty = np.empty(k)
        xty[:-1] = self.xty_base - xb.T @ state.U
        xty[-1] = ubar @ (self.y - state.U)
        o = self.beta_order
        prec = xtx[self._order_rows, self._order_cols] * s
        prec[self._diag_k] += self.beta_prior_prec
        return prec, xty[o] * s

    def beta_conditional(self, state: McmcState):
        prec, lin = self.beta_system(state)
        return scipy.linalg.solve(prec, lin, assume_a="pos"), prec

    def residuals(self, state: McmcState, ubar=None) -> np.ndarray:
        ubar = self.W_sp @ state.U if ubar is None else ubar
        b = state.beta_vector
        return self.y - state.U - self.xbase @ b[self._no_ubar] - b[3] * ubar

    def sigma2_conditional(self, state: McmcState, ubar=None) -> tuple[float, float]:
        r = self.residuals(state, ubar)
        return self.priors.alphaY + self.n / 2, self.priors.betaY + float(r @ r) / 2

    def gamma_system(self, state: McmcState):
        tz2 = state.tauZ**2
        prec = tz2 * (self.g_k1 - state.phiZ * self.g_k2) + self.gamma_prior_prec
        lin = tz2 * (self.g_dz - state.phiZ * self.g_az)
        lin = lin - state.rho * state.tauU * state.tauZ * (self.xg.T @ (self.d * state.U))
        return prec, lin

    def gamma_conditional(self, state: McmcState):
        prec, lin = self.gamma_system(state)
        return scipy.linalg.solve(prec, lin, assume_a="pos"), prec

    # -- hyperparameter target -----------------------------------------------

    def uz_stats(self, state: McmcState) -> tuple:
        """Sufficient statistics of ``(U, Z - mu_Z)`` for the CAR density."""
        u = state.U
        e = self.z - self.xg @ state.gamma_vector
        du, de = self.d * u, self.d * e
        a = self.A_sp
        return (float(u @ du), float(u @ (a @ u)), float(e @ de), float(e @ (a @ e)), float(du @ e))

    def _log_det_sum(self, phi_u, phi_z, rho) -> float:
        """``sum_k log((1 - phiU l_k)(1 - phiZ l_k) - rho^2)``; ``-inf`` if not PD.

        Cached on the last arguments since tau moves leave it unchanged.
        """
        key = (phi_u, phi_z, rho)
        if key == self._ld_key:
            return self._ld_val
        det2 = (1 - phi_u * self.lam) * (1 - phi_z * self.lam) - rho * rho
        val = float(np.log(det2).sum()) if det2.min() > 0 else -math.inf
        self._ld_key, self._ld_val = key, val
        return val

    def uz_loglik(self, theta, stats_) -> float:
        """``log N((U, Z); (0, mu_Z), P^{-1})`` via the eigenvalue identity.

        With ``M = D^{-1/2} A D^{-1/2}`` diagonalised, ``P`` splits into ``n``
        2x2 blocks, so PD-ness and the log-determinant are O(n).  Returns
        ``-inf`` when the joint precision is not positive definite.
        """
        tau_u, tau_z, phi_u, phi_z, rho = theta
        if not (abs(phi_u) < 1 and abs(phi_z) < 1):
            return -math.inf
        ld = self._log_det_sum(phi_u, phi_z, rho)
        if ld == -math.inf:
            return ld
        a1, a2, b1, b2, c = stats_
        n = self.n
        logdet = 2 * n * (math.log(tau_u) + math.log(tau_z)) + 2 * self.sum_log_d + ld
        quad = tau_u * tau_u * (a1 - phi_u * a2) + tau_z * tau_z * (b1 - phi_z * b2) - 2 * rho * tau_u * tau_z * c
        return 0.5 * logdet - 0.5 * quad - n * LOG_2PI

    def theta_log_prior(self, theta) -> float:
        tau_u, tau_z, phi_u, phi_z, rho = theta
        if not 0 < phi_u < phi_z < 1:
            return -math.inf
        pr = self.priors
        return (
            pr.log_prior_tauU(tau_u)
            + pr.log_prior_tauZ(tau_z)
            + pr.log_prior_phiU(phi_u)
            + pr.log_prior_uniform(phi_z)
            + pr.log_prior_uniform(rho)
        )

    def theta_log_target(self, theta, stats_) -> float:
        lp = self.theta_log_prior(theta)
        if lp == -math.inf:
            return lp
        return lp + self.uz_loglik(theta, stats_)


def _to_upper_band(m: np.ndarray, bw: int) -> np.ndarray:
    """LAPACK upper band storage: ``ab[bw + i - j, j] = m[i, j]`` for ``i <= j``."""
    n = m.shape[0]
    ab = np.zeros((bw + 1, n))
    for k in range(bw + 1):
        ab[bw - k, k:] = np.diagonal(m, k)
    return ab


# -- block densities ---------------------------------------------------------

BLOCKS = ("beta", "sigma2", "gamma", "U", "theta")


def _mvn_logpdf_prec(x, mean, prec) -> float:
    low = np.linalg.cholesky(prec)
    r = low.T @ (x - mean)
    return float(np.sum(np.log(np.diag(low))) - 0.5 * r @ r - 0.5 * len(x) * LOG_2PI)


def block_logpdf(model: SpatialModel, block: str, state: McmcState) -> float:
    """Normalised full-conditional log density of one block at ``state``.

    For the Metropolis block (``theta``) the conditional is only known up to a
    constant; the unnormalised target is returned.
    """
    if block == "beta":
        mean, prec = model.beta_conditional(state)
        return _mvn_logpdf_prec(state.beta_vector, mean, prec)
    if block == "sigma2":
        a, b = model.sigma2_conditional(state)
        return float(stats.invgamma.logpdf(state.sigmaY2, a, scale=b))
    if block == "gamma":
        mean, prec = model.gamma_conditional(state)
        return _mvn_logpdf_prec(state.gamma_vector, mean, prec)
    if block == "U":
        mean, prec = model.u_conditional(state)
        return _mvn_logpdf_prec(state.U, mean, prec)
    if block == "theta":
        return model.theta_log_target(state.theta(), model.uz_stats(state))
    raise ValueError(f"unknown block {block!r}; expected one of {BLOCKS}")


# -- dense oracle ------------------------------------------------------------


def log_joint(state: McmcState, dataset, priors, gh_adjacency: AdjacencyStructure | None = None) -> float:
    """Unnormalised log posterior from dense matrices and library densities."""
    bad = state.violations()
    if bad:
        raise InvalidStateError("; ".join(bad))
    gh = dataset.adjacency if gh_adjacency is None else gh_adjacency
    n = dataset.n
    w = dataset.adjacency.matrix / dataset.adjacency.degrees[:, None]
    u = np.asarray(state.U, dtype=float)
    if u.shape != (n,):
        raise InvalidStateError(f"U must have length {n}")

    mean_y = (
        state.beta0
        + state.betaZ * dataset.z
        + state.betaZbar * dataset.zbar
        + dataset.c @ state.betaC
        + state.betaU * u
        + state.betaUbar * (w @ u)
    )
    out = float(np.sum(stats.norm.logpdf(dataset.y, mean_y, math.sqrt(state.sigmaY2))))

    dg = np.diag(gh.degrees)
    g = state.tauU**2 * (dg - state.phiU * gh.matrix)
    h = state.tauZ**2 * (dg - state.phiZ * gh.matrix)
    q = np.diag(-state.rho * np.sqrt(np.diag(g) * np.diag(h)))
    p = np.block([[g, q], [q, h]])
    sign, logdet = np.linalg.slogdet(p)
    if sign <= 0:
        raise InvalidStateError("joint precision is not positive definite")
    mu_z = state.gamma0 + dataset.c @ state.gammaC
    x = np.concatenate([u, dataset.z - mu_z])
    out += 0.5 * logdet - 0.5 * float(x @ p @ x) - n * LOG_2PI

    sp = math.sqrt(priors.sigma2_prior)
    se = math.sqrt(priors.sigma2_prior_effects)
    out += float(stats.norm.logpdf(state.beta0, 0, sp))
    out += float(np.sum(stats.norm.logpdf(state.betaC, 0, sp)))
    out += float(stats.norm.logpdf(state.gamma0, 0, sp))
    out += float(np.sum(stats.norm.logpdf(state.gammaC, 0, sp)))
    out += float(stats.norm.logpdf([state.betaZ, state.betaZbar], 0, se).sum())
    out += float(stats.norm.logpdf(state.betaUbar, 0, math.sqrt(priors.sigma2_prior_ubar)))
    out += float(stats.invgamma.logpdf(state.sigmaY2, priors.alphaY, scale=priors.betaY))
    # 1/tau priors pushed through the reciprocal map (Jacobian 1/tau^2)
    out += float(stats.halfnorm.logpdf(1 / state.tauU, scale=math.sqrt(priors.tauU_scale))) - 2 * math.log(state.tauU)
    a = (priors.tauZ_lower - priors.tauZ_center) / priors.tauZ_sd
    b = (priors.tauZ_upper - priors.tauZ_center) / priors.tauZ_sd
    lz = float(stats.truncnorm.logpdf(1 / state.tauZ, a, b, loc=priors.tauZ_center, scale=priors.tauZ_sd))
    if not math.isfinite(lz):
        raise InvalidStateError("tauZ outside its prior support")
    out += lz - 2 * math.log(state.tauZ)
    out += float(stats.beta.logpdf(state.phiU, *priors.phiU_beta))
    out += float(stats.uniform.logpdf(state.phiZ, -1, 2) + stats.uniform.logpdf(state.rho, -1, 2))
    return out
