"""Weakly informative, partly data-driven prior system."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special, stats

from ..errors import InsufficientDataError
from ..ols import fit_ols

LOG_HALF = math.log(0.5)


@dataclass(frozen=True)
class PriorConfig:
    d: float
    betaY: float
    tauU_scale: float
    tauZ_center: float
    tauZ_lower: float
    tauZ_upper: float
    sigma2_prior: float = 2.0
    sigma2_prior_ubar: float = 0.35**2
    # exposure coefficients get the same weakly informative normal as the
    # covariates unless overridden
    sigma2_prior_effects: float = 2.0
    alphaY: float = 3.0
    tauZ_sd: float = 1.0
    phiU_beta: tuple = (6.0, 6.0)
    sigma2Y_tilde: float = float("nan")
    sigma2Z_tilde: float = float("nan")
    s2Z_tilde: float = float("nan")

    def __post_init__(self):
        if not (self.tauU_scale > 0 and self.tauZ_sd > 0 and self.sigma2_prior > 0):
            raise ValueError("prior scales must be positive")
        if not self.tauZ_lower < self.tauZ_upper:
            raise ValueError("tauZ truncation bounds are inverted")

    # -- log densities on the sampled scale (tau, not 1/tau) -----------------

    def log_prior_tauU(self, tau: float) -> float:
        """``1/tau_U`` is half-normal with variance ``tauU_scale``."""
        if not tau > 0:
            return -math.inf
        s = 1.0 / tau
        v = self.tauU_scale
        return math.log(2.0) - 0.5 * math.log(2 * math.pi * v) - s * s / (2 * v) - 2 * math.log(tau)

    @cached_property
    def _tauZ_log_norm(self) -> float:
        sd = self.tauZ_sd
        lo = (self.tauZ_lower - self.tauZ_center) / sd
        hi = (self.tauZ_upper - self.tauZ_center) / sd
        return 0.5 * math.log(2 * math.pi) + math.log(sd) + math.log(special.ndtr(hi) - special.ndtr(lo))

    def log_prior_tauZ(self, tau: float) -> float:
        """``1/tau_Z`` is normal(center, sd) truncated to ``[lower, upper]``."""
        if not tau > 0:
            return -math.inf
        s = 1.0 / tau
        if not self.tauZ_lower <= s <= self.tauZ_upper:
            return -math.inf
        zs = (s - self.tauZ_center) / self.tauZ_sd
        return -0.5 * zs * zs - self._tauZ_log_norm - 2 * math.log(tau)

    @cached_property
    def _phiU_log_beta(self) -> float:
        return float(special.betaln(*self.phiU_beta))

    def log_prior_phiU(self, phi: float) -> float:
        if not 0 < phi < 1:
            return -math.inf
        a, b = self.phiU_beta
        return (a - 1) * math.log(phi) + (b - 1) * math.log1p(-phi) - self._phiU_log_beta

    def log_prior_uniform(self, x: float) -> float:
        return LOG_HALF if -1 < x < 1 else -math.inf

    def log_prior_sigma2(self, s2: float) -> float:
        return float(stats.invgamma.logpdf(s2, self.alphaY, scale=self.betaY))

    # -- prior draws ---------------------------------------------------------

    def tau_centers(self) -> tuple[float, float]:
        s_u = math.sqrt(self.tauU_scale) * math.sqrt(2 / math.pi)
        s_z = min(max(self.tauZ_center, self.tauZ_lower), self.tauZ_upper)
        return 1.0 / s_u, 1.0 / s_z

    def draw_tauU(self, rng) -> float:
        return 1.0 / abs(rng.normal(0.0, math.sqrt(self.tauU_scale)))

    def draw_tauZ(self, rng) -> float:
        sd = self.tauZ_sd
        lo = (self.tauZ_lower - self.tauZ_center) / sd
        hi = (self.tauZ_upper - self.tauZ_center) / sd
        s = stats.truncnorm.rvs(lo, hi, loc=self.tauZ_center, scale=sd, random_state=rng)
        return 1.0 / float(s)

    def prob_sigma2_below_tilde(self) -> float:
        """``P(sigma_Y^2 < sigma~_Y^2)`` under the inverse-gamma prior."""
        return float(stats.invgamma.cdf(self.sigma2Y_tilde, self.alphaY, scale=self.betaY))


def default_priors(dataset, gh_adjacency=None, **overrides) -> PriorConfig:
    """Plug the data-driven quantities into the default prior formulas.

    ``sigma2Y_tilde`` is the residual variance of ``Y ~ 1 + Z + Zbar + C``,
    ``sigma2Z_tilde`` that of ``Z ~ 1 + C``; ``d`` is the median degree of the
    adjacency used for the conditional precision matrices.
    """
    n, p = dataset.n, dataset.p
    if n < p + 4:
        raise InsufficientDataError(f"need at least p + 4 = {p + 4} units, got {n}")
    adj = dataset.adjacency if gh_adjacency is None else gh_adjacency
    d = float(adj.median_degree)
    if d <= 0:
        raise InsufficientDataError("median degree is zero; drop isolated units first")

    xy = np.column_stack([np.ones(n), dataset.z, dataset.zbar, dataset.c])
    s2y = fit_ols(dataset.y, xy).residual_variance
    xz = np.column_stack([np.ones(n), dataset.c])
    s2z = fit_ols(dataset.z, xz).residual_variance
    var_z = float(np.var(dataset.z, ddof=1))

    s2p = overrides.get("sigma2_prior", 2.0)
    alpha = overrides.get("alphaY", 3.0)
    if s2y <= 1e-12 * max(1.0, float(np.var(dataset.y))):
        warnings.warn("outcome is (near) noiseless in Z, Zbar, C: the sigma_Y^2 prior is degenerate", stacklevel=2)
    fields = dict(
        d=d,
        betaY=alpha * s2y / 4,
        tauU_scale=d * s2p / 2,
        tauZ_center=math.sqrt(d * s2z / 2),
        tauZ_lower=math.sqrt(d * 0.01 * var_z),
        tauZ_upper=math.sqrt(d * s2z / 0.8),
        sigma2Y_tilde=s2y,
        sigma2Z_tilde=s2z,
        s2Z_tilde=var_z,
    )
    fields.update(overrides)
    if fields["tauZ_lower"] >= fields["tauZ_center"]:
        warnings.warn("tau_Z prior centre lies below its lower truncation bound", stacklevel=2)
    return PriorConfig(**fields)
