"""Least squares over configurable conditioning sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CollinearityError, InsufficientDataError, MissingColumnError

Z95 = 1.96
RANK_TOL = 1e-10


@dataclass(frozen=True)
class ConditioningSet:
    include_z: bool = True
    include_zbar: bool = False
    include_u: bool = False
    include_ubar: bool = False
    include_c: bool = True

    def __post_init__(self):
        if not self.include_z:
            raise ValueError("the local exposure is always in the conditioning set")

    @classmethod
    def parse(cls, label: str) -> "ConditioningSet":
        """``"Z,Zbar,U"`` style labels (parentheses and spaces ignored)."""
        toks = {t.strip().lower() for t in label.strip("() ").split(",") if t.strip()}
        unknown = toks - {"z", "zbar", "u", "ubar", "c"}
        if unknown or "z" not in toks:
            raise ValueError(f"bad conditioning set {label!r}")
        return cls(True, "zbar" in toks, "u" in toks, "ubar" in toks, True)

    @property
    def label(self) -> str:
        parts = ["Z"]
        parts += ["Zbar"] if self.include_zbar else []
        parts += ["U"] if self.include_u else []
        parts += ["Ubar"] if self.include_ubar else []
        return "(" + ",".join(parts) + ")"


# Column order of the motivating tables.
TABLE_SETS = tuple(
    ConditioningSet.parse(s) for s in ("Z", "Z,U", "Z,Zbar", "Z,Zbar,U", "Z,Zbar,U,Ubar")
)


@dataclass(frozen=True)
class OlsFit:
    names: tuple
    coefficients: np.ndarray
    standard_errors: np.ndarray
    residual_variance: float
    n: int
    k: int

    @property
    def ci_lower(self) -> np.ndarray:
        return self.coefficients - Z95 * self.standard_errors

    @property
    def ci_upper(self) -> np.ndarray:
        return self.coefficients + Z95 * self.standard_errors

    def __getitem__(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def se(self, name: str) -> float:
        return float(self.standard_errors[self.names.index(name)])

    def interval(self, name: str) -> tuple[float, float]:
        i = self.names.index(name)
        return float(self.ci_lower[i]), float(self.ci_upper[i])


def build_design(dataset, cond: ConditioningSet):
    cols, names = [np.ones(dataset.n)], ["intercept"]
    cols.append(dataset.z)
    names.append("z")
    if cond.include_zbar:
        cols.append(dataset.zbar)
        names.append("zbar")
    for flag, attr in ((cond.include_u, "u"), (cond.include_ubar, "ubar")):
        if flag:
            v = getattr(dataset, attr)
            if v is None:
                raise MissingColumnError(f"conditioning set {cond.label} needs latent column {attr!r}")
            cols.append(v)
            names.append(attr)
    if cond.include_c and dataset.p:
        cols.extend(dataset.c.T)
        names.extend(dataset.covariate_names)
    return np.column_stack(cols), tuple(names)


def fit_ols(y, design, names=None) -> OlsFit:
    """Householder QR least squares with normal-theory 95% intervals."""
    x = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = x.shape
    if n <= k:
        raise InsufficientDataError(f"need more observations than columns (n={n}, k={k})")
    _, r_piv, _ = scipy.linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_piv))
    if diag[-1] <= RANK_TOL * diag[0]:
        raise CollinearityError("design matrix is rank deficient")
    q, r = np.linalg.qr(x)
    coef = scipy.linalg.solve_triangular(r, q.T @ y)
    resid = y - x @ coef
    s2 = float(resid @ resid) / (n - k)
    rinv = scipy.linalg.solve_triangular(r, np.eye(k))
    se = np.sqrt(s2 * np.sum(rinv**2, axis=1))
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(k))
    return OlsFit(names, coef, se, s2, n, k)


def fit_conditioning_set(dataset, cond: ConditioningSet) -> OlsFit:
    x, names = build_design(dataset, cond)
    return fit_ols(dataset.y, x, names)
