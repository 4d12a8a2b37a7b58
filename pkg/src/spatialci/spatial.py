"""Adjacency structures, neighbourhood averaging and CAR precision matrices."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import InvalidArgumentError, IsolatedUnitError, NonPositiveDefiniteError

PD_RELATIVE_TOL = 1e-12


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AdjacencyStructure:
    """Symmetric 0/1 adjacency over ``n`` units.

    ``matrix`` may also hold non-negative weights (point-referenced kernels);
    degrees are then the row sums.
    """

    matrix: np.ndarray
    degrees: np.ndarray = field(init=False)
    median_degree: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise InvalidArgumentError("adjacency must be a non-empty square matrix")
        if not np.array_equal(m, m.T):
            raise InvalidArgumentError("adjacency must be symmetric")
        if np.any(np.diag(m) != 0):
            raise InvalidArgumentError("adjacency must have a zero diagonal")
        if np.any(m < 0):
            raise InvalidArgumentError("adjacency weights must be non-negative")
        object.__setattr__(self, "matrix", _frozen(m))
        deg = m.sum(axis=1)
        object.__setattr__(self, "degrees", _frozen(deg))
        object.__setattr__(self, "median_degree", statistics.median_low(deg.tolist()))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.matrix == 0) | (self.matrix == 1)))

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges as 0-based ``(i, j)`` pairs with ``i < j``."""
        i, j = np.nonzero(np.triu(self.matrix, 1))
        return list(zip(i.tolist(), j.tolist()))

    def isolated(self) -> np.ndarray:
        return np.flatnonzero(self.degrees == 0)

    def averaging_operator(self) -> np.ndarray:
        """Row-normalised operator ``W = D^{-1} A``."""
        iso = self.isolated()
        if iso.size:
            raise IsolatedUnitError(iso)
        return self.matrix / self.degrees[:, None]

    def subgraph(self, keep) -> "AdjacencyStructure":
        keep = np.asarray(keep)
        return AdjacencyStructure(self.matrix[np.ix_(keep, keep)])

    def __eq__(self, other):
        if not isinstance(other, AdjacencyStructure):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())


def pair_adjacency(n_pairs: int) -> AdjacencyStructure:
    if int(n_pairs) != n_pairs or n_pairs < 1:
        raise InvalidArgumentError(f"n_pairs must be a positive integer, got {n_pairs!r}")
    block = np.array([[0.0, 1.0], [1.0, 0.0]])
    return AdjacencyStructure(np.kron(np.eye(int(n_pairs)), block))


def line_adjacency(n: int) -> AdjacencyStructure:
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"a line graph needs n >= 2, got {n!r}")
    n = int(n)
    m = np.zeros((n, n))
    idx = np.arange(n - 1)
    m[idx, idx + 1] = 1.0
    m[idx + 1, idx] = 1.0
    return AdjacencyStructure(m)


def from_edge_list(n: int, pairs) -> AdjacencyStructure:
    """Build an adjacency from 1-based index pairs; duplicates coalesce."""
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    m = np.zeros((n, n))
    for a, b in pairs:
        if int(a) != a or int(b) != b:
            raise InvalidArgumentError(f"non-integer index in edge ({a}, {b})")
        a, b = int(a), int(b)
        if not (1 <= a <= n and 1 <= b <= n):
            raise InvalidArgumentError(f"edge ({a}, {b}) out of range 1..{n}")
        if a == b:
            raise InvalidArgumentError(f"self-loop at unit {a}")
        m[a - 1, b - 1] = m[b - 1, a - 1] = 1.0
    return AdjacencyStructure(m)


def kernel_adjacency(distances, scale: float = 1.0) -> AdjacencyStructure:
    """Weights ``exp(-d_ij / scale)`` with a zero diagonal."""
    d = np.asarray(distances, dtype=float)
    if scale <= 0:
        raise InvalidArgumentError("scale must be positive")
    w = np.exp(-d / scale)
    np.fill_diagonal(w, 0.0)
    return AdjacencyStructure((w + w.T) / 2)


def second_degree(adj: AdjacencyStructure) -> AdjacencyStructure:
    a = adj.matrix != 0
    ai = a.astype(np.int64)
    two = (ai @ ai) > 0
    out = a | two
    np.fill_diagonal(out, False)
    return AdjacencyStructure(out.astype(float))


def neighbor_average(adj: AdjacencyStructure, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (adj.n,):
        raise InvalidArgumentError(f"vector of length {adj.n} expected, got shape {v.shape}")
    return adj.averaging_operator() @ v


# -- edge-list files ---------------------------------------------------------


def read_edge_list(path, n: int | None = None) -> AdjacencyStructure:
    """Read a whitespace-separated 1-based edge list; ``#`` lines are comments.

    When ``n`` is not given it is the largest index seen.
    """
    pairs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise InvalidArgumentError(f"{path}:{lineno}: expected 'i j', got {line!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise InvalidArgumentError(f"{path}:{lineno}: non-integer index in {line!r}") from None
    if n is None:
        n = max((max(p) for p in pairs), default=0)
    return from_edge_list(n, pairs)


def write_edge_list(adj: AdjacencyStructure, path, header: str | None = None) -> None:
    lines = [f"# {header}"] if header else []
    lines.append(f"# n={adj.n}")
    lines += [f"{i + 1} {j + 1}" for i, j in adj.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


# -- precision matrices ------------------------------------------------------


@dataclass(frozen=True)
class PrecisionMatrix:
    entries: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in ("conditional-U", "conditional-Z", "joint-UZ", "conditional"):
            raise InvalidArgumentError(f"unknown precision kind {self.kind!r}")
        object.__setattr__(self, "entries", _frozen(np.asarray(self.entries, dtype=float)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def cholesky(self) -> np.ndarray:
        return cholesky_pd(self.entries)

    def covariance(self) -> np.ndarray:
        return np.linalg.inv(self.entries)


def cholesky_pd(m) -> np.ndarray:
    """Lower Cholesky factor, rejecting any pivot below ``1e-12 * max diag``."""
    m = np.asarray(m, dtype=float)
    try:
        low = scipy.linalg.cholesky(m, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonPositiveDefiniteError(f"matrix is not positive definite: {exc}") from None
    pivots = np.diag(low) ** 2
    floor = PD_RELATIVE_TOL * np.max(np.abs(np.diag(m)))
    if np.any(pivots <= floor):
        raise NonPositiveDefiniteError("Cholesky pivot below tolerance")
    return low


def car_precision(adj: AdjacencyStructure, tau: float, phi: float, kind: str = "conditional") -> PrecisionMatrix:
    """``tau^2 (D - phi A)``."""
    if not tau > 0:
        raise InvalidArgumentError(f"tau must be positive, got {tau}")
    if not abs(phi) < 1:
        raise InvalidArgumentError(f"|phi| must be < 1, got {phi}")
    m = tau**2 * (np.diag(adj.degrees) - phi * adj.matrix)
    return PrecisionMatrix(m, kind)


def joint_precision(g: PrecisionMatrix, h: PrecisionMatrix, rho: float) -> PrecisionMatrix:
    """Block precision ``[[G, Q], [Q, H]]`` with ``q_i = -rho sqrt(g_ii h_ii)``."""
    if g.dim != h.dim:
        raise InvalidArgumentError(f"dimension mismatch: {g.dim} vs {h.dim}")
    if not abs(rho) < 1:
        raise InvalidArgumentError(f"|rho| must be < 1, got {rho}")
    q = np.diag(-rho * np.sqrt(np.diag(g.entries) * np.diag(h.entries)))
    m = np.block([[g.entries, q], [q, h.entries]])
    cholesky_pd(m)
    return PrecisionMatrix(m, "joint-UZ")


def sample_from_precision(precision, mean, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw from ``N(mean, P^{-1})`` by factor-solve: ``P = L L^T``, ``L^T x = w``."""
    p = precision.entries if isinstance(precision, PrecisionMatrix) else np.asarray(precision, float)
    low = cholesky_pd(p)
    dim = p.shape[0]
    w = rng.standard_normal(dim if size is None else (dim, size))
    x = scipy.linalg.solve_triangular(low, w, lower=True, trans="T")
    mean = np.asarray(mean, dtype=float)
    return (x + mean) if size is None else (x + mean[:, None]).T
