"""Scale-free contact network for the township.

Networks are grown with a Barabasi-Albert process that supports a
fractional number of edges per new node, so that odd mean degrees such as
5.0 are reachable in expectation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.optimize import minimize_scalar
from scipy.special import zeta


class InvalidParameter(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ContactNetwork:
    """Immutable undirected graph stored as a sorted edge list plus CSR adjacency.

    Attributes
    ----------
    n : int
        Number of people.
    edges : ndarray, shape (E, 2)
        Undirected edges with ``i < j``, sorted lexicographically.
    indptr, indices : ndarray
        CSR adjacency; neighbors of ``i`` are ``indices[indptr[i]:indptr[i+1]]``.
    degree : ndarray
        Contact count per person.
    growth : dict
        Generator bookkeeping (seed edges, per-node attachment counts).
    """

    n: int
    edges: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    degree: np.ndarray
    growth: dict = field(default_factory=dict)

    @classmethod
    def from_edges(cls, n: int, edges, growth: dict | None = None) -> "ContactNetwork":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if np.any(e < 0) or np.any(e >= n):
                raise InvalidParameter("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise InvalidParameter("self-loop in edge list")
            e = np.sort(e, axis=1)
            e = e[np.lexsort((e[:, 1], e[:, 0]))]
            if np.any(np.all(e[1:] == e[:-1], axis=1)):
                raise InvalidParameter("duplicate edge in edge list")
        # both directions, grouped by source
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        degree = np.bincount(src, minlength=n).astype(np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degree, out=indptr[1:])
        for arr in (e, indptr, dst, degree):
            arr.setflags(write=False)
        return cls(n=n, edges=e, indptr=indptr, indices=dst, degree=degree,
                   growth=dict(growth or {}))

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(i).tolist() for i in range(self.n)]

    @cached_property
    def _arc_sources(self) -> np.ndarray:
        src = np.repeat(np.arange(self.n), self.degree)
        src.setflags(write=False)
        return src

    @cached_property
    def matrix(self) -> sparse.csr_array:
        """Adjacency as a sparse 0/1 matrix."""
        data = np.ones(self.indices.size, dtype=np.int32)
        return sparse.csr_array((data, self.indices, self.indptr), shape=(self.n, self.n))

    def directed_arcs(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (source, target) arrays with every edge in both directions."""
        return self._arc_sources, self.indices


def generate_ba(n: int, target_mean_degree: float, seed: int | None = None) -> ContactNetwork:
    """Grow a Barabasi-Albert network with mean degree ``target_mean_degree`` in expectation.

    Each new node attaches ``floor(m)`` edges, plus one more with probability
    ``frac(m)``, where ``m = target_mean_degree / 2``. Targets are drawn by
    preferential attachment without replacement. Growth starts from a
    complete graph on ``ceil(m) + 1`` nodes.
    """
    if n < 3:
        raise InvalidParameter(f"n must be >= 3, got {n}")
    if not (2 <= target_mean_degree <= n - 1):
        raise InvalidParameter(
            f"target_mean_degree must lie in [2, n-1], got {target_mean_degree}")
    rng = np.random.default_rng(seed)
    m = target_mean_degree / 2.0
    m_floor = int(math.floor(m))
    m_frac = m - m_floor
    n0 = int(math.ceil(m)) + 1

    edges: list[tuple[int, int]] = []
    # each endpoint appears once per incident edge -> uniform draw is degree-proportional
    ends: list[int] = []
    for i in range(n0):
        for j in range(i + 1, n0):
            edges.append((i, j))
            ends += (i, j)
    seed_edges = len(edges)

    extra = rng.random(n - n0) < m_frac
    attachments = np.zeros(n, dtype=np.int64)
    for v in range(n0, n):
        k = m_floor + int(extra[v - n0])
        targets: set[int] = set()
        while len(targets) < k:
            idx = rng.integers(len(ends), size=k - len(targets))
            for t in idx:
                targets.add(ends[t])
                if len(targets) == k:
                    break
        for t in sorted(targets):
            edges.append((t, v))
            ends += (t, v)
        attachments[v] = k

    return ContactNetwork.from_edges(
        n, edges, growth={"seed_nodes": n0, "seed_edges": seed_edges,
                          "attachments": attachments})


def mean_degree(net: ContactNetwork) -> float:
    if net.n < 1:
        raise InvalidParameter("network has no nodes")
    return float(net.degree.sum()) / net.n


@dataclass(frozen=True)
class PowerLawFit:
    omega: float
    kmin: int
    fitness: float
    n_tail: int
    ks: float
    degenerate: bool = False

    @property
    def normalization(self) -> float:
        """Constant ``A`` such that ``A * k**-omega`` sums to one over ``k >= kmin``."""
        return float(1.0 / zeta(self.omega, self.kmin))


def _omega_mle(tail: np.ndarray, kmin: int, upper: float = 30.0) -> float:
    """Maximize the discrete power-law likelihood ``-n ln zeta(w, kmin) - w sum ln k``."""
    n = tail.size
    sum_log = float(np.log(tail).sum())

    def nll(w):
        return n * math.log(zeta(w, kmin)) + w * sum_log

    res = minimize_scalar(nll, bounds=(1.0 + 1e-9, upper), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


def _ks_distance(tail: np.ndarray, kmin: int, omega: float) -> float:
    kmax = int(tail.max())
    ks = np.arange(kmin, kmax + 1)
    counts = np.bincount(tail - kmin, minlength=ks.size)
    emp = np.cumsum(counts) / tail.size
    pmf = ks.astype(float) ** -omega / zeta(omega, kmin)
    model = np.cumsum(pmf)
    return float(np.max(np.abs(emp - model)))


def _fit_tail(k: np.ndarray, kmin: int) -> PowerLawFit:
    tail = k[k >= kmin]
    if np.unique(tail).size < 3:
        return PowerLawFit(omega=math.inf, kmin=kmin, fitness=0.0, n_tail=int(tail.size),
                           ks=1.0, degenerate=True)
    omega = _omega_mle(tail, kmin)
    d = _ks_distance(tail, kmin, omega)
    return PowerLawFit(omega=omega, kmin=kmin, fitness=max(0.0, 1.0 - d),
                       n_tail=int(tail.size), ks=d)


def fit_power_law(degrees, kmin: int | str | None = None, min_tail: int = 50) -> PowerLawFit:
    """Discrete maximum-likelihood power-law fit of a degree sequence.

    Parameters
    ----------
    degrees : sequence of int
        Observed degrees; zeros are ignored.
    kmin : int, "scan" or None
        Lower cutoff of the fitted tail. ``None`` fits the whole observed
        distribution (cutoff at the smallest degree). ``"scan"`` picks the
        cutoff minimizing the Kolmogorov-Smirnov distance, considering only
        cutoffs that leave at least ``min_tail`` observations.
    min_tail : int
        Minimum tail size.

    Returns
    -------
    PowerLawFit
        ``fitness`` is ``1 - KS`` between the empirical and fitted tail CDFs.
        Tails with fewer than three distinct values are flagged ``degenerate``
        and given zero fitness.
    """
    k = np.asarray(degrees, dtype=np.int64)
    k = k[k >= 1]
    if isinstance(kmin, str):
        if kmin != "scan":
            raise InvalidParameter(f"kmin must be an integer, None or 'scan', got {kmin!r}")
        candidates = [int(c) for c in np.unique(k) if (k >= c).sum() >= min_tail]
        if not candidates:
            raise InsufficientData(f"need at least {min_tail} degrees >= 1, got {k.size}")
        fits = [_fit_tail(k, c) for c in candidates]
        return min(fits, key=lambda f: (f.ks, f.kmin))

    if kmin is None:
        kmin = int(k.min()) if k.size else 1
    kmin = int(kmin)
    if kmin < 1:
        raise InvalidParameter("kmin must be >= 1")
    n_tail = int((k >= kmin).sum())
    if n_tail < min_tail:
        raise InsufficientData(f"need at least {min_tail} degrees >= {kmin}, got {n_tail}")
    return _fit_tail(k, kmin)


def write_edge_list(net: ContactNetwork, path) -> None:
    with open(path, "w", newline="\n") as fh:
        for i, j in net.edges:
            fh.write(f"{i} {j}\n")


def read_edge_list(path, n: int | None = None) -> ContactNetwork:
    """Read an ``i j`` edge list. Node count defaults to max id + 1."""
    pairs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidParameter(f"{path}:{lineno}: expected 'i j', got {line!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise InvalidParameter(f"{path}:{lineno}: non-integer node id") from None
    if n is None:
        n = max((max(p) for p in pairs), default=-1) + 1
    return ContactNetwork.from_edges(n, pairs)
