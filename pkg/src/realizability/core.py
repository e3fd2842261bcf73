"""Lattice domains, correlation specifications, finite measures and the
truncated-correlation machinery.

Configurations on a domain with ``N`` sites are encoded as integer bitmasks:
site ``i`` is occupied iff bit ``i`` is set.  A :class:`FiniteMeasure` is a
dense array of ``2**N`` weights indexed by bitmask.
"""

from dataclasses import dataclass
from itertools import combinations, permutations
import math
import string

import numpy as np

from . import combinatorics

MAX_ENUM_SITES = 24
SIGN_TOL = 1e-12
NORM_TOL = 1e-9


class DomainError(ValueError):
    """Input outside the domain of an operation."""


class SizingError(DomainError):
    """Domain too large for an enumerating operation."""


# --------------------------------------------------------------------------- #
# Geometry
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class LatticeDomain:
    """Finite box of ``Z^d``, either periodic (torus) or with free boundary.

    Sites are numbered in row-major order of their coordinates.
    """

    extents: tuple
    boundary: str = "periodic"

    def __post_init__(self):
        ext = tuple(int(e) for e in self.extents)
        if not ext or any(e < 1 for e in ext):
            raise DomainError(f"extents must be positive integers, got {self.extents!r}")
        if self.boundary not in ("periodic", "free"):
            raise DomainError(f"boundary must be 'periodic' or 'free', got {self.boundary!r}")
        object.__setattr__(self, "extents", ext)

    @classmethod
    def ring(cls, length):
        return cls((length,), "periodic")

    @classmethod
    def segment(cls, length):
        return cls((length,), "free")

    @property
    def d(self):
        return len(self.extents)

    @property
    def periodic(self):
        return self.boundary == "periodic"

    @property
    def size(self):
        return math.prod(self.extents)

    def coords(self, x):
        out = []
        for e in reversed(self.extents):
            out.append(x % e)
            x //= e
        return tuple(reversed(out))

    def index(self, coords):
        x = 0
        for c, e in zip(coords, self.extents):
            x = x * e + (c % e if self.periodic else c)
        return x

    def displacement(self, x, y):
        """Displacement from site x to site y (minimal image when periodic)."""
        out = []
        for a, b, e in zip(self.coords(x), self.coords(y), self.extents):
            r = b - a
            if self.periodic:
                r %= e
                if r > e // 2:
                    r -= e
            out.append(r)
        return tuple(out)

    def coordinate_array(self):
        """``(N, d)`` integer coordinates of all sites."""
        return np.array(np.unravel_index(np.arange(self.size), self.extents)).T

    def displacements(self):
        """``(N, N, d)`` array of displacements from site x to site y."""
        c = self.coordinate_array()
        disp = c[None, :, :] - c[:, None, :]
        if self.periodic:
            ext = np.array(self.extents)
            disp %= ext
            disp = np.where(disp > ext // 2, disp - ext, disp)
        return disp

    def distance(self, x, y):
        return math.sqrt(sum(r * r for r in self.displacement(x, y)))

    def require_enumerable(self, limit=MAX_ENUM_SITES):
        if self.size > limit:
            raise SizingError(
                f"domain has {self.size} sites; configuration enumeration is capped at {limit}")

    def to_dict(self):
        return {"d": self.d, "extents": list(self.extents), "boundary": self.boundary}


# --------------------------------------------------------------------------- #
# Pair and triplet functions
# --------------------------------------------------------------------------- #

def _offset(key, d):
    if isinstance(key, (int, np.integer)):
        key = (int(key),)
    key = tuple(int(k) for k in key)
    if len(key) != d:
        raise DomainError(f"offset {key} does not have dimension {d}")
    return key


def _neg(r):
    return tuple(-c for c in r)


class PairFunction:
    """Pair correlation factor: either translation invariant ``g(r)`` stored as a
    finite-support deviation from 1, or a general symmetric table ``G2(x, y)``.
    """

    def __init__(self, kind, support=None, matrix=None, d=None):
        self.kind = kind
        if kind == "translation_invariant":
            self.d = d
            self.support = support
        elif kind == "general":
            self.matrix_ = matrix
        else:
            raise DomainError(f"unknown pair function kind {kind!r}")

    @classmethod
    def translation_invariant(cls, support, d=1):
        """Build ``g`` from ``{offset: value}``; missing mirror offsets are filled
        in by symmetry and ``g(0) = 0`` is inserted when absent."""
        table = {}
        for key, value in dict(support).items():
            r = _offset(key, d)
            value = float(value)
            if not math.isfinite(value):
                raise DomainError(f"g{r} = {value} is not finite")
            for s in (r, _neg(r)):
                if s in table and table[s] != value:
                    raise DomainError(f"g is not symmetric at offset {r}")
                table[s] = value
        zero = (0,) * d
        if table.setdefault(zero, 0.0) != 0.0:
            raise DomainError("lattice pair functions require g(0) = 0")
        table = {r: v for r, v in table.items() if v != 1.0 or r == zero}
        return cls("translation_invariant", support=table, d=d)

    @classmethod
    def general(cls, matrix):
        G = np.array(matrix, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise DomainError("G2 must be a square matrix")
        if not np.allclose(G, G.T, rtol=0, atol=1e-14):
            raise DomainError("G2 must be symmetric")
        if not np.all(np.isfinite(G)):
            raise DomainError("G2 must be finite")
        G = 0.5 * (G + G.T)
        np.fill_diagonal(G, 0.0)
        return cls("general", matrix=G)

    @property
    def translation_invariant_kind(self):
        return self.kind == "translation_invariant"

    def __call__(self, r):
        if not self.translation_invariant_kind:
            raise DomainError("a general G2 has no offset form")
        return self.support.get(_offset(r, self.d), 1.0)

    def matrix(self, domain):
        """``G2(x, y)`` on the sites of ``domain`` (zero diagonal)."""
        n = domain.size
        if not self.translation_invariant_kind:
            if self.matrix_.shape != (n, n):
                raise DomainError(f"G2 table is {self.matrix_.shape}, domain has {n} sites")
            return self.matrix_.copy()
        if self.d != domain.d:
            raise DomainError("pair function and domain dimensions differ")
        disp = domain.displacements()
        G = np.ones((n, n))
        for r, v in self.support.items():
            G[np.all(disp == np.array(r), axis=-1)] = v
        np.fill_diagonal(G, 0.0)
        return G

    def deviation_sum(self):
        """``C(g) = sum_r |g(r) - 1|`` over the infinite lattice (exact)."""
        if not self.translation_invariant_kind:
            raise DomainError("C(g) is defined for translation-invariant g only")
        return float(sum(abs(v - 1.0) for v in self.support.values()))

    def support_items(self):
        return sorted(self.support.items())

    def __repr__(self):
        if self.translation_invariant_kind:
            return f"PairFunction(translation_invariant, {dict(self.support_items())})"
        return f"PairFunction(general, shape={self.matrix_.shape})"


def triangle_key(points):
    """Canonical shape of three lattice points, invariant under translation and
    permutation of the points."""
    pts = [tuple(p) for p in points]
    keys = []
    for k, base in enumerate(pts):
        rel = sorted(tuple(a - b for a, b in zip(q, base)) for j, q in enumerate(pts) if j != k)
        keys.append(tuple(rel))
    return min(keys)


class TripletFunction:
    """Triplet factor ``g3~`` keyed by triangle shape; equal to 1 off the table."""

    def __init__(self, table, d=1):
        self.d = d
        self.table = {}
        for pts, value in dict(table).items():
            value = float(value)
            if not value >= 0 or not math.isfinite(value):
                raise DomainError("g3 values must be finite and nonnegative")
            pts = [_offset(p, d) for p in pts]
            if len(pts) == 2:
                pts = [(0,) * d] + pts
            if len(pts) != 3:
                raise DomainError("a triplet shape needs three points (or two offsets)")
            key = triangle_key(pts)
            if self.table.get(key, value) != value:
                raise DomainError(f"conflicting g3 values for shape {key}")
            self.table[key] = value
        self.table = {k: v for k, v in self.table.items() if v != 1.0}

    def __call__(self, p0, p1, p2):
        return self.table.get(triangle_key((p0, p1, p2)), 1.0)

    @property
    def range(self):
        """``D3``: largest pairwise separation within a shape where g3 != 1."""
        best = 0.0
        for key in self.table:
            pts = [(0,) * self.d] + list(key)
            for a, b in combinations(pts, 2):
                best = max(best, math.dist(a, b))
        return best

    def deviation_sup(self):
        """``C3 = sup max(|g3 - 1|, |g3 - 1|**(1/3))``."""
        return max((max(abs(v - 1), abs(v - 1) ** (1 / 3)) for v in self.table.values()),
                   default=0.0)

    def tensor(self, domain):
        """``g3~`` on all site triples of ``domain`` as an ``N x N x N`` array."""
        n = domain.size
        T = np.ones((n, n, n))
        if not self.table:
            return T
        for x, y, z in combinations(range(n), 3):
            u = domain.displacement(x, y)
            v = domain.displacement(x, z)
            val = self((0,) * domain.d, u, v)
            if val != 1.0:
                for a, b, c in ((x, y, z), (x, z, y), (y, x, z), (y, z, x), (z, x, y), (z, y, x)):
                    T[a, b, c] = val
        return T


# --------------------------------------------------------------------------- #
# Correlation specification
# --------------------------------------------------------------------------- #

@dataclass(frozen=True, eq=False)
class CorrelationSpec:
    """Prescribed ``rho1`` (per site), pair factor ``G2`` and optional ``g3~``.

    Values are only required to be finite; sign and range violations are what
    :func:`realizability.conditions.check_pointwise` reports.
    """

    domain: LatticeDomain
    rho1: np.ndarray
    pair: PairFunction
    triplet: TripletFunction = None

    def __post_init__(self):
        n = self.domain.size
        r = np.asarray(self.rho1, dtype=float)
        if r.ndim == 0:
            r = np.full(n, float(r))
        if r.shape != (n,):
            raise DomainError(f"rho1 has shape {r.shape}, domain has {n} sites")
        if not np.all(np.isfinite(r)):
            raise DomainError("densities must be finite")
        r.setflags(write=False)
        object.__setattr__(self, "rho1", r)
        self.G2()  # validates shape/dimension

    @property
    def uniform(self):
        return bool(np.all(self.rho1 == self.rho1[0]))

    @property
    def rho(self):
        """Common density when ``rho1`` is uniform, else None."""
        return float(self.rho1[0]) if self.uniform else None

    @property
    def translation_invariant(self):
        return self.uniform and self.pair.translation_invariant_kind and self.domain.periodic

    def G2(self):
        cached = self.__dict__.get("_G2")
        if cached is None:
            cached = self.pair.matrix(self.domain)
            cached.setflags(write=False)
            object.__setattr__(self, "_G2", cached)
        return cached

    def rho2(self):
        R = np.outer(self.rho1, self.rho1) * self.G2()
        np.fill_diagonal(R, 0.0)
        return R

    def with_rho(self, rho):
        return CorrelationSpec(self.domain, rho, self.pair, self.triplet)

    @classmethod
    def from_tables(cls, domain, rho1, rho2):
        """Spec with a general ``G2`` reconstructed from measured tables."""
        rho1 = np.asarray(rho1, dtype=float)
        denom = np.outer(rho1, rho1)
        with np.errstate(divide="ignore", invalid="ignore"):
            G = np.where(denom > 0, np.asarray(rho2, dtype=float) / np.where(denom > 0, denom, 1), 0.0)
        return cls(domain, rho1, PairFunction.general(G))


# --------------------------------------------------------------------------- #
# Measures
# --------------------------------------------------------------------------- #

def popcounts(n):
    counts = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        counts = np.concatenate([counts, counts + 1])
    return counts


def superset_sums(w):
    """``out[xi] = sum_{eta >= xi} w[eta]`` (zeta transform over supersets)."""
    out = np.array(w, dtype=float)
    n = out.size.bit_length() - 1
    for i in range(n):
        v = out.reshape(-1, 2, 1 << i)
        v[:, 0, :] += v[:, 1, :]
    return out


def superset_mobius(r):
    """Inverse of :func:`superset_sums`:
    ``out[xi] = sum_{gamma disjoint from xi} (-1)**|gamma| r[xi | gamma]``."""
    out = np.array(r, dtype=float)
    n = out.size.bit_length() - 1
    for i in range(n):
        v = out.reshape(-1, 2, 1 << i)
        v[:, 0, :] -= v[:, 1, :]
    return out


def subset_products(values):
    """``out[m] = prod_{j in m} values[j]`` over all bitmasks m."""
    out = np.ones(1)
    for v in values:
        out = np.concatenate([out, out * v])
    return out


def subset_pair_products(W):
    """``out[m] = prod_{j<k in m} W[j, k]`` over all bitmasks m."""
    W = np.asarray(W, dtype=float)
    out = np.ones(1)
    for i in range(W.shape[0]):
        out = np.concatenate([out, out * subset_products(W[i, :i])])
    return out


def subset_pair_sums(W):
    """``out[m] = sum_{j<k in m} W[j, k]`` over all bitmasks m."""
    W = np.asarray(W, dtype=float)
    out = np.zeros(1)
    for i in range(W.shape[0]):
        lin = np.zeros(1)
        for v in W[i, :i]:
            lin = np.concatenate([lin, lin + v])
        out = np.concatenate([out, out + lin])
    return out


def occupation_matrix(n):
    """``(2**n, n)`` 0/1 array: row m holds the occupancy of configuration m."""
    masks = np.arange(1 << n, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(float)


class FiniteMeasure:
    """(Possibly signed) weights on all ``2**N`` configurations of a domain."""

    def __init__(self, domain, weights):
        domain.require_enumerable()
        w = np.asarray(weights, dtype=float)
        if w.shape != (1 << domain.size,):
            raise DomainError(f"expected {1 << domain.size} weights, got shape {w.shape}")
        total = w.sum()
        if not abs(total - 1.0) <= NORM_TOL:
            raise DomainError(f"weights sum to {total!r}, not 1")
        self.domain = domain
        self.weights = w

    @property
    def signed(self):
        return bool(self.weights.min() < -SIGN_TOL)

    @property
    def n_sites(self):
        return self.domain.size

    def require_unsigned(self):
        if self.signed:
            raise DomainError("operation requires an unsigned (probability) measure")

    def subset_correlations(self):
        """``rho_{|xi|}(xi)`` for every subset xi, indexed by bitmask."""
        return superset_sums(self.weights)

    def support(self, tol=0.0):
        return np.flatnonzero(np.abs(self.weights) > tol)

    @classmethod
    def point_mass(cls, domain, mask=0):
        w = np.zeros(1 << domain.size)
        w[mask] = 1.0
        return cls(domain, w)

    @classmethod
    def bernoulli(cls, domain, rho):
        domain.require_enumerable()
        rho = np.broadcast_to(np.asarray(rho, dtype=float), (domain.size,))
        w = np.ones(1)
        for r in rho:
            w = np.concatenate([w * (1 - r), w * r])
        return cls(domain, w)

    def __repr__(self):
        return f"FiniteMeasure(sites={self.n_sites}, signed={self.signed})"


def correlations_of_measure(measure, n):
    """Correlation function ``rho_n`` of a measure as a dense symmetric tensor.

    Entry ``[x1, ..., xn]`` is the probability that all listed sites are
    occupied; entries with a repeated site are zero.
    """
    measure.require_unsigned()
    N = measure.n_sites
    if not 1 <= n <= N:
        raise DomainError(f"order n={n} must satisfy 1 <= n <= {N}")
    if N ** n > 20_000_000:
        raise SizingError(f"rho_{n} table on {N} sites is too large")
    sub = measure.subset_correlations()
    out = np.zeros((N,) * n)
    for combo in combinations(range(N), n):
        val = sub[sum(1 << s for s in combo)]
        for perm in permutations(combo):
            out[perm] = val
    return out


def thin(measure, p):
    """Independent site-wise retention with probability ``p`` (scalar or per site)."""
    measure.require_unsigned()
    N = measure.n_sites
    p = np.broadcast_to(np.asarray(p, dtype=float), (N,))
    if np.any(p < 0) or np.any(p > 1):
        raise DomainError("retention probabilities must lie in [0, 1]")
    w = measure.weights.copy()
    for i in range(N):
        v = w.reshape(-1, 2, 1 << i)
        moved = v[:, 1, :] * (1 - p[i])
        v[:, 1, :] -= moved
        v[:, 0, :] += moved
    return FiniteMeasure(measure.domain, w)


def entropy(measure):
    """Gibbs-Shannon entropy in nats, with ``0 log 0 = 0``."""
    measure.require_unsigned()
    w = measure.weights[measure.weights > 0]
    return float(-(w * np.log(w)).sum())


# --------------------------------------------------------------------------- #
# Truncated (Ursell) correlations
# --------------------------------------------------------------------------- #

def _distinct_mask(N, n):
    """Boolean tensor: True where all n indices are distinct."""
    mask = np.ones((N,) * n, dtype=bool)
    idx = np.indices((N,) * n)
    for a, b in combinations(range(n), 2):
        mask &= idx[a] != idx[b]
    return mask


def _partition_product(tables, partition, n):
    letters = string.ascii_letters[:n]
    operands = []
    subs = []
    for block in partition:
        operands.append(tables[len(block) - 1])
        subs.append("".join(letters[i] for i in block))
    return np.einsum(",".join(subs) + "->" + letters, *operands)


def _check_tables(tables):
    if not tables:
        raise DomainError("need at least rho_1")
    if len(tables) > combinatorics.MAX_ORDER:
        raise DomainError(f"orders above {combinatorics.MAX_ORDER} are not supported")
    tables = [np.asarray(t, dtype=float) for t in tables]
    N = tables[0].shape[0]
    for k, t in enumerate(tables, start=1):
        if t.shape != (N,) * k:
            raise DomainError(f"table of order {k} has shape {t.shape}, expected {(N,) * k}")
    return tables, N


def truncated_from_full(tables):
    """Truncated correlations ``u_1..u_n`` from ``rho_1..rho_n`` (dense tensors).

    Solves the partition recursion ``rho_n = sum_partitions prod u_|B|`` for
    ``u_n`` on distinct tuples; entries with repeated sites are set to zero.
    """
    tables, N = _check_tables(tables)
    us = []
    for n, rho in enumerate(tables, start=1):
        acc = rho.copy()
        known = us + [np.zeros((N,) * n)]
        for part in combinatorics.set_partitions(n):
            if len(part) > 1:
                acc -= _partition_product(known, part, n)
        if n > 1:
            acc[~_distinct_mask(N, n)] = 0.0
        us.append(acc)
    return us


def full_from_truncated(us):
    """Inverse of :func:`truncated_from_full`."""
    us, N = _check_tables(us)
    out = []
    for n in range(1, len(us) + 1):
        acc = np.zeros((N,) * n)
        for part in combinatorics.set_partitions(n):
            acc += _partition_product(us, part, n)
        if n > 1:
            acc[~_distinct_mask(N, n)] = 0.0
        out.append(acc)
    return out


def _site_pair_values(g, sites, domain):
    G = g.matrix(domain) if domain is not None else np.asarray(g, dtype=float)
    n = len(sites)
    if len(set(sites)) != n:
        raise DomainError("sites must be distinct")
    return {(i, j): G[sites[i], sites[j]] for i, j in combinatorics.complete_edges(n)}


def ansatz_truncated(rho, g, sites, domain):
    """``u_n`` of the product ansatz ``rho_n = rho**n prod g`` via the sum over
    connected graphs on the n listed sites."""
    n = len(sites)
    gv = _site_pair_values(g, sites, domain)
    total = 0.0
    for graph in combinatorics.connected_graphs(n):
        term = 1.0
        for e in graph:
            term *= gv[e] - 1.0
        total += term
    return rho ** n * total


@dataclass
class PenroseBound:
    truncated: float
    bound: float
    l1_bound: float

    @property
    def holds(self):
        return abs(self.truncated) <= self.bound * (1 + 1e-12) + 1e-300


def penrose_tree_bound(rho, g, b, sites, domain, C=None):
    """Tree-graph bound ``rho**n b**(n-2) sum_T prod |g - 1|`` on ``|u_n|``.

    Also reports the integrated form ``rho**(n+1) ((n+1) b)**(n-1) C(g)**n``
    (with n+1 = number of sites) when ``C`` is given or computable from g.
    """
    n = len(sites)
    if n < 2:
        raise DomainError("the tree bound needs at least two sites")
    gv = _site_pair_values(g, sites, domain)
    total = 0.0
    for tree in combinatorics.labeled_trees(n):
        term = 1.0
        for e in tree:
            term *= abs(gv[e] - 1.0)
        total += term
    bound = rho ** n * b ** (n - 2) * total
    if C is None and isinstance(g, PairFunction) and g.translation_invariant_kind:
        C = g.deviation_sum()
    m = n - 1
    l1 = rho ** (m + 1) * ((m + 1) * b) ** (m - 1) * C ** m if C is not None else math.nan
    return PenroseBound(ansatz_truncated(rho, g, sites, domain), bound, l1)
