"""Closed-form realizability radii for the product ansatz and exact Lee-Yang
partition sums on finite domains."""

from dataclasses import dataclass
from itertools import combinations, product
import math

import numpy as np

from .core import DomainError, PairFunction, SizingError, subset_pair_products, subset_products
from .exact import TripletAnsatzOracle

MAX_WINDOW = 24
MAX_XI_SITES = 20


class UnboundedStabilityError(DomainError):
    pass


def c_of_g(g):
    """``C(g) = sum_r |g(r) - 1|``."""
    return g.deviation_sum()


def c3_of(g3):
    """``C3 = sup max(|g3 - 1|, |g3 - 1|**(1/3))``; zero for ``g3 = None``."""
    return 0.0 if g3 is None else g3.deviation_sup()


def volume_ball(d):
    """Volume of the ``d``-dimensional ball of diameter 1."""
    return math.pi ** (d / 2) / (2 ** d * math.gamma(d / 2 + 1))


# --------------------------------------------------------------------------- #
# Stability constant
# --------------------------------------------------------------------------- #

def _max_weight_independent(weights, conflict):
    """Exact maximum total weight of a conflict-free subset (branch and bound)."""
    n = len(weights)
    order = sorted(range(n), key=lambda i: -weights[i])
    w = [weights[i] for i in order]
    nbr = [{order.index(j) for j in range(n) if conflict[order[i]][j]} for i in range(n)]
    suffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    best = [0.0]

    def go(i, banned, total):
        if total + suffix[i] <= best[0]:
            return
        if i == n:
            best[0] = total
            return
        if i not in banned:
            go(i + 1, banned | nbr[i], total + w[i])
        go(i + 1, banned, total)

    go(0, frozenset(), 0.0)
    return best[0]


def stability_b(g):
    """Smallest ``b`` with ``prod_i g(x_i) <= b`` over admissible point sets.

    Only offsets where ``g > 1`` can raise the product, so the supremum is a
    maximum-weight independent set (weights ``log g``) among those offsets,
    with conflicts where ``g(s - t) = 0``.  Exact when at most
    ``MAX_WINDOW`` offsets have ``g > 1``.
    """
    if not g.translation_invariant_kind:
        raise DomainError("stability_b needs a translation-invariant g")
    zero = (0,) * g.d
    if g.support.get(zero, 1.0) != 0.0:
        raise UnboundedStabilityError("no hard core: admissible products are unbounded")
    up = [r for r, v in g.support.items() if v > 1.0]
    if not up:
        return 1.0
    if len(up) > MAX_WINDOW:
        raise SizingError(f"stability search is exact only for <= {MAX_WINDOW} offsets with g > 1")
    weights = [math.log(g.support[r]) for r in up]
    conflict = [[s != t and g(tuple(a - b for a, b in zip(s, t))) == 0.0 for t in up] for s in up]
    return math.exp(_max_weight_independent(weights, conflict))


def as_radius(g, b=None):
    """Guaranteed realizability radius ``(e b C(g))**-1`` of the product ansatz."""
    b = stability_b(g) if b is None else b
    return 1.0 / (math.e * b * c_of_g(g))


# --------------------------------------------------------------------------- #
# Lee-Yang
# --------------------------------------------------------------------------- #

def leeyang_b(G2):
    """``b = sup_x prod_{y != x} G2(x, y)`` for ``G2 >= 1`` off the diagonal.

    ``G2`` is a matrix on a finite domain or a translation-invariant
    :class:`PairFunction` (product over the infinite lattice).
    """
    if isinstance(G2, PairFunction):
        if not G2.translation_invariant_kind:
            G2 = G2.matrix_
        else:
            vals = [v for r, v in G2.support.items() if any(r)]
            if any(v < 1 for v in vals):
                raise DomainError("Lee-Yang bound requires G2 >= 1 off the diagonal")
            return float(np.prod(vals)) if vals else 1.0
    G = np.asarray(G2, dtype=float)
    off = ~np.eye(G.shape[0], dtype=bool)
    if np.any(G[off] < 1):
        raise DomainError("Lee-Yang bound requires G2 >= 1 off the diagonal")
    return float(np.where(off, G, 1.0).prod(axis=1).max())


def leeyang_threshold(G2):
    return 1.0 / leeyang_b(G2)


def leeyang_xi(spec, xi):
    """``Xi(xi) = sum_{gamma disjoint from xi} prod_{y in gamma}(-rho1(y) prod_{r in xi}
    G2(r, y)) prod_{pairs in gamma} G2``, evaluated directly.

    ``xi`` is a bitmask or an iterable of sites.
    """
    n = spec.domain.size
    if n > MAX_XI_SITES:
        raise SizingError(f"Lee-Yang sums are capped at {MAX_XI_SITES} sites")
    if not isinstance(xi, (int, np.integer)):
        xi = sum(1 << s for s in set(xi))
    inside = [x for x in range(n) if xi >> x & 1]
    rest = [y for y in range(n) if not xi >> y & 1]
    G = spec.G2()
    z = -spec.rho1[rest] * G[np.ix_(inside, rest)].prod(axis=0)
    terms = subset_products(z) * subset_pair_products(G[np.ix_(rest, rest)])
    return float(terms.sum())


def leeyang_xi_all(spec):
    """:func:`leeyang_xi` for every subset, indexed by bitmask.

    Sites are assigned one at a time to ``xi``, ``gamma`` or neither, keeping
    one running term per assignment (``3**N`` terms), then the terms are summed
    over ``gamma`` for each ``xi``.
    """
    n = spec.domain.size
    if n > MAX_XI_SITES - 4:
        raise SizingError(f"the all-subset Lee-Yang scan is capped at {MAX_XI_SITES - 4} sites")
    G = spec.G2()
    val = np.ones(1)
    xi = np.zeros(1, dtype=np.int64)
    gam = np.zeros(1, dtype=np.int64)
    for i in range(n):
        P = subset_products(G[i, :i])
        bit = 1 << i
        val = np.concatenate([val, val * P[gam], -spec.rho1[i] * val * P[xi | gam]])
        xi = np.concatenate([xi, xi | bit, xi])
        gam = np.concatenate([gam, gam, gam | bit])
    return np.bincount(xi, weights=val, minlength=1 << n)


def leeyang_z_bound(spec):
    """``min_y (rho1(y) prod_{x != y} G2(x, y))**-1``, a lower bound on the
    Lee-Yang activities ``|z_y|`` over all ``xi``; at least ``(rho b)**-1``."""
    G = spec.G2()
    off = ~np.eye(G.shape[0], dtype=bool)
    denom = spec.rho1 * np.where(off, G, 1.0).prod(axis=1)
    with np.errstate(divide="ignore"):
        return float((1.0 / denom).min())


# --------------------------------------------------------------------------- #
# Triplet radius
# --------------------------------------------------------------------------- #

@dataclass
class StabilityConstants:
    b: float
    b3: float
    C: float
    C3: float
    D: float
    D3: float
    d: int = 1

    @property
    def N(self):
        """Bound on the number of points within ``D3`` of a point, pairwise
        separated by at least ``D``."""
        return int(math.floor(((2 * self.D3 + self.D) / self.D) ** self.d + 1e-12))

    @property
    def exponent(self):
        return (3 * self.D3 / self.D) ** (2 * self.d)


def hardcore_range(g):
    """Hard-core diameter ``D``: the smallest separation ``|r| > 0`` with
    ``g(r) > 0``."""
    forbidden = [max(abs(c) for c in r) for r, v in g.support.items() if v == 0.0]
    limit = max(forbidden) + 1
    axis = range(-limit, limit + 1)
    norms = [math.hypot(*r) for r in product(axis, repeat=g.d) if any(r) and g(r) > 0]
    return min(norms)


def default_b3(C3, D, D3, d=1):
    return (1.0 + C3) ** ((3 * max(D3, D) / D) ** (2 * d))


def stability_constants(g, g3=None, b3=None, d=None):
    d = g.d if d is None else d
    D = hardcore_range(g)
    D3 = g3.range if g3 is not None else D
    D3 = max(D3, D)
    C3 = c3_of(g3)
    b3 = default_b3(C3, D, D3, d) if b3 is None else b3
    return StabilityConstants(stability_b(g), b3, c_of_g(g), C3, D, D3, d)


def triplet_radius(k, d=None):
    """``[e b b3 (1 + b C3)**((3 D3/D)**(2d)) (C + v_d (D3/2)**d C3)]**-1``.

    ``D3 < D`` is clamped to ``D``.
    """
    d = k.d if d is None else d
    D3 = max(k.D3, k.D)
    expo = (3 * D3 / k.D) ** (2 * d)
    denom = (math.e * k.b * k.b3 * (1 + k.b * k.C3) ** expo
             * (k.C + volume_ball(d) * (D3 / 2) ** d * k.C3))
    return 1.0 / denom


def b3_exhaustive(g3, D=1.0, window=None):
    """Exhaustive ``sup prod_{j<i} g3(x_i - x_0, x_j - x_0)`` for d = 1 over point
    sets with pairwise separation ``>= D`` inside ``[-window, window]``."""
    if g3.d != 1:
        raise DomainError("the exhaustive b3 search is implemented for d = 1")
    window = int(math.floor(g3.range)) if window is None else int(window)
    offs = [r for r in range(-window, window + 1) if abs(r) >= D]
    if len(offs) > 20:
        raise SizingError("b3 search window is capped at 20 offsets")
    best = 1.0
    for k in range(2, len(offs) + 1):
        for pts in combinations(offs, k):
            if any(abs(a - b) < D for a, b in combinations(pts, 2)):
                continue
            val = 1.0
            for a, b in combinations(pts, 2):
                val *= g3((0,), (a,), (b,))
            best = max(best, val)
    return best


def triplet_ansatz_oracle(spec, g3=None):
    """Correlation oracle ``rho**n prod g prod g3~`` on the domain of ``spec``."""
    return TripletAnsatzOracle(spec, g3)
