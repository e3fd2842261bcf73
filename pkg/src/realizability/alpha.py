"""The one-dimensional ``g_alpha`` family: ``g(0) = 0``, ``g(+-1) = alpha`` and
``g = 1`` beyond.  Bound curves, explicit realizing constructions, the
continuum hard-core constants and coarse-graining."""

from dataclasses import dataclass
import csv
import io
import math

import numpy as np

from .bounds import volume_ball
from .core import CorrelationSpec, DomainError, FiniteMeasure, LatticeDomain, PairFunction
from .rng import SplitMix64

#: numerical constants reported for the family and the continuum problem
REPORTED = {
    "alpha0_lower": 0.265,
    "alpha0_upper": (326 - math.sqrt(3115)) / 822,
    "continuum_d1_lower": 0.395,
    "continuum_d1_cluster": 0.4,
    "continuum_d2_cluster": 0.5107,
}


def _check_alpha(alpha):
    alpha = float(alpha)
    if not alpha >= 0 or not math.isfinite(alpha):
        raise DomainError(f"alpha must be a finite nonnegative number, got {alpha}")
    return alpha


def alpha_pair(alpha):
    """The pair function ``g_alpha`` on Z."""
    return PairFunction.translation_invariant({1: _check_alpha(alpha)})


def alpha_spec(alpha, rho, ring):
    return CorrelationSpec(LatticeDomain.ring(ring), rho, alpha_pair(alpha))


# --------------------------------------------------------------------------- #
# Closed-form bounds
# --------------------------------------------------------------------------- #

def r_f(alpha):
    """Upper bound from nonnegativity of the structure function."""
    a = _check_alpha(alpha)
    return 1 / (3 - 2 * a) if a <= 1 else 1 / (2 * a - 1)


def r_a(alpha):
    """Lower bound from the general cluster (alpha <= 1) and Lee-Yang (alpha >= 1)
    constructions."""
    a = _check_alpha(alpha)
    return 1 / (math.e * (3 - 2 * a)) if a <= 1 else 1 / a ** 2


def r_s(alpha):
    """Density reached by the period-two superposition; valid for alpha >= 1/2."""
    a = _check_alpha(alpha)
    if a < 0.5:
        raise DomainError("r_S is defined on the branch alpha >= 1/2")
    return 1 / (1 + math.sqrt(2 - 2 * a)) if a <= 1 else 1 / (2 * a - 1)


def r_b(alpha):
    """Density reached by Bernoulli deletion; valid for 0 <= alpha <= 1."""
    a = _check_alpha(alpha)
    if a > 1:
        raise DomainError("r_B is defined on the branch 0 <= alpha <= 1")
    return 1 / (1 + math.sqrt(1 - a)) ** 2


def window_variance(alpha, rho, m):
    """Particle-number variance of ``m`` consecutive sites."""
    return m * rho * (1 - rho) + 2 * (m - 1) * rho ** 2 * (alpha - 1)


def _first_violation(alpha, m):
    """Smallest rho in [0, 1] where the m-window variance drops below
    ``theta (1 - theta)``, or None.

    On ``k <= m rho < k + 1`` the gap is the quadratic
    ``(m**2 - a) rho**2 - 2 m k rho + k (k + 1)`` with
    ``a = m - 2 (m - 1) (alpha - 1)``.
    """
    a = m - 2 * (m - 1) * (alpha - 1)
    A = m * m - a
    for k in range(m):
        lo, hi = k / m, (k + 1) / m
        B, C = -2 * m * k, k * (k + 1)
        pts = [lo, hi]
        if A == 0:
            if B != 0:
                pts.append(-C / B)
        else:
            disc = B * B - 4 * A * C
            if disc >= 0:
                s = math.sqrt(disc)
                pts += [(-B - s) / (2 * A), (-B + s) / (2 * A)]
        pts = sorted(p for p in pts if lo <= p <= hi)
        for left, right in zip(pts, pts[1:]):
            if right - left <= 1e-15:
                continue
            mid = 0.5 * (left + right)
            if A * mid * mid + B * mid + C < 0:
                return left
    return None


def yamada_scan(alpha, max_window=64):
    """Infimum of densities at which some interval of at most ``max_window``
    sites violates the variance condition.

    Returns ``(rho, m)`` with ``m`` the binding window length, or ``(1.0, None)``
    when no window fails (the case for every alpha >= 1, where the interval
    variances dominate the Bernoulli ones).  Breakpoints are located exactly
    by solving the piecewise quadratics.
    """
    a = _check_alpha(alpha)
    best, arg = 1.0, None
    for m in range(1, max_window + 1):
        v = _first_violation(a, m)
        if v is not None and v < best:
            best, arg = v, m
    return best, arg


def r_y(alpha, max_window=64):
    """Upper bound ``R_Y``: the Yamada interval scan, capped by ``R_F``.

    Returns ``(R_Y, m)``; ``m`` is the binding window, or None when the cap
    binds (alpha >= 1).
    """
    scan, m = yamada_scan(alpha, max_window)
    cap = r_f(alpha)
    return (scan, m) if scan <= cap else (cap, None)


# --------------------------------------------------------------------------- #
# Superposition of period-two measures
# --------------------------------------------------------------------------- #

def superposition_params(alpha):
    """Optimal ``(p, q)``; per-pair law (1,0): p, (0,1): p, (0,0): q, (1,1): 1-2p-q."""
    a = _check_alpha(alpha)
    if a < 0.5:
        raise DomainError("the superposition construction needs alpha >= 1/2")
    if a <= 1:
        s = math.sqrt(2 - 2 * a)
        p, q = s / (1 + s), 0.0
    else:
        p, q = 0.0, (2 * a - 2) / (2 * a - 1)
    if 1 - 2 * p - q < -1e-15:
        raise DomainError("pair probabilities are negative")
    return p, q


def _pair_law(p, q):
    # index = eta_left + 2 * eta_right
    return np.array([q, p, p, max(1 - 2 * p - q, 0.0)])


def superposition_measure(alpha, ring_size):
    """Exact superposition measure on an even ring (at most 20 sites)."""
    L = int(ring_size)
    if L % 2 or L < 4:
        raise DomainError("the superposition measure needs an even ring of at least 4 sites")
    if L > 20:
        raise DomainError("exact superposition measures are limited to 20 sites")
    law = _pair_law(*superposition_params(alpha))
    masks = np.arange(1 << L)
    total = np.zeros(1 << L)
    for shift in (0, 1):
        w = np.ones(1 << L)
        for j in range(L // 2):
            x, y = (2 * j + shift) % L, (2 * j + 1 + shift) % L
            w *= law[((masks >> x) & 1) + 2 * ((masks >> y) & 1)]
        total += 0.5 * w
    return FiniteMeasure(LatticeDomain.ring(L), total)


def superposition_sample(alpha, n, count=1, seed=0):
    """``count`` i.i.d. configurations of ``n`` consecutive sites, as an
    ``(count, n)`` 0/1 array.  Per sample: one uniform picks the partition,
    then one uniform per pair (left to right) picks its state by inversion
    over (0,0), (1,0), (0,1), (1,1)."""
    law = _pair_law(*superposition_params(alpha))
    cum = np.cumsum(law)
    cum[-1] = 1.0
    rng = SplitMix64(seed)
    npairs = n // 2 + 1
    out = np.zeros((count, n), dtype=np.uint8)
    for c in range(count):
        u = rng.uniform(1 + npairs)
        shift = int(u[0] >= 0.5)
        states = np.searchsorted(cum, u[1:], side="right")
        bits = np.stack([states & 1, states >> 1], axis=1).reshape(-1)
        out[c] = bits[shift:shift + n]
    return out


# --------------------------------------------------------------------------- #
# Bernoulli deletion
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class BernoulliDeletion:
    lam: float
    kappa: float
    rho: float
    g1: float
    g2: float


def bernoulli_deletion(alpha):
    """Closed-form parameters and correlations of the deletion construction."""
    a = _check_alpha(alpha)
    if a > 1:
        raise DomainError("Bernoulli deletion needs 0 <= alpha <= 1")
    kappa = math.sqrt(1 - a)
    lam = 1 / (1 + kappa)
    rho = lam * (1 - lam * kappa)
    g1 = (1 - kappa) / (1 - lam * kappa)
    return BernoulliDeletion(lam, kappa, rho, g1, 1.0)


def bernoulli_deletion_sample(alpha, n, count=1, seed=0):
    """``count`` configurations of ``n`` consecutive sites.

    Per sample the stream supplies ``n + 1`` uniforms for the initial
    Bernoulli(lambda) field on sites ``0..n`` and then ``n`` coins, one per
    site left to right; site ``i`` loses its particle when site ``i + 1`` is
    initially occupied and coin ``i`` is below kappa.
    """
    bd = bernoulli_deletion(alpha)
    rng = SplitMix64(seed)
    u = rng.uniform(count * (2 * n + 1)).reshape(count, 2 * n + 1)
    init = u[:, :n + 1] < bd.lam
    coin = u[:, n + 1:] < bd.kappa
    keep = init[:, :n] & ~(init[:, 1:] & coin)
    return keep.astype(np.uint8)


# --------------------------------------------------------------------------- #
# Continuum hard rods and coarse-graining
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class ContinuumBounds:
    d: int
    lower: float
    upper: float
    refined_lower: float = None
    cluster_lower: float = None
    strict_upper: bool = False


def continuum_hardcore_bounds(d):
    """Bounds ``e**-1 <= 2**d v_d rho_bar <= 1`` on the maximal density of the
    unit-diameter hard-core pair function, plus reported refinements."""
    if int(d) != d or d < 1:
        raise DomainError("d must be a positive integer")
    scale = volume_ball(d) * 2 ** d
    refined = REPORTED["continuum_d1_lower"] if d == 1 else None
    cluster = {1: REPORTED["continuum_d1_cluster"],
               2: REPORTED["continuum_d2_cluster"]}.get(d)
    return ContinuumBounds(d, 1 / (math.e * scale), 1 / scale, refined, cluster, d == 1)


def coarse_grain_pair(n):
    """Lattice ``g`` obtained by binning hard rods into cells of width ``1/n``."""
    n = int(n)
    if n < 1:
        raise DomainError("spacing n must be >= 1")
    support = {j: 0.0 for j in range(1, n)}
    support[n] = 0.5
    return PairFunction.translation_invariant(support)


def coarse_grain(n, rho, ring):
    """Lattice spec of density ``rho / n`` on a ring of ``ring`` sites."""
    if ring < 2 * n + 1:
        raise DomainError("the ring must exceed twice the spacing")
    return CorrelationSpec(LatticeDomain.ring(ring), rho / n, coarse_grain_pair(n))


# --------------------------------------------------------------------------- #
# Bounds table
# --------------------------------------------------------------------------- #

BOUNDS_HEADER = ("alpha", "R_F", "R_Y", "r_A", "r_S", "r_B")


@dataclass
class BoundsRow:
    alpha: float
    R_F: float
    R_Y: float
    r_A: float
    r_S: float = None
    r_B: float = None
    binding_window: int = None

    def values(self):
        return [self.alpha, self.R_F, self.R_Y, self.r_A, self.r_S, self.r_B]


def bounds_row(alpha, max_window=64):
    a = _check_alpha(alpha)
    ry, m = r_y(a, max_window)
    return BoundsRow(a, r_f(a), ry, r_a(a),
                     r_s(a) if a >= 0.5 else None,
                     r_b(a) if a <= 1 else None, m)


def bounds_table(alphas, max_window=64):
    return [bounds_row(a, max_window) for a in alphas]


def grid(start, stop, step):
    """Inclusive arithmetic grid, robust to rounding of the end point."""
    if step <= 0:
        raise DomainError("grid step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    if count < 1:
        raise DomainError("empty grid")
    return [start + i * step for i in range(count)]


def bounds_csv(rows):
    """CSV text with header ``alpha,R_F,R_Y,r_A,r_S,r_B``; empty cells mark
    bounds outside their branch."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BOUNDS_HEADER)
    for row in rows:
        w.writerow(["" if v is None else f"{v:.17g}" for v in row.values()])
    return buf.getvalue()
