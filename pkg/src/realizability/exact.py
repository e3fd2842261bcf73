"""Exact realizations on finite domains.

* inclusion-exclusion (Moebius) measures built from a correlation oracle,
* linear feasibility of ``(rho1, G2)`` with Farkas certificates,
* strictly positive realizing measures, and
* the entropy-maximizing 2-Gibbsian realization with its potentials.
"""

from dataclasses import dataclass
from itertools import combinations
import math

import numpy as np
from scipy.special import logsumexp

from .conditions import PairingCertificate, pairing_value, verify_certificate
from .core import (
    CorrelationSpec,
    DomainError,
    FiniteMeasure,
    PairFunction,
    occupation_matrix,
    popcounts,
    subset_pair_products,
    subset_pair_sums,
    subset_products,
    superset_mobius,
    superset_sums,
    thin,
)
from .simplex import solve_lp, solve_phase1_highs

MAX_IE_SITES = 20
MAX_LP_SITES = 16
LP_TOL = 1e-9


class InfeasibleSpecError(DomainError):
    """The correlation spec is not realizable; ``certificate`` witnesses it."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class BoundarySpecError(DomainError):
    """Realizable, but without a strictly positive realizing measure."""

    def __init__(self, message, binding=None):
        super().__init__(message)
        self.binding = binding


class ConvergenceError(RuntimeError):
    pass


# --------------------------------------------------------------------------- #
# Correlation oracles
# --------------------------------------------------------------------------- #

class PairAnsatzOracle:
    """``rho_n(xi) = prod_{x in xi} rho1(x) * prod_{pairs in xi} G2``."""

    def __init__(self, spec):
        self.spec = spec
        self.domain = spec.domain
        self._G = spec.G2()

    def __call__(self, sites):
        sites = list(sites)
        if len(set(sites)) != len(sites):
            return 0.0
        val = float(np.prod(self.spec.rho1[sites]))
        for a, b in combinations(sites, 2):
            val *= self._G[a, b]
        return val

    def table(self):
        """Oracle value on every subset, indexed by bitmask."""
        self.domain.require_enumerable(MAX_IE_SITES)
        return subset_products(self.spec.rho1) * subset_pair_products(self._G)


class TripletAnsatzOracle(PairAnsatzOracle):
    """Pair ansatz times ``prod_{triples in xi} g3~``."""

    def __init__(self, spec, triplet=None):
        super().__init__(spec)
        self.triplet = triplet if triplet is not None else spec.triplet
        if self.triplet is None:
            raise DomainError("triplet ansatz needs a triplet function")
        self._T = self.triplet.tensor(spec.domain)

    def __call__(self, sites):
        val = super().__call__(sites)
        for a, b, c in combinations(list(sites), 3):
            val *= self._T[a, b, c]
        return val

    def table(self):
        self.domain.require_enumerable(MAX_IE_SITES)
        rho, G, T = self.spec.rho1, self._G, self._T
        out = np.ones(1)
        for i in range(self.domain.size):
            block = out * rho[i] * subset_products(G[i, :i]) * subset_pair_products(T[i, :i, :i])
            out = np.concatenate([out, block])
        return out


class MeasureOracle:
    """Correlations of an explicit (unsigned) measure."""

    def __init__(self, measure):
        measure.require_unsigned()
        self.domain = measure.domain
        self._table = measure.subset_correlations()

    def __call__(self, sites):
        sites = set(sites)
        return float(self._table[sum(1 << s for s in sites)])

    def table(self):
        return self._table.copy()


def oracle_table(oracle, domain):
    if hasattr(oracle, "table"):
        return oracle.table()
    domain.require_enumerable(MAX_IE_SITES)
    n = domain.size
    return np.array([oracle([i for i in range(n) if m >> i & 1]) for m in range(1 << n)])


def inclusion_exclusion_measure(oracle, domain=None):
    """``p(xi) = sum_{gamma disjoint from xi} (-1)**|gamma| rho(xi | gamma)``.

    The result always sums to one; it is a probability measure iff no weight is
    negative (check ``.signed``).
    """
    domain = domain if domain is not None else oracle.domain
    domain.require_enumerable(MAX_IE_SITES)
    table = oracle_table(oracle, domain)
    if table[0] != 1.0:
        raise DomainError("an oracle must assign correlation 1 to the empty set")
    return FiniteMeasure(domain, superset_mobius(table))


# --------------------------------------------------------------------------- #
# Linear feasibility
# --------------------------------------------------------------------------- #

def allowed_configurations(spec):
    """Bitmask array of ``C_G2``: no pair with ``G2 = 0`` is jointly occupied."""
    forbidden = (spec.G2() == 0).astype(float)
    np.fill_diagonal(forbidden, 0.0)
    clash = subset_pair_sums(forbidden)
    return np.flatnonzero(clash == 0)


def _allowed_pairs(spec):
    G = spec.G2()
    n = spec.domain.size
    return [(x, y) for x, y in combinations(range(n), 2) if G[x, y] != 0]


def constraint_system(spec, masks=None):
    """Rows: normalization, ``rho1(x)``, ``rho2(x, y)`` for allowed pairs."""
    n = spec.domain.size
    masks = allowed_configurations(spec) if masks is None else masks
    occ = occupation_matrix(n)[masks]
    pairs = _allowed_pairs(spec)
    rows = [np.ones(len(masks))] + [occ[:, x] for x in range(n)]
    rows += [occ[:, x] * occ[:, y] for x, y in pairs]
    r2 = spec.rho2()
    target = np.concatenate([[1.0], spec.rho1, [r2[x, y] for x, y in pairs]])
    labels = ["normalization"] + [f"rho1[{x}]" for x in range(n)]
    labels += [f"rho2[{x},{y}]" for x, y in pairs]
    return np.array(rows), target, masks, pairs, labels


@dataclass
class FeasibilityOutcome:
    feasible: bool
    measure: FiniteMeasure = None
    certificate: PairingCertificate = None
    at_tolerance: bool = False
    infeasibility: float = 0.0
    residual: float = 0.0

    def __bool__(self):
        return self.feasible


def _certificate_from_farkas(spec, y, pairs):
    n = spec.domain.size
    f0 = y[0]
    f1 = y[1:n + 1].copy()
    f2 = np.zeros((n, n))
    for (x, z), v in zip(pairs, y[n + 1:]):
        f2[x, z] = f2[z, x] = v / 2
    G = spec.G2()
    forbidden = np.triu(G == 0, 1)
    if forbidden.any():
        # rho2 vanishes on forbidden pairs, so any weight there leaves the
        # pairing value unchanged; make it large enough to dominate.
        big = abs(f0) + np.abs(f1).sum() + np.abs(f2).sum() + 1.0
        xs, zs = np.nonzero(forbidden)
        f2[xs, zs] = f2[zs, xs] = big
    cert = PairingCertificate(f0, f1, f2)
    deficit = -cert.configuration_values().min()
    if deficit > 0:
        cert = PairingCertificate(f0 + deficit, f1, cert.f2)
    return cert


def lp_feasible(spec, tol=LP_TOL, method="highs"):
    """Decide realizability of ``(rho1, G2)`` exactly on the domain.

    Returns a realizing measure, or a :class:`PairingCertificate` that is
    nonnegative on every configuration yet pairs negatively with the correlations.
    ``method`` selects the phase-1 solver: ``"highs"`` (scipy) or the dense
    tableau ``"simplex"``, which stalls on large degenerate systems.
    """
    spec.domain.require_enumerable(MAX_LP_SITES)
    if np.any(spec.rho1 < 0) or np.any(spec.rho2() < 0):
        raise DomainError("negative correlations are never realizable; see check_pointwise")
    A, b, masks, pairs, labels = constraint_system(spec)
    if method == "highs":
        res = solve_phase1_highs(A, b, tol=tol)
    elif method == "simplex":
        res = solve_lp(A, b, tol=tol)
    else:
        raise DomainError(f"unknown LP method {method!r}")
    if res.status == "infeasible":
        cert = _certificate_from_farkas(spec, res.farkas, pairs)
        return FeasibilityOutcome(False, certificate=cert, infeasibility=res.infeasibility)
    x = np.where(res.x < 0, 0.0, res.x)
    w = np.zeros(1 << spec.domain.size)
    w[masks] = x
    w /= w.sum()
    residual = float(np.abs(A @ w[masks] - b).max())
    return FeasibilityOutcome(True, FiniteMeasure(spec.domain, w),
                              at_tolerance=res.infeasibility > 1e-12,
                              infeasibility=res.infeasibility, residual=residual)


def rho_threshold_exact(g, domain, tol=1e-6, triplet=None):
    """Bracket ``(lo, hi)`` around the largest uniform density for which ``g`` is
    realizable on ``domain``; ``lo`` is feasible, ``hi`` is not (or equals 1)."""
    def feasible(rho):
        return lp_feasible(CorrelationSpec(domain, rho, g, triplet)).feasible

    if feasible(1.0):
        return 1.0, 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


# --------------------------------------------------------------------------- #
# Interior measures
# --------------------------------------------------------------------------- #

def _small_positive(measure, spec):
    """True when every allowed configuration with at most two particles
    carries positive mass."""
    n = spec.domain.size
    masks = allowed_configurations(spec)
    small = masks[popcounts(n)[masks] <= 2]
    return bool(np.all(measure.weights[small] > 0))


def thinned_realization(spec, deltas=(1e-2, 1e-4, 1e-6)):
    """Realizing measure with positive mass on every allowed configuration of
    at most two particles: solve at density ``(1 + delta) rho1`` and thin back.

    Raises :class:`BoundarySpecError` naming the binding constraints when no
    ``delta`` leaves the correlations feasible.
    """
    active = spec.rho1 > 0
    if np.any(spec.rho1[active] >= 1):
        x = int(np.flatnonzero(spec.rho1 >= 1)[0])
        raise BoundarySpecError(f"binding constraint rho1[{x}] = 1", binding=[f"rho1[{x}]"])
    last = None
    for delta in deltas:
        s = 1.0 + delta
        if np.any(spec.rho1 * s > 1):
            continue
        up = lp_feasible(spec.with_rho(spec.rho1 * s))
        if up.feasible:
            return thin(up.measure, 1.0 / s)
        last = up
    binding = _binding_constraints(spec, last.certificate) if last is not None else []
    raise BoundarySpecError(
        "spec has no strictly positive realization (density is at the threshold); "
        f"binding constraint(s): {', '.join(binding) or 'rho1 <= 1'}", binding=binding)


def interior_measure(feasible, spec, eps=1e-3, max_halvings=60):
    """Strictly positive realizing measure on ``C_G2``.

    Adds ``eps`` to every allowed configuration with more than two particles
    and re-solves the (triangular) constraints for the weights of the
    configurations with at most two particles; ``eps`` is halved until all
    weights are positive.  An input without mass on some small configuration
    (e.g. an LP vertex) is first replaced by :func:`thinned_realization`.
    Sites with ``rho1 = 0`` stay empty.
    """
    feasible.require_unsigned()
    if eps == 0:
        return feasible
    spec = _restrict_to_active(spec)
    if not _small_positive(feasible, spec):
        feasible = thinned_realization(spec)
    n = spec.domain.size
    allowed = np.zeros(1 << n, dtype=bool)
    allowed[allowed_configurations(spec)] = True
    big = allowed & (popcounts(n) > 2)
    r2 = spec.rho2()
    pairs = _allowed_pairs(spec)
    for _ in range(max_halvings + 1):
        h = np.where(big, feasible.weights + eps, 0.0)
        above = superset_sums(h)
        for x, y in pairs:
            m = (1 << x) | (1 << y)
            h[m] = r2[x, y] - above[m]
        for x in range(n):
            m = 1 << x
            h[m] = spec.rho1[x] - above[m] - sum(h[m | (1 << y)] for y in range(n)
                                                 if y != x and allowed[m | (1 << y)])
        h[0] = 0.0
        h[0] = 1.0 - h.sum()
        if np.all(h[allowed] > 0):
            return FiniteMeasure(spec.domain, h)
        eps /= 2
    raise BoundarySpecError("no admissible perturbation found: the correlations sit on the "
                            "boundary of the realizable set")


def _binding_constraints(spec, cert, top=3):
    n = spec.domain.size
    items = [("normalization", abs(cert.f0))]
    items += [(f"rho1[{x}]", abs(cert.f1[x])) for x in range(n)]
    G = spec.G2()
    items += [(f"rho2[{x},{y}]", abs(2 * cert.f2[x, y]))
              for x, y in combinations(range(n), 2) if G[x, y] != 0]
    items.sort(key=lambda t: -t[1])
    return [name for name, w in items[:top] if w > 0]


def positive_realization(spec, eps=1e-3):
    """A realizing measure positive on every allowed configuration that avoids
    zero-density sites."""
    return interior_measure(thinned_realization(spec), spec, eps)


def _restrict_to_active(spec):
    """Spec whose G2 also forbids every pair touching a zero-density site, so
    that its allowed configurations avoid those sites entirely."""
    G = spec.G2().copy()
    dead = spec.rho1 == 0
    if not dead.any():
        return spec
    # a zero-density site hosts no particle: encode it as a clash with every
    # other site (plus its own rho1 = 0 row)
    G[dead, :] = 0.0
    G[:, dead] = 0.0
    return CorrelationSpec(spec.domain, spec.rho1, PairFunction.general(G))


# --------------------------------------------------------------------------- #
# Max-entropy 2-Gibbsian realization
# --------------------------------------------------------------------------- #

@dataclass
class PairPotentials:
    """One- and two-body potentials of a 2-Gibbsian measure.

    The energy of a configuration is ``sum_x phi1[x] eta(x) +
    sum_{x<y} phi2[x, y] eta(x) eta(y)`` (each unordered pair counted once),
    and ``nu(eta) = exp(-energy - logZ)``.  ``inf`` marks forbidden sites and
    pairs; pairs touching a forbidden site carry 0 (undetermined).
    """

    phi1: np.ndarray
    phi2: np.ndarray
    logZ: float

    def energies(self, n=None):
        n = self.phi1.size if n is None else n
        occ = occupation_matrix(n)
        with np.errstate(invalid="ignore"):
            e1 = np.where(occ > 0, self.phi1[None, :], 0.0).sum(axis=1)
            iu = np.triu_indices(n, 1)
            pair_occ = occ[:, iu[0]] * occ[:, iu[1]]
            e2 = np.where(pair_occ > 0, self.phi2[iu][None, :], 0.0).sum(axis=1)
        return e1 + e2

    def log_weights(self):
        return -self.energies() - self.logZ

    def gibbs_measure(self, domain):
        return FiniteMeasure(domain, np.exp(self.log_weights()))


def _features(spec, masks):
    n = spec.domain.size
    occ = occupation_matrix(n)[masks]
    sites = [x for x in range(n) if spec.rho1[x] > 0]
    G = spec.G2()
    pairs = [(x, y) for x, y in combinations(sites, 2) if G[x, y] != 0]
    cols = [occ[:, x] for x in sites] + [occ[:, x] * occ[:, y] for x, y in pairs]
    r2 = spec.rho2()
    target = np.concatenate([spec.rho1[sites], [r2[x, y] for x, y in pairs]])
    return np.array(cols).T, target, sites, pairs


def maxent_gibbs(spec, tol=1e-10, max_iter=500):
    """Entropy-maximizing realization of ``(rho1, G2)`` and its potentials.

    Minimizes the convex dual ``log Z(theta) + theta . t`` by damped Newton
    steps.  Raises :class:`InfeasibleSpecError` (with certificate) when ``spec``
    is not realizable and :class:`BoundarySpecError` when it is realizable
    only on the boundary.
    """
    dom = spec.domain
    dom.require_enumerable(MAX_LP_SITES)
    n = dom.size
    outcome = lp_feasible(spec)
    if not outcome.feasible:
        raise InfeasibleSpecError("spec is not realizable", outcome.certificate)
    positive_realization(spec)

    reduced = _restrict_to_active(spec)
    masks = allowed_configurations(reduced)
    F, t, sites, pairs = _features(spec, masks)
    p = len(sites)
    theta = np.zeros(F.shape[1])
    r = spec.rho1[sites]
    theta[:p] = np.log((1 - r) / r)

    def dual(th):
        e = -F @ th
        lz = logsumexp(e)
        return lz + th @ t, lz, np.exp(e - lz)

    val, lz, nu = dual(theta)
    for it in range(max_iter + 1):
        mean = F.T @ nu
        grad = t - mean
        if np.abs(grad).max() <= tol:
            break
        if it == max_iter:
            raise ConvergenceError(f"Newton did not converge in {max_iter} iterations "
                                   f"(gradient norm {np.abs(grad).max():.3g})")
        H = (F * nu[:, None]).T @ F - np.outer(mean, mean)
        try:
            step = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, -grad, rcond=None)[0]
        s = 1.0
        for _ in range(60):
            cand = dual(theta + s * step)
            if cand[0] <= val + 1e-4 * s * (grad @ step):
                break
            s /= 2
        theta = theta + s * step
        val, lz, nu = cand

    weights = np.zeros(1 << n)
    weights[masks] = nu
    phi1 = np.full(n, np.inf)
    phi1[sites] = theta[:p]
    G = spec.G2()
    phi2 = np.where(G == 0, np.inf, 0.0)
    np.fill_diagonal(phi2, 0.0)
    for (x, y), v in zip(pairs, theta[p:]):
        phi2[x, y] = phi2[y, x] = v
    return FiniteMeasure(dom, weights), PairPotentials(phi1, phi2, float(lz))


def constraint_residual(measure, spec):
    """Max violation of the normalization, ``rho1`` and ``rho2`` constraints."""
    sub = measure.subset_correlations()
    n = spec.domain.size
    r2 = spec.rho2()
    res = abs(sub[0] - 1.0)
    res = max(res, max(abs(sub[1 << x] - spec.rho1[x]) for x in range(n)))
    for x, y in combinations(range(n), 2):
        res = max(res, abs(sub[(1 << x) | (1 << y)] - r2[x, y]))
    return float(res)


def gibbs_residual(measure, potentials):
    """``max |log nu - (-energy - logZ)|`` over the support of the measure."""
    supp = measure.weights > 0
    logw = potentials.log_weights()
    return float(np.abs(np.log(measure.weights[supp]) - logw[supp]).max())


def kl_divergence(mu, nu):
    """``KL(mu || nu)`` in nats (inf when mu is not absolutely continuous)."""
    a, b = mu.weights, nu.weights
    supp = a > 0
    if np.any(b[supp] <= 0):
        return math.inf
    return float((a[supp] * np.log(a[supp] / b[supp])).sum())
