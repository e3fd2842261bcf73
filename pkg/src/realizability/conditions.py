"""Necessary conditions for realizability of ``(rho1, rho2)`` on a lattice domain.

Every check returns plain data; :func:`check_all` collects them into
:class:`ConditionRow` records for the ``check`` report.
"""

from dataclasses import dataclass, field
from itertools import product
import math

import numpy as np

from .core import DomainError, SizingError, subset_pair_sums

PSD_TOL = 1e-9
YAMADA_TOL = 1e-12
MAX_PSD_SITES = 512
MAX_DFT_SITES = 4096
MAX_CERT_SITES = 20


@dataclass
class ConditionRow:
    condition: str
    detail: str
    value: float
    bound: float
    passed: bool


# --------------------------------------------------------------------------- #
# Pointwise nonnegativity
# --------------------------------------------------------------------------- #

def check_pointwise(spec):
    """Rows for every negative ``rho1``/``rho2`` entry (and ``rho1 > 1``)."""
    rows = []
    r1 = spec.rho1
    r2 = spec.rho2()
    for x in np.flatnonzero(r1 < 0):
        rows.append(ConditionRow("pointwise", f"rho1[{x}]", float(r1[x]), 0.0, False))
    for x in np.flatnonzero(r1 > 1):
        rows.append(ConditionRow("pointwise", f"rho1[{x}] > 1", float(r1[x]), 1.0, False))
    xs, ys = np.nonzero(np.triu(r2 < 0, 1))
    for x, y in zip(xs, ys):
        rows.append(ConditionRow("pointwise", f"rho2[{x},{y}]", float(r2[x, y]), 0.0, False))
    if not rows:
        low = min(float(r1.min()), float(r2.min()))
        rows.append(ConditionRow("pointwise", "min rho1, rho2", low, 0.0, True))
    return rows


# --------------------------------------------------------------------------- #
# Covariance / structure function
# --------------------------------------------------------------------------- #

def covariance_matrix(spec):
    """``S(x, y) = rho2(x, y) + rho1(x) delta_xy - rho1(x) rho1(y)``."""
    r1 = spec.rho1
    return spec.rho2() + np.diag(r1) - np.outer(r1, r1)


def covariance_psd(spec):
    """Smallest eigenvalue of the covariance matrix and the PSD verdict."""
    if spec.domain.size > MAX_PSD_SITES:
        raise SizingError(f"covariance test is capped at {MAX_PSD_SITES} sites")
    S = covariance_matrix(spec)
    lam = float(np.linalg.eigvalsh(S)[0])
    return lam, lam >= -PSD_TOL


@dataclass
class StructureFunction:
    wavevectors: np.ndarray   # (K, d)
    values: np.ndarray        # (K,)

    @property
    def minimum(self):
        return float(self.values.min())

    @property
    def argmin(self):
        return self.wavevectors[int(np.argmin(self.values))]


def structure_function(spec):
    """``S^(k) = rho + rho**2 sum_r exp(i k.r) (g(r) - 1)`` on the dual lattice of
    a periodic domain, by direct summation over the torus displacements."""
    dom = spec.domain
    if not spec.translation_invariant:
        raise DomainError("structure_function needs a translation-invariant spec on a "
                          "periodic domain; use covariance_psd instead")
    if dom.size > MAX_DFT_SITES:
        raise SizingError(f"direct DFT is capped at {MAX_DFT_SITES} sites")
    rho = spec.rho
    offsets, dev = [], []
    for y in range(dom.size):
        r = dom.displacement(0, y)
        v = spec.pair.support.get(r, 1.0) - 1.0 if y else -1.0
        if v != 0.0:
            offsets.append(r)
            dev.append(v)
    R = np.array(offsets, dtype=float).reshape(-1, dom.d)
    ext = np.array(dom.extents, dtype=float)
    K = 2 * np.pi * np.array(list(product(*(range(e) for e in dom.extents))), dtype=float) / ext
    F = np.exp(1j * K @ R.T) @ np.array(dev)
    if np.abs(F.imag).max(initial=0.0) > 1e-10:
        raise DomainError("structure function has a non-negligible imaginary part")
    return StructureFunction(K, rho + rho * rho * F.real)


# --------------------------------------------------------------------------- #
# Yamada
# --------------------------------------------------------------------------- #

@dataclass
class YamadaWindow:
    sites: tuple
    mean: float
    theta: float
    variance: float

    @property
    def bound(self):
        return self.theta * (1 - self.theta)

    @property
    def margin(self):
        return self.variance - self.bound

    @property
    def passed(self):
        return self.margin >= -YAMADA_TOL


@dataclass
class YamadaReport:
    windows: list = field(default_factory=list)

    @property
    def passed(self):
        return all(w.passed for w in self.windows)

    @property
    def worst(self):
        return min(self.windows, key=lambda w: w.margin)

    def failures(self):
        return [w for w in self.windows if not w.passed]


def default_windows(domain, max_sites=64, translation_invariant=False):
    """Contiguous intervals (d = 1) or boxes (d > 1) with at most ``max_sites``
    sites.  For translation-invariant periodic specs one anchor suffices."""
    ext = domain.extents
    sides = [s for s in product(*(range(1, e + 1) for e in ext)) if math.prod(s) <= max_sites]
    if domain.periodic and translation_invariant:
        anchors = [(0,) * domain.d]
    else:
        anchors = list(product(*(range(e) for e in ext)))
    out = []
    for side in sides:
        for a in anchors:
            if not domain.periodic and any(c + s > e for c, s, e in zip(a, side, ext)):
                continue
            cells = product(*(range(c, c + s) for c, s in zip(a, side)))
            out.append(tuple(domain.index(cell) for cell in cells))
    return out


def window_variance(S, sites):
    idx = np.array(sites)
    return float(S[np.ix_(idx, idx)].sum())


def yamada_check(spec, windows=None, max_sites=64):
    """Variance of the particle number in each window against ``theta(1-theta)``."""
    S = covariance_matrix(spec)
    if windows is None:
        windows = default_windows(spec.domain, max_sites, spec.translation_invariant)
    report = YamadaReport()
    for sites in windows:
        mean = float(spec.rho1[list(sites)].sum())
        theta = mean - math.floor(mean)
        report.windows.append(YamadaWindow(tuple(sites), mean, theta, window_variance(S, sites)))
    return report


# --------------------------------------------------------------------------- #
# Pairing certificates
# --------------------------------------------------------------------------- #

@dataclass
class PairingCertificate:
    """``(f0, f1, f2)`` with f2 symmetric; pairs enter as ordered sums over x != y."""

    f0: float
    f1: np.ndarray
    f2: np.ndarray

    def __post_init__(self):
        self.f0 = float(self.f0)
        self.f1 = np.asarray(self.f1, dtype=float)
        f2 = np.asarray(self.f2, dtype=float)
        f2 = 0.5 * (f2 + f2.T)
        np.fill_diagonal(f2, 0.0)
        self.f2 = f2

    def configuration_values(self):
        """``sum_{i != j} f2 + sum_i f1 + f0`` for every configuration bitmask."""
        n = self.f1.size
        if n > MAX_CERT_SITES:
            raise SizingError(f"exhaustive admissibility is capped at {MAX_CERT_SITES} sites")
        lin = np.zeros(1)
        for v in self.f1:
            lin = np.concatenate([lin, lin + v])
        return self.f0 + lin + 2.0 * subset_pair_sums(self.f2)


def pairing_value(cert, spec):
    """``sum_{x != y} rho2 f2 + sum_x rho1 f1 + f0``."""
    return float((spec.rho2() * cert.f2).sum() + spec.rho1 @ cert.f1 + cert.f0)


def verify_certificate(cert, domain=None, tol=1e-9):
    """True when the certificate is nonnegative on every configuration."""
    if domain is not None and cert.f1.size != domain.size:
        raise DomainError("certificate and domain sizes differ")
    return bool(cert.configuration_values().min() >= -tol)


# --------------------------------------------------------------------------- #
# Collected report
# --------------------------------------------------------------------------- #

def check_all(spec, max_window=64):
    """All necessary conditions that apply to ``spec``, as report rows."""
    rows = list(check_pointwise(spec))
    if spec.domain.size <= MAX_PSD_SITES:
        lam, ok = covariance_psd(spec)
        rows.append(ConditionRow("covariance_psd", "min eigenvalue of S", lam, -PSD_TOL, ok))
    if spec.translation_invariant and spec.domain.size <= MAX_DFT_SITES:
        sf = structure_function(spec)
        k = ",".join(f"{c:.17g}" for c in sf.argmin)
        rows.append(ConditionRow("structure_function", f"min over k at k=({k})",
                                 sf.minimum, -PSD_TOL, sf.minimum >= -PSD_TOL))
    rep = yamada_check(spec, max_sites=max_window)
    w = rep.worst
    detail = f"window of {len(w.sites)} sites from site {w.sites[0]}; {len(rep.failures())} failing"
    rows.append(ConditionRow("yamada", detail, w.variance, w.bound, rep.passed))
    return rows
