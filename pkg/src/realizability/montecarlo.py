"""Sampling explicit measures and estimating correlations with error bars."""

from dataclasses import dataclass
import csv
import io
import math

import numpy as np

from .core import DomainError
from .rng import SplitMix64

Z_THRESHOLD = 4.0


def sample_measure(measure, count, seed=0):
    """``count`` i.i.d. configurations (bitmasks) by cumulative inversion.

    One uniform per draw; the draw is the first mask whose cumulative weight
    exceeds the uniform.
    """
    measure.require_unsigned()
    if count < 0:
        raise DomainError("count must be nonnegative")
    w = np.clip(measure.weights, 0.0, None)
    cum = np.cumsum(w)
    cum /= cum[-1]
    last = int(np.flatnonzero(w > 0)[-1])
    u = SplitMix64(seed).uniform(count)
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, last).astype(np.int64)


def masks_to_array(masks, n):
    """``(count, n)`` 0/1 array from integer bitmasks (site i = bit i)."""
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(np.uint8)


@dataclass
class EstimateReport:
    """Translation-averaged estimates of ``rho`` and ``g(r)``, ``r = 1..max_lag``."""

    count: int
    n_sites: int
    periodic: bool
    rho: float
    rho_se: float
    lags: np.ndarray
    g: np.ndarray
    g_se: np.ndarray
    rho2: np.ndarray
    rho2_se: np.ndarray
    seed: int = None
    rho_target: float = None
    g_target: np.ndarray = None
    batches: int = 0

    @property
    def rho_z(self):
        return _z(self.rho, self.rho_se, self.rho_target)

    @property
    def g_z(self):
        if self.g_target is None:
            return None
        return np.array([_z(e, s, t) for e, s, t in zip(self.g, self.g_se, self.g_target)])

    def rows(self):
        """``(lag, estimate, stderr, target, z)``; lag ``"rho"`` is the density."""
        out = [("rho", self.rho, self.rho_se, self.rho_target, self.rho_z)]
        gz = self.g_z
        for k, r in enumerate(self.lags):
            t = None if self.g_target is None else self.g_target[k]
            z = None if gz is None else gz[k]
            out.append((int(r), self.g[k], self.g_se[k], t, z))
        return out

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lag", "estimate", "stderr", "target", "z"])
        for row in self.rows():
            w.writerow([row[0]] + ["" if v is None else f"{float(v):.17g}" for v in row[1:]])
        return buf.getvalue()


def _z(est, se, target):
    if target is None:
        return None
    diff = est - target
    if se > 0:
        return diff / se
    return 0.0 if abs(diff) <= 1e-15 else math.copysign(1e300, diff)


def _units(samples, max_lag, periodic, batches):
    """Per-unit averages of ``eta_x`` and ``eta_x eta_{x+r}``; units are
    samples, or contiguous site batches within each sample."""
    count, n = samples.shape
    eta = samples.astype(np.float64)
    if periodic:
        sites = np.arange(n)
    else:
        sites = np.arange(max_lag, n - max_lag)
    if batches is None:
        batches = 1 if count >= 50 else max(1, math.ceil(100 / count))
    batches = min(batches, sites.size)
    groups = np.array_split(sites, batches)
    a = np.empty((count, batches))
    c = np.empty((count, batches, max_lag))
    for b, grp in enumerate(groups):
        a[:, b] = eta[:, grp].mean(axis=1)
        for r in range(1, max_lag + 1):
            c[:, b, r - 1] = (eta[:, grp] * eta[:, (grp + r) % n]).mean(axis=1)
    return a.reshape(-1), c.reshape(-1, max_lag), batches


def estimate_correlations(samples, max_lag, periodic=True, batches=None, seed=None):
    """Estimate ``rho`` and ``g(r)`` from a ``(count, n)`` 0/1 array.

    On rings every site is used; on segments ``max_lag`` sites are trimmed at
    each edge.  Standard errors are those of the mean over independent units
    (whole samples, or site batches for few long samples); ``g`` uses the
    delta method on ``rho2 / rho**2``.
    """
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise DomainError("need at least one sample")
    count, n = samples.shape
    max_lag = int(max_lag)
    if max_lag < 1:
        raise DomainError("max_lag must be >= 1")
    if periodic and max_lag > n // 2:
        raise DomainError(f"max_lag {max_lag} exceeds half the ring ({n // 2})")
    if not periodic and 2 * max_lag >= n:
        raise DomainError(f"max_lag {max_lag} leaves no sites after edge trimming")
    a, c, batches = _units(samples, max_lag, periodic, batches)
    k = a.size
    A = a.mean()
    C = c.mean(axis=0)

    def se(x):
        return x.std(axis=0, ddof=1) / math.sqrt(k) if k > 1 else np.full(np.shape(x)[1:], np.nan)

    if A > 0:
        g = C / A ** 2
        infl = c / A ** 2 - 2 * np.outer(a, C) / A ** 3
        g_se = se(infl)
    else:
        g = np.full(max_lag, np.nan)
        g_se = np.full(max_lag, np.nan)
    return EstimateReport(count, n, periodic, float(A), float(se(a)), np.arange(1, max_lag + 1),
                          g, g_se, C, se(c), seed=seed, batches=batches)


def compare(report, rho, g, threshold=Z_THRESHOLD):
    """Attach targets (``rho`` and a pair function or callable ``g(r)``) and
    return True when every ``|z| <= threshold``."""
    report.rho_target = float(rho)
    report.g_target = np.array([float(g(int(r))) for r in report.lags])
    zs = [report.rho_z] + list(report.g_z)
    return all(abs(z) <= threshold for z in zs if z is not None and not math.isnan(z))
