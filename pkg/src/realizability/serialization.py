"""JSON and text formats for specs, measures, potentials, certificates and samples.

Floats go through :mod:`json`, which writes the shortest repr that round-trips
exactly.
"""

import json
import math

import numpy as np

from .conditions import PairingCertificate
from .core import (
    CorrelationSpec,
    DomainError,
    FiniteMeasure,
    LatticeDomain,
    PairFunction,
    TripletFunction,
    correlations_of_measure,
)
from .exact import PairPotentials


class FormatError(DomainError):
    pass


def _fields(obj, allowed, required, where):
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object")
    extra = set(obj) - set(allowed)
    if extra:
        raise FormatError(f"{where}: unknown field(s) {sorted(extra)}")
    missing = set(required) - set(obj)
    if missing:
        raise FormatError(f"{where}: missing field(s) {sorted(missing)}")


def _float(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FormatError(f"{where}: expected a number, got {v!r}")
    return float(v)


# --------------------------------------------------------------------------- #
# Domain
# --------------------------------------------------------------------------- #

def domain_to_dict(domain):
    return domain.to_dict()


def domain_from_dict(obj):
    _fields(obj, ("d", "extents", "boundary"), ("extents",), "domain")
    ext = obj["extents"]
    if not isinstance(ext, list) or not all(isinstance(e, int) and not isinstance(e, bool) for e in ext):
        raise FormatError("domain.extents must be a list of integers")
    if "d" in obj and obj["d"] != len(ext):
        raise FormatError(f"domain.d = {obj['d']} but {len(ext)} extents given")
    return LatticeDomain(tuple(ext), obj.get("boundary", "periodic"))


# --------------------------------------------------------------------------- #
# Correlation spec
# --------------------------------------------------------------------------- #

def spec_to_dict(spec):
    out = {"domain": domain_to_dict(spec.domain)}
    out["rho1"] = spec.rho if spec.uniform else [float(v) for v in spec.rho1]
    if spec.pair.translation_invariant_kind:
        out["g"] = {"support": [list(r) + [v] for r, v in spec.pair.support_items()]}
    else:
        out["g"] = {"matrix": spec.pair.matrix_.tolist()}
    if spec.triplet is not None:
        out["g3"] = {"support": [[[0] * spec.domain.d] + [list(p) for p in key] + [v]
                                 for key, v in sorted(spec.triplet.table.items())]}
    return out


def _pair_from_dict(obj, d):
    _fields(obj, ("support", "matrix"), (), "g")
    if ("support" in obj) == ("matrix" in obj):
        raise FormatError("g needs exactly one of 'support' or 'matrix'")
    if "matrix" in obj:
        return PairFunction.general(obj["matrix"])
    table = {}
    for entry in obj["support"]:
        if not isinstance(entry, list) or len(entry) != d + 1:
            raise FormatError(f"g.support entries must be [offset x{d}, value], got {entry!r}")
        if not all(isinstance(c, int) and not isinstance(c, bool) for c in entry[:d]):
            raise FormatError(f"g.support offsets must be integers, got {entry!r}")
        table[tuple(entry[:d])] = _float(entry[d], "g.support value")
    return PairFunction.translation_invariant(table, d=d)


def _triplet_from_dict(obj, d):
    _fields(obj, ("support",), ("support",), "g3")
    table = {}
    for entry in obj["support"]:
        if not isinstance(entry, list) or len(entry) != 4:
            raise FormatError(f"g3.support entries must be [p0, p1, p2, value], got {entry!r}")
        pts = tuple(tuple(p) for p in entry[:3])
        if any(len(p) != d for p in pts):
            raise FormatError(f"g3 points must have {d} coordinates")
        table[pts] = _float(entry[3], "g3.support value")
    return TripletFunction(table, d=d)


def spec_from_dict(obj):
    _fields(obj, ("domain", "rho1", "g", "g3"), ("domain", "rho1", "g"), "spec")
    domain = domain_from_dict(obj["domain"])
    rho1 = obj["rho1"]
    if isinstance(rho1, list):
        rho1 = [_float(v, "rho1") for v in rho1]
    else:
        rho1 = _float(rho1, "rho1")
    pair = _pair_from_dict(obj["g"], domain.d)
    g3 = obj.get("g3")
    triplet = None if g3 is None else _triplet_from_dict(g3, domain.d)
    return CorrelationSpec(domain, rho1, pair, triplet)


# --------------------------------------------------------------------------- #
# Measures
# --------------------------------------------------------------------------- #

def measure_to_dict(measure):
    masks = np.flatnonzero(measure.weights)
    return {"domain": domain_to_dict(measure.domain),
            "weights": [{"mask": int(m), "p": float(measure.weights[m])} for m in masks]}


def measure_from_dict(obj):
    _fields(obj, ("domain", "weights"), ("domain", "weights"), "measure")
    domain = domain_from_dict(obj["domain"])
    domain.require_enumerable()
    w = np.zeros(1 << domain.size)
    last = -1
    for entry in obj["weights"]:
        _fields(entry, ("mask", "p"), ("mask", "p"), "measure.weights")
        m = entry["mask"]
        if not isinstance(m, int) or isinstance(m, bool) or not 0 <= m < w.size:
            raise FormatError(f"mask {m!r} is out of range for {domain.size} sites")
        if m <= last:
            raise FormatError("measure masks must be strictly ascending")
        last = m
        w[m] = _float(entry["p"], "measure.weights.p")
    return FiniteMeasure(domain, w)


def spec_from_measure(measure):
    """Spec carrying the one- and two-point tables of ``measure``."""
    r1 = correlations_of_measure(measure, 1)
    r2 = correlations_of_measure(measure, 2)
    return CorrelationSpec.from_tables(measure.domain, r1, r2)


# --------------------------------------------------------------------------- #
# Potentials and certificates
# --------------------------------------------------------------------------- #

def _num(v):
    return "inf" if math.isinf(v) else float(v)


def _from_num(v, where):
    if v == "inf":
        return math.inf
    return _float(v, where)


def potentials_to_dict(pot):
    n = pot.phi1.size
    pairs = [{"i": i, "j": j, "value": _num(pot.phi2[i, j])}
             for i in range(n) for j in range(i + 1, n) if pot.phi2[i, j] != 0]
    return {"phi1": [_num(v) for v in pot.phi1], "phi2": pairs, "logZ": float(pot.logZ)}


def potentials_from_dict(obj):
    _fields(obj, ("phi1", "phi2", "logZ"), ("phi1", "phi2", "logZ"), "potentials")
    phi1 = np.array([_from_num(v, "phi1") for v in obj["phi1"]])
    n = phi1.size
    phi2 = np.zeros((n, n))
    for e in obj["phi2"]:
        _fields(e, ("i", "j", "value"), ("i", "j", "value"), "phi2")
        phi2[e["i"], e["j"]] = phi2[e["j"], e["i"]] = _from_num(e["value"], "phi2.value")
    return PairPotentials(phi1, phi2, _float(obj["logZ"], "logZ"))


def certificate_to_dict(cert):
    return {"f0": cert.f0, "f1": cert.f1.tolist(), "f2": cert.f2.tolist()}


def certificate_from_dict(obj):
    _fields(obj, ("f0", "f1", "f2"), ("f0", "f1", "f2"), "certificate")
    cert = PairingCertificate(_float(obj["f0"], "f0"), obj["f1"], obj["f2"])
    n = cert.f1.size
    if cert.f1.ndim != 1 or cert.f2.shape != (n, n):
        raise FormatError("certificate needs f1 of length N and an N x N f2")
    return cert


# --------------------------------------------------------------------------- #
# Files
# --------------------------------------------------------------------------- #

def load_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc})") from None


def dump_json(obj, path=None):
    text = json.dumps(obj, indent=1) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def load_spec(path):
    """A spec document, or a measure document reduced to its correlation tables."""
    obj = load_json(path)
    if isinstance(obj, dict) and "weights" in obj:
        return spec_from_measure(measure_from_dict(obj))
    return spec_from_dict(obj)


# --------------------------------------------------------------------------- #
# Samples
# --------------------------------------------------------------------------- #

def samples_to_text(samples, boundary="periodic"):
    """One lowercase hex bitmask per line (site i is bit i), after a
    ``# sites=N boundary=B`` header."""
    samples = np.asarray(samples, dtype=np.uint8)
    n = samples.shape[1]
    lines = [f"# sites={n} boundary={boundary}"]
    packed = np.packbits(samples, axis=1, bitorder="little")
    for row in packed:
        lines.append(format(int.from_bytes(row.tobytes(), "little"), "x"))
    return "\n".join(lines) + "\n"


def samples_from_text(text, n=None):
    """``(array, boundary)`` from :func:`samples_to_text` output.

    Without a header the site count ``n`` must be given.
    """
    boundary = "periodic"
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "sites":
                    n = int(val)
                elif key == "boundary":
                    boundary = val
            continue
        try:
            rows.append(int(line, 16))
        except ValueError:
            raise FormatError(f"not a hex bitmask: {line[:40]!r}") from None
    if n is None:
        raise FormatError("sample file has no '# sites=N' header; pass the site count")
    nbytes = (n + 7) // 8
    out = np.zeros((len(rows), n), dtype=np.uint8)
    for k, v in enumerate(rows):
        if v >> n:
            raise FormatError(f"bitmask on line {k + 1} exceeds {n} sites")
        bits = np.unpackbits(np.frombuffer(v.to_bytes(nbytes, "little"), dtype=np.uint8),
                             bitorder="little")
        out[k] = bits[:n]
    return out, boundary
