"""File formats: spec JSON, signal CSV, Bezout-pair JSON and report JSON."""

import csv
import hashlib
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from ._validation import GridError
from .measure import MatrixMeasure
from .signals import GridSignal
from .system import SystemSpec

SPEC_SCHEMA = "delay-reach/1"
BEZOUT_SCHEMA = "delay-reach-bezout/1"


class SchemaError(ValueError):
    """Malformed document: missing, mistyped or inconsistent field."""


class ShapeError(ValueError):
    """Matrix dimensions disagree with the declared sizes."""


def _decimal(value, field):
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise SchemaError(f"field '{field}': expected a decimal string, got {value!r}")
    try:
        q = Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError):
        raise SchemaError(f"field '{field}': not a decimal number: {value!r}") from None
    return q


def _int_field(doc, key):
    v = doc.get(key)
    if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
        raise SchemaError(f"field '{key}': expected a positive integer, got {v!r}")
    return v


def _array(value, shape, field):
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"field '{field}': not a numeric array") from None
    if a.shape != shape:
        raise ShapeError(f"field '{field}': expected shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SchemaError(f"field '{field}': non-finite entries")
    return a


def spec_from_dict(doc):
    """Validate a spec document and build the :class:`SystemSpec`.

    Grid divisibility of every delay is checked on the exact rational value
    of its decimal string, so ``"0.3"`` against ``h = "0.1"`` passes and
    ``"0.3"`` against ``"0.25"`` fails.
    """
    if not isinstance(doc, dict):
        raise SchemaError("spec must be a JSON object")
    if doc.get("schema") != SPEC_SCHEMA:
        raise SchemaError(f"field 'schema': expected {SPEC_SCHEMA!r}, got {doc.get('schema')!r}")
    d, m, N = (_int_field(doc, k) for k in ("d", "m", "N"))
    h = _decimal(doc.get("h"), "h")
    if h <= 0:
        raise SchemaError("field 'h': grid step must be positive")
    delays = doc.get("delays")
    if not isinstance(delays, list) or len(delays) != N:
        raise SchemaError(f"field 'delays': expected a list of N = {N} decimal strings")
    lam = [_decimal(x, f"delays[{i}]") for i, x in enumerate(delays)]
    for i, x in enumerate(lam):
        if (x / h).denominator != 1:
            raise GridError(f"field 'delays[{i}]': delay {delays[i]} not a multiple of "
                            f"grid step {doc['h']}")
        if x <= 0 or (i and x <= lam[i - 1]):
            raise SchemaError("field 'delays': must be positive and strictly increasing")
    A = _array(doc.get("A"), (N, d, d), "A")
    B = _array(doc.get("B"), (d, m), "B")
    g_doc = doc.get("g", [])
    if g_doc is None:
        g_doc = []
    if not isinstance(g_doc, list):
        raise SchemaError("field 'g': expected a list of d x d matrices")
    L = int(lam[-1] / h)
    g = None
    if len(g_doc):
        if len(g_doc) != L:
            raise SchemaError(f"field 'g': expected {L} samples (delay_N / h), got {len(g_doc)}")
        g = _array(g_doc, (L, d, d), "g")
    return SystemSpec(float(h), [float(x) for x in lam], A, B, g)


def spec_to_dict(spec):
    """Inverse of :func:`spec_from_dict`; times are written as exact decimals
    of the grid indices."""
    h = Fraction(repr(spec.h))
    return {
        "schema": SPEC_SCHEMA, "d": spec.d, "m": spec.m, "N": spec.N,
        "h": _fraction_str(h),
        "delays": [_fraction_str(k * h) for k in spec.delay_index],
        "A": spec.A.tolist(), "B": spec.B.tolist(),
        "g": [] if spec.g is None else spec.g.tolist(),
    }


def _fraction_str(q):
    if q.denominator == 1:
        return str(q.numerator)
    # finite decimal when the denominator is 2^a 5^b, else fall back to float
    den, k = q.denominator, 0
    for p in (2, 5):
        while den % p == 0:
            den //= p
    if den != 1:
        return repr(float(q))
    while (q * 10 ** k).denominator != 1:
        k += 1
    s = str(abs(q.numerator) * 10 ** k // q.denominator).rjust(k + 1, "0")
    return ("-" if q < 0 else "") + s[:-k] + "." + s[-k:]


def read_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON ({e})") from None


def load_spec(path):
    """Read and validate a spec file; returns ``(spec, sha256 of the bytes)``."""
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise SchemaError(f"{path}: invalid JSON ({e})") from None
    return spec_from_dict(doc), hashlib.sha256(raw).hexdigest()


# -- signals ---------------------------------------------------------------

def write_signal(path, sig):
    """CSV with one row per cell: ``t, v1..vd`` where ``t`` is the left end."""
    with open(path, "w", newline="") as f:
        f.write(f"# piecewise constant: row t holds on [t, t + h), h = {sig.h!r}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t"] + [f"v{i + 1}" for i in range(sig.dim)])
        for k, row in zip(range(sig.start, sig.stop), sig.values):
            w.writerow([format(k * sig.h, ".17g")] + [format(v, ".17g") for v in row])


def read_signal(path, h, dim=None):
    """Read a signal CSV on grid step ``h``.

    Rows must sit on consecutive grid cells; ``dim`` checks the column count.
    """
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(line for line in f if not line.startswith("#")) if r]
    if not rows or rows[0][0].strip() != "t":
        raise SchemaError(f"{path}: missing header 't,v1..vd'")
    ncol = len(rows[0]) - 1
    if ncol < 1:
        raise SchemaError(f"{path}: no value columns")
    if dim is not None and ncol != dim:
        raise ShapeError(f"{path}: expected {dim} value columns, got {ncol}")
    body = rows[1:]
    if not body:
        return GridSignal.zeros(h, 0, 0, ncol)
    try:
        data = np.array([[float(x) for x in r] for r in body])
    except ValueError:
        raise SchemaError(f"{path}: non-numeric entry") from None
    if data.shape[1] != ncol + 1:
        raise ShapeError(f"{path}: ragged rows")
    idx = data[:, 0] / h
    k = np.rint(idx)
    if np.any(np.abs(idx - k) > 1e-9 * np.maximum(1.0, np.abs(idx))):
        raise GridError(f"{path}: time column not on the grid of step {h}")
    k = k.astype(int)
    if np.any(np.diff(k) != 1):
        raise SchemaError(f"{path}: rows must be consecutive grid cells")
    return GridSignal(h, int(k[0]), data[:, 1:])


# -- Bezout pairs ------------------------------------------------------------

def _measure_to_dict(M):
    lo, atoms, dens = M.dense()
    out = {"shape": list(M.shape), "atoms": []}
    for i in range(atoms.shape[0]):
        if np.any(atoms[i]):
            k = lo + i
            out["atoms"].append({"index": k, "location": k * M.h, "matrix": atoms[i].tolist()})
    nz = np.flatnonzero(np.any(dens, axis=(1, 2)))
    if nz.size:
        a, b = nz[0], nz[-1] + 1
        out["density"] = [{"start": lo + int(a), "samples": dens[a:b].tolist()}]
    return out


def _measure_from_dict(doc, h, shape, field):
    if not isinstance(doc, dict):
        raise SchemaError(f"field '{field}': expected an object")
    if tuple(doc.get("shape", shape)) != tuple(shape):
        raise ShapeError(f"field '{field}': expected shape {tuple(shape)}, got {doc.get('shape')}")
    parts = []
    for a in doc.get("atoms", []):
        if "index" in a:
            k = a["index"]
        else:
            k = round(float(a["location"]) / h)
            if abs(k * h - float(a["location"])) > 1e-9 * max(1.0, abs(k)):
                raise GridError(f"field '{field}': atom location {a['location']} off grid")
        parts.append((int(k), _array(a["matrix"], tuple(shape), f"{field}.atoms")[None], None))
    for blk in doc.get("density", []):
        s = np.array(blk["samples"], dtype=float)
        if s.ndim != 3 or s.shape[1:] != tuple(shape):
            raise ShapeError(f"field '{field}.density': bad sample shape {s.shape}")
        parts.append((int(blk["start"]), None, s))
    if not parts:
        return MatrixMeasure.zeros(*shape, h)
    lo = min(p[0] for p in parts)
    hi = max(p[0] + (1 if p[1] is not None else p[2].shape[0]) for p in parts)
    atoms = np.zeros((hi - lo,) + tuple(shape))
    dens = np.zeros_like(atoms)
    for k, a, s in parts:
        if a is not None:
            atoms[k - lo] += a[0]
        else:
            dens[k - lo:k - lo + s.shape[0]] += s
    return MatrixMeasure.from_dense(h, lo, atoms, dens)


def write_bezout(path, R, S):
    doc = {"schema": BEZOUT_SCHEMA, "h": R.h, "R": _measure_to_dict(R),
           "S": _measure_to_dict(S)}
    Path(path).write_text(dumps_report(doc))


def read_bezout(path, spec):
    """Read ``(R, S)`` for ``spec`` (R is d x d, S is m x d)."""
    doc = read_json(path)
    if not isinstance(doc, dict) or doc.get("schema") != BEZOUT_SCHEMA:
        raise SchemaError(f"field 'schema': expected {BEZOUT_SCHEMA!r}")
    h = float(doc.get("h", spec.h))
    if abs(h - spec.h) > 1e-12 * spec.h:
        raise GridError(f"field 'h': Bezout pair step {h} differs from spec step {spec.h}")
    R = _measure_from_dict(doc.get("R", {}), spec.h, (spec.d, spec.d), "R")
    S = _measure_from_dict(doc.get("S", {}), spec.h, (spec.m, spec.d), "S")
    return R, S


# -- deterministic report JSON -------------------------------------------------

def _num(x):
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == int(x) and abs(x) < 2 ** 53:
        return format(x, ".1f")
    return format(x, ".17g")


def _emit(obj, ind, out):
    pad = "  " * ind
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, k in enumerate(sorted(obj, key=str)):
            out.append(f"{pad}  {json.dumps(str(k))}: ")
            _emit(obj[k], ind + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[")
        for i, v in enumerate(items):
            _emit(v, ind + 1, out)
            if i < len(items) - 1:
                out.append(", ")
        out.append("]")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (complex, np.complexfloating)):
        _emit({"re": obj.real, "im": obj.imag}, ind, out)
    elif isinstance(obj, (float, np.floating)):
        out.append(_num(obj))
    else:
        out.append(json.dumps(str(obj)))


def dumps_report(obj):
    """Serialize with sorted keys and 17-significant-digit floats.

    Identical inputs give byte-identical text; non-finite floats become the
    strings ``"nan"``, ``"inf"`` and ``"-inf"`` and complex numbers become
    ``{"re", "im"}`` objects.
    """
    out = []
    _emit(obj, 0, out)
    return "".join(out) + "\n"
