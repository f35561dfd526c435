"""Input validation helpers shared across the package.

All public entry points funnel array inputs through these so error messages
are uniform and every numerical routine can assume finite float arrays.
"""

import numpy as np

from .errors import ContractViolation


def as_matrix(a, name="array", rows=None, cols=None):
    """Coerce to a finite 2-d float array, optionally pinning the shape."""
    out = np.asarray(a, dtype=float)
    if out.ndim != 2:
        raise ContractViolation(f"{name} must be 2-d, got ndim={out.ndim}")
    if rows is not None and out.shape[0] != rows:
        raise ContractViolation(f"{name} must have {rows} rows, got {out.shape[0]}")
    if cols is not None and out.shape[1] != cols:
        raise ContractViolation(f"{name} must have {cols} columns, got {out.shape[1]}")
    if not np.all(np.isfinite(out)):
        raise ContractViolation(f"{name} contains non-finite entries")
    return out


def as_vector(a, name="vector", size=None):
    """Coerce to a finite 1-d float array."""
    out = np.asarray(a, dtype=float)
    if out.ndim != 1:
        raise ContractViolation(f"{name} must be 1-d, got ndim={out.ndim}")
    if size is not None and out.size != size:
        raise ContractViolation(f"{name} must have length {size}, got {out.size}")
    if not np.all(np.isfinite(out)):
        raise ContractViolation(f"{name} contains non-finite entries")
    return out


def as_points(x, dim, name="x"):
    """Accept a single d-vector or an (n, d) batch; always return (n, d)."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ContractViolation(f"{name} must have dimension {dim}, got shape {np.shape(x)}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} contains non-finite entries")
    return arr, single


def as_labels(y, name="y"):
    """Coerce labels to a 1-d int array."""
    out = np.asarray(y)
    if out.ndim != 1:
        raise ContractViolation(f"{name} must be 1-d")
    if out.size and not np.all(np.equal(np.mod(out, 1), 0)):
        raise ContractViolation(f"{name} must be integer labels")
    return out.astype(np.int64)


def check_in_range(value, lo, hi, name, lo_open=False, hi_open=False):
    v = float(value)
    ok_lo = v > lo if lo_open else v >= lo
    ok_hi = v < hi if hi_open else v <= hi
    if not (np.isfinite(v) and ok_lo and ok_hi):
        lo_b = "(" if lo_open else "["
        hi_b = ")" if hi_open else "]"
        raise ContractViolation(f"{name} must lie in {lo_b}{lo}, {hi}{hi_b}, got {value}")
    return v


def check_orthonormal_rows(rows, tol, name="basis"):
    """Raise unless rows @ rows.T is the identity within tol."""
    if rows.shape[0] == 0:
        return
    gram = rows @ rows.T
    err = np.max(np.abs(gram - np.eye(rows.shape[0])))
    if err > tol:
        raise ContractViolation(f"{name} rows are not orthonormal (max Gram error {err:.3e} > {tol:g})")


def rng_from_seed(seed, stream=None):
    """Counter-based generator; (seed, stream) pairs give independent streams."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(int(seed))
    if stream is not None:
        ss = np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (int(stream),))
    return np.random.Generator(np.random.Philox(ss))
