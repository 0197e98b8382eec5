"""Flat parameter vectors and the few linear-algebra helpers built on them.

A parameter vector is a 1-D ``float64`` numpy array. Sums use
``math.fsum`` column-wise, which is correctly rounded and therefore
independent of the order of the inputs.
"""

import math

import numpy as np

from .errors import ContractViolation


def as_param_vector(values):
    """Validate ``values`` and return them as a 1-D float64 array (copy)."""
    v = np.array(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ContractViolation(f"parameter vector must be 1-D and non-empty, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ContractViolation("parameter vector has non-finite entries")
    return v


def _stack(vectors):
    if len(vectors) == 0:
        raise ContractViolation("need at least one vector")
    arrs = [np.asarray(v, dtype=np.float64) for v in vectors]
    dim = arrs[0].shape
    for a in arrs:
        if a.ndim != 1 or a.shape != dim:
            raise ContractViolation(f"dimension mismatch: {a.shape} vs {dim}")
    if dim[0] == 0:
        raise ContractViolation("vectors must have dim >= 1")
    return np.stack(arrs)


def _checked(v):
    if not np.all(np.isfinite(v)):
        raise ContractViolation("result has non-finite entries")
    return v


def linear_combine(vectors, coeffs):
    """Return ``sum(c * v for c, v in zip(coeffs, vectors))``.

    Each coordinate is summed with ``math.fsum``, so reordering the
    ``(vector, coeff)`` pairs never changes the result.
    """
    stacked = _stack(vectors)
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape != (stacked.shape[0],):
        raise ContractViolation(f"got {c.size} coefficients for {stacked.shape[0]} vectors")
    products = stacked * c[:, None]
    if products.shape[0] == 1:
        return _checked(products[0].copy())
    out = np.fromiter((math.fsum(col) for col in products.T), dtype=np.float64, count=products.shape[1])
    return _checked(out)


def mean_vector(vectors):
    """Arithmetic mean; identical to ``linear_combine`` with weights ``1/m``."""
    m = len(vectors)
    if m == 0:
        raise ContractViolation("mean of an empty list")
    return linear_combine(vectors, [1.0 / m] * m)


def l2_norm(v):
    """Euclidean norm, scaled by the largest entry so tiny or huge vectors
    neither underflow nor overflow."""
    v = np.asarray(v, dtype=np.float64)
    top = float(np.max(np.abs(v))) if v.size else 0.0
    if top == 0.0 or not np.isfinite(top):
        return top
    return top * float(np.linalg.norm(v / top))
