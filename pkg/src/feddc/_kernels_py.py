"""numpy implementations of the compiled kernels, used when the extension
is not built (or ``FEDDC_PURE_PYTHON=1``)."""

import numpy as np


def radon_nullspace(points, rel_tol=1e-12):
    points = np.ascontiguousarray(points, dtype=np.float64)
    n, r, d = points.shape
    if r != d + 2:
        raise ValueError("each block needs dim + 2 points")
    A = np.concatenate([np.swapaxes(points, 1, 2), np.ones((n, 1, r))], axis=1)
    lam = np.zeros((n, r))
    status = np.zeros(n, dtype=np.int8)
    if n == 0:
        return lam, status
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    scale = np.maximum(np.abs(points).reshape(n, -1).max(axis=1, initial=0.0), 1.0)
    deficient = s[:, -1] <= rel_tol * scale
    status[deficient] = 1
    lam[~deficient] = vh[~deficient, -1, :]
    return lam, status


def coverage_hits(perms, k):
    perms = np.asarray(perms, dtype=np.int64)
    n, steps, m = perms.shape
    rows = np.arange(n)[:, None]
    models = np.arange(m)[None, :]
    pos = np.broadcast_to(models, (n, m)).copy()
    seen = np.zeros((n, m, m), dtype=bool)
    seen[:, models[0], models[0]] = True
    for s in range(steps):
        pos = perms[rows, s, pos]
        seen[rows, models, pos] = True
    return (seen.sum(axis=2) >= k).all(axis=1)
