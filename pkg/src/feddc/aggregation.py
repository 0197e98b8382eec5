"""Aggregation operators over parameter vectors: mean, Radon point,
iterated Radon point and geometric median."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import ConfigError, ContractViolation
from .params import l2_norm, mean_vector

METHODS = ("mean", "iterated_radon", "geometric_median")


@dataclass(frozen=True)
class RadonConfig:
    h: int = 1
    zero_tolerance: float = 1e-9

    def validate(self):
        if self.h < 1:
            raise ConfigError("radon iterations h must be >= 1")
        if not 0 < self.zero_tolerance < 1e-3:
            raise ConfigError("zero_tolerance must lie in (0, 1e-3)")


@dataclass
class RadonCertificate:
    """Witness that ``point`` lies in the convex hull of both Radon parts.

    ``lam`` is the null vector (``sum(lam) == 0``, ``sum(lam_i p_i) == 0``)
    normalized to ``max |lam_i| == 1``.
    """

    lam: np.ndarray
    positive_part: np.ndarray
    negative_part: np.ndarray
    point: np.ndarray

    def part_weights(self, which):
        idx = self.positive_part if which == "positive" else self.negative_part
        w = np.abs(self.lam[idx])
        return idx, w / w.sum()


def radon_number(dim):
    return dim + 2


def _normalize(lam):
    # unit max-norm; the first entry of (near) maximal magnitude is made positive
    mag = np.abs(lam)
    top = mag.max(axis=1, keepdims=True)
    lead = np.argmax(mag >= top * (1 - 1e-9), axis=1)
    sign = np.sign(lam[np.arange(lam.shape[0]), lead])[:, None]
    return lam / (top * sign)


def radon_lambdas(points):
    """Normalized null vectors for a batch of ``(r, d)`` point blocks.

    Rank-deficient blocks fall back to the last right singular vector of
    ``[P^T; 1^T]``, which is deterministic for a given input.
    """
    P = np.ascontiguousarray(points, dtype=np.float64)
    lam, status = kernels.radon_nullspace(P)
    bad = np.flatnonzero(status)
    if bad.size:
        A = np.concatenate([np.swapaxes(P[bad], 1, 2), np.ones((bad.size, 1, P.shape[1]))], axis=1)
        lam[bad] = np.linalg.svd(A, full_matrices=True)[2][:, -1, :]
    return _normalize(lam)


def _radon_batch(P, zero_tolerance):
    n, r, d = P.shape
    identical = np.all(P == P[:, :1, :], axis=(1, 2))
    lam = np.zeros((n, r))
    todo = np.flatnonzero(~identical)
    if todo.size:
        lam[todo] = radon_lambdas(P[todo])
    # a block of r copies of p: lam = e_0 - e_1 is an exact certificate
    lam[identical, 0] = 1.0
    lam[identical, 1] = -1.0
    pos = np.where(lam > zero_tolerance, lam, 0.0)
    neg = np.where(lam < -zero_tolerance, -lam, 0.0)
    pos_mass = pos.sum(axis=1)
    neg_mass = neg.sum(axis=1)
    # fall back to whichever side carries mass; all-zero means all points coincide
    w = np.where((pos_mass > 0)[:, None], pos, neg)
    mass = np.where(pos_mass > 0, pos_mass, neg_mass)
    w = np.divide(w, mass[:, None], out=np.zeros_like(w), where=mass[:, None] > 0)
    out = np.einsum("nr,nrd->nd", w, P)
    empty = mass == 0
    out[empty] = P[empty, 0]
    out[identical] = P[identical, 0]
    return out, lam


def _as_points(points):
    if isinstance(points, (list, tuple)):
        points = [np.asarray(p, dtype=np.float64) for p in points]
    P = np.array(points, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] == 0:
        raise ContractViolation(f"points must form an (r, dim) array, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise ContractViolation("points must be finite")
    return P


def radon_point(points, zero_tolerance=1e-9):
    """Radon point of exactly ``dim + 2`` points with its certificate.

    The null vector ``lam`` of the system ``sum(lam_i p_i) = 0,
    sum(lam_i) = 0`` splits the indices by sign; the returned point is
    ``sum_{lam_i > 0} lam_i p_i / sum_{lam_i > 0} lam_i``, which equals the
    matching combination over the negative part.
    """
    P = _as_points(points)
    r, d = P.shape
    if r != radon_number(d):
        raise ContractViolation(f"radon point in dimension {d} needs {radon_number(d)} points, got {r}")
    out, lam = _radon_batch(P[None], zero_tolerance)
    lam = lam[0]
    cert = RadonCertificate(
        lam=lam,
        positive_part=np.flatnonzero(lam > zero_tolerance),
        negative_part=np.flatnonzero(lam < -zero_tolerance),
        point=out[0],
    )
    return out[0], cert


def radon_points(blocks, zero_tolerance=1e-9):
    """Vectorized :func:`radon_point` over an ``(n, dim + 2, dim)`` array."""
    P = np.asarray(blocks, dtype=np.float64)
    if P.ndim != 3 or P.shape[1] != P.shape[2] + 2:
        raise ContractViolation(f"expected blocks of shape (n, dim + 2, dim), got {P.shape}")
    return _radon_batch(np.ascontiguousarray(P), zero_tolerance)[0]


def iterated_radon(points, h, zero_tolerance=1e-9):
    """Iterated Radon point over exactly ``r**h`` points.

    Each level splits the current points into consecutive groups of ``r``
    and replaces every group by its Radon point.
    """
    P = _as_points(points)
    d = P.shape[1]
    r = radon_number(d)
    if h < 1:
        raise ContractViolation("h must be >= 1")
    if P.shape[0] != r**h:
        raise ContractViolation(f"iterated radon with r={r}, h={h} needs {r**h} points, got {P.shape[0]}")
    for _ in range(h):
        P = radon_points(P.reshape(-1, r, d), zero_tolerance)
    return P[0]


class MedianResult(NamedTuple):
    point: np.ndarray
    converged: bool
    iterations: int


def geometric_median(points, tol=1e-10, max_iter=1000, seed=0):
    """Weiszfeld iteration for ``argmin_x sum ||x - p_i||``.

    Starts from the mean. An iterate closer than 1e-12 to an input point is
    nudged by a seeded 1e-9 Gaussian perturbation. If ``max_iter`` is hit,
    the iterate with the lowest objective is returned with
    ``converged=False``.
    """
    P = _as_points(points)
    if P.shape[0] == 1 or np.all(P == P[0]):
        return MedianResult(P[0].copy(), True, 0)
    rng = np.random.default_rng(seed)

    def objective(x):
        return float(np.linalg.norm(P - x, axis=1).sum())

    x = P.mean(axis=0)
    best, best_obj = x, objective(x)
    for it in range(1, max_iter + 1):
        dist = np.linalg.norm(P - x, axis=1)
        if dist.min() < 1e-12:
            x = x + 1e-9 * rng.standard_normal(x.shape)
            dist = np.linalg.norm(P - x, axis=1)
        w = 1.0 / dist
        x_new = (w @ P) / w.sum()
        obj = objective(x_new)
        if obj < best_obj:
            best, best_obj = x_new, obj
        if l2_norm(x_new - x) <= tol:
            return MedianResult(x_new, True, it)
        x = x_new
    return MedianResult(best, False, max_iter)


def aggregate(models, method="mean", radon=None, median_tol=1e-10, median_max_iter=1000):
    """Combine models of identical shape into one with the chosen operator."""
    if not models:
        raise ContractViolation("nothing to aggregate")
    key = models[0].shape_key
    for mdl in models:
        if mdl.shape_key != key:
            raise ContractViolation(f"cannot aggregate mixed shapes {mdl.shape_key} and {key}")
    vecs = [mdl.params for mdl in models]
    if method == "mean":
        out = mean_vector(vecs)
    elif method == "iterated_radon":
        radon = radon or RadonConfig()
        out = iterated_radon(np.stack(vecs), radon.h, radon.zero_tolerance)
    elif method == "geometric_median":
        out = geometric_median(np.stack(vecs), tol=median_tol, max_iter=median_max_iter).point
    else:
        raise ContractViolation(f"unknown aggregation method {method!r}")
    return models[0].with_params(out)


__all__ = [
    "METHODS",
    "MedianResult",
    "RadonCertificate",
    "RadonConfig",
    "aggregate",
    "geometric_median",
    "iterated_radon",
    "radon_lambdas",
    "radon_number",
    "radon_point",
    "radon_points",
]
