"""Guarantee calculators and their Monte Carlo / exact validators.

* :func:`radon_bound` - failure probability of the iterated Radon point,
  ``min(1, (r * delta)**(2**h))``.
* :func:`min_rounds` - rounds of daisy-chaining after which every model has
  seen ``k`` distinct datasets with probability ``1 - delta``.
* :func:`min_aggregation_period` - the aggregation period that lets each
  model reach the sample size required by its (eps, delta)-guarantee.
* :func:`chain_coverage_mc` / :func:`chain_coverage_exact` and
  :func:`radon_risk_mc` measure the quantities those bounds talk about.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.stats import chi

from . import kernels
from .aggregation import radon_points
from .errors import ContractViolation, InfeasibleError
from .rng import stream


def radon_bound(delta_local, r, h):
    if r < 3 or h < 1:
        raise ContractViolation("need r >= 3 and h >= 1")
    if not 0.0 <= delta_local <= 1.0:
        raise ContractViolation("delta_local must be a probability")
    return min(1.0, (r * delta_local) ** (2**h))


def _check_chain_args(m, k, d, delta):
    if m < 2:
        raise ContractViolation("the bound needs m >= 2 (log base (m-1)/m degenerates)")
    if not 1 <= k <= m:
        raise ContractViolation(f"k must lie in [1, m], got {k}")
    if d < 1:
        raise ContractViolation("daisy period d must be >= 1")
    if not 0.0 < delta <= 1.0:
        raise ContractViolation("delta must lie in (0, 1]")


def _round_bound(m, k, d, delta):
    if delta == 1.0:
        return 0.0
    return d * math.log(delta) / (math.log((m - 1) / m) * (m - k + 1) * m)


def min_rounds(m, k, d, delta):
    """Smallest integer ``T >= d ln(delta) / (ln((m-1)/m) (m-k+1) m)``."""
    _check_chain_args(m, k, d, delta)
    return math.ceil(_round_bound(m, k, d, delta))


@dataclass(frozen=True)
class GuaranteeSpec:
    """Target ``P(risk > epsilon) < delta`` and the sample-size function
    ``n0(epsilon, delta)`` of the local learner (assumed monotone)."""

    epsilon: float
    delta: float
    n0: Callable[[float, float], float]


def reference_sample_size(epsilon, delta, c=1.0):
    """Illustrative ``n0(eps, delta) = ceil(c * ln(1/delta) / eps**2)``."""
    return math.ceil(c * math.log(1.0 / delta) / epsilon**2)


def min_aggregation_period(m, n_local, d, guarantee, radon_number=None):
    """Lower bound on the aggregation period ``b`` (ceiled).

    Equals :func:`min_rounds` with ``k = n0(eps, delta) / n_local``, where
    ``k`` may be fractional. Raises :class:`InfeasibleError` when ``k > m``,
    i.e. the union of all local datasets is still too small.
    """
    if n_local < 1:
        raise ContractViolation("n_local must be >= 1")
    delta = guarantee.delta
    if radon_number is not None and not delta < 1.0 / radon_number:
        raise InfeasibleError(f"delta={delta} must be below 1/r = {1.0 / radon_number} for the Radon point to help")
    k = guarantee.n0(guarantee.epsilon, delta) / n_local
    if k > m:
        raise InfeasibleError(f"local data too scarce for the guarantee at m={m}: need k={k:g} datasets per model")
    k = max(k, 1.0)
    _check_chain_args(m, 1, d, delta)
    return math.ceil(_round_bound(m, k, d, delta))


def chain_coverage_mc(m, d, T, k, trials, seed, chunk=4096):
    """Fraction of trials in which every model's route covers ``k`` clients.

    A route starts at the model's own client and follows ``T // d`` uniform
    random permutations.
    """
    if trials < 1:
        raise ContractViolation("trials must be >= 1")
    if m < 1 or d < 1 or T < 0:
        raise ContractViolation("need m >= 1, d >= 1, T >= 0")
    steps = T // d
    if k <= 1:
        return 1.0
    if k > m or steps == 0:
        return 0.0
    rng = stream(seed, "theory.coverage")
    base = np.arange(m, dtype=np.int64)
    hits = 0
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        perms = rng.permuted(np.broadcast_to(base, (n * steps, m)), axis=1).reshape(n, steps, m)
        hits += int(np.count_nonzero(kernels.coverage_hits(np.ascontiguousarray(perms), k)))
        done += n
    return hits / trials


def chain_coverage_exact(m, steps, k):
    """Exact coverage probability by enumerating all ``(m!)**steps`` permutation sequences."""
    if k <= 1:
        return 1.0
    if k > m or steps == 0:
        return 0.0
    perms = list(itertools.permutations(range(m)))
    hits = 0
    total = 0
    for seq in itertools.product(perms, repeat=steps):
        total += 1
        ok = True
        for j in range(m):
            pos = j
            seen = {j}
            for pi in seq:
                pos = pi[pos]
                seen.add(pos)
            if len(seen) < k:
                ok = False
                break
        hits += ok
    return hits / total


def exact_is_feasible(m, steps, budget=200_000):
    return math.factorial(m) ** steps <= budget


class RadonRisk(NamedTuple):
    local_delta: float
    radon_delta: float
    bound: float
    local_stderr: float
    radon_stderr: float


def calibrate_eps(target_delta, n_local, dim=1):
    """Threshold with ``P(||mean of n_local N(0, I)|| > eps) = target_delta``."""
    return float(chi.ppf(1.0 - target_delta, dim) / math.sqrt(n_local))


def radon_risk_mc(r, h, n_local, eps, trials, seed, chunk=20000):
    """Monte Carlo check of the iterated Radon point's failure probability.

    Toy task: location estimation in ``r - 2`` dimensions. Each of the
    ``r**h`` clients averages ``n_local`` standard normal samples; the risk
    of an estimate is its distance to the true location 0. Returns the
    empirical local and Radon failure rates at threshold ``eps`` and the
    bound evaluated at the empirical local rate.
    """
    if r < 3 or h < 1 or trials < 1 or n_local < 1:
        raise ContractViolation("need r >= 3, h >= 1, n_local >= 1, trials >= 1")
    dim = r - 2
    clients = r**h
    rng = stream(seed, "theory.radon_risk")
    local_bad = 0
    radon_bad = 0
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        # the mean of n_local iid N(0, 1) is exactly N(0, 1/n_local)
        est = rng.standard_normal((n, clients, dim)) / math.sqrt(n_local)
        local_bad += int(np.count_nonzero(np.linalg.norm(est, axis=2) > eps))
        P = est
        for _ in range(h):
            P = radon_points(P.reshape(-1, r, dim)).reshape(n, -1, dim)
        radon_bad += int(np.count_nonzero(np.linalg.norm(P[:, 0, :], axis=1) > eps))
        done += n
    n_local_models = trials * clients
    local_delta = local_bad / n_local_models
    radon_delta = radon_bad / trials
    return RadonRisk(
        local_delta=local_delta,
        radon_delta=radon_delta,
        bound=radon_bound(local_delta, r, h),
        local_stderr=math.sqrt(local_delta * (1 - local_delta) / n_local_models),
        radon_stderr=math.sqrt(radon_delta * (1 - radon_delta) / trials),
    )


def coverage_table(ms, ks, deltas, d=1, trials=100_000, seed=0):
    """Rows comparing the round bound against measured coverage.

    ``ks`` entries may be integers or the strings ``"half"`` (``ceil(m/2)``)
    and ``"m"``. A row is flagged when the measured coverage falls more than
    three standard errors below ``1 - delta``.
    """
    rows = []
    for m in ms:
        seen_k = []
        for kk in ks:
            k = math.ceil(m / 2) if kk == "half" else m if kk == "m" else int(kk)
            if k in seen_k or not 1 <= k <= m:
                continue
            seen_k.append(k)
            for delta in deltas:
                T = min_rounds(m, k, d, delta)
                emp = chain_coverage_mc(m, d, T, k, trials, seed)
                se = math.sqrt(emp * (1 - emp) / trials)
                steps = T // d
                exact = chain_coverage_exact(m, steps, k) if exact_is_feasible(m, steps) else None
                rows.append(
                    {
                        "check": "coverage",
                        "m": m,
                        "k": k,
                        "d": d,
                        "delta": delta,
                        "bound": T,
                        "target": 1.0 - delta,
                        "empirical": emp,
                        "stderr": se,
                        "exact": exact,
                        "flag": emp < (1.0 - delta) - 3 * se,
                    }
                )
    return rows


def radon_table(rs, hs, n_local, target_delta=0.2, trials=100_000, seed=0):
    """Rows of the Radon failure-rate check; ``eps`` is calibrated so the
    local failure rate is ``target_delta``. Flagged when the measured Radon
    failure rate exceeds the bound by more than three standard errors."""
    rows = []
    for r in rs:
        for h in hs:
            eps = calibrate_eps(target_delta, n_local, r - 2)
            res = radon_risk_mc(r, h, n_local, eps, trials, seed)
            rows.append(
                {
                    "check": "radon",
                    "r": r,
                    "h": h,
                    "n_local": n_local,
                    "eps": eps,
                    "local_delta": res.local_delta,
                    "bound": res.bound,
                    "empirical": res.radon_delta,
                    "stderr": res.radon_stderr,
                    "flag": res.radon_delta > res.bound + 3 * res.radon_stderr,
                }
            )
    return rows

