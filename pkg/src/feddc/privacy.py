"""Update clipping and Gaussian noise for differentially private sending.

A client privatizes the difference between the model it is about to send
and the model it received at the start of the current send period.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolation
from .params import l2_norm


@dataclass(frozen=True)
class PrivacyConfig:
    enabled: bool = False
    clip: float | None = None
    sigma: float = 0.0

    def validate(self):
        if self.clip is not None and not self.clip > 0:
            raise ConfigError("privacy.clip must be > 0 (omit it to disable clipping)")
        if not self.sigma >= 0:
            raise ConfigError("privacy.sigma must be >= 0")


def clip_update(update, bound):
    """Scale ``update`` down to Euclidean norm ``bound`` if it is longer."""
    u = np.asarray(update, dtype=np.float64)
    norm = l2_norm(u)
    if norm <= bound:
        return u
    out = u * (bound / norm)
    # guard the last ulp so the invariant norm <= bound holds exactly
    while l2_norm(out) > bound:
        out = out * (1.0 - 2.0**-52)
    return out


def add_gaussian_noise(v, sigma, rng):
    """``v`` plus iid ``N(0, sigma**2)`` per coordinate; ``sigma == 0`` is the identity
    and draws nothing from ``rng``."""
    v = np.asarray(v, dtype=np.float64)
    if sigma == 0:
        return v
    return v + rng.normal(0.0, sigma, size=v.shape)


def privatize_params(before, after, cfg, rng):
    """Return ``(params_to_send, clipped_update_norm)``.

    With nothing to do (disabled, or update inside the clip ball and no noise)
    ``after`` itself is returned so non-private runs stay bit-identical.
    """
    before = np.asarray(before, dtype=np.float64)
    after = np.asarray(after, dtype=np.float64)
    if before.shape != after.shape:
        raise ContractViolation("privatize: model shapes differ")
    update = after - before
    if not cfg.enabled:
        return after, l2_norm(update)
    changed = False
    if cfg.clip is not None:
        clipped = clip_update(update, cfg.clip)
        changed = clipped is not update
        update = clipped
    norm = l2_norm(update)
    if cfg.sigma > 0:
        update = add_gaussian_noise(update, cfg.sigma, rng)
        changed = True
    if not changed:
        return after, norm
    return before + update, norm


def privatize_model(before_round, after_round, cfg, rng):
    if before_round.shape_key != after_round.shape_key:
        raise ContractViolation("privatize: model shapes differ")
    params, _ = privatize_params(before_round.params, after_round.params, cfg, rng)
    if params is after_round.params:
        return after_round
    return after_round.with_params(params)
