"""Central finite differences of the batch loss: the oracle for analytic gradients."""

import numpy as np

from feddc.learners import LearnerSpec, Model, batch_loss, gradient, init_model


def numeric_gradient(model, X, y, spec=None, anchor=None, step=1e-5):
    g = np.empty_like(model.params)
    for i in range(model.params.size):
        up, down = model.params.copy(), model.params.copy()
        up[i] += step
        down[i] -= step
        g[i] = (
            batch_loss(model.with_params(up), X, y, spec, anchor)
            - batch_loss(model.with_params(down), X, y, spec, anchor)
        ) / (2 * step)
    return g


def relative_error(analytic, numeric):
    # per-coordinate relative error, guarded where both are tiny
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
    return float(np.max(np.abs(analytic - numeric) / scale))


def random_instance(rng, family):
    """Small random model, batch and proximal setting (dims <= 20)."""
    n_features = int(rng.integers(1, 8))
    n = int(rng.integers(1, 10))
    mu = float(rng.choice([0.0, 0.1, 1.0]))
    if family == "linear":
        spec = LearnerSpec(family="linear", prox_mu=mu, bias=bool(rng.integers(2)))
        model = init_model(spec, n_features, rng)
        model = model.with_params(rng.normal(size=model.params.size))
    else:
        hidden = tuple(int(h) for h in rng.integers(2, 7, size=int(rng.integers(1, 4))))
        spec = LearnerSpec(family="mlp", hidden=hidden, prox_mu=mu)
        model = init_model(spec, n_features, rng)
        # nonzero biases so ReLU kinks are rarely within one FD step
        model = model.with_params(model.params + 0.1 * rng.normal(size=model.params.size))
    X = rng.normal(size=(n, n_features))
    y = rng.integers(0, 2, size=n)
    anchor = rng.normal(size=model.params.size) if mu else None
    return model, X, y, spec, anchor


def check_instance(model, X, y, spec, anchor):
    analytic = gradient(model, (X, y), spec, anchor)
    numeric = numeric_gradient(model, X, y, spec, anchor)
    return relative_error(analytic, numeric)


def kink_free(model, X, margin=1e-4):
    """True when no hidden pre-activation lies within ``margin`` of the ReLU kink."""
    if model.family != "mlp":
        return True
    from feddc.learners import _layers

    a = X
    for W, b in _layers(model)[:-1]:
        pre = a @ W.T + b
        if np.min(np.abs(pre)) < margin:
            return False
        a = np.maximum(pre, 0.0)
    return True


__all__ = ["Model", "check_instance", "kink_free", "numeric_gradient", "random_instance", "relative_error"]
