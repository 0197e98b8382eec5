"""Local learning algorithms: logistic regression and a ReLU MLP trained by
minibatch SGD on the logistic loss, with an optional FedProx proximal term.

All models keep their parameters as one flat float64 vector. For the MLP
the layout is ``W1, b1, W2, b2, ...`` with each ``W`` stored row-major as
``(fan_out, fan_in)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, ContractViolation

FAMILIES = ("linear", "mlp")


@dataclass(frozen=True)
class LearnerSpec:
    family: str = "linear"
    hidden: tuple = (100, 50, 20)
    learning_rate: float = 0.1
    batch_size: int = 10
    prox_mu: float = 0.0
    bias: bool = True  # linear family only; the MLP always carries biases
    decay_factor: float = 1.0
    decay_every: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    def validate(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown learner family {self.family!r}; expected one of {FAMILIES}")
        if not self.learning_rate >= 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.prox_mu < 0:
            raise ConfigError("prox_mu must be >= 0")
        if self.family == "mlp" and (not self.hidden or min(self.hidden) < 1):
            raise ConfigError("mlp needs at least one hidden layer of positive width")
        if not 0 < self.decay_factor <= 1:
            raise ConfigError("decay_factor must lie in (0, 1]")
        if self.decay_every < 0:
            raise ConfigError("decay_every must be >= 0")

    def learning_rate_at(self, t):
        """Step-decayed rate: multiplied by ``decay_factor`` every ``decay_every`` rounds."""
        if self.decay_every <= 0 or self.decay_factor == 1.0:
            return self.learning_rate
        return self.learning_rate * self.decay_factor ** (t // self.decay_every)


@dataclass
class Model:
    """Flat parameters plus the shape metadata needed to unflatten them."""

    params: np.ndarray
    family: str
    layer_sizes: tuple
    bias: bool = True

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=np.float64)
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if self.params.ndim != 1 or self.params.size != n_params(self.family, self.layer_sizes, self.bias):
            raise ContractViolation(
                f"{self.family} model with layers {self.layer_sizes} needs "
                f"{n_params(self.family, self.layer_sizes, self.bias)} params, got {self.params.shape}"
            )

    @property
    def input_dim(self):
        return self.layer_sizes[0]

    @property
    def shape_key(self):
        return (self.family, self.layer_sizes, self.bias)

    def with_params(self, params):
        return replace(self, params=np.asarray(params, dtype=np.float64))

    def copy(self):
        return self.with_params(self.params.copy())


def n_params(family, layer_sizes, bias=True):
    if family == "linear":
        return layer_sizes[0] + (1 if bias else 0)
    return sum(o * i + o for i, o in zip(layer_sizes[:-1], layer_sizes[1:]))


def _layers(model):
    """Views ``(W, b)`` into the flat parameter vector for each MLP layer."""
    out, off = [], 0
    p = model.params
    for fan_in, fan_out in zip(model.layer_sizes[:-1], model.layer_sizes[1:]):
        W = p[off : off + fan_out * fan_in].reshape(fan_out, fan_in)
        off += fan_out * fan_in
        b = p[off : off + fan_out]
        off += fan_out
        out.append((W, b))
    return out


def init_model(spec, n_features, rng):
    """Fresh model. Linear models start at zero; MLP weights are drawn
    uniformly with fan-in scaling (He for hidden layers), biases at zero."""
    spec.validate()
    if spec.family == "linear":
        return Model(np.zeros(n_params("linear", (n_features, 1), spec.bias)), "linear", (n_features, 1), spec.bias)
    sizes = (n_features,) + spec.hidden + (1,)
    chunks = []
    for li, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        last = li == len(sizes) - 2
        bound = np.sqrt((3.0 if last else 6.0) / fan_in)
        chunks.append(rng.uniform(-bound, bound, size=fan_out * fan_in))
        chunks.append(np.zeros(fan_out))
    return Model(np.concatenate(chunks), "mlp", sizes)


def _check_features(model, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise ContractViolation(f"model expects {model.input_dim} features, got shape {X.shape}")
    return X


def _forward(model, X):
    """Return the output logits and, for MLPs, the per-layer activations."""
    if model.family == "linear":
        d = model.input_dim
        z = X @ model.params[:d]
        if model.bias:
            z = z + model.params[d]
        return z, None
    acts = [X]
    a = X
    layers = _layers(model)
    for W, b in layers[:-1]:
        a = np.maximum(a @ W.T + b, 0.0)
        acts.append(a)
    W, b = layers[-1]
    return (a @ W.T + b)[:, 0], acts


def _sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def logits(model, X):
    z, _ = _forward(model, _check_features(model, X))
    return z


def predict(model, X):
    """Class ids and sigmoid scores for one sample or a batch.

    A sample is assigned class 1 when its score is at least 0.5.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    z = logits(model, X)
    cls = (z >= 0).astype(np.int64)
    score = _sigmoid(z)
    if single:
        return int(cls[0]), float(score[0])
    return cls, score


def _logistic_losses(z, y):
    # log(1 + e^z) - y*z, computed without overflow
    return np.logaddexp(0.0, z) - y * z


def batch_loss(model, X, y, spec=None, anchor=None):
    """Mean logistic loss plus ``mu/2 * ||w - anchor||^2`` when applicable."""
    X = _check_features(model, X)
    z, _ = _forward(model, X)
    loss = float(np.mean(_logistic_losses(z, np.asarray(y, dtype=np.float64))))
    if anchor is not None and spec is not None and spec.prox_mu > 0:
        diff = model.params - _anchor_params(anchor, model)
        loss += 0.5 * spec.prox_mu * float(diff @ diff)
    return loss


def _grad_arrays(model, X, y, spec, anchor):
    n = X.shape[0]
    z, acts = _forward(model, X)
    dz = (_sigmoid(z) - y) / n
    if model.family == "linear":
        d = model.input_dim
        g = np.empty_like(model.params)
        g[:d] = X.T @ dz
        if model.bias:
            g[d] = dz.sum()
    else:
        layers = _layers(model)
        grads = []
        delta = dz[:, None]
        for li in range(len(layers) - 1, -1, -1):
            W, _ = layers[li]
            a_in = acts[li]
            grads.append((delta.T @ a_in, delta.sum(axis=0)))
            if li > 0:
                delta = (delta @ W) * (a_in > 0)
        g = np.concatenate([part.ravel() for gw, gb in reversed(grads) for part in (gw, gb)])
    if anchor is not None and spec is not None and spec.prox_mu > 0:
        g = g + spec.prox_mu * (model.params - anchor)
    return g


def gradient(model, batch, spec=None, anchor=None):
    """Exact gradient of :func:`batch_loss` w.r.t. the flat parameters.

    ``batch`` is a :class:`~feddc.datagen.Dataset` or an ``(X, y)`` pair.
    """
    X, y = (batch.X, batch.y) if hasattr(batch, "X") else batch
    X = _check_features(model, X)
    if X.shape[0] == 0:
        raise ContractViolation("gradient of an empty batch")
    a = None if anchor is None else _anchor_params(anchor, model)
    return _grad_arrays(model, X, np.asarray(y, dtype=np.float64), spec, a)


def _anchor_params(anchor, model):
    a = anchor.params if isinstance(anchor, Model) else np.asarray(anchor, dtype=np.float64)
    if a.shape != model.params.shape:
        raise ContractViolation("anchor and model dimensions differ")
    return a


def local_step(model, shard, spec, anchor, rng, t=0):
    """One SGD step on a batch drawn without replacement from ``shard``.

    ``anchor`` is the last global model (FedProx) or ``None``. The rng is
    consumed identically whether or not an anchor is given.
    """
    n = len(shard)
    if n == 0:
        raise ContractViolation("local_step on an empty shard")
    idx = rng.choice(n, size=min(spec.batch_size, n), replace=False)
    lr = spec.learning_rate_at(t)
    if lr == 0:
        return model
    a = None if anchor is None else _anchor_params(anchor, model)
    X = _check_features(model, shard.X[idx])
    g = _grad_arrays(model, X, shard.y[idx].astype(np.float64), spec, a)
    with np.errstate(over="ignore", invalid="ignore"):  # reported below
        new = model.params - lr * g
    if not np.all(np.isfinite(new)):
        raise ContractViolation("SGD step produced non-finite parameters; lower the learning rate")
    return model.with_params(new)


def accuracy(model, data):
    """Fraction of samples whose thresholded prediction matches the label."""
    if len(data) == 0:
        raise ContractViolation("accuracy on an empty dataset")
    cls, _ = predict(model, data.X)
    return float(np.count_nonzero(cls == data.y)) / len(data)


def empirical_risk(model, data, loss="zero_one"):
    """Mean loss on ``data``; ``zero_one`` is defined as ``1 - accuracy``."""
    if len(data) == 0:
        raise ContractViolation("empirical risk of an empty dataset")
    if loss == "zero_one":
        return 1.0 - accuracy(model, data)
    if loss == "logistic":
        return batch_loss(model, data.X, data.y)
    raise ContractViolation(f"unknown loss {loss!r}")
