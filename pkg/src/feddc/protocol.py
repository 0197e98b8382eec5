"""Coordinator/client simulation of federated daisy-chaining and its baselines.

Every round each client takes one local SGD step. Clients then talk to the
coordinator when a daisy-chaining round (``t % d == d - 1``) or an
aggregation round (``t % b == b - 1``) fires. In a daisy round the
coordinator forwards the model of client ``i`` to client ``pi(i)`` for a
fresh uniform permutation ``pi``; in an aggregation round it broadcasts the
aggregate. When both fire, only the aggregation happens.

A period of 0 means "never". Message passing is simulated: a sent model is
just a value handed to the coordinator, and each communication round counts
``m`` uplink plus ``m`` downlink messages.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import learners
from .aggregation import METHODS, RadonConfig, aggregate, radon_number
from .errors import ConfigError, ContractViolation
from .privacy import PrivacyConfig, privatize_params
from .rng import stream

VARIANTS = ("feddc", "fedavg", "daisy_only", "fedprox")
INIT_MODES = ("shared", "independent")


@dataclass(frozen=True)
class ProtocolConfig:
    variant: str = "feddc"
    m: int = 10
    d: int = 1
    b: int = 10
    rounds: int = 100
    aggregator: str = "mean"
    radon: RadonConfig = RadonConfig()
    privacy: PrivacyConfig = PrivacyConfig()
    seed: int = 0
    eval_every: int = 0  # 0 picks a cadence from `rounds`
    workers: int = 1
    init: str = "shared"  # or "independent": one fresh draw per client

    @property
    def daisy_period(self):
        return self.d if self.variant in ("feddc", "daisy_only") else 0

    @property
    def aggregation_period(self):
        return self.b if self.variant in ("feddc", "fedavg", "fedprox") else 0

    def validate(self, param_dim=None):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        if self.d < 0 or self.b < 0:
            raise ConfigError("periods d and b must be >= 0 (0 means never)")
        if self.rounds < 0:
            raise ConfigError("rounds must be >= 0")
        if self.aggregator not in METHODS:
            raise ConfigError(f"unknown aggregator {self.aggregator!r}; expected one of {METHODS}")
        if self.variant == "daisy_only" and self.d == 0:
            raise ConfigError("daisy_only needs a daisy period d >= 1")
        if self.daisy_period and self.daisy_period <= self.rounds and self.m < 2:
            raise ConfigError("daisy-chaining needs at least 2 clients")
        if self.eval_every < 0:
            raise ConfigError("eval_every must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.init not in INIT_MODES:
            raise ConfigError(f"unknown init {self.init!r}; expected one of {INIT_MODES}")
        self.radon.validate()
        self.privacy.validate()
        if self.aggregator == "iterated_radon" and self.aggregation_period and param_dim is not None:
            need = radon_number(param_dim) ** self.radon.h
            if self.m < need:
                raise ConfigError(
                    f"iterated radon with {param_dim} parameters and h={self.radon.h} needs "
                    f"m >= {need} clients, got {self.m}"
                )

    def eval_interval(self):
        if self.eval_every:
            return self.eval_every
        return 1 if self.rounds <= 1000 else math.ceil(self.rounds / 1000)


def equal_communication_period(d, b):
    """FedAvg period whose communication frequency matches FedDC with (d, b)."""
    rate = (1.0 / d if d else 0.0) + (1.0 / b if b else 0.0)
    if rate == 0:
        return 0
    return max(1, round(1.0 / rate))


class RoundFlags(NamedTuple):
    is_daisy: bool
    is_agg: bool


def schedule_flags(t, d, b, variant):
    """Which communication events are due in round ``t`` (before collision handling)."""
    if t < 0:
        raise ContractViolation("round index must be >= 0")
    daisy = variant in ("feddc", "daisy_only") and d > 0 and t % d == d - 1
    agg = variant in ("feddc", "fedavg", "fedprox") and b > 0 and t % b == b - 1
    return RoundFlags(daisy, agg)


def daisy_permute(models, rng):
    """Send the model of client ``i`` to client ``pi(i)`` for a uniform permutation ``pi``."""
    m = len(models)
    if m < 2:
        raise ContractViolation("daisy-chaining needs at least 2 clients")
    pi = rng.permutation(m)
    out = [None] * m
    for i, target in enumerate(pi):
        out[target] = models[i]
    return out


def aggregation_round(models, method, radon, rng):
    """Aggregate and broadcast. For the iterated Radon point exactly ``r**h``
    models are used, drawn uniformly in random order when more are present."""
    m = len(models)
    chosen = models
    if method == "iterated_radon":
        need = radon_number(models[0].params.size) ** radon.h
        if m < need:
            raise ConfigError(f"iterated radon needs {need} models, got {m}")
        chosen = [models[i] for i in rng.permutation(m)[:need]]
    agg = aggregate(chosen, method, radon)
    return [agg] * m


@dataclass
class SimulationState:
    t: int
    models: list
    shards: list
    client_rngs: list
    privacy_rngs: list
    coord_rng: np.random.Generator
    received: list  # params each client held at the start of its send period
    anchors: list
    uplink: int = 0
    downlink: int = 0
    comm_rounds: int = 0
    last_aggregate: learners.Model | None = None
    aggregated_this_round: bool = False
    update_norms: list = field(default_factory=list)

    @property
    def messages(self):
        return self.uplink + self.downlink


def init_state(config, spec, shards):
    m = len(shards)
    if m != config.m:
        raise ConfigError(f"config declares m={config.m} clients but {m} shards were given")
    if any(len(s) == 0 for s in shards):
        raise ConfigError("every client needs a non-empty shard")
    n_features = shards[0].dim
    if config.init == "shared":
        models = [learners.init_model(spec, n_features, stream(config.seed, "init"))] * m
    else:
        models = [learners.init_model(spec, n_features, stream(config.seed, "init", i)) for i in range(m)]
    config.validate(param_dim=models[0].params.size)
    return SimulationState(
        t=0,
        models=models,
        shards=list(shards),
        client_rngs=[stream(config.seed, "client", i) for i in range(m)],
        privacy_rngs=[stream(config.seed, "privacy", i) for i in range(m)],
        coord_rng=stream(config.seed, "coordinator"),
        received=[mdl.params for mdl in models],
        anchors=list(models),
    )


def _local_steps(state, config, spec, executor):
    use_anchor = config.variant == "fedprox"

    def step(i):
        anchor = state.anchors[i] if use_anchor else None
        return learners.local_step(state.models[i], state.shards[i], spec, anchor, state.client_rngs[i], state.t)

    if executor is None:
        return [step(i) for i in range(len(state.models))]
    return list(executor.map(step, range(len(state.models))))


def run_round(state, config, spec, executor=None):
    """Advance the simulation by one round, in place. Returns ``state``."""
    if state.t >= config.rounds:
        raise ContractViolation(f"round {state.t} is past the budget of {config.rounds}")
    models = _local_steps(state, config, spec, executor)
    flags = schedule_flags(state.t, config.d, config.b, config.variant)
    state.aggregated_this_round = False
    state.update_norms = []
    if flags.is_daisy or flags.is_agg:
        m = len(models)
        sent = []
        for i, mdl in enumerate(models):
            params, norm = privatize_params(state.received[i], mdl.params, config.privacy, state.privacy_rngs[i])
            if config.privacy.enabled and config.privacy.clip is not None and norm > config.privacy.clip:
                raise ContractViolation(f"client {i} sent an update of norm {norm} > clip {config.privacy.clip}")
            state.update_norms.append(norm)
            sent.append(mdl if params is mdl.params else mdl.with_params(params))
        state.uplink += m
        if flags.is_agg:
            models = aggregation_round(sent, config.aggregator, config.radon, state.coord_rng)
            state.last_aggregate = models[0]
            state.aggregated_this_round = True
            state.anchors = list(models)
        else:
            models = daisy_permute(sent, state.coord_rng)
        state.downlink += m
        state.comm_rounds += 1
        state.received = [mdl.params for mdl in models]
    state.models = models
    state.t += 1
    return state


@dataclass
class MetricsRecord:
    round: int
    train_mean: float
    test_mean: float
    test_lo: float
    test_hi: float
    agg_test: float | None
    messages: int


def evaluate(state, eval_set):
    cache = {}

    def acc(model, data):
        key = (id(model), id(data))
        if key not in cache:
            cache[key] = learners.accuracy(model, data)
        return cache[key]

    train = [acc(mdl, shard) for mdl, shard in zip(state.models, state.shards)]
    test = np.array([acc(mdl, eval_set) for mdl in state.models])
    agg = acc(state.last_aggregate, eval_set) if state.aggregated_this_round else None
    return MetricsRecord(
        round=state.t,
        train_mean=float(np.mean(train)),
        test_mean=float(test.mean()),
        test_lo=float(test.min()),
        test_hi=float(test.max()),
        agg_test=agg,
        messages=state.messages,
    )


def run_experiment(config, spec, shards, eval_set, observer=None):
    """Run ``config.rounds`` rounds and return the metrics stream.

    A record is taken for the initial models (round 0) and after every
    ``config.eval_interval()`` completed rounds, plus the final round.
    ``observer(state)`` is called after every round if given.
    """
    spec.validate()
    if len(eval_set) == 0:
        raise ConfigError("evaluation set is empty")
    state = init_state(config, spec, shards)
    every = config.eval_interval()
    records = [evaluate(state, eval_set)]
    executor = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        while state.t < config.rounds:
            run_round(state, config, spec, executor)
            if observer is not None:
                observer(state)
            if state.t % every == 0 or state.t == config.rounds:
                records.append(evaluate(state, eval_set))
    finally:
        if executor is not None:
            executor.shutdown()
    return records
