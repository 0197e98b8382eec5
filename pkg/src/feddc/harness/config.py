"""Experiment configuration: TOML files, validation, and the resolved-dict
form written into run manifests.

Layout::

    name = "synthetic-mlp"
    seed = 1

    [data]
    source = "synthetic"      # synthetic | teacher | csv
    path = "train.csv"        # csv only
    test_path = "test.csv"    # optional; otherwise test_fraction is held out
    header = false
    standardize = false       # z-score with training-split mean/std
    test_fraction = 0.5
    n_per_client = 10

    [data.synthetic]          # generator parameters, see SynthConfig
    n_samples = 2000          # ([data.teacher] holds TeacherConfig keys)

    [protocol]
    variant = "feddc"         # feddc | fedavg | daisy_only | fedprox
    m = 50
    d = 1
    b = 200                   # 0 means never aggregate
    rounds = 1000
    aggregator = "mean"       # mean | iterated_radon | geometric_median
    radon_h = 1
    eval_every = 20
    init = "shared"           # or "independent"
    centralized = false       # pool all shards on one client, no communication

    [learner]
    family = "mlp"
    hidden = [100, 50, 20]
    learning_rate = 0.05
    batch_size = 10

    [privacy]
    enabled = false
    clip = 2.0
    sigma = 0.01

    [sweep]                   # optional; cross product over these fields
    b = [1, 10]
"""

from __future__ import annotations

import json
import re
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..aggregation import RadonConfig
from ..datagen import SynthConfig, TeacherConfig
from ..errors import ConfigError
from ..learners import LearnerSpec
from ..privacy import PrivacyConfig
from ..protocol import ProtocolConfig

SWEEP_FIELDS = ("d", "b", "variant", "mu", "clip", "sigma", "seed")
DATA_SOURCES = ("synthetic", "teacher", "csv")


@dataclass
class DataConfig:
    source: str = "synthetic"
    path: str | None = None
    test_path: str | None = None
    header: bool = False
    standardize: bool = False  # z-score features with training-split statistics
    test_fraction: float = 0.5
    n_per_client: int = 10
    synthetic: SynthConfig = field(default_factory=SynthConfig)
    teacher: TeacherConfig = field(default_factory=TeacherConfig)
    # generator seeds; None follows the master seed
    synthetic_seed: int | None = None
    teacher_seed: int | None = None


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    seed: int = 0
    data: DataConfig = field(default_factory=DataConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    learner: LearnerSpec = field(default_factory=LearnerSpec)
    centralized: bool = False
    sweep: dict = field(default_factory=dict)
    out: str | None = None

    def with_seed(self, seed):
        return replace(self, seed=seed, protocol=replace(self.protocol, seed=seed))

    def synth_config(self):
        seed = self.seed if self.data.synthetic_seed is None else self.data.synthetic_seed
        return replace(self.data.synthetic, seed=seed)

    def teacher_config(self):
        seed = self.seed if self.data.teacher_seed is None else self.data.teacher_seed
        return replace(self.data.teacher, seed=seed)

    def validate(self):
        d = self.data
        if d.source not in DATA_SOURCES:
            raise ConfigError(f"data.source must be one of {DATA_SOURCES}, got {d.source!r}")
        if d.source == "csv":
            if not d.path:
                raise ConfigError("data.path is required when data.source = 'csv'")
            if not Path(d.path).is_file():
                raise ConfigError(f"data.path: file not found: {d.path}")
        if d.test_path and not Path(d.test_path).is_file():
            raise ConfigError(f"data.test_path: file not found: {d.test_path}")
        if not d.test_path and not 0 < d.test_fraction < 1:
            raise ConfigError("data.test_fraction must lie in (0, 1)")
        if d.n_per_client < 1:
            raise ConfigError("data.n_per_client must be >= 1")
        if d.source == "synthetic":
            self.synth_config().validate()
        if d.source == "teacher":
            self.teacher_config().validate()
        self.learner.validate()
        self.protocol.validate()
        for key in self.sweep:
            if key not in SWEEP_FIELDS:
                raise ConfigError(f"sweep: unknown field {key!r}; sweepable fields are {SWEEP_FIELDS}")


_SECTIONS = {
    "": {"name", "seed", "out", "data", "protocol", "learner", "privacy", "sweep"},
    "data": {f.name for f in fields(DataConfig)} - {"synthetic_seed", "teacher_seed"},
    "data.synthetic": {f.name for f in fields(SynthConfig)},
    "data.teacher": {f.name for f in fields(TeacherConfig)},
    "protocol": {"variant", "m", "d", "b", "rounds", "aggregator", "radon_h", "radon_tolerance",
                 "eval_every", "workers", "init", "centralized"},
    "learner": {f.name for f in fields(LearnerSpec)},
    "privacy": {f.name for f in fields(PrivacyConfig)},
}


def _locate(text, section, key):
    """1-based line of ``key`` inside ``[section]`` in TOML source, or None."""
    if text is None:
        return None
    current = ""
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for no, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"^\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and pat.match(line):
            return no
    return None


def _fail(msg, text, section, key):
    line = _locate(text, section, key)
    where = f"line {line}: " if line else ""
    name = f"{section}.{key}" if section else key
    raise ConfigError(f"{where}{name}: {msg}")


def _check_keys(table, section, text):
    allowed = _SECTIONS[section]
    for key in table:
        if key not in allowed:
            _fail("unknown key", text, section, key)


def _typed(table, section, key, kind, text, default):
    if key not in table:
        return default
    v = table[key]
    if kind is float and isinstance(v, int) and not isinstance(v, bool):
        v = float(v)
    if kind is int and isinstance(v, bool):
        _fail("expected an integer", text, section, key)
    if not isinstance(v, kind):
        _fail(f"expected {kind.__name__}, got {type(v).__name__}", text, section, key)
    return v


def from_dict(raw, text=None):
    """Build an :class:`ExperimentConfig` from the nested TOML/JSON form."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table")
    _check_keys(raw, "", text)
    t = lambda tbl, sec, key, kind, default: _typed(tbl, sec, key, kind, text, default)  # noqa: E731

    data_t = raw.get("data", {})
    _check_keys(data_t, "data", text)
    gens = {}
    for section, kind_cls in (("synthetic", SynthConfig), ("teacher", TeacherConfig)):
        sub = data_t.get(section, {})
        _check_keys(sub, f"data.{section}", text)
        defaults = kind_cls()
        kwargs = {}
        for f in fields(kind_cls):
            if f.name in sub:
                kind = float if isinstance(getattr(defaults, f.name), float) else int
                kwargs[f.name] = t(sub, f"data.{section}", f.name, kind, None)
        seed_override = kwargs.pop("seed", None)
        gens[section] = (kind_cls(**kwargs), seed_override)
    data = DataConfig(
        source=t(data_t, "data", "source", str, "synthetic"),
        path=t(data_t, "data", "path", str, None),
        test_path=t(data_t, "data", "test_path", str, None),
        header=t(data_t, "data", "header", bool, False),
        standardize=t(data_t, "data", "standardize", bool, False),
        test_fraction=t(data_t, "data", "test_fraction", float, 0.5),
        n_per_client=t(data_t, "data", "n_per_client", int, 10),
        synthetic=gens["synthetic"][0],
        teacher=gens["teacher"][0],
        synthetic_seed=gens["synthetic"][1],
        teacher_seed=gens["teacher"][1],
    )

    seed = t(raw, "", "seed", int, 0)
    if seed < 0:
        _fail("must be >= 0", text, "", "seed")

    priv_t = raw.get("privacy", {})
    _check_keys(priv_t, "privacy", text)
    privacy = PrivacyConfig(
        enabled=t(priv_t, "privacy", "enabled", bool, False),
        clip=t(priv_t, "privacy", "clip", float, None),
        sigma=t(priv_t, "privacy", "sigma", float, 0.0),
    )

    proto_t = raw.get("protocol", {})
    _check_keys(proto_t, "protocol", text)
    protocol = ProtocolConfig(
        variant=t(proto_t, "protocol", "variant", str, "feddc"),
        m=t(proto_t, "protocol", "m", int, 10),
        d=t(proto_t, "protocol", "d", int, 1),
        b=t(proto_t, "protocol", "b", int, 10),
        rounds=t(proto_t, "protocol", "rounds", int, 100),
        aggregator=t(proto_t, "protocol", "aggregator", str, "mean"),
        radon=RadonConfig(
            h=t(proto_t, "protocol", "radon_h", int, 1),
            zero_tolerance=t(proto_t, "protocol", "radon_tolerance", float, 1e-9),
        ),
        privacy=privacy,
        seed=seed,
        eval_every=t(proto_t, "protocol", "eval_every", int, 0),
        workers=t(proto_t, "protocol", "workers", int, 1),
        init=t(proto_t, "protocol", "init", str, "shared"),
    )

    learn_t = raw.get("learner", {})
    _check_keys(learn_t, "learner", text)
    hidden = learn_t.get("hidden", [100, 50, 20])
    if not isinstance(hidden, list) or not all(isinstance(h, int) for h in hidden):
        _fail("expected a list of integers", text, "learner", "hidden")
    learner = LearnerSpec(
        family=t(learn_t, "learner", "family", str, "linear"),
        hidden=tuple(hidden),
        learning_rate=t(learn_t, "learner", "learning_rate", float, 0.1),
        batch_size=t(learn_t, "learner", "batch_size", int, 10),
        prox_mu=t(learn_t, "learner", "prox_mu", float, 0.0),
        bias=t(learn_t, "learner", "bias", bool, True),
        decay_factor=t(learn_t, "learner", "decay_factor", float, 1.0),
        decay_every=t(learn_t, "learner", "decay_every", int, 0),
    )

    sweep = raw.get("sweep", {})
    if not isinstance(sweep, dict):
        _fail("expected a table", text, "", "sweep")
    for key, values in sweep.items():
        if key not in SWEEP_FIELDS:
            _fail(f"unknown sweep field; sweepable fields are {SWEEP_FIELDS}", text, "sweep", key)
        if not isinstance(values, list) or not values:
            _fail("expected a non-empty list", text, "sweep", key)

    cfg = ExperimentConfig(
        name=t(raw, "", "name", str, "experiment"),
        seed=seed,
        data=data,
        protocol=protocol,
        learner=learner,
        centralized=t(proto_t, "protocol", "centralized", bool, False),
        sweep=dict(sweep),
        out=t(raw, "", "out", str, None),
    )
    try:
        cfg.validate()
    except ConfigError as exc:
        raise ConfigError(_with_line(str(exc), text)) from None
    return cfg


def _with_line(msg, text):
    # point at the offending key when the message names one as "section.key"
    m = re.match(r"^([a-z_]+(?:\.[a-z_]+)*)\b", msg)
    if m and text is not None:
        parts = m.group(1).split(".")
        line = _locate(text, ".".join(parts[:-1]), parts[-1]) if len(parts) > 1 else None
        if line:
            return f"line {line}: {msg}"
    return msg


def to_dict(cfg):
    """Nested form accepted by :func:`from_dict`; ``from_dict(to_dict(c)) == c``."""
    d = cfg.data
    data = {"source": d.source, "header": d.header, "standardize": d.standardize, "test_fraction": d.test_fraction, "n_per_client": d.n_per_client}
    for section, seed in (("synthetic", d.synthetic_seed), ("teacher", d.teacher_seed)):
        sub = asdict(getattr(d, section))
        sub.pop("seed")
        if seed is not None:
            sub["seed"] = seed
        data[section] = sub
    if d.path is not None:
        data["path"] = d.path
    if d.test_path is not None:
        data["test_path"] = d.test_path
    p = cfg.protocol
    protocol = {"variant": p.variant, "m": p.m, "d": p.d, "b": p.b, "rounds": p.rounds, "aggregator": p.aggregator,
                "radon_h": p.radon.h, "radon_tolerance": p.radon.zero_tolerance, "eval_every": p.eval_every,
                "workers": p.workers, "init": p.init, "centralized": cfg.centralized}
    learner = asdict(cfg.learner)
    learner["hidden"] = list(learner["hidden"])
    privacy = {"enabled": p.privacy.enabled, "sigma": p.privacy.sigma}
    if p.privacy.clip is not None:
        privacy["clip"] = p.privacy.clip
    out = {"name": cfg.name, "seed": cfg.seed, "data": data, "protocol": protocol, "learner": learner,
           "privacy": privacy}
    if cfg.sweep:
        out["sweep"] = dict(cfg.sweep)
    if cfg.out is not None:
        out["out"] = cfg.out
    return out


def load_config(path):
    """Read a TOML config, or the ``config`` entry of a JSON run manifest."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}: {exc.msg}") from None
        return from_dict(raw.get("config", raw))
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(exc)) from None
    return from_dict(raw, text)


def apply_overrides(cfg, **values):
    """Return ``cfg`` with sweep fields (``d``, ``b``, ``variant``, ``mu``,
    ``clip``, ``sigma``, ``seed``) replaced."""
    p, learner = cfg.protocol, cfg.learner
    for key, v in values.items():
        if key == "seed":
            cfg = cfg.with_seed(int(v))
            p = cfg.protocol
        elif key in ("d", "b"):
            p = replace(p, **{key: _period(v)})
        elif key == "variant":
            p = replace(p, variant=str(v))
        elif key == "mu":
            learner = replace(learner, prox_mu=float(v))
        elif key == "clip":
            p = replace(p, privacy=replace(p.privacy, clip=None if v in (None, "none", 0) else float(v)))
        elif key == "sigma":
            p = replace(p, privacy=replace(p.privacy, sigma=float(v)))
        else:
            raise ConfigError(f"sweep: unknown field {key!r}; sweepable fields are {SWEEP_FIELDS}")
    cfg = replace(cfg, protocol=p, learner=learner, sweep={})
    cfg.validate()
    return cfg


def _period(v):
    if isinstance(v, str) and v.lower() in ("inf", "infinity", "never"):
        return 0
    return int(v)
