"""Turn an :class:`ExperimentConfig` into data, a simulation and output files."""

from __future__ import annotations

import hashlib
import itertools
import json
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import __version__
from ..datagen import Dataset, generate_synthetic, generate_teacher, load_csv, partition_iid, train_test_split
from ..kernels import BACKEND
from ..protocol import run_experiment
from .config import apply_overrides, from_dict, to_dict
from .metrics import SUMMARY_COLUMNS, render_metrics, render_rows, summarize, write_text


def load_pool(cfg):
    d = cfg.data
    if d.source == "synthetic":
        return generate_synthetic(cfg.synth_config())
    if d.source == "teacher":
        return generate_teacher(cfg.teacher_config())
    return load_csv(d.path, header=d.header)


def standardize(train, *others):
    """Z-score every dataset with the mean and std of ``train`` (constant columns keep scale 1)."""
    mu = train.X.mean(axis=0)
    sd = train.X.std(axis=0)
    sd[sd == 0] = 1.0
    return tuple(Dataset((ds.X - mu) / sd, ds.y) for ds in (train,) + others)


def prepare_data(cfg):
    """Client shards and the shared test set for ``cfg``."""
    d = cfg.data
    pool = load_pool(cfg)
    if d.test_path:
        train, test = pool, load_csv(d.test_path, header=d.header)
    else:
        train, test = train_test_split(pool, d.test_fraction, cfg.seed)
    if d.standardize:
        train, test = standardize(train, test)
    shards = partition_iid(train, cfg.protocol.m, d.n_per_client, cfg.seed)
    if cfg.centralized:
        shards = [Dataset.concat(shards)]
    return shards, test


def effective_protocol(cfg):
    """The centralized baseline trains one model on the pooled shards, no communication."""
    if not cfg.centralized:
        return cfg.protocol
    return replace(cfg.protocol, variant="fedavg", m=1, b=0, aggregator="mean")


def run_config(cfg, observer=None):
    shards, test = prepare_data(cfg)
    return run_experiment(effective_protocol(cfg), cfg.learner, shards, test, observer=observer)


def manifest(cfg, command, csv_text):
    return {
        "command": command,
        "config": to_dict(cfg),
        "seed": cfg.seed,
        "version": __version__,
        "backend": BACKEND,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "metrics_sha256": hashlib.sha256(csv_text.encode()).hexdigest(),
    }


def manifest_path(csv_path):
    p = Path(csv_path)
    return p.with_name(p.name + ".manifest.json")


def run_to_files(cfg, out, command="run"):
    """Run ``cfg``, write the metrics CSV to ``out`` and its manifest alongside.

    Returns ``(records, csv_path)``.
    """
    records = run_config(cfg)
    text = render_metrics(records)
    path = write_text(out, text)
    write_text(manifest_path(path), json.dumps(manifest(cfg, command, text), indent=2, sort_keys=True) + "\n")
    return records, path


def sweep_cells(cfg, grid=None):
    """``[(overrides, config)]`` for the cross product of ``grid`` (default: ``cfg.sweep``)."""
    grid = dict(cfg.sweep if grid is None else grid)
    if not grid:
        return [({}, replace(cfg, sweep={}))]
    keys = list(grid)
    cells = []
    for values in itertools.product(*(grid[k] for k in keys)):
        over = dict(zip(keys, values))
        cells.append((over, apply_overrides(cfg, **over)))
    return cells


def cell_name(cfg, overrides):
    if not overrides:
        return cfg.name
    return cfg.name + "__" + "__".join(f"{k}-{v}" for k, v in overrides.items())


def _run_cell(args):
    raw, out = args
    cfg = from_dict(raw)
    records, path = run_to_files(cfg, out, command="sweep")
    return summarize(records, source=path.name)


def run_sweep(cfg, out_dir, grid=None, jobs=1):
    """Run every sweep cell into ``out_dir`` and write ``summary.csv``.

    Each cell is self-contained, so cells may run in separate processes.
    Returns the summary rows (one per cell, in cross-product order).
    """
    out_dir = Path(out_dir)
    cells = sweep_cells(cfg, grid)
    tasks = [(to_dict(c), out_dir / f"{cell_name(cfg, over)}.csv") for over, c in cells]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(_run_cell, tasks))
    else:
        rows = [_run_cell(t) for t in tasks]
    keys = list(cells[0][0])
    for (over, _), row in zip(cells, rows):
        row.update(over)
    write_text(out_dir / "summary.csv", render_rows(tuple(keys) + SUMMARY_COLUMNS, rows))
    return rows
