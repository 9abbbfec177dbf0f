"""Batch execution of trials into an output directory.

Layout::

    <out>/manifest.json        batch descriptor (no timestamps, so reruns are byte-identical)
    <out>/runs.jsonl           one line per invocation with timestamps
    <out>/trials/<seed>.csv    one trial per file

A rerun skips seeds whose trial file already exists and matches the
configuration, which makes interrupted batches resumable.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import yaml

from . import __version__
from .engine import DEFAULT_TURN_CAP
from .strategies import registry
from .tournament import ConfigError
from .trials import ParameterRanges, RecordParseError, dumps_records, loads_records, run_trial

DEFAULT_SEEDS = (0, 11420)
CONFIG_ENV = "IPDLAB_CONFIG"
_CONFIG_KEYS = {"ranges", "pool", "seeds", "master_seed", "turn_cap", "workers", "out"}


@dataclass(frozen=True)
class BatchConfig:
    ranges: ParameterRanges = field(default_factory=ParameterRanges)
    pool: Optional[tuple] = None
    seeds: tuple = DEFAULT_SEEDS
    master_seed: int = 0
    turn_cap: int = DEFAULT_TURN_CAP
    workers: int = 1
    out: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "BatchConfig":
        data = dict(data or {})
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        if "ranges" in data:
            if not isinstance(data["ranges"], dict):
                raise ConfigError("ranges must be a mapping")
            kwargs["ranges"] = ParameterRanges.from_dict(data["ranges"])
        if data.get("pool") is not None:
            pool = []
            for name in data["pool"]:
                try:
                    pool.append(registry.resolve(str(name)))
                except registry.UnknownStrategyError:
                    raise ConfigError(f"unknown strategy in pool: {name}") from None
            if len(set(pool)) != len(pool):
                raise ConfigError("pool lists a strategy twice")
            kwargs["pool"] = tuple(pool)
        if "seeds" in data:
            kwargs["seeds"] = parse_seed_span(data["seeds"])
        for key in ("master_seed", "turn_cap", "workers"):
            if key in data:
                value = data[key]
                if not isinstance(value, int) or isinstance(value, bool) or value < (0 if key == "master_seed" else 1):
                    raise ConfigError(f"{key} must be a {'non-negative' if key == 'master_seed' else 'positive'} "
                                      f"integer, got {value!r}")
                kwargs[key] = value
        if data.get("out") is not None:
            kwargs["out"] = str(data["out"])
        return cls(**kwargs)

    def reproducibility_inputs(self) -> dict:
        return {
            "ranges": self.ranges.as_dict(),
            "pool": None if self.pool is None else list(self.pool),
            "master_seed": self.master_seed,
            "turn_cap": self.turn_cap,
        }

    def digest(self) -> str:
        blob = json.dumps(self.reproducibility_inputs(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def parse_seed_span(value) -> tuple:
    """Accept ``"A..B"``, ``[A, B]`` or a single seed; both ends inclusive."""
    try:
        if isinstance(value, str):
            lo, sep, hi = value.partition("..")
            span = (int(lo), int(hi)) if sep else (int(lo), int(lo))
        elif isinstance(value, int):
            span = (value, value)
        else:
            lo, hi = value
            span = (int(lo), int(hi))
    except (TypeError, ValueError):
        raise ConfigError(f"seed span must look like A..B, got {value!r}") from None
    if span[0] < 0 or span[0] > span[1]:
        raise ConfigError(f"seed span must satisfy 0 <= A <= B, got {value!r}")
    return span


def load_config(path: Union[str, Path, None]) -> BatchConfig:
    """Read a YAML (or JSON) config; ``None`` falls back to $IPDLAB_CONFIG, then defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV)
        if not path:
            return BatchConfig()
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return BatchConfig.from_dict(data)


def batch_manifest(cfg: BatchConfig, seeds: tuple) -> dict:
    return {
        "tool": "ipdlab",
        "tool_version": __version__,
        "config": cfg.reproducibility_inputs(),
        "config_digest": cfg.digest(),
        "registry_manifest_digest": registry.manifest_digest(),
        "seed_span": list(seeds),
        "trial_files": "trials/<seed>.csv",
    }


def _write_atomic(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _trial_text(seed, ranges, pool, master_seed, turn_cap) -> str:
    return dumps_records([run_trial(seed, ranges, pool, master_seed, turn_cap)])


def _is_complete(path: Path, seed: int, cfg: BatchConfig) -> bool:
    if not path.exists():
        return False
    try:
        records = loads_records(path.read_text(encoding="utf-8"), str(path))
    except (RecordParseError, OSError):
        return False
    return (len(records) == 1 and records[0].seed == seed and records[0].master_seed == cfg.master_seed
            and records[0].turn_cap == cfg.turn_cap and records[0].manifest_digest == registry.manifest_digest())


@dataclass
class BatchSummary:
    out: Path
    written: list
    skipped: list


def run_batch(cfg: BatchConfig, seeds: Optional[tuple] = None, out: Union[str, Path, None] = None,
              workers: Optional[int] = None) -> BatchSummary:
    seeds = parse_seed_span(seeds) if seeds is not None else cfg.seeds
    out = Path(out if out is not None else (cfg.out or "ipdlab-out"))
    workers = workers or cfg.workers
    trials_dir = out / "trials"
    trials_dir.mkdir(parents=True, exist_ok=True)

    manifest_path = out / "manifest.json"
    if manifest_path.exists():
        try:
            previous = json.loads(manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            previous = {}
        if previous.get("config_digest") not in (None, cfg.digest()):
            raise ConfigError(f"{out} holds a batch with a different configuration; use another output directory")
    manifest = batch_manifest(cfg, seeds)
    _write_atomic(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    started = time.time()
    all_seeds = list(range(seeds[0], seeds[1] + 1))
    skipped = [s for s in all_seeds if _is_complete(trials_dir / f"{s}.csv", s, cfg)]
    done = set(skipped)
    pending = [s for s in all_seeds if s not in done]
    args = (cfg.ranges, cfg.pool, cfg.master_seed, cfg.turn_cap)
    if workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            texts = pool.map(_trial_text, pending, *([a] * len(pending) for a in args))
            for seed, text in zip(pending, texts):
                _write_atomic(trials_dir / f"{seed}.csv", text)
    else:
        for seed in pending:
            _write_atomic(trials_dir / f"{seed}.csv", _trial_text(seed, *args))

    with open(out / "runs.jsonl", "a", encoding="utf-8") as fh:
        fh.write(json.dumps({"started": started, "finished": time.time(), "seed_span": list(seeds),
                             "written": len(pending), "skipped": len(skipped), "workers": workers,
                             "config_digest": cfg.digest(), "tool_version": __version__}) + "\n")
    return BatchSummary(out, pending, skipped)
