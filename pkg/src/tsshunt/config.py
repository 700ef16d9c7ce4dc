"""Pipeline configuration: a YAML file checked against a strict schema.

Relative paths resolve against the config file's directory. Any path can be
overridden from the environment with ``TSSHUNT_<KEY>`` (for example
``TSSHUNT_CORPUS`` or ``TSSHUNT_RUN_DIR``).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Optional

import yaml

from .ingest.models import parse_time

ENV_PREFIX = "TSSHUNT_"


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class _Key:
    kind: type | tuple
    default: Any = None
    check: Optional[Callable[[Any], Optional[str]]] = None
    required: bool = False


def _at_least(lo, what):
    return lambda v: None if v >= lo else f"{what} must be ≥ {lo}"


def _open_unit(what):
    return lambda v: None if 0 < v < 1 else f"{what} must lie in (0, 1)"


def _half_open_unit(what):
    return lambda v: None if 0 < v <= 1 else f"{what} must lie in (0, 1]"


def _one_of(options, what):
    return lambda v: None if v in options else f"{what} must be one of {', '.join(options)}"


def _thresholds(v):
    bad = []
    for n, lam in v.items():
        if not isinstance(n, int) or n < 1:
            bad.append(f"seedgen threshold key {n!r} must be an integer ≥ 1")
        elif isinstance(lam, bool) or not isinstance(lam, (int, float)) or not 0 <= lam <= 1:
            bad.append(f"seedgen threshold for n={n} must lie in [0, 1]")
    return "; ".join(bad) or None


def _caps(v):
    bad = [k for k, c in v.items() if isinstance(c, bool) or not isinstance(c, int) or c < 1]
    return f"crawl daily_rate_cap entries must be integers ≥ 1 ({', '.join(map(str, bad))})" if bad else None


# paths: (required, is_dir)
PATH_KEYS = {
    "corpus": (True, None),
    "serp_fixtures": (False, True),
    "fetch_fixtures": (False, False),
    "zone": (False, False),
    "passive_dns": (False, False),
    "training": (False, False),
    "model": (False, False),
    "reputation": (False, False),
    "blacklists": (False, True),
    "phone_meta": (False, False),
    "popularity": (False, False),
    "archive": (False, True),
    "engines": (False, False),
    "stopwords": (False, False),
}

SCHEMA: dict[str, dict[str, _Key]] = {
    "seedgen": {
        "min_doc_count": _Key(int, 10, _at_least(0, "seedgen min_doc_count")),
        "max_n": _Key(int, 7, _at_least(1, "seedgen max_n")),
        "thresholds": _Key(dict, None, _thresholds, required=True),
    },
    "crawl": {
        "engines": _Key(list, None),
        "max_hops": _Key(int, 10, _at_least(1, "crawl max_hops")),
        "user_agent": _Key(str, "Mozilla/5.0 (Windows NT 10.0; Win64; x64) Chrome/57.0"),
        "daily_rate_cap": _Key(dict, {}, _caps),
        "workers": _Key(int, 4, _at_least(1, "crawl workers")),
        "start": _Key((str, datetime), "2016-04-01T00:00:00Z"),
        "host_map": _Key(dict, {}),
        "ad_network_hosts": _Key(list, None),
    },
    "classify": {
        "threshold": _Key(float, 0.6, _open_unit("classifier threshold")),
        "alpha": _Key(float, 1.0, lambda v: None if v > 0 else "classifier alpha must be > 0"),
        "folds": _Key(int, 10, _at_least(2, "classifier folds")),
        "reputation_top": _Key(int, None, _at_least(1, "classify reputation_top")),
    },
    "amplify": {
        "lambda": _Key(int, 500, _at_least(1, "amplification lambda")),
        "delta_days": _Key(float, 7.0, _at_least(0, "amplification delta_days")),
        "subnet_mode": _Key(str, "slash24", _one_of(("slash24", "exact"), "amplification subnet_mode")),
        "workers": _Key(int, 4, _at_least(1, "amplification workers")),
        "rounds": _Key(int, 1, _at_least(1, "amplification rounds")),
    },
    "cluster": {
        "svd_mass": _Key(float, 0.9, _half_open_unit("cluster svd_mass")),
        "svd_max_rank": _Key(int, 50, _at_least(1, "cluster svd_max_rank")),
        "k_min": _Key(int, 1, _at_least(1, "cluster k_min")),
        "k_max": _Key(int, None, _at_least(1, "cluster k_max")),
        "top_k": _Key(int, 3, _at_least(1, "cluster top_k")),
        "common_words": _Key(list, None),
    },
    "report": {
        "figures": _Key(bool, True),
    },
}

TOP_KEYS = {"mode", "run_dir", "seed", "paths", *SCHEMA}


@dataclass
class PipelineConfig:
    mode: str = "fixture"
    run_dir: Path = Path("run")
    seed: int = 42
    paths: dict[str, Optional[Path]] = field(default_factory=dict)
    seedgen: dict = field(default_factory=dict)
    crawl: dict = field(default_factory=dict)
    classify: dict = field(default_factory=dict)
    amplify: dict = field(default_factory=dict)
    cluster: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)
    source: Optional[Path] = None

    def path(self, key: str) -> Optional[Path]:
        return self.paths.get(key)

    def snapshot(self) -> dict:
        """JSON-safe view, recorded in the run manifest."""
        return {
            "mode": self.mode,
            "run_dir": str(self.run_dir),
            "seed": self.seed,
            "paths": {k: (str(v) if v else None) for k, v in sorted(self.paths.items())},
            **{s: _jsonable(getattr(self, s)) for s in SCHEMA},
        }


def _jsonable(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, datetime):
            v = v.isoformat()
        elif isinstance(v, dict):
            v = {str(a): b for a, b in v.items()}
        out[k] = v
    return out


def _typecheck(value, kind) -> bool:
    kinds = kind if isinstance(kind, tuple) else (kind,)
    if isinstance(value, bool) and bool not in kinds:
        return False
    if float in kinds and isinstance(value, int):
        return True
    return isinstance(value, kinds)


def _type_name(kind) -> str:
    kinds = kind if isinstance(kind, tuple) else (kind,)
    names = {int: "an integer", float: "a number", str: "a string", bool: "a boolean",
             list: "a list", dict: "a mapping", datetime: "a timestamp"}
    return " or ".join(names.get(k, k.__name__) for k in kinds)


def _resolve(base: Path, value) -> Path:
    p = Path(os.path.expanduser(str(value)))
    return p if p.is_absolute() else (base / p)


def parse_config(raw: Any, base_dir=".", env: Optional[dict] = None) -> PipelineConfig:
    """Validate an already-loaded mapping; raises ConfigError listing every problem."""
    env = os.environ if env is None else env
    base = Path(base_dir)
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a mapping"])
    for key in sorted(set(raw) - TOP_KEYS, key=str):
        errors.append(f"unknown key {key!r}")

    cfg = PipelineConfig()
    mode = raw.get("mode", "fixture")
    if mode not in ("fixture", "live"):
        errors.append("mode must be fixture or live")
    cfg.mode = mode
    seed = raw.get("seed", 42)
    if not _typecheck(seed, int):
        errors.append("seed must be an integer")
    cfg.seed = seed

    run_dir = env.get(ENV_PREFIX + "RUN_DIR", raw.get("run_dir", "run"))
    cfg.run_dir = _resolve(base, run_dir)

    paths = raw.get("paths", {}) or {}
    if not isinstance(paths, dict):
        errors.append("paths must be a mapping")
        paths = {}
    for key in sorted(set(paths) - set(PATH_KEYS), key=str):
        errors.append(f"unknown key 'paths.{key}'")
    for key, (required, is_dir) in PATH_KEYS.items():
        value = env.get(ENV_PREFIX + key.upper(), paths.get(key))
        if value in (None, ""):
            if required:
                errors.append(f"paths.{key} is required")
            cfg.paths[key] = None
            continue
        p = _resolve(base, value)
        cfg.paths[key] = p
        if key == "model" and not p.exists():
            continue    # written by the train step when absent
        if not p.exists():
            errors.append(f"paths.{key} does not exist: {p}")
        elif is_dir is True and not p.is_dir():
            errors.append(f"paths.{key} must be a directory: {p}")
        elif is_dir is False and not p.is_file():
            errors.append(f"paths.{key} must be a file: {p}")

    for section, keys in SCHEMA.items():
        given = raw.get(section, {}) or {}
        if not isinstance(given, dict):
            errors.append(f"{section} must be a mapping")
            given = {}
        for key in sorted(set(given) - set(keys), key=str):
            errors.append(f"unknown key '{section}.{key}'")
        values = {}
        for key, spec in keys.items():
            if key not in given or given[key] is None:
                if spec.required:
                    errors.append(f"{section}.{key} is required")
                values[key] = spec.default
                continue
            v = given[key]
            if not _typecheck(v, spec.kind):
                errors.append(f"{section}.{key} must be {_type_name(spec.kind)}")
                values[key] = spec.default
                continue
            if spec.check is not None:
                problem = spec.check(v)
                if problem:
                    errors.append(problem)
            values[key] = float(v) if spec.kind is float else v
        setattr(cfg, section, values)

    if cfg.mode == "fixture":
        for key in ("serp_fixtures", "fetch_fixtures", "zone"):
            if cfg.paths.get(key) is None:
                errors.append(f"paths.{key} is required in fixture mode")
    if cfg.path("model") is None and cfg.path("training") is None:
        errors.append("one of paths.model or paths.training is required")
    elif cfg.path("model") is not None and not cfg.path("model").exists() and cfg.path("training") is None:
        errors.append(f"paths.model does not exist and no paths.training to build it: {cfg.path('model')}")
    kmin, kmax = cfg.cluster.get("k_min"), cfg.cluster.get("k_max")
    if isinstance(kmin, int) and isinstance(kmax, int) and kmax < kmin:
        errors.append("cluster k_max must be ≥ k_min")
    start = cfg.crawl.get("start")
    try:
        cfg.crawl["start"] = parse_time(start)
    except (TypeError, ValueError):
        errors.append("crawl.start must be an ISO timestamp")

    if errors:
        raise ConfigError(errors)
    return cfg


def validate_config(path, env: Optional[dict] = None) -> PipelineConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text("utf-8"))
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
    except yaml.YAMLError as exc:
        raise ConfigError([f"config {path} is not valid YAML: {exc}"]) from exc
    cfg = parse_config(raw if raw is not None else {}, path.parent, env)
    cfg.source = path
    return cfg
