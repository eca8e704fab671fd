"""Flat ``key = value`` experiment configuration.

Values are numbers (``inf`` and ``sqrt(x)`` allowed), bare strings, or
bracketed number lists.  ``#`` starts a comment.  Every key can be overridden
from the command line with ``--key value``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

KINDS = ("ode", "gan", "oja", "grouse", "compare", "offdiag", "real-data", "uplift")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


_SQRT = re.compile(r"^sqrt\((.+)\)$")


def parse_scalar(text: str):
    s = text.strip().strip('"').strip("'")
    low = s.lower()
    if low in ("inf", "infinite", "+inf"):
        return math.inf
    if low in ("true", "false"):
        return low == "true"
    m = _SQRT.match(low)
    if m:
        return math.sqrt(float(m.group(1)))
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def parse_value(text: str):
    s = text.strip()
    if s.startswith("[") and s.endswith("]"):
        inner = s[1:-1].strip()
        return [parse_scalar(x) for x in inner.split(",")] if inner else []
    return parse_scalar(s)


def parse_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = parse_value(value)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    out: str = ""
    # model and GAN
    n: int = 1000
    d: int = 2
    p: int = 2
    q: int = 2
    tau: float = 0.2
    tau_tilde: float = 0.04
    lam: float = math.inf
    eta_t: float = 1.0
    eta_g: float = 1.0
    signal_cov: list = field(default_factory=lambda: [math.sqrt(3), math.sqrt(5)])
    gen_cov: list = field(default_factory=lambda: [math.sqrt(3), math.sqrt(5)])
    projection: str = "polar"
    # initial macroscopic state: diagonal value, or every component when init_offdiag
    init: float = 0.1
    init_offdiag: bool = False
    p0: list = field(default_factory=list)
    q0: list = field(default_factory=list)
    r0: list = field(default_factory=list)
    s0: list = field(default_factory=list)
    # horizon and recording
    t_end: float = 50.0
    dt: float = 0.01
    ode_record_every: int = 10
    steps: int = 0
    record_every: int = 0
    record_time: float = 0.1
    seeds: list = field(default_factory=lambda: [0])
    engine: str = "reduced"
    # scaling study
    ns: list = field(default_factory=lambda: [500, 2000, 8000])
    # off-diagonal study
    inits: list = field(default_factory=lambda: [0.1, 0.01, 0.001, 0.0001])
    offdiag_mode: str = "ode"
    tail_fraction: float = 0.2
    # baselines
    tau_oja: float = 0.1
    tau_grouse: float = 0.1
    # real data
    dataset: str = ""
    dataset_format: str = "idx"
    k: int = 16
    epochs_multi: int = 1
    epochs_single: int = 5
    epochs_baseline: int = 1
    max_samples: int = 0
    center_for_gan: bool = False
    init_scale: float = 0.1
    schedule: str = "plateau"
    schedule_window: int = 500
    schedule_tol: float = 0.01
    image_rows: int = 0
    image_cols: int = 0

    def to_lines(self) -> list[str]:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = "[" + ", ".join(_fmt(x) for x in v) + "]"
            else:
                v = _fmt(v)
            lines.append(f"{f.name} = {v}")
        return lines


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(name: str, value):
    kind = _FIELD_TYPES[name]
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value) or math.isinf(value):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return int(value)
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        return float(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{name}: expected true or false, got {value!r}")
        return value
    if kind == "list":
        if not isinstance(value, list):
            value = [value]
        for x in value:
            if isinstance(x, (str, bool)):
                raise ConfigError(f"{name}: list entries must be numbers, got {x!r}")
        return value
    return str(value)


def _positive_int_list(name, values):
    for v in values:
        if v != int(v) or v < 0:
            raise ConfigError(f"{name}: entries must be non-negative integers, got {v!r}")
    return [int(v) for v in values]


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check every field; returns a normalized copy."""
    if cfg.kind not in KINDS:
        raise ConfigError(f"kind: must be one of {', '.join(KINDS)}, got {cfg.kind!r}")
    for name in ("n", "d", "p", "q"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name}: must be at least 1")
    if cfg.kind != "uplift" and not (cfg.q <= cfg.p):
        raise ConfigError(f"q: must not exceed p ({cfg.q} > {cfg.p})")
    if cfg.kind == "uplift" and not (cfg.d <= cfg.q <= cfg.p):
        raise ConfigError("d, q, p: the uplift demo needs d <= q <= p")
    if max(cfg.d, cfg.p, cfg.q) > cfg.n:
        raise ConfigError("n: must be at least max(d, p, q)")
    for name in ("tau", "tau_tilde"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name}: must be positive")
    if not cfg.lam > 0:
        raise ConfigError("lam: must be positive or inf")
    for name in ("eta_t", "eta_g", "init_scale"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"{name}: must be non-negative")
    # a single entry means an isotropic covariance
    if len(cfg.signal_cov) == 1 and cfg.d > 1:
        cfg = replace(cfg, signal_cov=cfg.signal_cov * cfg.d)
    if len(cfg.gen_cov) == 1 and cfg.p > 1:
        cfg = replace(cfg, gen_cov=cfg.gen_cov * cfg.p)
    if len(cfg.signal_cov) != cfg.d:
        raise ConfigError(f"signal_cov: needs d={cfg.d} entries, got {len(cfg.signal_cov)}")
    if len(cfg.gen_cov) != cfg.p:
        raise ConfigError(f"gen_cov: needs p={cfg.p} entries, got {len(cfg.gen_cov)}")
    for name in ("signal_cov", "gen_cov"):
        if any(v < 0 for v in getattr(cfg, name)):
            raise ConfigError(f"{name}: entries must be non-negative")
    for name, shape in (("p0", (cfg.d, cfg.p)), ("q0", (cfg.d, cfg.q)), ("r0", (cfg.p, cfg.q)), ("s0", (cfg.p, cfg.p))):
        v = getattr(cfg, name)
        if v and len(v) != shape[0] * shape[1]:
            raise ConfigError(f"{name}: needs {shape[0]}x{shape[1]} = {shape[0] * shape[1]} row-major entries")
    if not cfg.dt > 0:
        raise ConfigError("dt: must be positive")
    if cfg.t_end < 0:
        raise ConfigError("t_end: must be non-negative")
    if abs(round(cfg.t_end / cfg.dt) * cfg.dt - cfg.t_end) > 1e-9 * max(1.0, cfg.t_end):
        raise ConfigError("t_end: must be a multiple of dt")
    for name in ("ode_record_every", "schedule_window"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name}: must be at least 1")
    for name in ("steps", "record_every", "max_samples", "k", "image_rows", "image_cols",
                 "epochs_multi", "epochs_single", "epochs_baseline"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"{name}: must be non-negative")
    if not cfg.schedule_tol > 0:
        raise ConfigError("schedule_tol: must be positive")
    if not cfg.record_time > 0:
        raise ConfigError("record_time: must be positive")
    if not cfg.seeds:
        raise ConfigError("seeds: at least one seed is required")
    seeds = _positive_int_list("seeds", cfg.seeds)
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds: duplicate seeds")
    ns = _positive_int_list("ns", cfg.ns)
    if cfg.kind == "compare":
        if len(ns) < 2:
            raise ConfigError("ns: a scaling study needs at least two dimensions")
        for n in ns:
            if n < cfg.d + cfg.p + cfg.q + 2:
                raise ConfigError(f"ns: n={n} is too small for d+p+q={cfg.d + cfg.p + cfg.q}")
            if abs(round(cfg.record_time * n) - cfg.record_time * n) > 1e-9:
                raise ConfigError(f"record_time: record_time * n must be an integer (n={n})")
    if cfg.engine not in ("reduced", "full"):
        raise ConfigError("engine: must be 'reduced' or 'full'")
    if cfg.projection not in ("polar", "qr"):
        raise ConfigError("projection: must be 'polar' or 'qr'")
    if cfg.offdiag_mode not in ("ode", "empirical"):
        raise ConfigError("offdiag_mode: must be 'ode' or 'empirical'")
    if cfg.schedule not in ("plateau", "none"):
        raise ConfigError("schedule: must be 'plateau' or 'none'")
    if cfg.dataset_format not in ("idx", "csv"):
        raise ConfigError("dataset_format: must be 'idx' or 'csv'")
    if not 0 < cfg.tail_fraction <= 1:
        raise ConfigError("tail_fraction: must lie in (0, 1]")
    if cfg.kind == "real-data" and not cfg.dataset:
        raise ConfigError("dataset: a path is required for real-data runs")
    if cfg.kind == "offdiag" and any(x < 0 for x in cfg.inits):
        raise ConfigError("inits: entries must be non-negative")
    return replace(cfg, seeds=seeds, ns=ns)


def build(values: dict) -> ExperimentConfig:
    unknown = sorted(set(values) - set(_FIELD_TYPES))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    if "kind" not in values:
        raise ConfigError("kind: missing")
    coerced = {k: _coerce(k, v) for k, v in values.items()}
    return validate(ExperimentConfig(**coerced))


def load(path=None, overrides: dict | None = None, kind: str | None = None) -> ExperimentConfig:
    """Read a config file, apply overrides (already parsed or raw strings) and validate."""
    values = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config: file not found: {path}")
        values = parse_text(p.read_text())
    if kind is not None:
        if "kind" in values and values["kind"] != kind:
            raise ConfigError(f"kind: file says {values['kind']!r} but the command is {kind!r}")
        values["kind"] = kind
    for k, v in (overrides or {}).items():
        values[k.replace("-", "_")] = parse_value(v) if isinstance(v, str) else v
    return build(values)
