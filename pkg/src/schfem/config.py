"""Plain-text run configuration.

Files are `key = value` lines; blank lines and `#` comments are ignored.
Unknown keys are rejected with their line number.  Every key has a documented
default except epsilon, tau, and T, which each run must provide (directly or
through a preset).
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

from .errors import ConfigError


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int_list(s: str) -> tuple[int, ...]:
    s = s.strip()
    return tuple(int(tok) for tok in s.split(",") if tok.strip()) if s else ()


def _parse_float_list(s: str) -> tuple[float, ...]:
    s = s.strip()
    return tuple(float(tok) for tok in s.split(",") if tok.strip()) if s else ()


@dataclass
class RunConfig:
    """Everything a CLI run needs; see KEY_TYPES for the file keys."""

    # scheme (epsilon/tau/T have no defaults)
    epsilon: Optional[float] = None
    tau: Optional[float] = None
    T: Optional[float] = None
    delta: float = 1.0
    diffusion: str = "identity"
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    increment_variance_mode: str = "tau"
    # mesh
    nx: int = 64
    ny: Optional[int] = None
    xmin: float = -1.0
    xmax: float = 1.0
    ymin: float = -1.0
    ymax: float = 1.0
    # initial datum
    initial: str = "test1_circle"
    initial_constant: Optional[float] = None
    initial_expression: Optional[str] = None
    # experiment
    paths: int = 100
    seed: Optional[int] = None
    ladder: tuple[int, ...] = ()
    reference_nx: Optional[int] = None
    snapshot_times: tuple[float, ...] = ()
    holder_lags: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64, 128)
    workers: int = 1
    check_nx: int = 16
    check_fields: int = 1000
    out: Optional[str] = None

    def require_scheme(self):
        missing = [k for k in ("epsilon", "tau", "T") if getattr(self, k) is None]
        if missing:
            raise ConfigError(f"missing required config key(s): {', '.join(missing)}")

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.xmax, self.ymin, self.ymax)

    @property
    def ny_resolved(self) -> int:
        return self.nx if self.ny is None else self.ny

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


KEY_TYPES = {
    "epsilon": float, "tau": float, "T": float, "delta": float,
    "diffusion": str, "newton_tol": float, "newton_max_iter": int,
    "increment_variance_mode": str,
    "nx": int, "ny": int, "xmin": float, "xmax": float, "ymin": float, "ymax": float,
    "initial": str, "initial_constant": float, "initial_expression": str,
    "paths": int, "seed": int, "ladder": _parse_int_list,
    "reference_nx": int, "snapshot_times": _parse_float_list,
    "holder_lags": _parse_int_list, "workers": int,
    "check_nx": int, "check_fields": int, "out": str,
}

# One-command reproductions of the experiment configurations.
PRESETS: dict[str, dict] = {
    "test1": dict(epsilon=0.1, tau=0.001, T=0.1, delta=1.0, diffusion="identity",
                  nx=64, initial="test1_circle", paths=100,
                  snapshot_times=(0.0, 0.02, 0.04, 0.06, 0.08, 0.1)),
    "test2": dict(epsilon=0.1, tau=0.001, T=0.1, delta=1.0, diffusion="identity",
                  nx=64, initial="test2_ellipse", paths=100,
                  snapshot_times=(0.0, 0.02, 0.04, 0.06, 0.08, 0.1)),
    "test3": dict(epsilon=0.05, tau=1e-6, T=1e-4, delta=1.0, diffusion="sqrt1p",
                  nx=80, initial="test3_cross", paths=20,
                  ladder=(10, 20, 40), reference_nx=80),
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse `key = value` lines into typed values; raise ConfigError with
    line numbers on unknown keys or bad values."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KEY_TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = KEY_TYPES[key](value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def load_config(path: str | None = None, preset: str | None = None,
                overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from (in increasing precedence) a preset, a config
    file, and explicit overrides."""
    values: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        values.update(PRESETS[preset])
    if path is not None:
        try:
            with open(path) as f:
                text = f.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        values.update(parse_config_text(text, source=path))
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_to_text(cfg: RunConfig) -> str:
    """Normalized key = value rendering that parse_config_text reads back."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if isinstance(v, tuple):
            if not v:
                continue
            v = ",".join(f"{x:g}" if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, float):
            v = f"{v:.17g}"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
