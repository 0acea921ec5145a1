"""Flat key = value run configuration (INI sections, one per concern).

Strict: unknown sections or keys are rejected, values are type checked.
An absent file or empty text yields the documented defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .harmonics import GroupSpec, _unchecked_spec

__all__ = ["ConfigError", "AppConfig", "load_config", "DEFAULTS"]


class ConfigError(ValueError):
    """Malformed configuration (parse error, unknown key, bad value)."""


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (converter, default)
DEFAULTS: dict[str, dict[str, tuple] ] = {
    "run": {
        "seed": (int, 0),
        "threads": (int, 1),
        "plots": (_bool, True),
    },
    "group": {
        "kind": (str, "torus"),
        "n": (int, 1),
        "bandwidth": (int, 8),
        "oversampling": (float, 2.0),
        "max_grid_points": (int, 500_000),
        "dual_threshold": (float, 0.125),
    },
    "solve": {
        "p": (float, 2.0),
        "epsilon": (float, 0.1),
        "u0": (str, "trivial-plus-lowest"),
        "u1": (str, "trivial-plus-lowest"),
        "dt": (float, 1e-3),
        "t_max": (float, 50.0),
        "blowup_threshold": (float, 1e8),
        "record_every": (int, 1),
        "record_source": (_bool, True),
    },
    "linear-decay": {
        "band": (int, 4),
        "count": (int, 20),
        "t_min": (float, 0.1),
        "t_max": (float, 100.0),
        "points": (int, 60),
        "recheck_slack": (float, 1.05),
    },
    "transform-check": {
        "cases": (str, "torus:2:8 su2:8"),
        "oversampling": (float, 1.0),
        "allow_undersampled": (_bool, False),
        "tolerance": (float, 1e-10),
    },
    "lifespan-sweep": {
        "mode": (str, "pde"),
        "eps_min": (float, 0.02),
        "eps_max": (float, 0.2),
        "count": (int, 6),
        "slope_tolerance": (float, 0.15),
        "t_max": (float, 400.0),
    },
    "bounds": {
        "depth": (int, 30),
        "c_data": (float, 0.0),       # 0 means: take the mean of the solve u0 preset
        "jmax": (int, 4),
        "trajectory": (str, ""),
    },
}


@dataclass
class AppConfig:
    """Validated configuration: per-section dictionaries plus CLI overrides."""

    values: dict[str, dict[str, object]]
    out_dir: Path = field(default_factory=lambda: Path("liewave-out"))

    def __getitem__(self, section: str) -> dict[str, object]:
        return self.values[section]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    @property
    def threads(self) -> int:
        return self.values["run"]["threads"]

    @property
    def plots(self) -> bool:
        return self.values["run"]["plots"]

    def group_spec(self, bandwidth: int | None = None, oversampling: float | None = None) -> GroupSpec:
        g = self.values["group"]
        kind = g["kind"]
        if kind not in ("torus", "su2"):
            raise ConfigError(f"group.kind must be torus or su2, got {kind!r}")
        B = bandwidth if bandwidth is not None else g["bandwidth"]
        os_ = oversampling if oversampling is not None else g["oversampling"]
        try:
            if kind == "torus":
                return GroupSpec.torus(g["n"], B, oversampling=os_)
            return GroupSpec.su2(B, oversampling=os_)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def echo(self) -> list[str]:
        lines = []
        for section in sorted(self.values):
            for key in sorted(self.values[section]):
                lines.append(f"{section}.{key} = {self.values[section][key]}")
        return lines


def load_config(path: str | Path | None = None, text: str | None = None) -> AppConfig:
    """Parse and validate a config file (or literal text); None gives defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        if text is not None:
            parser.read_string(text)
        elif path is not None:
            p = Path(path)
            if not p.exists():
                raise ConfigError(f"config file not found: {p}")
            parser.read_string(p.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    values = {s: {k: d for k, (_c, d) in keys.items()} for s, keys in DEFAULTS.items()}
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            conv = DEFAULTS[section][key][0]
            try:
                values[section][key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r} ({exc})") from exc
    return AppConfig(values=values)


def parse_transform_cases(cfg: AppConfig) -> list[tuple[str, GroupSpec]]:
    """Expand 'torus:2:8 su2:8'-style case lists into named specs."""
    section = cfg["transform-check"]
    os_ = section["oversampling"]
    forced = section["allow_undersampled"]
    cases = []
    for token in str(section["cases"]).split():
        parts = token.split(":")
        try:
            if parts[0] == "torus" and len(parts) == 3:
                n, B = int(parts[1]), int(parts[2])
                spec = (_unchecked_spec("torus", B, n=n, oversampling=os_)
                        if forced else GroupSpec.torus(n, B, oversampling=os_))
                name = f"torus{n}_B{B}"
            elif parts[0] == "su2" and len(parts) == 2:
                B = int(parts[1])
                spec = (_unchecked_spec("su2", B, n=3, oversampling=os_)
                        if forced else GroupSpec.su2(B, oversampling=os_))
                name = f"su2_B{B}"
            else:
                raise ValueError(f"bad case token {token!r}")
        except ValueError as exc:
            raise ConfigError(f"transform-check case {token!r}: {exc}") from exc
        cases.append((name, spec))
    if not cases:
        raise ConfigError("transform-check needs at least one case")
    return cases
