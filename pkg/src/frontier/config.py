"""Run configuration: INI-style files parsed into validated RunConfig."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from frontier.errors import ConfigError, DomainError
from frontier.model import CompetitionModel, GradientSpec

_SECTIONS = {
    "model": {"gradient_a", "gradient_b", "s_a", "s_b", "d_a", "d_b"},
    "solver": {"eps", "eps_list", "grid", "tol", "dt_policy", "init",
               "seed"},
    "wave": {"L", "m", "tol_x", "xs"},
    "output": {"directory", "formats"},
}
_FORMATS = {"csv", "svg"}


@dataclass
class RunConfig:
    model: CompetitionModel
    eps: float = 1e-4
    eps_list: Optional[List[float]] = None
    grid: Optional[int] = None          # None means the resolution rule
    tol: float = 1e-8
    dt_policy: str = "safe"
    init: str = "corner"
    seed: int = 0
    wave_L: Optional[float] = None
    wave_m: Optional[int] = None
    tol_x: float = 1e-4
    xs: Optional[List[float]] = None
    out_dir: str = "out"
    formats: Tuple[str, ...] = ("csv", "svg")


def _line_of(text: str, section: str, key: str) -> str:
    """Best-effort line reference for error messages."""
    in_section = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("["):
            in_section = stripped == f"[{section}]"
        elif in_section:
            head = stripped.split("=", 1)[0].split(":", 1)[0].strip()
            if head == key:
                return f"line {lineno}"
    return f"section [{section}]"


def _gradient_from(value: str, where: str) -> GradientSpec:
    parts = value.split()
    try:
        if parts[0] == "linear" and len(parts) == 3:
            return GradientSpec.linear(float(parts[1]), float(parts[2]))
        if parts[0] == "exponential" and len(parts) == 3:
            return GradientSpec.exponential(float(parts[1]),
                                            float(parts[2]))
    except (ValueError, DomainError) as exc:
        raise ConfigError(f"{where}: bad profile {value!r}: {exc}") from exc
    raise ConfigError(
        f"{where}: expected 'linear <intercept> <slope>' or "
        f"'exponential <scale> <rate>', got {value!r}")


class _Reader:
    """Typed access to one section with located error messages."""

    def __init__(self, cp, text, section):
        self.cp = cp
        self.text = text
        self.section = section

    def where(self, key):
        return _line_of(self.text, self.section, key)

    def raw(self, key, default=None):
        if self.cp.has_option(self.section, key):
            return self.cp.get(self.section, key).strip()
        return default

    def typed(self, key, conv, default=None):
        raw = self.raw(key)
        if raw is None:
            return default
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(
                f"{self.where(key)}: bad value for {key!r}: {exc}") from exc

    def choice(self, key, allowed, default):
        val = self.raw(key, default)
        if val not in allowed:
            raise ConfigError(
                f"{self.where(key)}: {key!r} must be one of "
                f"{sorted(allowed)}, got {val!r}")
        return val


def _float_list(raw: str) -> List[float]:
    vals = [float(tok) for tok in raw.split()]
    if not vals:
        raise ValueError("empty list")
    return vals


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate an INI config; any defect raises ConfigError."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                   interpolation=None)
    cp.optionxform = str        # keys are case-sensitive
    try:
        cp.read_string(text, source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc

    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp.options(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(
                    f"{_line_of(text, section, key)}: unknown key "
                    f"{key!r} in [{section}]")
    if not cp.has_section("model"):
        raise ConfigError("missing required section [model]")

    m = _Reader(cp, text, "model")
    for key in ("gradient_a", "gradient_b", "s_a", "s_b"):
        if m.raw(key) is None:
            raise ConfigError(f"[model] is missing required key {key!r}")
    try:
        model = CompetitionModel(
            gradient_a=_gradient_from(m.raw("gradient_a"),
                                      m.where("gradient_a")),
            gradient_b=_gradient_from(m.raw("gradient_b"),
                                      m.where("gradient_b")),
            s_a=m.typed("s_a", float),
            s_b=m.typed("s_b", float),
            d_a=m.typed("d_a", float, 1.0),
            d_b=m.typed("d_b", float, 1.0))
    except DomainError as exc:
        raise ConfigError(f"invalid model: {exc}") from exc

    s = _Reader(cp, text, "solver")
    eps = s.typed("eps", float, 1e-4)
    if eps < 0.0:
        raise ConfigError(f"{s.where('eps')}: eps must be >= 0")
    eps_list = s.typed("eps_list", _float_list)
    grid_raw = s.raw("grid", "auto")
    if grid_raw == "auto":
        grid = None
    else:
        grid = s.typed("grid", int)
        if grid < 3:
            raise ConfigError(f"{s.where('grid')}: grid needs >= 3 nodes")
    tol = s.typed("tol", float, 1e-8)
    dt_policy = s.choice("dt_policy", {"safe", "aggressive"}, "safe")
    init = s.choice("init", {"corner", "ramp"}, "corner")
    seed = s.typed("seed", int, 0)

    w = _Reader(cp, text, "wave")
    wave_L = None if w.raw("L", "auto") == "auto" else w.typed("L", float)
    wave_m = None if w.raw("m", "auto") == "auto" else w.typed("m", int)
    tol_x = w.typed("tol_x", float, 1e-4)
    xs = w.typed("xs", _float_list)

    o = _Reader(cp, text, "output")
    out_dir = o.raw("directory", "out")
    formats_raw = o.raw("formats", "csv svg")
    formats = tuple(formats_raw.split())
    bad = set(formats) - _FORMATS
    if bad:
        raise ConfigError(
            f"{o.where('formats')}: unknown output formats {sorted(bad)}")

    return RunConfig(model=model, eps=eps, eps_list=eps_list, grid=grid,
                     tol=tol, dt_policy=dt_policy, init=init, seed=seed,
                     wave_L=wave_L, wave_m=wave_m, tol_x=tol_x, xs=xs,
                     out_dir=out_dir, formats=formats)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text, source=path)


def _gradient_text(g: GradientSpec) -> str:
    p = g.params
    if g.family == "linear":
        return f"linear {p['intercept']!r} {p['slope']!r}"
    if g.family == "exponential":
        return f"exponential {p['scale']!r} {p['rate']!r}"
    raise ConfigError("tabulated profiles have no config representation")


def serialize_config(cfg: RunConfig) -> str:
    """Canonical INI text; parse_config(serialize_config(c)) == c."""
    model = cfg.model
    lines = [
        "[model]",
        f"gradient_a = {_gradient_text(model.gradient_a)}",
        f"gradient_b = {_gradient_text(model.gradient_b)}",
        f"s_a = {model.s_a!r}",
        f"s_b = {model.s_b!r}",
        f"d_a = {model.d_a!r}",
        f"d_b = {model.d_b!r}",
        "",
        "[solver]",
        f"eps = {cfg.eps!r}",
    ]
    if cfg.eps_list is not None:
        lines.append("eps_list = " + " ".join(repr(e) for e in cfg.eps_list))
    lines.append(f"grid = {'auto' if cfg.grid is None else cfg.grid}")
    lines += [
        f"tol = {cfg.tol!r}",
        f"dt_policy = {cfg.dt_policy}",
        f"init = {cfg.init}",
        f"seed = {cfg.seed}",
        "",
        "[wave]",
        f"L = {'auto' if cfg.wave_L is None else repr(cfg.wave_L)}",
        f"m = {'auto' if cfg.wave_m is None else cfg.wave_m}",
        f"tol_x = {cfg.tol_x!r}",
    ]
    if cfg.xs is not None:
        lines.append("xs = " + " ".join(repr(x) for x in cfg.xs))
    lines += [
        "",
        "[output]",
        f"directory = {cfg.out_dir}",
        "formats = " + " ".join(cfg.formats),
        "",
    ]
    return "\n".join(lines)
