"""Flat ``key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment. Lists (``domain``,
``fu_locations``) are comma or whitespace separated.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


CASES = ("pulse", "expansion", "sod", "normal_shock")
BOUNDARIES = ("periodic", "neumann", "dirichlet", "specular")


@dataclass
class Config:
    case: str
    p: int
    n_elements: int
    t_final: float
    n_v: int
    n_zeta: int = 1
    domain: tuple[float, float] | None = None
    delta: float | None = None
    kn: float | None = None
    kn_h: float | None = None
    tau: float | None = None
    collision_model: str | None = None
    omega: float | None = None
    mach: float | None = None
    beta: float = 100.0
    smooth_ic: bool = False
    cfl: float = 0.5
    eps_u: float = 1e-15
    eps_zeta: float = 1e-6
    dvm: bool = True
    dvm_iters: int = 2
    init_iters: int = 5
    bc_left: str | None = None
    bc_right: str | None = None
    output_interval: float = 0.0
    fu_locations: list[float] = field(default_factory=list)
    threads: int = 0
    steady_tol: float = 0.0


_INT = ("p", "n_elements", "n_v", "n_zeta", "dvm_iters", "init_iters", "threads",
        "n_r", "n_phi", "n_psi")
_FLOAT = ("t_final", "delta", "kn", "kn_h", "tau", "omega", "mach", "beta", "cfl",
          "eps_u", "eps_zeta", "output_interval", "steady_tol")
_BOOL = ("smooth_ic", "dvm")
_STR = ("case", "collision_model", "bc_left", "bc_right")
_LIST = ("domain", "fu_locations")
REQUIRED = ("case", "p", "n_elements", "t_final", "n_v")


def _convert(key, raw, line):
    try:
        if key in _INT:
            return int(raw)
        if key in _FLOAT:
            return float(raw)
        if key in _BOOL:
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if key in _LIST:
            return [float(v) for v in raw.replace(",", " ").split()]
        return raw
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}", line) from None


def parse_config_text(text: str) -> Config:
    values: dict = {}
    lines: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in _INT + _FLOAT + _BOOL + _STR + _LIST:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        values[key] = _convert(key, raw, lineno)
        lines[key] = lineno

    # polar/spherical counts only make sense as a 1D total here
    n_r = values.pop("n_r", None)
    n_phi, n_psi = values.pop("n_phi", 1), values.pop("n_psi", 1)
    if n_r is not None:
        if n_phi != 1 or n_psi != 1:
            raise ConfigError("the 1D solver uses a one-dimensional velocity grid; "
                              "set n_v (or n_r with n_phi = n_psi = 1)", lines.get("n_phi"))
        if "n_v" in values:
            raise ConfigError("give either n_v or n_r, not both", lines["n_r"])
        values["n_v"] = n_r

    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    def fail(msg, key=None):
        raise ConfigError(msg, lines.get(key))

    if values["case"] not in CASES:
        fail(f"case must be one of {', '.join(CASES)}", "case")
    given = [k for k in ("kn", "kn_h", "tau") if k in values]
    if len(given) != 1:
        fail("exactly one of kn, kn_h, tau is required")
    if values["case"] == "normal_shock" and "mach" not in values:
        fail("normal_shock needs mach")
    if "domain" in values:
        d = values["domain"]
        if len(d) != 2 or not d[0] < d[1]:
            fail("domain needs two increasing numbers", "domain")
        values["domain"] = (d[0], d[1])
    for k in ("bc_left", "bc_right"):
        if k in values and values[k] not in BOUNDARIES:
            fail(f"{k} must be one of {', '.join(BOUNDARIES)}", k)
    if values.get("collision_model", "constant") not in ("constant", "power_law"):
        fail("collision_model must be constant or power_law", "collision_model")
    for k in ("p", "n_elements", "n_v", "n_zeta"):
        if k in values and values[k] < 1:
            fail(f"{k} must be at least 1", k)
    if values["n_v"] % 2:
        fail("n_v must be even", "n_v")
    for k in ("kn", "kn_h", "tau", "cfl", "beta"):
        if k in values and not values[k] > 0.0:
            fail(f"{k} must be positive", k)
    for k in ("t_final", "output_interval", "steady_tol", "threads", "dvm_iters",
              "init_iters"):
        if k in values and values[k] < 0:
            fail(f"{k} must be non-negative", k)
    return Config(**values)


def parse_config(path) -> Config:
    return parse_config_text(Path(path).read_text())


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


def serialize(config: Config) -> str:
    """Canonical text form; ``parse_config_text(serialize(c)) == c``."""
    out = []
    for f in dataclasses.fields(config):
        v = getattr(config, f.name)
        if v is None or (f.name == "fu_locations" and not v):
            continue
        out.append(f"{f.name} = {_fmt(v)}")
    return "\n".join(out) + "\n"
