"""Run configuration: TOML parsing, validation and round-trip echo.

A duct run is described by three tables:

    [eos]       law = "vdw_like" | "polytropic" plus its parameters
    [flow]      u0, tau0 (or mach0 instead of u0)
    [duct]      theta_plus, theta_minus (radians)
    [numerics]  n_lattice, n_cross, max_cycles, tau_cap, tolerances

Unknown keys are rejected so typos cannot silently fall back to
defaults.  The manifest of every run embeds the config as TOML text that
re-parses to an equal configuration.
"""

import math

import tomli

from .eos import make_vdw_like, make_polytropic, DEFAULT_VDW_PARAMS
from .kinematics import BernoulliContext
from .pipeline import DuctParams

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_config_text",
           "config_to_toml"]


class ConfigError(ValueError):
    pass


_EOS_KEYS = {"law", "K", "gamma", "a", "b", "tau_min"}
_FLOW_KEYS = {"u0", "mach0", "tau0"}
_DUCT_KEYS = {"theta_plus", "theta_minus"}
_NUM_KEYS = {"n_lattice", "n_cross", "max_cycles", "tau_cap",
             "strength_tol", "sonic_band"}

_DEFAULT_NUMERICS = {
    "n_lattice": 40,
    "n_cross": 12,
    "max_cycles": 2,
    "tau_cap": 1e6,
    "strength_tol": 1e-6,
    "sonic_band": 1e-7,
}


class RunConfig:
    """Validated run configuration with defaults applied."""

    def __init__(self, eos_table, flow_table, duct_table, numerics_table):
        self.eos_table = eos_table
        self.flow_table = flow_table
        self.duct_table = duct_table
        self.numerics_table = numerics_table

    def __eq__(self, other):
        return (self.eos_table == other.eos_table
                and self.flow_table == other.flow_table
                and self.duct_table == other.duct_table
                and self.numerics_table == other.numerics_table)

    def build_eos(self):
        law = self.eos_table["law"]
        prm = {k: v for k, v in self.eos_table.items() if k != "law"}
        if law == "vdw_like":
            return make_vdw_like(prm or None)
        if law == "polytropic":
            return make_polytropic(prm.get("gamma", 1.4),
                                   prm.get("K", 1.0))
        raise ConfigError(f"unknown equation-of-state law {law!r}")

    def build_context(self, eos=None):
        eos = eos or self.build_eos()
        tau0 = self.flow_table["tau0"]
        if "u0" in self.flow_table:
            u0 = self.flow_table["u0"]
        else:
            c0 = tau0 * math.sqrt(-eos.dp(tau0))
            u0 = self.flow_table["mach0"] * c0
        return BernoulliContext(eos, u0, tau0,
                                tau_cap=self.numerics_table["tau_cap"])

    def build_params(self):
        n = self.numerics_table
        return DuctParams(self.duct_table["theta_plus"],
                          self.duct_table["theta_minus"],
                          n_lattice=n["n_lattice"], n_cross=n["n_cross"],
                          max_cycles=n["max_cycles"],
                          strength_tol=n["strength_tol"])

    def as_tables(self):
        return {"eos": dict(self.eos_table), "flow": dict(self.flow_table),
                "duct": dict(self.duct_table),
                "numerics": dict(self.numerics_table)}


def _check_keys(table, allowed, section):
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in [{section}]; allowed: "
            f"{sorted(allowed)}")


def parse_config_text(text):
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as err:
        raise ConfigError(f"config parse error: {err}") from err
    unknown = set(raw) - {"eos", "flow", "duct", "numerics"}
    if unknown:
        raise ConfigError(f"unknown section(s) {sorted(unknown)}")

    eos_table = dict(raw.get("eos", {}))
    eos_table.setdefault("law", "vdw_like")
    _check_keys(eos_table, _EOS_KEYS, "eos")
    if eos_table["law"] == "vdw_like":
        for k, v in DEFAULT_VDW_PARAMS.items():
            eos_table.setdefault(k, v)

    flow_table = dict(raw.get("flow", {}))
    _check_keys(flow_table, _FLOW_KEYS, "flow")
    if "tau0" not in flow_table:
        raise ConfigError("[flow] must set tau0")
    if ("u0" in flow_table) == ("mach0" in flow_table):
        raise ConfigError("[flow] must set exactly one of u0 or mach0")

    duct_table = dict(raw.get("duct", {}))
    _check_keys(duct_table, _DUCT_KEYS, "duct")
    for k in ("theta_plus", "theta_minus"):
        if k not in duct_table:
            raise ConfigError(f"[duct] must set {k}")
    if not 0 < duct_table["theta_plus"] < math.pi / 2:
        raise ConfigError("theta_plus must lie in (0, pi/2)")
    if not -math.pi / 2 < duct_table["theta_minus"] < 0:
        raise ConfigError("theta_minus must lie in (-pi/2, 0)")

    numerics_table = dict(raw.get("numerics", {}))
    _check_keys(numerics_table, _NUM_KEYS, "numerics")
    for k, v in _DEFAULT_NUMERICS.items():
        numerics_table.setdefault(k, v)

    return RunConfig(eos_table, flow_table, duct_table, numerics_table)


def parse_config(path):
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    return parse_config_text(text)


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def config_to_toml(cfg):
    """Flat two-level TOML echo that re-parses to an equal config."""
    lines = []
    for section, table in cfg.as_tables().items():
        lines.append(f"[{section}]")
        for k, v in table.items():
            lines.append(f"{k} = {_toml_value(v)}")
        lines.append("")
    return "\n".join(lines)
