"""Experiment configuration: INI files with typed sections, overridable by flags.

Example::

    [field]
    grid = uniform          ; uniform | sinh
    K = 4.0
    count = 8
    mass = 1.0

    [form_factor]
    family = wqed           ; flat | wqed | gaussian | zero | tabulated
    x0 = 0.0

    [truncation]
    n_max = 3

    [model]
    lambda = 0.5
    omega_e = 1.5

    [experiment]
    z = 1+1j, -0.5+0.25j
    seed = 0
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import field_model as fm

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_complex"]


class ConfigError(ValueError):
    pass


SCHEMA = {
    "field": {"grid": str, "K": float, "count": int, "mass": float, "scale": float},
    "form_factor": {"family": str, "value": float, "x0": float, "strength": float,
                    "width": float, "csv": str, "declared_s": float,
                    "tail_exponent": float, "corrupt_adjoint": bool},
    "truncation": {"n_max": int},
    "model": {"lambda": float, "omega_e": float, "omega_e_tilde": float,
              "kind": str},
    "experiment": {"z": "complex_list", "seed": int, "trials": int, "s": "float_list",
                   "r": float, "tolerance": float, "target": float,
                   "cutoffs": "float_list", "kind": str, "n_growth": int,
                   "settings": "pair_list", "expect_norm": float,
                   "expect_norm_s": float, "expect_tol": float,
                   "re_min": float, "re_max": float, "re_count": int,
                   "im": "float_list", "negative_control": bool,
                   "growth": float},
}

DEFAULTS = {
    "field": {"grid": "uniform", "K": 4.0, "count": 8, "mass": 1.0, "scale": 1.0},
    "form_factor": {"family": "wqed", "value": 1.0, "x0": 0.0, "strength": 1.0,
                    "width": 1.0, "csv": "", "declared_s": 0.0,
                    "tail_exponent": math.inf, "corrupt_adjoint": False},
    "truncation": {"n_max": 3},
    "model": {"lambda": 0.5, "omega_e": 1.5, "omega_e_tilde": 1.0, "kind": "plain"},
    "experiment": {"z": [1 + 1j], "seed": 0, "trials": 1000, "s": [1.0, 2.0],
                   "r": math.nan, "tolerance": 1e-10, "target": 1e-3,
                   "cutoffs": [1.0, 2.0, 3.0, 3.9], "kind": "plain",
                   "n_growth": 64, "settings": [(0.5, 0.3)],
                   "expect_norm": math.nan, "expect_norm_s": 2.0,
                   "expect_tol": 1e-6, "re_min": -2.0, "re_max": 3.0,
                   "re_count": 11, "im": [0.1, 1.0], "negative_control": False,
                   "growth": 10.0},
}


def parse_complex(text: str) -> complex:
    """Parse ``1+1j``, ``-0.5+0.25i``, ``2``, ``3j`` (spaces allowed)."""
    t = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise ConfigError(f"cannot read {text!r} as a complex number") from None


def _convert(kind, raw: str):
    if kind is str:
        return raw.strip()
    if kind is bool:
        v = raw.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if kind in (int, float):
        try:
            return kind(raw.strip())
        except ValueError:
            raise ConfigError(f"expected {kind.__name__}, got {raw!r}") from None
    parts = [p for p in re.split(r"[,;]", raw) if p.strip()]
    if kind == "complex_list":
        return [parse_complex(p) for p in parts]
    if kind == "float_list":
        try:
            return [float(p) for p in parts]
        except ValueError:
            raise ConfigError(f"expected a list of numbers, got {raw!r}") from None
    if kind == "pair_list":
        out = []
        for p in parts:
            bits = p.split(":")
            if len(bits) != 2:
                raise ConfigError(f"expected 'omega_e:lambda' pairs, got {p!r}")
            out.append((float(bits[0]), float(bits[1])))
        return out
    raise AssertionError(kind)


def _line_of(text: str, section: str, key: str) -> Optional[int]:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.I):
            return i
    return None


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)
    source: str = "<defaults>"

    def get(self, section: str, key: str):
        return self.values[section][key]

    def set(self, section: str, key: str, value):
        self.values[section][key] = value

    def as_dict(self) -> dict:
        return {s: dict(v) for s, v in self.values.items()}

    # builders ------------------------------------------------------------ #

    def field_model(self) -> fm.FieldModel:
        g = self.values["field"]
        disp = fm.klein_gordon(g["mass"])
        if g["grid"] == "uniform":
            return fm.FieldModel.uniform(g["K"], g["count"], disp)
        if g["grid"] == "sinh":
            return fm.FieldModel.sinh(g["K"], g["count"], disp, scale=g["scale"])
        raise ConfigError(f"[field] grid must be 'uniform' or 'sinh', got {g['grid']!r}")

    def form_factor(self, model: Optional[fm.FieldModel] = None) -> fm.FormFactor:
        model = model or self.field_model()
        p = self.values["form_factor"]
        fam = p["family"]
        if fam == "flat":
            return fm.flat(model, p["value"])
        if fam == "wqed":
            return fm.wqed(model, x0=p["x0"], strength=p["strength"])
        if fam == "gaussian":
            return fm.gaussian(model, width=p["width"], strength=p["strength"])
        if fam == "zero":
            return fm.zero(model)
        if fam == "tabulated":
            if not p["csv"]:
                raise ConfigError("[form_factor] tabulated family needs csv = PATH")
            tail = (None if math.isinf(p["tail_exponent"])
                    else fm.TailDescriptor(p["tail_exponent"]))
            return fm.load_tabulated_csv(p["csv"], model, declared_s=p["declared_s"],
                                         tail=tail)
        raise ConfigError(f"[form_factor] unknown family {fam!r}")


def load_config(path: Optional[str] = None) -> ExperimentConfig:
    """Defaults overlaid with an INI file; errors name the file, line and key."""
    values = {s: dict(v) for s, v in DEFAULTS.items()}
    if path is None:
        return ExperimentConfig(values)
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section in parser.sections():
        if section not in SCHEMA:
            line = _line_of_section(text, section)
            raise ConfigError(f"{path}:{line}: unknown section [{section}]")
        for key, raw in parser.items(section):
            kind = SCHEMA[section].get(key)
            line = _line_of(text, section, key)
            if kind is None:
                raise ConfigError(f"{path}:{line}: unknown key {key!r} in [{section}]")
            try:
                values[section][key] = _convert(kind, raw)
            except ConfigError as exc:
                raise ConfigError(f"{path}:{line}: [{section}] {key}: {exc}") from None
    return ExperimentConfig(values, str(path))


def _line_of_section(text: str, section: str) -> Optional[int]:
    for i, line in enumerate(text.splitlines(), 1):
        if line.strip() == f"[{section}]":
            return i
    return None
