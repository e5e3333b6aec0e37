"""Experiment configuration files.

Line-based ``section.key = value unit`` text; ``#`` starts a comment.
Dimensioned values must carry a unit suffix and are converted on parse to
the internal units (GHz for the cavity frequency, MHz for rates, tesla,
kelvin, radians).  Tensors are nine numbers in row order (``;`` and ``,``
are accepted as separators) or a single number for an isotropic tensor.
Unknown keys, duplicate keys and missing units are errors.

Example::

    cavity.f_r = 4.4 GHz
    cavity.Q = 568
    site.1.g = 5.9178 0 0.5994; 0 3 0; 0.5994 0 8.8998
    site.1.subclass_axis = 0 0 1
    line.1a.g = 8.37
    line.1a.gamma = 74.9 MHz
    line.1a.g_coll = 4.02 MHz
    sweep.B_start = 0 mT
"""

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .cavity_model import CavityParams, EnsembleTransition
from .errors import ConfigError, SpinresError
from .spin_hamiltonian import InteractionTensor, SpinSystem, c2_partner

UNITS = {
    "frequency_ghz": {"Hz": 1e-9, "kHz": 1e-6, "MHz": 1e-3, "GHz": 1.0},
    "frequency_mhz": {"Hz": 1e-6, "kHz": 1e-3, "MHz": 1.0, "GHz": 1e3},
    "field": {"T": 1.0, "mT": 1e-3, "uT": 1e-6},
    "temperature": {"K": 1.0, "mK": 1e-3},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
    "ramp": {"T/s": 1.0, "mT/s": 1e-3},
    "db": {"dB": 1.0},
    "percent": {"%": 1.0},
    "none": {"": 1.0, "1": 1.0},
}

# key -> (dimension, arity); arity is an int, "tensor", "spin" or "text"
_FIXED_KEYS = {
    "cavity.f_r": ("frequency_ghz", 1),
    "cavity.Q": ("none", 1),
    "cavity.kappa": ("frequency_mhz", 1),
    "sweep.B_start": ("field", 1),
    "sweep.B_stop": ("field", 1),
    "sweep.B_step": ("field", 1),
    "sweep.temperature": ("temperature", 1),
    "sweep.direction": ("none", 3),
    "sweep.drive": ("none", 3),
    "sweep.ramp_rate": ("ramp", 1),
    "sweep.probe_span": ("frequency_mhz", 1),
    "sweep.probe_points": ("none", 1),
    "sample.doping": ("percent", 1),
    "output.dir": ("none", "text"),
    "output.db_offset": ("db", 1),
}
_SITE_KEYS = {
    "g": ("none", "tensor"),
    "S": ("none", "spin"),
    "I": ("none", "spin"),
    "A": ("frequency_mhz", "tensor"),
    "Q": ("frequency_mhz", "tensor"),
    "subclass_axis": ("none", 3),
}
_LINE_KEYS = {
    "g": ("none", 1),
    "gamma": ("frequency_mhz", 1),
    "g_coll": ("frequency_mhz", 1),
}
SECTIONS = ("cavity", "site", "line", "sweep", "sample", "output")

_LINE_RE = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*=\s*(.*?)\s*$")
_NUM_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


@dataclass(frozen=True)
class SiteConfig:
    name: str
    system: SpinSystem
    subclass_axis: np.ndarray = None

    def subclasses(self):
        """The site's spin systems: ``<name>a`` and, with a C2 axis, ``<name>b``."""
        a = SpinSystem(self.system.g, self.system.S, self.system.I, self.system.A,
                       self.system.Q, label=f"{self.name}a")
        if self.subclass_axis is None:
            return [a]
        return [a, c2_partner(a, self.subclass_axis, label=f"{self.name}b")]


@dataclass(frozen=True)
class SweepConfig:
    B_start: float = 0.0
    B_stop: float = 0.2
    B_step: float = 1e-4
    temperature: float = None
    direction: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    drive: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    ramp_rate: float = None
    probe_span: float = None
    probe_points: int = 401

    def grid(self):
        """Field grid (T), endpoints included; one point when start == stop."""
        if self.B_stop < self.B_start:
            raise ConfigError("sweep.B_stop must not be below sweep.B_start")
        if self.B_stop == self.B_start:
            return np.array([self.B_start])
        n = int(round((self.B_stop - self.B_start) / self.B_step))
        return self.B_start + self.B_step * np.arange(n + 1)


@dataclass(frozen=True)
class ExperimentConfig:
    cavity: CavityParams
    sites: dict
    lines: tuple
    sweep: SweepConfig
    output_dir: str = None
    db_offset: float = 0.0
    doping: float = None
    sections: frozenset = frozenset()
    path: str = None

    def require(self, *names):
        for name in names:
            if name not in self.sections:
                raise ConfigError(f"missing required section '{name}'", path=self.path)

    def spin_systems(self):
        return [s for site in self.sites.values() for s in site.subclasses()]


def _numbers(text):
    toks = [t for t in re.split(r"[\s,;]+", text.strip()) if t]
    nums = []
    unit = ""
    for k, tok in enumerate(toks):
        if _NUM_RE.match(tok):
            if unit:
                return None, None
            nums.append(float(tok))
        elif k == len(toks) - 1 and nums:
            unit = tok
        else:
            # allow "4.4GHz"
            m = re.match(r"^([+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)(\S+)$", tok)
            if m and k == len(toks) - 1:
                nums.append(float(m.group(1)))
                unit = m.group(2)
            else:
                return None, None
    return nums, unit


def _parse_value(key, dim, arity, raw, lineno, col, path):
    def fail(msg):
        raise ConfigError(f"{key}: {msg}", line=lineno, column=col, path=path)

    if arity == "text":
        if not raw:
            fail("empty value")
        return raw
    if arity == "spin":
        if not re.match(r"^\d+(/2)?$", raw):
            fail(f"spin must look like 0, 1, 1/2, 7/2..., got {raw!r}")
        return raw
    nums, unit = _numbers(raw)
    if nums is None or not nums:
        fail(f"cannot parse numeric value {raw!r}")
    if not all(math.isfinite(x) for x in nums):
        fail("non-finite value")
    units = UNITS[dim]
    if unit not in units:
        if dim != "none" and unit == "":
            fail(f"missing unit; expected one of {', '.join(units)}")
        fail(f"unit {unit!r} not valid here; expected one of {', '.join(u for u in units if u) or 'none'}")
    scale = units[unit]
    nums = [x * scale for x in nums]
    if arity == "tensor":
        if len(nums) == 1:
            return nums[0] * np.eye(3)
        if len(nums) != 9:
            fail(f"tensor needs 1 or 9 numbers, got {len(nums)}")
        return np.array(nums).reshape(3, 3)
    if len(nums) != arity:
        fail(f"expected {arity} number(s), got {len(nums)}")
    return nums[0] if arity == 1 else np.array(nums)


def _lookup(key):
    if key in _FIXED_KEYS:
        return _FIXED_KEYS[key]
    parts = key.split(".")
    if len(parts) == 3 and parts[0] == "site" and parts[2] in _SITE_KEYS:
        return _SITE_KEYS[parts[2]]
    if len(parts) == 3 and parts[0] == "line" and parts[2] in _LINE_KEYS:
        return _LINE_KEYS[parts[2]]
    return None


def parse_config(text, path=None):
    """Parse config text into an :class:`ExperimentConfig`."""
    values = {}
    where = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0]
        if not stripped.strip():
            continue
        m = _LINE_RE.match(stripped)
        if not m:
            raise ConfigError("expected 'section.key = value'", line=lineno,
                              column=len(line) - len(line.lstrip()) + 1, path=path)
        key, raw = m.group(1), m.group(2)
        kcol = stripped.index(key) + 1
        vcol = m.start(2) + 1
        spec = _lookup(key)
        if spec is None:
            raise ConfigError(f"unknown key '{key}'", line=lineno, column=kcol, path=path)
        if key in values:
            raise ConfigError(f"duplicate key '{key}' (first set on line {where[key]})",
                              line=lineno, column=kcol, path=path)
        values[key] = _parse_value(key, spec[0], spec[1], raw, lineno, vcol, path)
        where[key] = lineno
    return _build(values, where, path)


def _build(values, where, path):
    sections = frozenset(k.split(".", 1)[0] for k in values)

    def err(key, msg):
        raise ConfigError(f"{key}: {msg}", line=where.get(key), column=1, path=path)

    if "cavity" not in sections:
        raise ConfigError("missing required section 'cavity'", path=path)
    if "cavity.f_r" not in values:
        raise ConfigError("missing required key 'cavity.f_r'", path=path)
    try:
        cavity = CavityParams(values["cavity.f_r"], values.get("cavity.Q"), values.get("cavity.kappa"))
    except SpinresError as e:
        err("cavity.f_r", str(e))

    sites = {}
    site_names = list(dict.fromkeys(k.split(".")[1] for k in values if k.startswith("site.")))
    for name in site_names:
        pre = f"site.{name}."
        if pre + "g" not in values:
            raise ConfigError(f"site '{name}' has no g tensor ({pre}g)", path=path,
                              line=where[next(k for k in values if k.startswith(pre))], column=1)
        try:
            system = SpinSystem(
                g=InteractionTensor(values[pre + "g"], "zeeman_g"),
                S=values.get(pre + "S", "1/2"),
                I=values.get(pre + "I", "0"),
                A=None if pre + "A" not in values else InteractionTensor(values[pre + "A"], "hyperfine_A"),
                Q=None if pre + "Q" not in values else InteractionTensor(values[pre + "Q"], "quadrupole_Q"),
                label=name,
            )
        except SpinresError as e:
            err(pre + "g", str(e))
        axis = values.get(pre + "subclass_axis")
        if axis is not None:
            norm = np.linalg.norm(axis)
            if norm == 0:
                err(pre + "subclass_axis", "axis must be nonzero")
            axis = axis / norm
        sites[name] = SiteConfig(name, system, axis)

    lines = []
    line_names = list(dict.fromkeys(k.split(".")[1] for k in values if k.startswith("line.")))
    for name in line_names:
        pre = f"line.{name}."
        missing = [f for f in _LINE_KEYS if pre + f not in values]
        if missing:
            raise ConfigError(f"line '{name}' is missing {', '.join(pre + f for f in missing)}",
                              path=path, line=where[next(k for k in values if k.startswith(pre))], column=1)
        try:
            lines.append(EnsembleTransition(name, values[pre + "g"], values[pre + "gamma"], values[pre + "g_coll"]))
        except SpinresError as e:
            err(pre + "g", str(e))

    sw = {}
    for key in ("B_start", "B_stop", "B_step", "temperature", "ramp_rate", "probe_span"):
        if f"sweep.{key}" in values:
            sw[key] = values[f"sweep.{key}"]
    if "sweep.probe_points" in values:
        n = values["sweep.probe_points"]
        if n != int(n) or n < 3:
            err("sweep.probe_points", "must be an integer >= 3")
        sw["probe_points"] = int(n)
    for key in ("direction", "drive"):
        if f"sweep.{key}" in values:
            v = values[f"sweep.{key}"]
            norm = np.linalg.norm(v)
            if norm == 0:
                err(f"sweep.{key}", "vector must be nonzero")
            sw[key] = v / norm
    if sw.get("B_step", 1.0) <= 0:
        err("sweep.B_step", "step must be positive")
    if sw.get("B_start", 0.0) < 0:
        err("sweep.B_start", "field must be non-negative")
    if sw.get("temperature", 1.0) <= 0:
        err("sweep.temperature", "temperature must be positive")
    sweep = SweepConfig(**sw)
    sweep.grid()

    return ExperimentConfig(
        cavity=cavity,
        sites=sites,
        lines=tuple(lines),
        sweep=sweep,
        output_dir=values.get("output.dir"),
        db_offset=values.get("output.db_offset", 0.0),
        doping=values.get("sample.doping"),
        sections=sections,
        path=path,
    )


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror or e}", path=str(path)) from None
    return parse_config(text, path=str(path))


def example_config_text():
    """Text of the bundled Er:Y2SiO5 example configuration."""
    return resources.files("spinres").joinpath("data/er_yso.cfg").read_text(encoding="utf-8")


def example_config():
    return parse_config(example_config_text(), path="<example er_yso.cfg>")
