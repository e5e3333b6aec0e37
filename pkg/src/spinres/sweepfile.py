"""Sweep CSV files.

A file starts with ``# key=value`` header lines and continues with
comma-separated numeric rows.  ``schema`` is mandatory and selects the
columns:

========  ==========================  ======================================
schema    columns                     unit keys (defaults)
========  ==========================  ======================================
fwhm      ``B,fwhm[,sigma]``          field_unit (T), fwhm_unit (MHz)
s21       ``B,f,mag_dB,phase_rad``    field_unit (T), f_unit (GHz)
thermal   ``T,g_coll``                temperature_unit (K), g_coll_unit (MHz)
========  ==========================  ======================================

Numbers are written as the shortest decimal that round-trips
(``repr(float)``), and values are kept in file units in memory, so
write -> read -> write reproduces the file byte for byte.
"""

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, OutputError, SchemaError
from .fitting import FieldSweep
from .thermal import ThermalPoint

SCHEMAS = {
    "fwhm": (("B", "fwhm"), ("sigma",)),
    "s21": (("B", "f", "mag_dB", "phase_rad"), ()),
    "thermal": (("T", "g_coll"), ()),
}
_TO_TESLA = {"T": 1.0, "mT": 1e-3, "uT": 1e-6}
_TO_MHZ = {"Hz": 1e-6, "kHz": 1e-3, "MHz": 1.0, "GHz": 1e3}
_TO_GHZ = {"Hz": 1e-9, "kHz": 1e-6, "MHz": 1e-3, "GHz": 1.0}
_TO_KELVIN = {"K": 1.0, "mK": 1e-3}


def fmt(x):
    """Shortest round-trip decimal for a float."""
    x = float(x)
    if x == 0.0:
        return "0.0"
    return repr(x)


@dataclass
class SweepFile:
    schema: str
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.schema not in SCHEMAS:
            raise SchemaError(f"unknown schema {self.schema!r}; expected one of {', '.join(SCHEMAS)}")
        self.data = np.atleast_2d(np.asarray(self.data, dtype=float))
        req, opt = SCHEMAS[self.schema]
        if self.data.shape[1] not in (len(req), len(req) + len(opt)):
            raise SchemaError(f"schema {self.schema} expects columns {','.join(req + opt)}")
        self.meta = {"schema": self.schema, **{k: v for k, v in self.meta.items() if k != "schema"}}

    def _unit(self, key, table, default):
        u = self.meta.get(key, default)
        if u not in table:
            raise DataError(f"unsupported {key} {u!r}; expected one of {', '.join(table)}")
        return table[u]

    def require(self, schema):
        if self.schema != schema:
            raise SchemaError(f"expected a schema={schema} file, got schema={self.schema}")

    def to_field_sweep(self):
        self.require("fwhm")
        b = self.data[:, 0] * self._unit("field_unit", _TO_TESLA, "T")
        scale = self._unit("fwhm_unit", _TO_MHZ, "MHz")
        y = self.data[:, 1] * scale
        sigma = self.data[:, 2] * scale if self.data.shape[1] == 3 else None
        return FieldSweep(b, y, sigma, meta=dict(self.meta))

    def to_thermal_points(self):
        self.require("thermal")
        t = self._unit("temperature_unit", _TO_KELVIN, "K")
        g = self._unit("g_coll_unit", _TO_MHZ, "MHz")
        return [ThermalPoint(float(r[0]) * t, float(r[1]) * g) for r in self.data]

    def s21_columns(self):
        """(B in T, f in GHz, magnitude dB, phase rad)."""
        self.require("s21")
        return (
            self.data[:, 0] * self._unit("field_unit", _TO_TESLA, "T"),
            self.data[:, 1] * self._unit("f_unit", _TO_GHZ, "GHz"),
            self.data[:, 2],
            self.data[:, 3],
        )

    def f_r_ghz(self):
        """Cavity frequency from the ``f_r`` header (e.g. ``4.4 GHz``), or None."""
        raw = self.meta.get("f_r")
        if raw is None:
            return None
        parts = raw.split()
        try:
            value = float(parts[0])
            unit = parts[1] if len(parts) > 1 else "GHz"
            return value * _TO_GHZ[unit]
        except (ValueError, KeyError, IndexError):
            raise DataError(f"cannot parse header f_r={raw!r}") from None

    @classmethod
    def from_field_sweep(cls, sweep, meta=None, field_unit="T"):
        cols = [sweep.field / _TO_TESLA[field_unit], sweep.fwhm]
        if sweep.sigma is not None:
            cols.append(sweep.sigma)
        m = {"field_unit": field_unit, "fwhm_unit": "MHz", **(meta or {})}
        return cls("fwhm", np.column_stack(cols), m)

    def format(self):
        out = io.StringIO()
        for k, v in self.meta.items():
            out.write(f"# {k}={v}\n")
        for row in self.data:
            out.write(",".join(fmt(x) for x in row))
            out.write("\n")
        return out.getvalue()


def parse_sweep_file(text, source="<sweep>"):
    meta = {}
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            if rows:
                raise DataError(f"{source}:{lineno}: header line after data rows")
            body = s[1:].strip()
            if "=" not in body:
                continue  # free comment
            k, v = body.split("=", 1)
            k, v = k.strip(), v.strip()
            if k in meta:
                raise DataError(f"{source}:{lineno}: duplicate header key {k!r}")
            meta[k] = v
            continue
        fields = [f.strip() for f in s.split(",")]
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            raise DataError(f"{source}:{lineno}: non-numeric field in {s!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise DataError(f"{source}:{lineno}: non-finite value in {s!r}")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise DataError(f"{source}:{lineno}: expected {width} columns, got {len(vals)}")
        rows.append(vals)
    if "schema" not in meta:
        raise SchemaError(f"{source}: header has no schema=... line")
    if not rows:
        raise DataError(f"{source}: no data rows")
    schema = meta.pop("schema")
    return SweepFile(schema, np.array(rows), meta)


def read_sweep_file(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise OutputError(f"cannot read {path}: {e.strerror or e}") from None
    return parse_sweep_file(text, source=str(path))


def write_text(path, text):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e.strerror or e}") from None
    return path


def write_sweep_file(path, sweep_file):
    return write_text(path, sweep_file.format())
