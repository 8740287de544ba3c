"""Config parsing and deterministic report output.

Experiment configs are plain text: ``[section]`` headers with
``key = value`` lines, ``#``/``;`` comments, blank lines ignored.  Every
command declares a schema of sections and typed fields; anything outside
the schema is rejected before dispatch, so a typo never turns into a
silently-defaulted run.

CSV files are UTF-8, comma-separated, LF line endings, with ``#``-prefixed
header comments embedding the fully resolved config, and floats printed at
17 significant digits.  Writes go through a temp file and an atomic rename
so an interrupted run never leaves a half-written artifact, and the bytes
are a pure function of (config, seed, workers): no timestamps, hostnames,
or locale-dependent formatting.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "ConfigError",
    "Field",
    "Section",
    "f_float",
    "f_int",
    "f_str",
    "f_floats",
    "f_ints",
    "parse_config_text",
    "load_config",
    "resolve_config",
    "config_comment_lines",
    "format_cell",
    "write_csv",
    "write_text",
]


class ConfigError(ValueError):
    """Raised for any config problem: unreadable file, syntax error,
    unknown section/key, missing required entry, out-of-range value."""


_REQUIRED = object()


@dataclass(frozen=True)
class Field:
    """One typed config key: a parser from the raw string and an optional
    range check.  A field without a default is required whenever its
    section applies."""

    parse: callable
    default: object = _REQUIRED
    describe: str = ""

    @property
    def required(self) -> bool:
        return self.default is _REQUIRED


@dataclass(frozen=True)
class Section:
    """One config section: named fields plus whether the section header
    itself must be present in the file (fields with defaults may still be
    omitted inside a required section)."""

    fields: dict
    required: bool = False


def _parse_float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise ConfigError(f"not a number: {s!r}")
    if math.isnan(v):
        raise ConfigError("nan is not a valid config value")
    return v


def f_float(lo=None, hi=None, *, lo_open=False, hi_open=False,
            default=_REQUIRED):
    """Float field with an optional (half-)open range constraint."""
    rng = ""
    if lo is not None or hi is not None:
        lb = "(" if lo_open else "["
        rb = ")" if hi_open else "]"
        rng = f" in {lb}{'-inf' if lo is None else lo}, " \
              f"{'inf' if hi is None else hi}{rb}"

    def parse(s: str) -> float:
        v = _parse_float(s)
        bad = ((lo is not None and (v < lo or (lo_open and v == lo)))
               or (hi is not None and (v > hi or (hi_open and v == hi))))
        if bad:
            raise ConfigError(f"value {v:g} outside required range{rng}")
        return v

    return Field(parse, default, f"float{rng}")


def f_int(lo=None, hi=None, default=_REQUIRED):
    """Integer field with an optional inclusive range constraint."""
    rng = f" in [{'-inf' if lo is None else lo}, " \
          f"{'inf' if hi is None else hi}]" \
        if (lo is not None or hi is not None) else ""

    def parse(s: str) -> int:
        try:
            v = int(s)
        except ValueError:
            raise ConfigError(f"not an integer: {s!r}")
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise ConfigError(f"value {v} outside required range{rng}")
        return v

    return Field(parse, default, f"int{rng}")


def f_str(choices=None, default=_REQUIRED):
    """String field, optionally restricted to a fixed set of choices."""

    def parse(s: str) -> str:
        if choices is not None and s not in choices:
            raise ConfigError(
                f"value {s!r} not one of {sorted(choices)}")
        return s

    desc = f"one of {sorted(choices)}" if choices else "string"
    return Field(parse, default, desc)


def f_floats(lo=None, hi=None, *, lo_open=False, hi_open=False,
             default=_REQUIRED):
    """Comma-separated list of floats, each range-checked."""
    one = f_float(lo, hi, lo_open=lo_open, hi_open=hi_open)

    def parse(s: str) -> tuple:
        parts = [p.strip() for p in s.split(",") if p.strip()]
        if not parts:
            raise ConfigError("empty list")
        return tuple(one.parse(p) for p in parts)

    return Field(parse, default, f"comma list of {one.describe}")


def f_ints(lo=None, hi=None, default=_REQUIRED):
    """Comma-separated list of integers, each range-checked."""
    one = f_int(lo, hi)

    def parse(s: str) -> tuple:
        parts = [p.strip() for p in s.split(",") if p.strip()]
        if not parts:
            raise ConfigError("empty list")
        return tuple(one.parse(p) for p in parts)

    return Field(parse, default, f"comma list of {one.describe}")


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def parse_config_text(text: str) -> dict:
    """Parse config text into {section: {key: raw-string}}.

    Strict by construction: duplicate sections or keys, keys outside any
    section, and malformed lines are all errors."""
    out: dict = {}
    current = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"line {ln}: empty section name")
            if name in out:
                raise ConfigError(f"line {ln}: duplicate section [{name}]")
            out[name] = {}
            current = name
            continue
        if "=" not in line:
            raise ConfigError(
                f"line {ln}: expected 'key = value' or '[section]', "
                f"got {line!r}")
        if current is None:
            raise ConfigError(
                f"line {ln}: key outside any [section]")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if not key:
            raise ConfigError(f"line {ln}: empty key")
        if key in out[current]:
            raise ConfigError(
                f"line {ln}: duplicate key {key!r} in [{current}]")
        out[current][key] = val
    return out


def load_config(path) -> dict:
    """Read and parse a config file; any I/O problem is a ConfigError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    return parse_config_text(text)


def resolve_config(raw: dict, schema: dict) -> dict:
    """Validate raw sections against a {section: Section} schema and return
    fully-typed values, defaults filled in.

    Unknown sections and keys are rejected with the list of what is
    allowed; required sections/keys must be present; every value must
    parse and pass its range check."""
    for name in raw:
        if name not in schema:
            raise ConfigError(
                f"unknown section [{name}]; expected sections: "
                f"{sorted(schema)}")
    out: dict = {}
    for name, sec in schema.items():
        present = name in raw
        if sec.required and not present:
            raise ConfigError(f"missing required section [{name}]")
        given = raw.get(name, {})
        for key in given:
            if key not in sec.fields:
                raise ConfigError(
                    f"unknown key {key!r} in [{name}]; allowed keys: "
                    f"{sorted(sec.fields)}")
        vals: dict = {}
        complete = True
        for key, fld in sec.fields.items():
            if key in given:
                try:
                    vals[key] = fld.parse(given[key])
                except ConfigError as exc:
                    raise ConfigError(f"[{name}] {key}: {exc}")
            elif fld.required and present:
                raise ConfigError(
                    f"missing required key {key!r} in [{name}]")
            elif fld.required:
                # whole optional section omitted: leave nothing behind
                complete = False
            else:
                vals[key] = fld.default
        out[name] = vals
        if not complete:
            out.setdefault("_incomplete", set()).add(name)
    # mark which optional sections were actually written
    out["_present"] = frozenset(raw)
    out["_incomplete"] = frozenset(out.get("_incomplete", ()))
    return out


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def format_cell(v) -> str:
    """Deterministic cell formatting: floats at 17 significant digits
    (round-trip exact for doubles), bools as 0/1, None as empty."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def config_comment_lines(command: str, resolved: dict, *, seed: int,
                         workers: int) -> list:
    """Provenance header: the command, run flags, and every resolved
    config value, in schema order.  Everything needed to reproduce the
    file byte for byte (and nothing volatile like timestamps)."""
    lines = [f"steinstable {command}", f"seed = {seed}",
             f"workers = {workers}"]
    skip = resolved.get("_incomplete", frozenset())
    for name, vals in resolved.items():
        if name.startswith("_") or name in skip:
            continue
        for key, v in vals.items():
            if isinstance(v, tuple):
                shown = ",".join(format_cell(x) for x in v)
            else:
                shown = format_cell(v)
            lines.append(f"{name}.{key} = {shown}")
    return lines


def _atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def write_csv(path, columns, rows, comments=()) -> Path:
    """Write a CSV file: '#'-prefixed comment lines, a column-name row,
    then data rows through format_cell.  Atomic (temp + rename), UTF-8,
    LF newlines, csv-quoted only where needed (names with commas)."""
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(columns))
    ncol = len(columns)
    for row in rows:
        cells = [format_cell(v) for v in row]
        if len(cells) != ncol:
            raise ValueError(
                f"row has {len(cells)} cells, header has {ncol}")
        w.writerow(cells)
    path = Path(path)
    _atomic_write_bytes(path, buf.getvalue().encode("utf-8"))
    return path


def write_text(path, text: str) -> Path:
    """Atomic UTF-8 text write (kv parameter files, logs)."""
    path = Path(path)
    _atomic_write_bytes(path, text.encode("utf-8"))
    return path
