"""Reading and writing traces, signals, schedules, bond lists and scenarios.

Trace CSV: header ``timestamp,<metric>...[,x,y]`` then one row per sample.
Schedule file: ``horizon,<H>`` then one ``start,end`` line per bonded interval.
Bond-list file: one ``a,b`` line per bond; a lone name adds an isolated entity.
Blank lines and lines starting with ``#`` are ignored in the line formats.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .bond_fabric import BondSchedule, Molecule
from .errors import IncompatibleTraces, ParseError
from .trace_model import HIGHER, LOWER, Metric, Signal, SloTuple, Trace

PathLike = Union[str, Path]

FIXTURE_PACKAGE = "servicebond.fixtures"


# -- small value parsers --------------------------------------------------

_DURATION = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(ms|s|m|min|h|d)?\s*$")
_UNIT_SECONDS = {None: 1.0, "ms": 1e-3, "s": 1.0, "m": 60.0, "min": 60.0, "h": 3600.0, "d": 86400.0}


def parse_duration(text: str) -> float:
    """Seconds from ``90``, ``15m``, ``1h``, ``24h`` or ``2d``."""
    m = _DURATION.match(str(text))
    if not m:
        raise ParseError(f"bad duration {text!r}")
    return float(m.group(1)) * _UNIT_SECONDS[m.group(2)]


def parse_clock(text: str) -> float:
    """Seconds after midnight for ``HH:MM`` or ``HH:MM:SS``."""
    parts = str(text).strip().split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise ParseError(f"bad clock time {text!r}") from None
    if len(nums) not in (2, 3) or not 0 <= nums[0] <= 24 or not all(0 <= n < 60 for n in nums[1:]):
        raise ParseError(f"bad clock time {text!r}")
    secs = nums[0] * 3600 + nums[1] * 60 + (nums[2] if len(nums) == 3 else 0)
    if secs > 86400:
        raise ParseError(f"clock time {text!r} past 24:00")
    return float(secs)


def parse_clock_interval(text: str) -> tuple:
    """``19:00-22:00`` as seconds; an end at or before the start wraps past midnight."""
    try:
        a, b = str(text).split("-")
    except ValueError:
        raise ParseError(f"bad clock interval {text!r}, expected HH:MM-HH:MM") from None
    start, end = parse_clock(a), parse_clock(b)
    if end <= start:
        end += 86400.0
    return start, end


def daily_intervals(clock_intervals, start: float, end: float) -> tuple:
    """Repeat day-relative intervals over every day touching ``[start, end)``.

    Pieces are clipped to the horizon; pieces that clip to nothing are dropped.
    """
    out = []
    first_day = math.floor(start / 86400.0) - 1
    last_day = math.ceil(end / 86400.0)
    for day in range(first_day, last_day + 1):
        base = day * 86400.0
        for a, b in clock_intervals:
            lo, hi = max(base + a, start), min(base + b, end)
            if hi > lo:
                out.append((lo, hi))
    out.sort()
    merged = []
    for a, b in out:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(b, merged[-1][1]))
        else:
            merged.append((a, b))
    return tuple(merged)


_SLO_ITEM = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*(<=|>=|=)\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([A-Za-z/%]*)\s*$")


def parse_slo(text: str) -> SloTuple:
    """``ds=25mbps,us=3mbps``; ``lat<=40ms`` marks a lower-is-better metric."""
    metrics = []
    for item in str(text).split(","):
        if not item.strip():
            continue
        m = _SLO_ITEM.match(item)
        if not m:
            raise ParseError(f"bad SLO item {item!r}, expected name=value[unit]")
        name, op, value, unit = m.groups()
        metrics.append(Metric(name, float(value), unit, LOWER if op == "<=" else HIGHER))
    if not metrics:
        raise ParseError("empty SLO")
    if len({m.name for m in metrics}) != len(metrics):
        raise ParseError(f"duplicate metric in SLO {text!r}")
    return SloTuple(tuple(metrics))


def _float(cell, line, source, what="value"):
    try:
        v = float(cell)
    except (TypeError, ValueError):
        raise ParseError(f"bad {what} {cell!r}", line, source) from None
    if math.isnan(v):
        raise ParseError(f"NaN {what}", line, source)
    return v


def _read_text(src) -> tuple:
    if isinstance(src, Path) or (isinstance(src, str) and src and "\n" not in src and Path(src).is_file()):
        return Path(src).read_text(), str(src)
    if isinstance(src, str):
        return src, None
    return src.read(), getattr(src, "name", None)


# -- traces ---------------------------------------------------------------

def parse_trace(src, slo: Optional[SloTuple] = None) -> Trace:
    """Parse a trace CSV from a path, a file object or CSV text."""
    text, source = _read_text(src)
    rows = list(csv.reader(io.StringIO(text)))
    lines = [(i + 1, r) for i, r in enumerate(rows) if r and not r[0].lstrip().startswith("#")]
    if not lines:
        raise ParseError("empty trace file", None, source)
    hline, header = lines[0]
    header = [h.strip() for h in header]
    if not header or header[0] != "timestamp":
        raise ParseError("header must start with 'timestamp'", hline, source)
    located = header[-2:] == ["x", "y"]
    names = tuple(header[1:-2] if located else header[1:])
    if not names:
        raise ParseError("trace has no metric columns", hline, source)
    if len(set(names)) != len(names):
        raise ParseError("duplicate metric column", hline, source)
    ts, vals, locs = [], [], []
    for ln, row in lines[1:]:
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", ln, source)
        t = _float(row[0], ln, source, "timestamp")
        if ts and t <= ts[-1]:
            raise ParseError(f"timestamp {t!r} not after {ts[-1]!r}", ln, source)
        ts.append(t)
        cells = row[1:-2] if located else row[1:]
        vals.append([_float(c, ln, source) for c in cells])
        if located:
            locs.append([_float(c, ln, source, "coordinate") for c in row[-2:]])
    if not ts:
        raise ParseError("trace has no samples", None, source)
    return Trace(ts, vals, names, locs if located else None, slo)


def write_trace(trace: Trace, dest=None) -> str:
    """Render ``trace`` as CSV; floats use ``repr`` so parsing is lossless."""
    header = ["timestamp", *trace.names] + (["x", "y"] if trace.locations is not None else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for i, t in enumerate(trace.timestamps):
        row = [repr(float(t))] + [repr(float(v)) for v in trace.values[i]]
        if trace.locations is not None:
            row += [repr(float(c)) for c in trace.locations[i]]
        w.writerow(row)
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text


# -- signals --------------------------------------------------------------

def signal_from_dict(obj: dict) -> Signal:
    """Signal from ``{"names", "starts", "end", "values"[, "locations"]}``
    or ``{"names", "segments": [[t0, t1, [values...]], ...]}``."""
    try:
        names = tuple(obj["names"])
        if "segments" in obj:
            return Signal.from_segments([tuple(s) for s in obj["segments"]], names)
        return Signal(obj["starts"], obj["end"], obj["values"], names, obj.get("locations"))
    except KeyError as exc:
        raise ParseError(f"signal is missing field {exc.args[0]!r}") from None


def signal_to_dict(signal: Signal) -> dict:
    out = {
        "names": list(signal.names),
        "starts": signal.starts.tolist(),
        "end": float(signal.end),
        "values": signal.values.tolist(),
    }
    if signal.locations is not None:
        out["locations"] = signal.locations.tolist()
    return out


def read_signal(src) -> Signal:
    """Signal from a JSON signal file or a trace CSV (held between samples)."""
    path = Path(src)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno, str(path)) from None
        return signal_from_dict(obj)
    return parse_trace(path).to_signal()


def write_signal(signal: Signal, dest=None) -> str:
    text = json.dumps(signal_to_dict(signal), indent=1) + "\n"
    if dest is not None:
        Path(dest).write_text(text)
    return text


# -- schedules and bond lists ---------------------------------------------

def _content_lines(text):
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield i, line


def parse_schedule(src) -> BondSchedule:
    text, source = _read_text(src)
    lines = list(_content_lines(text))
    if not lines:
        raise ParseError("empty schedule file", None, source)
    ln, first = lines[0]
    key, _, value = first.partition(",")
    if key.strip() != "horizon":
        raise ParseError("first line must be 'horizon,<H>'", ln, source)
    horizon = _float(value, ln, source, "horizon")
    if not 0 < horizon < math.inf:
        raise ParseError("horizon must be finite and > 0", ln, source)
    ivs, prev = [], None
    for ln, line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError("expected 'start,end'", ln, source)
        a, b = (_float(p, ln, source, "bound") for p in parts)
        if not 0 <= a < b <= horizon:
            raise ParseError(f"interval [{a}, {b}) not inside [0, {horizon})", ln, source)
        if prev is not None and a < prev[1]:
            raise ParseError(f"interval [{a}, {b}) overlaps or precedes [{prev[0]}, {prev[1]})", ln, source)
        prev = (a, b)
        ivs.append(prev)
    return BondSchedule(horizon, tuple(ivs))


def write_schedule(schedule: BondSchedule, dest=None) -> str:
    lines = [f"horizon,{schedule.horizon!r}"] + [f"{a!r},{b!r}" for a, b in schedule.bonded]
    text = "\n".join(lines) + "\n"
    if dest is not None:
        Path(dest).write_text(text)
    return text


def parse_bond_list(src) -> Molecule:
    text, source = _read_text(src)
    entities, bonds, seen = set(), [], set()
    for ln, line in _content_lines(text):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) == 1 and parts[0]:
            entities.add(parts[0])
            continue
        if len(parts) != 2 or not all(parts):
            raise ParseError("expected 'a,b' or a single entity name", ln, source)
        a, b = parts
        if a == b:
            raise ParseError(f"self-bond on {a!r}", ln, source)
        key = frozenset(parts)
        if key in seen:
            raise ParseError(f"second bond between {a} and {b}", ln, source)
        seen.add(key)
        entities.update(parts)
        bonds.append((a, b))
    return Molecule(frozenset(entities), tuple(bonds))


# -- scenarios and fixtures -----------------------------------------------

def fixture_path(name: str) -> Path:
    """Path of a bundled fixture file, e.g. ``prime_time_failure.csv``."""
    p = resources.files(FIXTURE_PACKAGE).joinpath(name)
    if not p.is_file():
        raise FileNotFoundError(f"no bundled fixture {name!r}")
    return Path(str(p))


def bundled_fixtures() -> list:
    root = resources.files(FIXTURE_PACKAGE)
    return sorted(p.name for p in root.iterdir() if p.is_file() and not p.name.startswith("_"))


def resolve_input(ref: PathLike) -> Path:
    """A filesystem path, else a bundled fixture by file name or stem."""
    p = Path(ref)
    if p.exists():
        return p
    names = bundled_fixtures()
    for cand in (str(ref), f"{ref}.json", f"{ref}.csv", f"{ref}.txt"):
        if cand in names:
            return fixture_path(cand)
    raise FileNotFoundError(f"{ref}: no such file or bundled fixture")


def load_config(ref: PathLike) -> dict:
    path = resolve_input(ref)
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, str(path)) from None
    if not isinstance(cfg, dict):
        raise ParseError("scenario must be a JSON object", None, str(path))
    return cfg


def run_config(cfg: dict, seed: Optional[int] = None):
    """Run an ecosystem or smart-house scenario config; returns its report."""
    from .ecosystem_sim import run, scenario_from_dict
    from .smarthouse import run_smarthouse, smarthouse_from_dict

    try:
        if cfg.get("kind") == "smarthouse":
            return run_smarthouse(smarthouse_from_dict(cfg, seed))
        return run(scenario_from_dict(cfg, seed))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad scenario: {exc}") from None


def load_scenario(ref: PathLike, seed: Optional[int] = None):
    """Typed scenario object for a file or bundled name such as ``smarthouse.default``."""
    from .ecosystem_sim import scenario_from_dict
    from .smarthouse import smarthouse_from_dict

    cfg = load_config(ref)
    if cfg.get("kind") == "smarthouse":
        return smarthouse_from_dict(cfg, seed)
    return scenario_from_dict(cfg, seed)


def reorder_signal(signal: Signal, names) -> Signal:
    """Same signal with metric columns in the order ``names``."""
    names = tuple(names)
    if set(names) != set(signal.names) or len(names) != len(signal.names):
        raise IncompatibleTraces(f"signal metrics {signal.names} do not match {names}")
    idx = [signal.names.index(n) for n in names]
    return Signal(signal.starts, signal.end, np.ascontiguousarray(signal.values[:, idx]), names,
                  signal.locations)
