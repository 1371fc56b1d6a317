"""Result bundles and deterministic JSON / CSV emitters.

Floats are written with 17 significant digits, which round-trips every
double exactly. Non-finite values become the strings ``"inf"``, ``"-inf"``
and ``"nan"``; :func:`load_json` maps them back. Data files never contain
timestamps, so identical inputs give byte-identical files; wall-clock
metadata goes to a separate ``run_meta.json``.

CSV layouts::

    profile   x1,cross_index,value
    decay     n,window_norm
"""
from __future__ import annotations

import csv
import datetime as _dt
import io as _io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PROFILE_COLUMNS = ("x1", "cross_index", "value")
DECAY_COLUMNS = ("n", "window_norm")
_SENTINELS = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = format(x, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        s = format_float(obj)
        return s if math.isfinite(float(obj)) else json.dumps(s)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def _restore(obj):
    if isinstance(obj, dict):
        return {k: _restore(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_restore(v) for v in obj]
    if isinstance(obj, str) and obj in _SENTINELS:
        return _SENTINELS[obj]
    return obj


def loads(text: str):
    return _restore(json.loads(text))


def _write(path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def load_json(path):
    try:
        return loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read {path}: {exc.strerror}") from exc


@dataclass
class CsvTable:
    columns: tuple
    rows: list = field(default_factory=list)

    def render(self) -> str:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
        return buf.getvalue()


def profile_table(x1, cross_index, values) -> CsvTable:
    rows = [(float(x), int(j), float(v)) for x, j, v in zip(x1, cross_index, values)]
    return CsvTable(PROFILE_COLUMNS, rows)


def decay_table(windows) -> CsvTable:
    return CsvTable(DECAY_COLUMNS, [(int(n), float(v)) for n, v in windows])


def emit_csv(table: CsvTable, path) -> None:
    _write(path, table.render())


def emit_json(bundle, path) -> None:
    data = bundle.to_dict() if hasattr(bundle, "to_dict") else bundle
    _write(path, dumps(data))


@dataclass
class ResultBundle:
    """Everything a ``solve`` run reports, minus wall-clock metadata."""

    config_hash: str
    drifts: dict
    regime: dict
    convergence: list
    limits: dict
    compatibility: dict | None
    flags: list
    profile: CsvTable
    decay: dict = field(default_factory=dict)  # side -> CsvTable
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "drifts": self.drifts,
            "regime": self.regime,
            "convergence": self.convergence,
            "limits": self.limits,
            "compatibility": self.compatibility,
            "flags": list(self.flags),
            "extra": self.extra,
            "profile": {c: [r[i] for r in self.profile.rows] for i, c in enumerate(self.profile.columns)},
            "decay": {s: [list(r) for r in t.rows] for s, t in self.decay.items()},
        }

    def write(self, out_dir, stem: str = "result") -> None:
        out = Path(out_dir)
        emit_json(self, out / f"{stem}.json")
        emit_csv(self.profile, out / "profile.csv")
        for side, table in self.decay.items():
            emit_csv(table, out / f"decay_{side}.csv")


def write_run_meta(out_dir, config_hash: str, command: str, started: _dt.datetime) -> None:
    finished = _dt.datetime.now(_dt.timezone.utc)
    meta = {
        "config_hash": config_hash,
        "command": command,
        "started": started.isoformat(),
        "finished": finished.isoformat(),
        "elapsed_seconds": (finished - started).total_seconds(),
    }
    _write(Path(out_dir) / "run_meta.json", dumps(meta))
