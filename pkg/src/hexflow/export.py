"""Trajectory files (CSV and JSON), run manifests and long-format plot data."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .hexgeom import side_lengths_from_s
from .lattice import SQRT3

SCHEMA_VERSION = 1

SIDE_COLUMNS = (
    [f"s{i}" for i in range(1, 7)] + [f"L{i}" for i in range(1, 7)] + [f"N{i}" for i in range(1, 7)]
)
DISCRETE_HEADER = ["k", "t"] + SIDE_COLUMNS + ["tie_mask", "perimeter"]
EVENT_HEADER = ["event_index", "t"] + SIDE_COLUMNS + ["tie_mask", "perimeter"]


def fmt(x) -> str:
    """Shortest round-trip text for a number; integers stay integers."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def _anisotropic_perimeter(L) -> float:
    return float(2.0 / SQRT3 * np.sum(L))


# discrete trajectories -----------------------------------------------------

def discrete_rows(traj):
    for r in traj.records:
        yield [r.k, r.t, *r.s, *r.L, *r.N, r.tie_mask, r.perimeter]


def discrete_payload(traj) -> dict:
    return {
        "kind": "discrete",
        "eps": traj.eps,
        "gamma": traj.gamma,
        "terminal": str(traj.terminal),
        "columns": DISCRETE_HEADER,
        "records": [
            {
                "k": r.k, "t": r.t, "s": list(r.s), "L": list(r.L), "N": list(r.N),
                "tie_mask": r.tie_mask, "perimeter": r.perimeter,
                "step_energy": None if math.isnan(r.step_energy) else r.step_energy,
            }
            for r in traj.records
        ],
    }


# limit trajectories ---------------------------------------------------------

def ode_rows(traj):
    for j, (t, s) in enumerate(zip(traj.t, traj.s)):
        L = side_lengths_from_s(s)
        lev = traj.levels[j] if j < len(traj.levels) else traj.levels[-1] if traj.levels else (0,) * 6
        plateau = 0
        yield [j, t, *s, *np.maximum(L, 0.0), *[int(v) if float(v).is_integer() else float(v) for v in lev],
               plateau, _anisotropic_perimeter(np.maximum(L, 0.0))]


def ode_payload(traj) -> dict:
    rows = list(ode_rows(traj))
    return {
        "kind": "ode",
        "gamma": traj.gamma,
        "terminal": traj.terminal,
        "extinction_time": None if not math.isfinite(traj.extinction_time) else traj.extinction_time,
        "columns": EVENT_HEADER,
        "records": [
            {"event_index": r[0], "t": r[1], "s": r[2:8], "L": r[8:14], "N": r[14:20],
             "tie_mask": r[20], "perimeter": r[21]}
            for r in rows
        ],
        "events": [{"t": e.t, "kind": e.kind, "sides": list(e.sides), "levels": list(e.levels)}
                   for e in traj.events],
    }


def crystalline_rows(sol):
    for j, (t, s) in enumerate(zip(sol.t, sol.s)):
        L = np.maximum(side_lengths_from_s(s), 0.0)
        yield [j, t, *s, *L, *([""] * 6), 0, _anisotropic_perimeter(L)]


def crystalline_payload(sol) -> dict:
    return {
        "kind": "crystalline",
        "terminal": sol.terminal,
        "extinction_time": None if not math.isfinite(sol.extinction_time) else sol.extinction_time,
        "columns": EVENT_HEADER,
        "records": [
            {"event_index": r[0], "t": r[1], "s": r[2:8], "L": r[8:14], "N": None,
             "tie_mask": r[20], "perimeter": r[21]}
            for r in crystalline_rows(sol)
        ],
    }


def write_trajectory(path, kind: str, obj, fmt_name: str = "csv") -> None:
    producers = {
        "discrete": (DISCRETE_HEADER, discrete_rows, discrete_payload),
        "ode": (EVENT_HEADER, ode_rows, ode_payload),
        "crystalline": (EVENT_HEADER, crystalline_rows, crystalline_payload),
    }
    header, rows, payload = producers[kind]
    if fmt_name == "csv":
        atomic_write(path, _csv_text(header, rows(obj)))
    elif fmt_name == "json":
        atomic_write(path, json.dumps(payload(obj), sort_keys=True, indent=1) + "\n")
    else:
        raise ValueError(f"unknown format {fmt_name!r}")


def write_table(path, rows: list[dict], columns: list[str] | None = None) -> None:
    if not rows:
        atomic_write(path, "")
        return
    columns = columns or list(rows[0])
    atomic_write(path, _csv_text(columns, ([row[c] for c in columns] for row in rows)))


def write_manifest(path, payload: dict) -> None:
    body = {"schema": SCHEMA_VERSION, **payload}
    atomic_write(path, json.dumps(body, sort_keys=True, indent=1) + "\n")


# plot data ------------------------------------------------------------------

SERIES = [f"s{i}" for i in range(1, 7)] + [f"L{i}" for i in range(1, 7)]


def read_trajectory(path) -> tuple[np.ndarray, dict]:
    """Times and ``{series: values}`` for the twelve ``s``/``L`` series of a trajectory file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError:
        raise
    if not text.strip():
        raise SchemaError(f"{path}: empty trajectory file")
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
            recs = data["records"]
            t = np.array([r["t"] for r in recs], dtype=float)
            cols = {f"s{i + 1}": np.array([r["s"][i] for r in recs], dtype=float) for i in range(6)}
            cols.update({f"L{i + 1}": np.array([r["L"][i] for r in recs], dtype=float) for i in range(6)})
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise SchemaError(f"{path}: not a trajectory JSON file ({exc})") from exc
    else:
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if header[:2] not in (["k", "t"], ["event_index", "t"]) or any(c not in header for c in SERIES):
            raise SchemaError(f"{path}: unexpected header {header[:3]}")
        rows = [row for row in reader if row]
        try:
            t = np.array([float(r[1]) for r in rows])
            cols = {c: np.array([float(r[header.index(c)]) for r in rows]) for c in SERIES}
        except (ValueError, IndexError) as exc:
            raise SchemaError(f"{path}: malformed row ({exc})") from exc
    if t.size == 0:
        raise SchemaError(f"{path}: trajectory has no records")
    return t, cols


def plot_rows(paths) -> list[tuple]:
    """Long-format ``(t, series, value)`` rows.

    One file gives its own knots; several files are resampled by linear
    interpolation onto the union of their knots, and series names get the
    file stem as prefix.
    """
    loaded = [(Path(p).stem, *read_trajectory(p)) for p in paths]
    if not loaded:
        raise SchemaError("no trajectory files given")
    rows = []
    if len(loaded) == 1:
        _, t, cols = loaded[0]
        for j, tj in enumerate(t):
            for c in SERIES:
                rows.append((float(tj), c, float(cols[c][j])))
        return rows
    grid = np.unique(np.concatenate([t for _, t, _ in loaded]))
    for tj in grid:
        for stem, t, cols in loaded:
            if tj > t[-1] or tj < t[0]:
                continue
            for c in SERIES:
                rows.append((float(tj), f"{stem}:{c}", float(np.interp(tj, t, cols[c]))))
    return rows


def emit_plot_data(paths, out_path) -> int:
    rows = plot_rows(paths)
    atomic_write(out_path, _csv_text(["t", "series", "value"], rows))
    return len(rows)
