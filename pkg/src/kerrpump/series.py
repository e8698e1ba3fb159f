"""Sampled-trajectory container and deterministic CSV/JSON emitters."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class TimeSeries:
    """Named columns over a common time grid, with event annotations.

    Column entries may be None (undefined samples); they are emitted as
    empty CSV fields.  ``events`` maps a label (e.g. a pair tag) to a list
    of EntanglementEvent.  ``meta`` and ``diagnostics`` travel to the JSON
    sidecar.
    """

    t: np.ndarray
    columns: dict = field(default_factory=dict)
    events: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def column_names(self) -> list:
        return ["t"] + list(self.columns.keys())


def _fmt(value) -> str:
    if value is None:
        return ""
    v = float(value)
    if np.isnan(v):
        return ""
    return f"{v:.17g}"


def write_csv(series: TimeSeries, path: Path) -> None:
    """Emit the series as CSV with full double precision and gaps for None/NaN."""
    names = series.column_names()
    cols = [series.t] + [series.columns[n] for n in names[1:]]
    lines = [",".join(names)]
    for row in range(len(series.t)):
        lines.append(",".join(_fmt(col[row]) for col in cols))
    Path(path).write_text("\n".join(lines) + "\n")


def _event_record(event) -> dict:
    return {
        "kind": event.kind,
        "t": event.t,
        "bracket": list(event.bracket),
        "pair": event.pair.label if event.pair is not None else None,
    }


def write_sidecar(series: TimeSeries, path: Path) -> None:
    """Emit the JSON sidecar: parameters, tolerances, diagnostics, event tables."""
    payload = {
        "meta": series.meta,
        "columns": series.column_names(),
        "n_samples": int(len(series.t)),
        "events": {
            label: [_event_record(e) for e in evs] for label, evs in series.events.items()
        },
        "diagnostics": _jsonable(series.diagnostics),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj
