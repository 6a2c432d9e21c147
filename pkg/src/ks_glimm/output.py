"""CSV and JSON outputs.

Every file starts with the package version and the fully resolved configuration
(``# key=value`` lines for CSV, a ``config`` object for JSON). Floats are written
with 17 significant digits and nothing time-dependent goes into a file, so equal
configurations produce byte-identical outputs.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ks_glimm.diagnostics import CSV_COLUMNS, CellField, DiagnosticsRecord

FLOAT_FORMAT = "%.17g"


def _version() -> str:
    from ks_glimm import __version__

    return __version__


def header_lines(config_text: str, *, title: str = "") -> list[str]:
    lines = [f"# ks-glimm {_version()}" + (f" {title}" if title else "")]
    lines += [f"# {ln}" for ln in config_text.splitlines() if ln.strip()]
    return lines


def write_csv(path: Path, df: pd.DataFrame, config_text: str, *, title: str = "") -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    body = df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    text = "\n".join(header_lines(config_text, title=title)) + "\n" + body
    path.write_text(text, encoding="utf-8")
    return path


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def _jsonable(obj: Any) -> Any:
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, payload: Mapping[str, Any], config_text: str) -> Path:
    doc = {"version": _version(), "config": dict(ln.split("=", 1) for ln in config_text.splitlines() if "=" in ln)}
    doc.update(_jsonable(payload))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def records_frame(records: Iterable[DiagnosticsRecord], *, every: int = 1) -> pd.DataFrame:
    """Diagnostics rows in the documented column order, keeping every ``every``-th strip."""
    rows = [r.as_row() for i, r in enumerate(records) if i % every == 0]
    df = pd.DataFrame(rows, columns=list(CSV_COLUMNS))
    return df.astype({"m": "int64"})


def snapshot_frame(f: CellField) -> pd.DataFrame:
    theta = f.theta
    return pd.DataFrame(
        {
            "x": f.x,
            "v": f.W[:, 0] + theta,
            "u": 1.0 + f.W[:, 1],
            "theta": theta,
        }
    )


def snapshot_name(t: float) -> str:
    return f"snapshot_t{t:012.6f}.csv"
