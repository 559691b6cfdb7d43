"""CSV writers/readers and run manifests."""

from __future__ import annotations

import csv
import json
import platform
import sys
from pathlib import Path

import numpy as np

from .trace import COLUMNS, WaveformTrace


def _num(x: float) -> str:
    return repr(float(x))


def export_trace_csv(trace: WaveformTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in zip(*trace.columns()):
            w.writerow([_num(v) for v in row])


def read_trace_csv(path: str | Path) -> WaveformTrace:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != COLUMNS:
        raise ValueError(f"{path}: unexpected header {rows[0]}")
    if len(rows) == 1:
        return WaveformTrace.empty()
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    return WaveformTrace(*(data[:, k] for k in range(6)))


def write_table(path: str | Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in r])


def aligned_text(header, rows, fmt: str = "{:.3f}") -> str:
    cells = [list(header)] + [[fmt.format(v) if isinstance(v, float) else str(v) for v in r] for r in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


def write_manifest(out_dir: str | Path, *, mode: str, config_text: str, outputs: list[str], extra: dict | None = None) -> Path:
    """Echo of the inputs plus tool versions; contains no timestamps so reruns match."""
    from . import __version__

    manifest = {
        "mode": mode,
        "config": config_text,
        "outputs": sorted(outputs),
        "versions": {"switchcell": __version__, "python": platform.python_version(),
                     "numpy": np.__version__},
        "argv": sys.argv[1:],
    }
    if extra:
        manifest.update(extra)
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
