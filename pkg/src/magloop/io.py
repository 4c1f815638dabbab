"""CSV writers.  Numbers use 17 significant digits (round-trip exact) and
locale-independent formatting; booleans are written as true/false."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from magloop.floquet import CLASSES

TRAJECTORY_HEADER = ["t", "x", "y", "px", "py"]
SCAN_HEADER = ["p1", "p2", "tr", "class", "gamma1"]
SEPARATRIX_HEADER = ["p1", "p2", "branch", "kind", "value", "b11", "b12", "b21", "b22"]
LOOPS_HEADER = ["p1", "p2", "n", "residual"]
CENTER_HEADER = ["cX_x", "cX_y", "cX_px", "cX_py", "cY_x", "cY_y", "cY_px", "cY_py",
                 "kappa", "vanishing"]
DRIFT_HEADER = ["block", "t", "cx", "cy"]
LANDAU_HEADER = ["gamma", "loop", "kappa", "kappa_closed_form"]
WORD_HEADER = ["order", "loop", "threshold", "diagonalizable", "m11", "m12", "m21", "m22"]

_NAMES = ["x", "y", "px", "py"]
# upper triangle taken column by column: cxx, cxy, cyy, cxpx, ...
COV_INDEX = [(i, j) for j in range(4) for i in range(j + 1)]
PACKET_HEADER = ["t", "mx", "my", "mpx", "mpy"] + [f"c{_NAMES[i]}{_NAMES[j]}" for i, j in COV_INDEX]


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    v = float(value)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def write_rows(path, header, rows) -> int:
    """Write header plus rows; returns the number of data rows."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
            n += 1
    return n


def read_rows(path) -> tuple:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def write_trajectory(path, traj) -> int:
    return write_rows(path, TRAJECTORY_HEADER, ([t, *q] for t, q in zip(traj.t, traj.q)))


def scan_rows(smap):
    g1 = smap.gamma1
    for i in range(len(smap.p1)):
        for j in range(len(smap.p2)):
            yield (smap.p1[i], smap.p2[j], smap.tr[i, j], CLASSES[smap.classes[i, j]], g1[i, j])


def write_scan(path, smap) -> int:
    return write_rows(path, SCAN_HEADER, scan_rows(smap))


def write_separatrix(path, points) -> int:
    """Harmonic points carry a trailing ``window`` column (``centered``)."""
    flagged = any(p.window != "period" for p in points)
    header = SEPARATRIX_HEADER + (["window"] if flagged else [])

    def rows():
        for p in points:
            row = [p.p1, p.p2, p.branch, p.kind, p.value, *np.asarray(p.b1).ravel()]
            yield row + ([p.window] if flagged else [])

    return write_rows(path, header, rows())


def write_loops(path, rows) -> int:
    return write_rows(path, LOOPS_HEADER, rows)


def center_row(report) -> list:
    return [*report.cX.c, *report.cY.c, report.kappa, report.vanishing]


def write_center(path, report) -> int:
    return write_rows(path, CENTER_HEADER, [center_row(report)])


def packet_row(t, packet) -> list:
    c = packet.cov_matrix
    return [t, *packet.mean] + [c[i, j] for i, j in COV_INDEX]


def write_packets(path, history) -> int:
    return write_rows(path, PACKET_HEADER, (packet_row(t, p) for t, p in history))
