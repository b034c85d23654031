"""Text and image formats written by the command-line tools.

All decimals are printed with 17 significant digits so that float64
values survive a write/read cycle unchanged.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .numgrid import AngleGrid, Grid1D
from .radon import OpticalTomogram

FMT = "%.17g"
TOMOGRAM_MAGIC = "#tomogram v1"


class FormatError(ValueError):
    pass


def _num(x: float) -> str:
    return FMT % x


def write_tomogram(path, w: OpticalTomogram) -> Path:
    """Write ``w`` as ``#tomogram v1`` text: three header lines, then one row per angle."""
    path = Path(path)
    g = w.xgrid
    lines = [
        TOMOGRAM_MAGIC,
        f"#xgrid {_num(g.x_min)} {_num(g.x_max)} {g.n}",
        f"#agrid {w.agrid.n_theta}",
    ]
    lines += [" ".join(_num(v) for v in row) for row in w.w]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_tomogram(path) -> OpticalTomogram:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    lines = text.splitlines()
    if len(lines) < 3 or lines[0].strip() != TOMOGRAM_MAGIC:
        raise FormatError(f"{path}: missing '{TOMOGRAM_MAGIC}' header")
    xs, ag = lines[1].split(), lines[2].split()
    if len(xs) != 4 or xs[0] != "#xgrid" or len(ag) != 2 or ag[0] != "#agrid":
        raise FormatError(f"{path}: malformed grid header")
    try:
        xgrid = Grid1D(float(xs[1]), float(xs[2]), int(xs[3]))
        agrid = AngleGrid(int(ag[1]))
        rows = [np.array(line.split(), dtype=float) for line in lines[3:] if line.strip()]
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if len(rows) != agrid.n_theta or any(r.size != xgrid.n for r in rows):
        raise FormatError(f"{path}: expected {agrid.n_theta} rows of {xgrid.n} values")
    return OpticalTomogram(agrid, xgrid, np.vstack(rows))


def write_csv(path, w: OpticalTomogram) -> Path:
    """``theta,X,w`` triples, theta-major."""
    path = Path(path)
    th = np.repeat(w.angles, w.xgrid.n)
    x = np.tile(w.xgrid.points, w.agrid.n_theta)
    body = "\n".join(f"{_num(a)},{_num(b)},{_num(c)}" for a, b, c in zip(th, x, w.w.ravel()))
    path.write_text("theta,X,w\n" + body + "\n")
    return path


def read_csv(path) -> np.ndarray:
    """Rows of ``(theta, X, w)`` as an (n, 3) array."""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def heatmap_bytes(a: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Linear min-max scaling of ``a`` to 0..255."""
    lo, hi = float(np.min(a)), float(np.max(a))
    span = hi - lo
    if span > 0:
        img = np.rint((a - lo) / span * 255.0)
    else:
        img = np.zeros_like(a)
    return img.astype(np.uint8), lo, hi


def write_pgm(path, a: np.ndarray) -> dict:
    """Binary 8-bit PGM (row = first axis) plus a JSON sidecar recording the scaling."""
    path = Path(path)
    img, lo, hi = heatmap_bytes(a)
    rows, cols = img.shape
    path.write_bytes(f"P5\n{cols} {rows}\n255\n".encode("ascii") + img.tobytes())
    meta = {
        "file": path.name,
        "rows": rows,
        "cols": cols,
        "row_axis": "theta",
        "col_axis": "X",
        "scaling": "linear",
        "min": lo,
        "max": hi,
    }
    write_json(sidecar_path(path), meta)
    return meta


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5" or parts[2] != b"255":
        raise FormatError(f"{path}: not an 8-bit binary PGM")
    cols, rows = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(rows, cols)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


__all__ = [
    "FormatError",
    "write_tomogram",
    "read_tomogram",
    "write_csv",
    "read_csv",
    "write_pgm",
    "sidecar_path",
    "read_pgm",
    "heatmap_bytes",
    "write_json",
]
