"""Artifact writers: CSV, JSON and static SVG plots, all written atomically."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np


def atomic_write(path, data) -> Path:
    """Write text or bytes to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def format_value(v) -> str:
    """Round-trip float formatting; complex values are not allowed in CSV cells."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return atomic_write(path, buf.getvalue())


def read_csv(path) -> tuple[list, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(-1, len(rows[0]))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


# -- SVG plots ----------------------------------------------------------------


def _svg_bytes(fig) -> bytes:
    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    return buf.getvalue()


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed salt and path-rendered glyphs keep the SVG deterministic and self-contained
    plt.rcParams["svg.hashsalt"] = "lyapspec"
    plt.rcParams["svg.fonttype"] = "path"
    fig, ax = plt.subplots(figsize=(6, 4))
    return plt, fig, ax


def plot_pressure(path, d, P, errors=None, title: str = "pressure") -> Path:
    plt, fig, ax = _figure()
    d, P = np.asarray(d, float), np.asarray(P, float)
    ax.plot(d, P, color="C0", lw=1.5)
    if errors is not None and np.size(errors) == d.size:
        e = np.asarray(errors, float)
        ax.fill_between(d, P - e, P + e, color="C0", alpha=0.2, lw=0)
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel("d")
    ax.set_ylabel("P(d)")
    ax.set_title(title)
    fig.tight_layout()
    data = _svg_bytes(fig)
    plt.close(fig)
    return atomic_write(path, data)


def plot_spectrum(path, alpha, F, alpha_minus: float, alpha_plus: float, d0: float,
                  title: str = "Lyapunov spectrum") -> Path:
    """F(alpha) with the interval ends and the Bowen root annotated."""
    plt, fig, ax = _figure()
    alpha, F = np.asarray(alpha, float), np.asarray(F, float)
    ok = np.isfinite(F)
    style = "o" if np.count_nonzero(ok) < 3 else "-"
    ax.plot(alpha[ok], F[ok], style, color="C1", lw=1.5)
    for x, name in ((alpha_minus, "alpha-"), (alpha_plus, "alpha+")):
        if np.isfinite(x):
            ax.axvline(x, color="0.5", ls="--", lw=0.8)
            ax.annotate(f"{name} = {x:.4f}", (x, 0.02), xycoords=("data", "axes fraction"),
                        rotation=90, fontsize=8, ha="right", va="bottom")
    if np.isfinite(d0):
        ax.axhline(d0, color="C2", ls=":", lw=0.8)
        ax.annotate(f"d0 = {d0:.4f}", (0.02, d0), xycoords=("axes fraction", "data"), fontsize=8,
                    va="bottom")
    ax.set_xlabel("alpha")
    ax.set_ylabel("F(alpha)")
    ax.set_title(title)
    fig.tight_layout()
    data = _svg_bytes(fig)
    plt.close(fig)
    return atomic_write(path, data)
