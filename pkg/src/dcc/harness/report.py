"""Histogram payloads and report serialisation."""

import csv
import io
import json
import math

import numpy as np

from dcc.core import _jsonable
from dcc.errors import BadRange


def histogram(values, bins: int, range: tuple) -> dict:
    """Counts over ``bins`` equal-width bins on ``[lo, hi]``.

    Bins are left-closed and right-open except the last, which also holds
    ``hi``. Values outside the range are dropped.
    """
    lo, hi = float(range[0]), float(range[1])
    if int(bins) != bins or bins < 1:
        raise BadRange("bins must be a positive integer")
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise BadRange(f"need lo < hi, got [{lo}, {hi}]")
    v = np.asarray(values, dtype=float).reshape(-1)
    v = v[(v >= lo) & (v <= hi)]
    edges = np.linspace(lo, hi, int(bins) + 1)
    idx = np.clip(np.searchsorted(edges, v, side="right") - 1, 0, int(bins) - 1)
    counts = np.bincount(idx, minlength=int(bins))
    return {"edges": edges.tolist(), "counts": counts.tolist()}


def to_json(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, allow_nan=False, default=_default) + "\n"


def _default(obj):
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def histograms_csv(report: dict) -> str:
    """Histogram payloads as ``label,bin_lo,bin_hi,count`` rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "bin_lo", "bin_hi", "count"])
    for h in report.get("histograms", []):
        e = h["edges"]
        for i, c in enumerate(h["counts"]):
            w.writerow([h.get("label", ""), repr(e[i]), repr(e[i + 1]), c])
    return buf.getvalue()
