"""Result serialization: CSV curve tables and JSON run dumps.

Floats are written with 17 significant digits so they round-trip exactly.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

SWEEP_HEADER = ["LM", "L", "M", "mode", "scheme", "eta_ul", "eta_ul_lo", "eta_ul_hi",
                "eta_dl", "eta_dl_lo", "eta_dl_hi", "samples"]


def fmt_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return fmt_float(x)
        return "NaN" if math.isnan(x) else ("Infinity" if x > 0 else "-Infinity")
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode({"re": obj.real, "im": obj.imag}, indent, level)
    return json.dumps(obj)


def dumps(obj, indent=1):
    """JSON text with every float at 17 significant digits."""
    return _encode(obj, indent, 0)


def sweep_rows(rows):
    """Yield CSV records for a list of sweep rows; failed points get empty numbers."""
    for r in rows:
        base = [r.LM, r.L, r.M, r.mode, r.scheme]
        if r.result is None:
            yield base + [""] * 6 + [0]
            continue
        a = r.result
        vals = [a.eta_ul, *a.ci_ul, a.eta_dl, *a.ci_dl]
        yield base + [fmt_float(v) for v in vals] + [a.samples]


def write_sweep_csv(rows, dest):
    """Write the curve table to a path or an open text stream."""
    if hasattr(dest, "write"):
        w = csv.writer(dest, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        w.writerows(sweep_rows(rows))
        return
    with open(dest, "w", newline="") as fh:
        write_sweep_csv(rows, fh)


def read_sweep_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_payload(cfg, result):
    """JSON-ready dictionary for one availability run."""
    return {
        "config": cfg.to_dict(),
        "eta_ul": result.eta_ul,
        "eta_dl": result.eta_dl,
        "ci_ul": list(result.ci_ul),
        "ci_dl": list(result.ci_dl),
        "samples": result.samples,
        "eps_target": result.eps_target,
        "split_half_z": result.split_half_z,
        "tail_dominated_ul": result.tail_dominated_ul,
        "tail_dominated_dl": result.tail_dominated_dl,
        "elapsed_s": result.elapsed,
        "placements": [
            {
                "index": p.placement_index,
                "seed": list(p.seed),
                "ue_positions": p.ue_positions,
                "eps_ul": p.eps_ul,
                "eps_dl": p.eps_dl,
                "se_ul": p.se_ul,
                "se_dl": p.se_dl,
                "s_ul": p.s_ul,
                "s_dl": p.s_dl,
                "max_share_ul": p.max_share_ul,
                "max_share_dl": p.max_share_dl,
                "split_half_z": p.split_half_z,
            }
            for p in result.placements
        ],
    }


def write_json(obj, path):
    Path(path).write_text(dumps(obj) + "\n")
