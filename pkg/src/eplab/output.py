"""Result files: sweep CSV, JSON summary and whitespace-separated plot data.

Every file is written to a temporary sibling and renamed into place, so a
failed run never leaves a partial file behind. Output is a pure function of
the inputs, which makes reruns byte-identical.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .config import RunConfig, config_to_dict


def fmt(x, precision: int) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    x = float(x)
    if x == 0.0:
        return "0"
    return f"{x:.{precision}g}"


def csv_header(n_states: int, n_channels: int) -> list[str]:
    cols = ["index", "a"]
    for c in range(1, n_channels + 1):
        cols += [f"omega_{c}_re", f"omega_{c}_im"]
    for i in range(1, n_states + 1):
        cols += [f"E_{i}", f"Gamma_{i}", f"r_{i}", f"H_{i}"]
    return cols + ["defect", "min_gap", "equilibrium"]


def _row_cells(row, precision):
    cells = [str(row.index), fmt(row.point.a, precision)]
    for w in row.point.omegas:
        cells += [fmt(w.real, precision), fmt(w.imag, precision)]
    for rec, r, h in zip(row.eigenvalues, row.rigidities, row.entropies):
        cells += [fmt(rec.energy, precision), fmt(rec.width, precision), fmt(r, precision), fmt(h, precision)]
    cells += [fmt(row.defect, precision), fmt(row.min_gap, precision), fmt(row.equilibrium, precision)]
    return cells


def csv_text(rows, precision: int = 12) -> str:
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    first = rows[0]
    lines = [",".join(csv_header(len(first.eigenvalues), len(first.point.omegas)))]
    lines += [",".join(_row_cells(r, precision)) for r in rows]
    return "\n".join(lines) + "\n"


def _plot_tables(rows, precision):
    n = len(rows[0].eigenvalues)
    fam = {
        "eigenvalues": (["index", "a"] + [f"E_{i}" for i in range(1, n + 1)] + [f"Gamma_{i}" for i in range(1, n + 1)],
                        lambda r: [r.point.a] + [e.energy for e in r.eigenvalues] + [e.width for e in r.eigenvalues]),
        "rigidity": (["index", "a"] + [f"r_{i}" for i in range(1, n + 1)],
                     lambda r: [r.point.a, *r.rigidities]),
        "entropy": (["index", "a"] + [f"H_{i}" for i in range(1, n + 1)],
                    lambda r: [r.point.a, *r.entropies]),
        "equilibrium": (["index", "a", "defect", "min_gap", "equilibrium"],
                        lambda r: [r.point.a, r.defect, r.min_gap, int(r.equilibrium)]),
    }
    out = {}
    for name, (head, get) in fam.items():
        lines = ["# " + " ".join(head)]
        lines += [" ".join([str(r.index)] + [fmt(v, precision) for v in get(r)]) for r in rows]
        out[name] = "\n".join(lines) + "\n"
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if hasattr(obj, "as_dict"):
        return _jsonable(obj.as_dict())
    return obj


def summary_text(reports: dict, config: RunConfig) -> str:
    doc = {"thresholds": config_to_dict(config)["thresholds"]}
    doc.update(_jsonable(reports))
    doc["config"] = config_to_dict(config)
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def atomic_write(files: dict) -> None:
    """Write ``{path: text}`` via temporary files, renaming only once all are written."""
    staged = []
    try:
        for path, text in files.items():
            d = os.path.dirname(os.path.abspath(path))
            fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
            staged.append((tmp, path))
            with os.fdopen(fd, "w", newline="\n") as fh:
                fh.write(text)
        for tmp, path in staged:
            os.replace(tmp, path)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


def emit_results(rows, reports: dict, config: RunConfig, out_dir: str = ".") -> dict:
    """Write the CSV, JSON summary and plot-data files; returns ``{kind: path}``.

    ``rows`` is a nonempty sequence of sweep rows; ``reports`` holds the JSON
    sections (EP candidates, equilibrium verdict, plateau, ...).
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    p = config.outputs.precision
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "csv": os.path.join(out_dir, config.outputs.csv),
        "json": os.path.join(out_dir, config.outputs.json),
    }
    files = {paths["csv"]: csv_text(rows, p), paths["json"]: summary_text(reports, config)}
    for name, text in _plot_tables(rows, p).items():
        path = os.path.join(out_dir, f"{config.outputs.plot_data}_{name}.dat")
        paths[f"plot_{name}"] = path
        files[path] = text
    atomic_write(files)
    return paths
