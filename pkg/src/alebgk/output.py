"""Delimited text writers; every float is printed with 17 significant digits."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import ROLE_NAMES

FMT = "%.17g"


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return FMT % v
    return str(v)


def write_snapshot(path, cloud, rho, U, T, extra: dict | None = None) -> Path:
    """Columns ``x[,y],rho,U..,T[,extra..],role`` with a ``#`` header line."""
    path = Path(path)
    d = cloud.dim
    names = ["x", "y"][:d] + ["rho"] + [f"U{'xy'[k]}" for k in range(U.shape[1])] + ["T"]
    cols = [cloud.x[:, k] for k in range(d)] + [rho] + [U[:, k] for k in range(U.shape[1])] + [T]
    for key, val in (extra or {}).items():
        names.append(key)
        cols.append(np.asarray(val, float))
    names.append("role")
    data = np.column_stack(cols)
    roles = [ROLE_NAMES[int(r)] for r in cloud.role]
    with path.open("w") as f:
        f.write("# " + ",".join(names) + "\n")
        for row, role in zip(data, roles):
            f.write(",".join(FMT % v for v in row) + "," + role + "\n")
    return path


def read_snapshot(path) -> dict:
    path = Path(path)
    lines = path.read_text().splitlines()
    names = lines[0].lstrip("# ").split(",")
    rows = [ln.split(",") for ln in lines[1:] if ln]
    out = {}
    for k, name in enumerate(names):
        col = [r[k] for r in rows]
        out[name] = np.array(col) if name == "role" else np.array(col, dtype=float)
    return out


def write_table(path, header: list[str], rows) -> Path:
    path = Path(path)
    with path.open("w") as f:
        f.write("# " + ",".join(header) + "\n")
        for r in rows:
            f.write(",".join(fmt(v) for v in r) + "\n")
    return path


def read_table(path) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text().splitlines()
    header = lines[0].lstrip("# ").split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln])
    return header, data.reshape(-1, len(header))


def write_summary(path, summary: dict) -> Path:
    path = Path(path)
    with path.open("w") as f:
        for k, v in summary.items():
            f.write(f"{k}={fmt(v)}\n")
    return path


def read_summary(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            try:
                out[k] = float(v) if any(c in v for c in ".eE") or v.lstrip("-").isdigit() else v
            except ValueError:
                out[k] = v
    return out
