"""Curve CSV interchange, metadata sidecars and report files.

One curve format everywhere: header ``dx_m,g2,se``, UTF-8, LF line
endings, ``.`` decimal separator, SI meters, shortest round-trip decimal
representation (read-back is bit-exact).
"""

from __future__ import annotations

import numpy as np

from .model import G2Curve

__all__ = ["write_curve_csv", "read_curve_csv", "write_key_values", "read_key_values"]

CSV_HEADER = "dx_m,g2,se"


def write_curve_csv(path, curve: G2Curve) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for dx, g2, se in zip(curve.dx, curve.g2, curve.se):
            fh.write(f"{dx!r},{g2!r},{se!r}\n")


def read_curve_csv(path) -> G2Curve:
    """Parse a curve CSV; failures carry the offending line number."""
    dx, g2, se = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"{path}: line 1: expected header {CSV_HEADER!r}, got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 3 fields, got {len(parts)}")
            try:
                values = [float(p) for p in parts]
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: malformed number") from None
            dx.append(values[0])
            g2.append(values[1])
            se.append(values[2])
    if not dx:
        raise ValueError(f"{path}: no data rows")
    return G2Curve(
        dx=np.array(dx), g2=np.array(g2), se=np.array(se), meta={"source": str(path)}
    )


def write_key_values(path, entries: dict) -> None:
    """Metadata sidecar: one ``key = value`` line per entry."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in entries.items():
            fh.write(f"{key} = {value}\n")


def read_key_values(path) -> dict:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: malformed line {line!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out
