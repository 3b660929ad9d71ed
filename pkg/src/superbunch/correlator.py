"""Streaming intensity-product accumulator and curve comparison.

The estimator is the plug-in ratio

    g2(dx) = M * sum(I1*I2) / (sum(I1) * sum(I2))

per grid point, which mirrors how experimental curves are normalized and
cancels any overall gain. Standard errors come from batch means: the
stream is cut into batches (close_batch marks the boundaries), each
batch yields its own ratio estimate, and the se is the spread of those
estimates over sqrt(n_batches). Intensity products are heavy-tailed, so
batch means are much more robust than a delta-method variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import G2Curve

__all__ = [
    "CorrAccumulator",
    "ComparisonReport",
    "batch_count",
    "merge",
    "compare_curves",
]


def batch_count(realizations: int) -> int:
    """Number of batch-means batches for a run of the given size:
    min(100, M // 10), but at least 1."""
    return max(1, min(100, int(realizations) // 10))


@dataclass
class _BatchRecord:
    count: int
    s1: np.ndarray
    s2: np.ndarray
    s12: np.ndarray


@dataclass
class CorrAccumulator:
    """Running sums of I1, I2, I1*I2 and (I1*I2)^2 over a dx grid.

    Single-writer: one accumulator per worker, merged afterwards in
    worker order. ``count`` is the number of accumulated realizations
    (one realization covers the full grid).
    """

    dx: np.ndarray
    count: int = 0
    s1: np.ndarray = field(init=False)
    s2: np.ndarray = field(init=False)
    s12: np.ndarray = field(init=False)
    s12_sq: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.dx = np.asarray(self.dx, dtype=np.float64)
        n = self.dx.size
        self.s1 = np.zeros(n)
        self.s2 = np.zeros(n)
        self.s12 = np.zeros(n)
        self.s12_sq = np.zeros(n)
        self._batches: list[_BatchRecord] = []
        self._open = _BatchRecord(0, np.zeros(n), np.zeros(n), np.zeros(n))

    @property
    def n_points(self) -> int:
        return int(self.dx.size)

    def _check(self, arr: np.ndarray, name: str) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(arr, dtype=np.float64))
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} must be finite")
        if np.any(arr < 0):
            raise ValueError(f"{name} must be non-negative")
        return arr

    def accumulate(self, i1, i2) -> "CorrAccumulator":
        """Add one realization: intensities at both detectors for every
        grid point (scalars are fine for a 1-point grid)."""
        i1 = self._check(i1, "I1")
        i2 = self._check(i2, "I2")
        if i1.shape != (self.n_points,) or i2.shape != (self.n_points,):
            raise ValueError("intensity arrays must match the grid length")
        p = i1 * i2
        self.s1 += i1
        self.s2 += i2
        self.s12 += p
        self.s12_sq += p * p
        self._open.s1 += i1
        self._open.s2 += i2
        self._open.s12 += p
        self._open.count += 1
        self.count += 1
        return self

    def accumulate_chunk(self, I1: np.ndarray, I2: np.ndarray) -> "CorrAccumulator":
        """Add a chunk of realizations at once; I1, I2 have shape
        (m, n_points). Equivalent to m accumulate() calls up to float
        summation order."""
        I1 = np.asarray(I1, dtype=np.float64)
        I2 = np.asarray(I2, dtype=np.float64)
        if I1.shape != I2.shape or I1.ndim != 2 or I1.shape[1] != self.n_points:
            raise ValueError("chunk arrays must have shape (m, n_points)")
        if not (np.all(np.isfinite(I1)) and np.all(np.isfinite(I2))):
            raise ValueError("intensities must be finite")
        if np.any(I1 < 0) or np.any(I2 < 0):
            raise ValueError("intensities must be non-negative")
        P = I1 * I2
        c1 = I1.sum(axis=0)
        c2 = I2.sum(axis=0)
        c12 = P.sum(axis=0)
        self.s1 += c1
        self.s2 += c2
        self.s12 += c12
        self.s12_sq += (P * P).sum(axis=0)
        self._open.s1 += c1
        self._open.s2 += c2
        self._open.s12 += c12
        m = I1.shape[0]
        self._open.count += m
        self.count += m
        return self

    def close_batch(self) -> None:
        """Snapshot everything since the previous close as one batch-means
        record; a no-op when nothing is open."""
        if self._open.count == 0:
            return
        self._batches.append(self._open)
        n = self.n_points
        self._open = _BatchRecord(0, np.zeros(n), np.zeros(n), np.zeros(n))

    def batch_records(self) -> tuple:
        return tuple(self._batches)

    def finalize(self, meta: dict | None = None) -> G2Curve:
        """Normalized g2 with batch-means standard errors.

        se is zero when fewer than two batches were closed (a single
        sample cannot estimate its own spread).
        """
        if self.count == 0:
            raise ValueError("empty accumulator")
        self.close_batch()
        denom = self.s1 * self.s2
        if np.any(denom == 0):
            raise ValueError("zero mean intensity at some grid point")
        g2 = self.count * self.s12 / denom
        nb = len(self._batches)
        if nb >= 2:
            per_batch = np.stack(
                [b.count * b.s12 / (b.s1 * b.s2) for b in self._batches]
            )
            se = per_batch.std(axis=0, ddof=1) / np.sqrt(nb)
        else:
            se = np.zeros_like(g2)
        out_meta = {"realizations": self.count, "batches": nb}
        if meta:
            out_meta.update(meta)
        return G2Curve(dx=self.dx, g2=g2, se=se, meta=out_meta)


def merge(a: CorrAccumulator, b: CorrAccumulator) -> CorrAccumulator:
    """Combine two accumulators over the same grid; batch records are
    concatenated in (a, b) order, open partial batches are pooled."""
    if not np.array_equal(a.dx, b.dx):
        raise ValueError("grid mismatch")
    out = CorrAccumulator(a.dx)
    out.count = a.count + b.count
    out.s1 = a.s1 + b.s1
    out.s2 = a.s2 + b.s2
    out.s12 = a.s12 + b.s12
    out.s12_sq = a.s12_sq + b.s12_sq
    out._batches = list(a._batches) + list(b._batches)
    out._open = _BatchRecord(
        a._open.count + b._open.count,
        a._open.s1 + b._open.s1,
        a._open.s2 + b._open.s2,
        a._open.s12 + b._open.s12,
    )
    return out


@dataclass(frozen=True)
class ComparisonReport:
    """Per-point z-scores of one curve against a reference."""

    z: np.ndarray
    max_abs_z: float
    frac_above_2: float
    rmse: float

    def to_text(self) -> str:
        return (
            f"points            {self.z.size}\n"
            f"max|z|            {self.max_abs_z:.4g}\n"
            f"fraction |z|>2    {self.frac_above_2:.4g}\n"
            f"rmse              {self.rmse:.6g}\n"
        )


def compare_curves(mc: G2Curve, ref: G2Curve) -> ComparisonReport:
    """z_i = (mc.g2_i - ref.g2_i) / mc.se_i, plus max|z|, the fraction of
    points with |z| > 2, and the plain RMSE of the difference.

    Grids must match exactly. A point with zero se and nonzero deviation
    is an error (the deviation cannot be scored); zero deviation with
    zero se scores z = 0.
    """
    if not np.array_equal(mc.dx, ref.dx):
        raise ValueError("grid mismatch")
    diff = mc.g2 - ref.g2
    bad = (mc.se == 0) & (diff != 0)
    if np.any(bad):
        raise ValueError("zero se with nonzero deviation; cannot form z-scores")
    with np.errstate(invalid="ignore"):
        z = np.where(mc.se > 0, diff / np.where(mc.se > 0, mc.se, 1.0), 0.0)
    return ComparisonReport(
        z=z,
        max_abs_z=float(np.max(np.abs(z))),
        frac_above_2=float(np.mean(np.abs(z) > 2)),
        rmse=float(np.sqrt(np.mean(diff * diff))),
    )
