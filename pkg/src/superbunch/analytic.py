"""Closed-form second-order coherence models and derived quantities.

The model family shares one structure: a thermal-bunching envelope

    g2_env(dx) = 1 + sinc^2(k R dx / (2 z)),

multiplied by one factor ``1 + f(dx)/2`` per pair of mutually
first-order-incoherent channels, where

    f(dx) = cos(k theta dx)          for a fixed crossing angle, and
    f(dx) = sinc(k theta0 dx / 2)    for an angle scanned uniformly
                                     over [-theta0/2, +theta0/2].

At dx = 0 every channel factor equals 3/2, so n scanning pairs push the
zero-separation peak to 2 * 1.5^n while the background stays at 1.
Throughout, sinc(u) = sin(u)/u with sinc(0) = 1 (no pi-scaling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    CascadeConfig,
    ChannelStage,
    G2Curve,
    OpticalConfig,
    StageMode,
    validate_config,
)

__all__ = [
    "ModelKind",
    "AnalyticModel",
    "sinc",
    "g2_hbt",
    "g2_fringe",
    "g2_scanned",
    "g2_cascade",
    "fringe_period",
    "evaluate_curve",
    "peak_to_background",
    "peak_background_values",
]


class ModelKind:
    """Names of the closed-form models (plain strings for easy CLI use)."""

    HBT = "hbt"
    FRINGE = "fringe"
    SCANNED = "scanned"
    CASCADE = "cascade"

    ALL = (HBT, FRINGE, SCANNED, CASCADE)


def sinc(u):
    """sin(u)/u with the removable singularity filled in: sinc(0) = 1."""
    return np.sinc(np.asarray(u, dtype=np.float64) / np.pi)


def _envelope(cfg: OpticalConfig, dx):
    u = cfg.wavenumber * cfg.source_width * np.asarray(dx, dtype=np.float64) / (2.0 * cfg.distance)
    s = sinc(u)
    return 1.0 + s * s


def _channel_factor(stage: ChannelStage, k: float, dx):
    dx = np.asarray(dx, dtype=np.float64)
    if stage.mode is StageMode.FIXED_ANGLE:
        return 1.0 + 0.5 * np.cos(k * stage.theta * dx)
    return 1.0 + 0.5 * sinc(k * stage.theta0 * dx / 2.0)


def g2_cascade(cfg: OpticalConfig, stages: CascadeConfig, dx):
    """g2 for n cascaded channel pairs (n = 0 reduces to the plain HBT
    interferometer); mixed fixed/scanned cascades are allowed."""
    validate_config(cfg)
    out = _envelope(cfg, dx)
    k = cfg.wavenumber
    for stage in stages.stages:
        out = out * _channel_factor(stage, k, dx)
    return out if np.ndim(dx) else float(out)


def g2_hbt(cfg: OpticalConfig, dx):
    """Thermal-light bunching curve 1 + sinc^2(kR dx / 2z); range [1, 2]."""
    return g2_cascade(cfg, CascadeConfig.hbt(), dx)


def g2_fringe(cfg: OpticalConfig, theta: float, dx):
    """One fixed-angle channel pair: the bunching envelope times
    1 + cos(k theta dx)/2, a fringe of period 2 pi/(k theta) peaking at 3."""
    return g2_cascade(cfg, CascadeConfig((ChannelStage.fixed(theta),)), dx)


def g2_scanned(cfg: OpticalConfig, theta0: float, dx):
    """One scanning channel pair: averaging the fringe over the scan range
    smears out the side lobes, leaving 1 + sinc(k theta0 dx / 2)/2."""
    return g2_cascade(cfg, CascadeConfig((ChannelStage.scan(theta0),)), dx)


def fringe_period(cfg: OpticalConfig, theta: float) -> float:
    """Fringe period 2 pi / (k |theta|) = wavelength / |theta| in meters.

    The fringe is even in theta, so the sign is irrelevant; theta = 0
    (infinite period) is rejected.
    """
    if theta == 0:
        raise ValueError("theta must be nonzero")
    return cfg.wavelength / abs(float(theta))


@dataclass(frozen=True)
class AnalyticModel:
    """A closed-form model: kind + geometry + channel stages.

    Stage consistency: hbt has no stages, fringe exactly one fixed-angle
    stage, scanned exactly one scanning stage, cascade any combination.
    """

    kind: str
    cfg: OpticalConfig
    stages: CascadeConfig = CascadeConfig.hbt()

    def __post_init__(self) -> None:
        st = self.stages.stages
        if self.kind == ModelKind.HBT:
            if st:
                raise ValueError("hbt model takes no stages")
        elif self.kind == ModelKind.FRINGE:
            if len(st) != 1 or st[0].mode is not StageMode.FIXED_ANGLE:
                raise ValueError("fringe model requires exactly one fixed-angle stage")
        elif self.kind == ModelKind.SCANNED:
            if len(st) != 1 or st[0].mode is not StageMode.UNIFORM_SCAN:
                raise ValueError("scanned model requires exactly one scanning stage")
        elif self.kind != ModelKind.CASCADE:
            raise ValueError(f"unknown model kind {self.kind!r}")

    def describe(self) -> dict:
        params: dict = {
            "wavelength_m": self.cfg.wavelength,
            "source_width_m": self.cfg.source_width,
            "distance_m": self.cfg.distance,
        }
        for j, st in enumerate(self.stages.stages, start=1):
            if st.mode is StageMode.FIXED_ANGLE:
                params[f"stage{j}"] = f"fixed:{st.theta!r}"
            else:
                params[f"stage{j}"] = f"scan:{st.theta0!r}"
        return params


def evaluate_curve(model: AnalyticModel) -> G2Curve:
    """Evaluate the model over cfg.dx_grid; se is identically zero."""
    g2 = g2_cascade(model.cfg, model.stages, model.cfg.dx_grid)
    meta = {"model": model.kind, **model.describe()}
    return G2Curve(dx=model.cfg.dx_grid, g2=g2, se=np.zeros_like(g2), meta=meta)


def peak_background_values(
    curve: G2Curve, peak_frac: float = 0.05, tail_frac: float = 0.10
) -> tuple[float, float]:
    """(peak, background) read off a finite curve.

    Peak: maximum of g2 over the innermost ``peak_frac`` of the grid span
    (|dx| <= peak_frac * max|dx|). Background: mean of g2 over the
    outermost ``tail_frac`` (|dx| >= (1 - tail_frac) * max|dx|). The grid
    should span several envelope widths wavelength*z/R so the tail is
    flat; that is the caller's responsibility.
    """
    adx = np.abs(curve.dx)
    span = float(adx.max())
    if curve.n_points < 4 or span <= 0:
        raise ValueError("curve too short to contain a tail region")
    # pad the window edges by a relative epsilon so borderline grid points
    # select identically under unit rescaling of dx
    eps = 1e-9 * span
    peak_sel = adx <= peak_frac * span + eps
    tail_sel = adx >= (1.0 - tail_frac) * span - eps
    if not peak_sel.any() or not tail_sel.any() or np.all(peak_sel == tail_sel):
        raise ValueError("curve too short to contain a tail region")
    peak = float(curve.g2[peak_sel].max())
    background = float(curve.g2[tail_sel].mean())
    return peak, background


def peak_to_background(curve: G2Curve) -> float:
    """Bunching peak-to-background ratio g2(dx ~ 0) / g2(tail).

    For analytic curves whose modulations have fully decayed the tail is
    1 and the ratio equals the zero-separation value (2 for plain HBT,
    3 for one scanning pair, 2 * 1.5^n for n of them).
    """
    peak, background = peak_background_values(curve)
    if background <= 0:
        raise ValueError("non-positive background; curve tail unusable")
    return peak / background
