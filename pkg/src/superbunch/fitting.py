"""Nonlinear least-squares fitting of the g2 model family.

The fit model generalizes the closed forms with contrast parameters that
absorb experimental imperfections:

    g2(dx) = offset * [1 + beta_env * sinc^2(k R dx / 2z)]
                    * prod_j [1 + (beta_ch_j / 2) * f_j(dx)]

with f_j a cos (fixed tilt) or sinc (scanned tilt) factor per channel
pair. beta_env = beta_ch = 1 and offset = 1 recover the ideal curves;
degraded contrasts reproduce sub-ideal measured peak-to-background
ratios while keeping the gap to ideal theory explicit and measurable.

The optimizer is a damped (Levenberg-style) least-squares descent with a
central-difference Jacobian: accepted steps never increase the residual
sum of squares, and the damping factor grows until a step is accepted or
declared hopeless. Parameters span ~10 orders of magnitude in SI units,
so difference steps and step-size norms are scaled per parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import ModelKind, peak_background_values, sinc
from .model import G2Curve, StageMode

__all__ = [
    "FitModel",
    "FitResult",
    "FitReport",
    "param_names",
    "residuals",
    "fit",
    "fwhm_of_curve",
    "extract_report",
]

# (lower, upper) box constraints; strict positive lower bounds use a tiny
# floor so projection never lands exactly on an invalid value.
_POSITIVE_FLOOR = 1e-30
_BOUNDS = {
    "R": (_POSITIVE_FLOOR, math.inf),
    "theta": (-math.inf, math.inf),
    "theta0": (_POSITIVE_FLOOR, math.inf),
    "beta_env": (0.0, 1.0),
    "beta_ch": (0.0, 1.0),
    "offset": (_POSITIVE_FLOOR, math.inf),
}
# Difference steps and step norms are relative to the current parameter
# magnitude (parameters span ~10 orders of magnitude in SI units and may
# be re-expressed in other unit systems); the absolute floors below only
# matter for parameters sitting at or near zero.
_SCALES = {"R": 1e-9, "theta": 1e-9, "theta0": 1e-9, "beta_env": 1e-3, "beta_ch": 1e-3, "offset": 1e-3}
# Windows for the 11-point logarithmic pre-scan used when no init is given.
_SCAN_WINDOWS = {
    "R": (1e-5, 1e-2),
    "theta": (1e-6, 1e-2),
    "theta0": (1e-6, 1e-2),
    "beta_env": (0.05, 1.0),
    "beta_ch": (0.05, 1.0),
    "offset": (0.1, 10.0),
}


def _base_name(name: str) -> str:
    """Strip a per-stage suffix: 'beta_ch_2' -> 'beta_ch'."""
    for base in ("theta0", "theta", "beta_ch"):
        if name == base or (name.startswith(base + "_") and name[len(base) + 1 :].isdigit()):
            return base
    return name


def param_names(kind: str, stage_modes: tuple[StageMode, ...]) -> tuple[str, ...]:
    """Parameter names of a model family member, in declaration order."""
    names = ["R", "beta_env", "offset"]
    if kind == ModelKind.CASCADE:
        for j, mode in enumerate(stage_modes, start=1):
            names.append(f"theta_{j}" if mode is StageMode.FIXED_ANGLE else f"theta0_{j}")
            names.append(f"beta_ch_{j}")
    elif stage_modes:
        names.append("theta" if stage_modes[0] is StageMode.FIXED_ANGLE else "theta0")
        names.append("beta_ch")
    return tuple(names)


@dataclass(frozen=True)
class FitModel:
    """Model family member with a free/fixed split of its parameters.

    Parameter names: always ``R``, ``beta_env``, ``offset``; single-stage
    kinds add ``theta`` (fringe) or ``theta0`` (scanned) plus ``beta_ch``;
    cascade kinds add ``theta_j``/``theta0_j`` and ``beta_ch_j`` per stage
    (1-based). Wavelength and distance are known constants of the setup,
    not fit parameters. Free and fixed sets must be disjoint and jointly
    cover the model's parameters.
    """

    kind: str
    wavelength: float
    distance: float
    stage_modes: tuple[StageMode, ...] = ()
    free: tuple[str, ...] = ()
    fixed: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (self.wavelength > 0 and self.distance > 0):
            raise ValueError("wavelength and distance must be positive")
        modes = tuple(self.stage_modes)
        if self.kind == ModelKind.HBT:
            if modes:
                raise ValueError("hbt model takes no stages")
        elif self.kind == ModelKind.FRINGE:
            modes = modes or (StageMode.FIXED_ANGLE,)
            if modes != (StageMode.FIXED_ANGLE,):
                raise ValueError("fringe model requires exactly one fixed-angle stage")
        elif self.kind == ModelKind.SCANNED:
            modes = modes or (StageMode.UNIFORM_SCAN,)
            if modes != (StageMode.UNIFORM_SCAN,):
                raise ValueError("scanned model requires exactly one scanning stage")
        elif self.kind == ModelKind.CASCADE:
            if not modes:
                raise ValueError("cascade model requires at least one stage mode")
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "stage_modes", modes)
        object.__setattr__(self, "free", tuple(self.free))
        names = self.param_names()
        free_set, fixed_set = set(self.free), set(self.fixed)
        if free_set & fixed_set:
            raise ValueError("free and fixed parameter sets must be disjoint")
        unknown = (free_set | fixed_set) - set(names)
        if unknown:
            raise ValueError(f"unknown parameter: {sorted(unknown)[0]}")
        missing = set(names) - free_set - fixed_set
        if missing:
            raise ValueError(f"missing parameter: {sorted(missing)[0]}")
        for name, value in self.fixed.items():
            bad = _violated_bound(name, float(value))
            if bad:
                raise ValueError(bad)

    def param_names(self) -> tuple[str, ...]:
        return param_names(self.kind, self.stage_modes)

    def _stage_param_names(self, j: int) -> tuple[str, str]:
        mode = self.stage_modes[j]
        angle = "theta" if mode is StageMode.FIXED_ANGLE else "theta0"
        if self.kind == ModelKind.CASCADE:
            return f"{angle}_{j + 1}", f"beta_ch_{j + 1}"
        return angle, "beta_ch"

    def full_params(self, free_values: np.ndarray) -> dict:
        params = dict(self.fixed)
        for name, value in zip(self.free, np.atleast_1d(free_values)):
            params[name] = float(value)
        return params

    def curve(self, params: dict, dx: np.ndarray) -> np.ndarray:
        """Model g2 values at separations dx for a full parameter dict."""
        dx = np.asarray(dx, dtype=np.float64)
        k = 2.0 * math.pi / self.wavelength
        u = k * params["R"] * dx / (2.0 * self.distance)
        s = sinc(u)
        out = 1.0 + params["beta_env"] * s * s
        for j, mode in enumerate(self.stage_modes):
            angle_name, beta_name = self._stage_param_names(j)
            angle = params[angle_name]
            if mode is StageMode.FIXED_ANGLE:
                f = np.cos(k * angle * dx)
            else:
                f = sinc(k * angle * dx / 2.0)
            out = out * (1.0 + 0.5 * params[beta_name] * f)
        return params["offset"] * out


def _violated_bound(name: str, value: float) -> str | None:
    lo, hi = _BOUNDS[_base_name(name)]
    if not math.isfinite(value):
        return f"{name} must be finite"
    if value < lo or value > hi:
        base = _base_name(name)
        if base in ("beta_env", "beta_ch"):
            return f"{name} must be within [0, 1]"
        return f"{name} must be positive"
    return None


def _check_bounds(model: FitModel, params: dict) -> None:
    for name in model.param_names():
        bad = _violated_bound(name, params[name])
        if bad:
            raise ValueError(bad)


def residuals(
    model: FitModel, params: dict, data: G2Curve, weighted: bool = True
) -> np.ndarray:
    """Weighted residuals (g2_i - model_i) / se_i (or raw differences in
    unweighted mode). Raises for out-of-bounds parameters or, in weighted
    mode, for non-positive se."""
    _check_bounds(model, params)
    diff = data.g2 - model.curve(params, data.dx)
    if not weighted:
        return diff
    if np.any(data.se <= 0):
        raise ValueError("weighted residuals require positive se everywhere")
    return diff / data.se


@dataclass(frozen=True)
class FitResult:
    """Outcome of one fit: fitted values, uncertainties and diagnostics.

    ``converged`` means the step-size or rss-change criterion was met;
    otherwise ``message`` says what happened (iteration cap, singular
    normal equations, exhausted damping). ``peak_to_background`` and
    ``fwhm`` are read off the fitted curve sampled on the data grid and
    are NaN when the grid cannot support the extraction.
    """

    model: FitModel
    params: dict
    stderr: dict
    rss: float
    iterations: int
    converged: bool
    message: str
    weighted: bool
    peak_to_background: float
    fwhm: float

    def fitted_curve(self, dx: np.ndarray | None = None) -> G2Curve:
        if dx is None:
            raise ValueError("dx grid required")
        g2 = self.model.curve(self.params, dx)
        meta = {"model": f"fit:{self.model.kind}", **{k: v for k, v in self.params.items()}}
        return G2Curve(dx=dx, g2=g2, se=np.zeros_like(g2), meta=meta)


def _fd_step(name: str, value: float) -> float:
    return 1e-6 * max(abs(value), _SCALES[_base_name(name)])


def _jacobian(model: FitModel, x: np.ndarray, data: G2Curve, weighted: bool) -> np.ndarray:
    """Central-difference Jacobian of the residual vector w.r.t. the free
    parameters. The model curve is evaluated slightly outside the box if
    a parameter sits on its bound; the formula extends smoothly."""
    m = data.n_points
    p = x.size
    jac = np.empty((m, p))
    for i, name in enumerate(model.free):
        h = _fd_step(name, x[i])
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        rp = _residuals_unchecked(model, model.full_params(xp), data, weighted)
        rm = _residuals_unchecked(model, model.full_params(xm), data, weighted)
        jac[:, i] = (rp - rm) / (2.0 * h)
    return jac


def _residuals_unchecked(model, params, data, weighted):
    diff = data.g2 - model.curve(params, data.dx)
    return diff / data.se if weighted else diff


def _clamp(model: FitModel, x: np.ndarray) -> np.ndarray:
    out = x.copy()
    for i, name in enumerate(model.free):
        lo, hi = _BOUNDS[_base_name(name)]
        out[i] = min(max(out[i], lo), hi)
    return out


def _prescan_init(model: FitModel, data: G2Curve, weighted: bool) -> np.ndarray:
    """Default initialization: per free parameter, scan 11 logarithmic
    points across its window (linear for the bounded betas' upper end is
    irrelevant at this resolution) and keep the best rss, one coordinate
    sweep in declaration order. The fringe model has local minima in
    theta, which this coarse scan steps over."""
    values = {}
    for name in model.free:
        lo, hi = _SCAN_WINDOWS[_base_name(name)]
        values[name] = math.sqrt(lo * hi)
    for name in model.free:
        lo, hi = _SCAN_WINDOWS[_base_name(name)]
        best, best_rss = values[name], math.inf
        for trial in np.geomspace(lo, hi, 11):
            params = model.full_params(
                np.array([values[n] if n != name else trial for n in model.free])
            )
            r = _residuals_unchecked(model, params, data, weighted)
            rss = float(r @ r)
            if rss < best_rss:
                best, best_rss = float(trial), rss
        values[name] = best
    return np.array([values[n] for n in model.free])


def fit(
    model: FitModel,
    data: G2Curve,
    init: dict | None = None,
    weighted: bool | None = None,
    max_iterations: int = 500,
) -> FitResult:
    """Damped least-squares fit of ``model`` to ``data``.

    ``init`` maps free parameter names to starting values (defaults to a
    log-grid pre-scan). ``weighted`` defaults to True when every se is
    positive. Convergence: relative step < 1e-10 or relative rss change
    < 1e-12, capped at ``max_iterations``.
    """
    if weighted is None:
        weighted = bool(np.all(data.se > 0))
    elif weighted and not np.all(data.se > 0):
        raise ValueError("weighted fit requires positive se everywhere")
    n_free = len(model.free)
    if data.n_points < n_free:
        raise ValueError("underdetermined: fewer data points than free parameters")
    if init is None:
        x = _prescan_init(model, data, weighted)
    else:
        missing = [n for n in model.free if n not in init]
        if missing:
            raise ValueError(f"init missing free parameter: {missing[0]}")
        x = np.array([float(init[n]) for n in model.free])
    x = _clamp(model, x)
    _check_bounds(model, model.full_params(x))

    r = _residuals_unchecked(model, model.full_params(x), data, weighted)
    rss = float(r @ r)
    lam = 1e-3
    converged = False
    message = "iteration limit reached"
    iterations = 0

    if n_free == 0:
        converged, message = True, "nothing to fit (no free parameters)"

    for iterations in (range(1, max_iterations + 1) if n_free else ()):
        jac = _jacobian(model, x, data, weighted)
        hess = jac.T @ jac
        grad = jac.T @ r
        diag = np.diag(hess).copy()
        diag[diag <= 0] = 1.0
        accepted = False
        while lam <= 1e12:
            try:
                step = np.linalg.solve(hess + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                return _finish(
                    model, data, x, r, rss, iterations, False,
                    "singular normal equations", weighted,
                )
            x_try = _clamp(model, x + step)
            r_try = _residuals_unchecked(model, model.full_params(x_try), data, weighted)
            rss_try = float(r_try @ r_try)
            if rss_try <= rss:
                accepted = True
                rel_step = max(
                    abs(x_try[i] - x[i]) / max(abs(x[i]), _SCALES[_base_name(n)])
                    for i, n in enumerate(model.free)
                )
                rel_drop = (rss - rss_try) / max(rss, 1e-300)
                x, r, rss = x_try, r_try, rss_try
                lam = max(lam / 3.0, 1e-12)
                if rel_step < 1e-10:
                    converged, message = True, "relative step below 1e-10"
                elif rel_drop < 1e-12:
                    converged, message = True, "relative rss change below 1e-12"
                break
            lam *= 10.0
        if not accepted:
            converged, message = False, "damping exhausted without an acceptable step"
            break
        if converged:
            break

    return _finish(model, data, x, r, rss, iterations, converged, message, weighted)


def _finish(model, data, x, r, rss, iterations, converged, message, weighted) -> FitResult:
    params = model.full_params(x)
    stderr = {name: 0.0 for name in model.param_names()}
    if model.free:
        jac = _jacobian(model, x, data, weighted)
        dof = max(data.n_points - len(model.free), 1)
        try:
            cov = np.linalg.inv(jac.T @ jac) * (rss / dof)
            for i, name in enumerate(model.free):
                stderr[name] = float(math.sqrt(max(cov[i, i], 0.0)))
        except np.linalg.LinAlgError:
            for name in model.free:
                stderr[name] = float("nan")
    fitted = G2Curve(
        dx=data.dx, g2=model.curve(params, data.dx), se=np.zeros(data.n_points)
    )
    try:
        peak, background = peak_background_values(fitted)
        ratio = peak / background
    except ValueError:
        ratio = float("nan")
    try:
        width = fwhm_of_curve(fitted)
    except ValueError:
        width = float("nan")
    return FitResult(
        model=model,
        params=params,
        stderr=stderr,
        rss=rss,
        iterations=iterations,
        converged=converged,
        message=message,
        weighted=weighted,
        peak_to_background=ratio,
        fwhm=width,
    )


def fwhm_of_curve(curve: G2Curve) -> float:
    """Full width at half maximum of the central bunching peak.

    The half level sits midway between the peak (inner 5% of the span)
    and the tail background (outer 10%); crossings are located by linear
    interpolation between grid points, walking outward from the peak. A
    single-sided grid doubles its one crossing distance.
    """
    peak, background = peak_background_values(curve)
    level = background + 0.5 * (peak - background)
    adx = np.abs(curve.dx)
    span = float(adx.max())
    inner = np.where(adx <= 0.05 * span)[0]
    i_peak = inner[np.argmax(curve.g2[inner])]
    x, y = curve.dx, curve.g2

    def cross(direction: int) -> float | None:
        i = i_peak
        while 0 <= i + direction < x.size:
            j = i + direction
            if y[j] < level:
                t = (level - y[i]) / (y[j] - y[i])
                return float(x[i] + t * (x[j] - x[i]))
            i = j
        return None

    right = cross(+1)
    left = cross(-1)
    if right is not None and left is not None:
        return right - left
    anchor = float(x[i_peak])
    if right is not None:
        return 2.0 * (right - anchor)
    if left is not None:
        return 2.0 * (anchor - left)
    raise ValueError("no half-maximum crossing on the grid")


@dataclass(frozen=True)
class FitReport:
    """Serializable summary of a fit against its data."""

    result: FitResult
    data: G2Curve

    def to_text(self) -> str:
        res = self.result
        lines = [
            "# fit report",
            f"model: {res.model.kind}",
            f"converged: {str(res.converged).lower()}",
            f"iterations: {res.iterations}",
            f"status: {res.message}",
            f"points: {self.data.n_points}",
            f"weighted: {str(res.weighted).lower()}",
            "# params",
        ]
        for name in res.model.param_names():
            kind = "free" if name in res.model.free else "fixed"
            lines.append(
                f"{name} {res.params[name]:.9e} {res.stderr[name]:.3e} {kind}"
            )
        lines += [
            "# metrics",
            f"rss {res.rss:.9e}",
            f"peak_to_background {res.peak_to_background:.6g}",
            f"fwhm_m {res.fwhm:.6g}",
        ]
        return "\n".join(lines) + "\n"


def extract_report(result: FitResult, data: G2Curve) -> FitReport:
    """Report with the parameter table, fitted-curve metrics and samples."""
    return FitReport(result=result, data=data)
