"""Command-line interface.

Subcommands: ``analytic`` (closed-form curve to CSV), ``simulate``
(Monte Carlo curve to CSV + metadata sidecar), ``fit`` (model fit of a
curve CSV to a report file), ``compare`` (z-score comparison of two
curves, CI-friendly exit status), ``plot`` (curves to SVG).

Dimensioned values require a unit suffix (lengths: m, mm, um, nm;
angles: deg, rad); bare numbers are rejected. Grids are
``start:stop:count``. Stage lists are comma-separated ``scan:<angle>`` /
``fixed:<angle>`` entries. The environment variable SUPERBUNCH_WORKERS
overrides any configured worker count.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import io as curve_io
from .analytic import AnalyticModel, ModelKind, evaluate_curve
from .correlator import compare_curves
from .fitting import FitModel, extract_report, fit
from .fitting import param_names as fitting_param_names
from .model import CascadeConfig, ChannelStage, OpticalConfig, angle_from_degrees
from .scenario import get_scenario
from .speckle import McRunConfig, SourceModel, run_simulation
from .svg import render_curves_svg

WORKERS_ENV = "SUPERBUNCH_WORKERS"

_LENGTH_UNITS = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9}
_ANGLE_UNITS = {"rad": 1.0, "deg": None}  # deg handled via angle_from_degrees


def _split_unit(text: str, units) -> tuple[float, str]:
    text = text.strip()
    for suffix in sorted(units, key=len, reverse=True):
        if text.endswith(suffix):
            number = text[: -len(suffix)]
            try:
                return float(number), suffix
            except ValueError:
                raise ValueError(f"malformed number in {text!r}") from None
    raise ValueError(f"dimensioned value {text!r} requires a unit suffix "
                     f"({'/'.join(sorted(units))})")


def parse_length(text: str) -> float:
    """'356um' -> 3.56e-4 (meters)."""
    value, unit = _split_unit(text, _LENGTH_UNITS)
    return value * _LENGTH_UNITS[unit]


def parse_angle(text: str) -> float:
    """'0.007deg' or '1.22e-4rad' -> radians."""
    value, unit = _split_unit(text, _ANGLE_UNITS)
    return angle_from_degrees(value) if unit == "deg" else float(value)


def parse_grid(text: str) -> np.ndarray:
    """'start:stop:count' with length units, e.g. '-8mm:8mm:161'.

    A symmetric odd-count grid is built by mirroring, so dx = 0 sits at
    the exact center and the grid is bit-symmetric.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid {text!r} must be start:stop:count")
    start, stop = parse_length(parts[0]), parse_length(parts[1])
    try:
        count = int(parts[2])
    except ValueError:
        raise ValueError(f"grid count in {text!r} must be an integer") from None
    if count < 1:
        raise ValueError("grid count must be at least 1")
    if start >= stop and count > 1:
        raise ValueError("grid start must be below stop")
    if count % 2 == 1 and start == -stop and count > 1:
        half = np.linspace(0.0, stop, (count + 1) // 2)[1:]
        return np.concatenate([-half[::-1], [0.0], half])
    return np.linspace(start, stop, count)


def parse_stages(text: str) -> CascadeConfig:
    """'scan:0.026deg,fixed:0.007deg' -> CascadeConfig."""
    text = text.strip()
    if not text or text == "none":
        return CascadeConfig.hbt()
    stages = []
    for item in text.split(","):
        mode, _, angle = item.strip().partition(":")
        if not angle:
            raise ValueError(f"stage {item!r} must be fixed:<angle> or scan:<angle>")
        if mode == "fixed":
            stages.append(ChannelStage.fixed(parse_angle(angle)))
        elif mode == "scan":
            stages.append(ChannelStage.scan(parse_angle(angle)))
        else:
            raise ValueError(f"unknown stage mode {mode!r} (use fixed or scan)")
    return CascadeConfig(tuple(stages))


_CONFIG_ALIASES = {
    "lambda": "wavelength",
    "R": "source_width",
    "z": "distance",
}
_CONFIG_KEYS = {
    "wavelength", "source_width", "distance", "dx", "stages",
    "realizations", "seed", "workers", "source_points",
}


def load_config_file(path: str) -> dict:
    raw = curve_io.read_key_values(path)
    out = {}
    for key, value in raw.items():
        key = _CONFIG_ALIASES.get(key, key)
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}: unknown config key {key!r}")
        out[key] = value
    return out


def _resolve_workers(requested: int | None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env is not None:
        workers = int(env)
        if workers < 1:
            raise ValueError(f"{WORKERS_ENV} must be at least 1")
        return workers
    return requested if requested is not None else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superbunch",
        description="Thermal-light g2 curves: closed forms, Monte Carlo, fits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_geometry(p, required=True):
        p.add_argument("--lambda", dest="wavelength", metavar="LEN",
                       required=required, help="wavelength, e.g. 780nm")
        p.add_argument("--R", dest="source_width", metavar="LEN",
                       required=required, help="full source width, e.g. 356um")
        p.add_argument("--z", dest="distance", metavar="LEN",
                       required=required, help="source-detector distance, e.g. 1.79m")

    p = sub.add_parser("analytic", help="evaluate a closed-form g2 curve to CSV")
    p.add_argument("--model", required=True, choices=ModelKind.ALL)
    add_geometry(p)
    p.add_argument("--dx", required=True, metavar="GRID", help="separation grid, e.g. -8mm:8mm:161")
    p.add_argument("--theta", metavar="ANGLE", help="crossing angle (fringe model)")
    p.add_argument("--theta0", metavar="ANGLE", help="scan range (scanned model)")
    p.add_argument("--stages", metavar="LIST", help="stage list (cascade model)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo g2 curve to CSV (+ .meta sidecar)")
    p.add_argument("--scenario", metavar="NAME", help="builtin preset; flags override its values")
    p.add_argument("--config", metavar="FILE", help="key=value config file; flags override")
    add_geometry(p, required=False)
    p.add_argument("--dx", metavar="GRID")
    p.add_argument("--stages", metavar="LIST", help="e.g. scan:0.026deg (empty for plain HBT)")
    p.add_argument("--realizations", type=int, metavar="M")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--source-points", type=int, dest="source_points")
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="fit a model to a curve CSV")
    p.add_argument("--data", required=True, metavar="CSV")
    p.add_argument("--model", required=True, choices=ModelKind.ALL)
    add_geometry(p)
    p.add_argument("--stages", metavar="LIST", help="stage modes for cascade, e.g. scan:0deg,scan:0deg"
                   " (angles ignored; count/modes matter)")
    p.add_argument("--free", required=True, metavar="NAMES", help="comma-separated free parameters")
    p.add_argument("--fixed", metavar="ASSIGNMENTS", default="",
                   help="name=value, comma-separated; unmentioned contrasts default to 1")
    p.add_argument("--init", metavar="ASSIGNMENTS", default="",
                   help="starting values for free parameters (default: log-grid pre-scan)")
    p.add_argument("--unweighted", action="store_true", help="ignore the se column")
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="z-score one curve against another")
    p.add_argument("curve_a", help="curve with standard errors (e.g. Monte Carlo)")
    p.add_argument("curve_b", help="reference curve")

    p = sub.add_parser("plot", help="render curve CSVs to a standalone SVG")
    p.add_argument("curves", nargs="+")
    p.add_argument("--labels", metavar="LIST", help="comma-separated series labels")
    p.add_argument("--out", required=True)
    return parser


def _analytic_model(args) -> AnalyticModel:
    cfg = OpticalConfig(
        wavelength=parse_length(args.wavelength),
        source_width=parse_length(args.source_width),
        distance=parse_length(args.distance),
        dx_grid=parse_grid(args.dx),
    )
    kind = args.model
    if kind == ModelKind.HBT:
        stages = CascadeConfig.hbt()
    elif kind == ModelKind.FRINGE:
        if not args.theta:
            raise ValueError("fringe model requires --theta")
        stages = CascadeConfig((ChannelStage.fixed(parse_angle(args.theta)),))
    elif kind == ModelKind.SCANNED:
        if not args.theta0:
            raise ValueError("scanned model requires --theta0")
        stages = CascadeConfig((ChannelStage.scan(parse_angle(args.theta0)),))
    else:
        if not args.stages:
            raise ValueError("cascade model requires --stages")
        stages = parse_stages(args.stages)
    return AnalyticModel(kind=kind, cfg=cfg, stages=stages)


def cmd_analytic(args) -> int:
    curve = evaluate_curve(_analytic_model(args))
    curve_io.write_curve_csv(args.out, curve)
    print(f"wrote {args.out} ({curve.n_points} points)")
    return 0


def cmd_simulate(args) -> int:
    settings: dict = {}
    if args.scenario:
        preset = get_scenario(args.scenario).run
        settings = {
            "wavelength": preset.cfg.wavelength,
            "source_width": preset.cfg.source_width,
            "distance": preset.cfg.distance,
            "dx": preset.cfg.dx_grid,
            "stages": preset.stages,
            "realizations": preset.realizations,
            "seed": preset.seed,
            "workers": preset.workers,
            "source_points": preset.source.n_points,
        }
    if args.config:
        raw = load_config_file(args.config)
        for key, text in raw.items():
            if key in ("wavelength", "source_width", "distance"):
                settings[key] = parse_length(text)
            elif key == "dx":
                settings[key] = parse_grid(text)
            elif key == "stages":
                settings[key] = parse_stages(text)
            else:
                settings[key] = int(text)
    if args.wavelength:
        settings["wavelength"] = parse_length(args.wavelength)
    if args.source_width:
        settings["source_width"] = parse_length(args.source_width)
    if args.distance:
        settings["distance"] = parse_length(args.distance)
    if args.dx:
        settings["dx"] = parse_grid(args.dx)
    if args.stages is not None:
        settings["stages"] = parse_stages(args.stages)
    if args.realizations is not None:
        settings["realizations"] = args.realizations
    if args.seed is not None:
        settings["seed"] = args.seed
    if args.workers is not None:
        settings["workers"] = args.workers
    if args.source_points is not None:
        settings["source_points"] = args.source_points

    missing = [k for k in ("wavelength", "source_width", "distance", "dx") if k not in settings]
    if missing:
        raise ValueError(f"missing required setting: {missing[0]} "
                         "(use --lambda/--R/--z/--dx flags, a config file, or --scenario)")
    run = McRunConfig(
        cfg=OpticalConfig(
            wavelength=settings["wavelength"],
            source_width=settings["source_width"],
            distance=settings["distance"],
            dx_grid=settings["dx"],
        ),
        stages=settings.get("stages", CascadeConfig.hbt()),
        source=SourceModel(n_points=settings.get("source_points", 256)),
        realizations=settings.get("realizations", 10_000),
        seed=settings.get("seed", 0),
        workers=_resolve_workers(settings.get("workers")),
    )
    if run.realizations < 20:
        print("warning: fewer than 20 realizations; se column will be all zero",
              file=sys.stderr)
    t0 = time.perf_counter()
    curve = run_simulation(run)
    wall = time.perf_counter() - t0
    curve_io.write_curve_csv(args.out, curve)
    meta = dict(curve.meta)
    meta["wall_time_s"] = f"{wall:.3f}"
    curve_io.write_key_values(str(args.out) + ".meta", meta)
    print(f"wrote {args.out} ({curve.n_points} points, M={run.realizations}, {wall:.1f}s)")
    return 0


def _parse_param_value(name: str, text: str) -> float:
    if name == "R":
        return parse_length(text)
    if name.startswith("theta"):
        return parse_angle(text)
    return float(text)  # dimensionless: betas, offset


def _parse_assignments(text: str) -> dict:
    out = {}
    if not text.strip():
        return out
    for item in text.split(","):
        name, eq, value = item.strip().partition("=")
        if not eq:
            raise ValueError(f"assignment {item!r} must be name=value")
        out[name.strip()] = value.strip()
    return out


def cmd_fit(args) -> int:
    data = curve_io.read_curve_csv(args.data)
    if args.model == ModelKind.CASCADE:
        if not args.stages:
            raise ValueError("cascade model requires --stages (modes define the parameters)")
        modes = tuple(st.mode for st in parse_stages(args.stages).stages)
    else:
        modes = ()
    free = tuple(n.strip() for n in args.free.split(",") if n.strip())
    fixed = {n: _parse_param_value(n, v) for n, v in _parse_assignments(args.fixed).items()}
    for name in fitting_param_names(args.model, modes):
        if name not in free and name not in fixed:
            if name.startswith("beta") or name == "offset":
                fixed[name] = 1.0  # ideal contrast unless the user says otherwise
            else:
                raise ValueError(f"parameter {name} must be listed in --free or --fixed")
    model = FitModel(kind=args.model, wavelength=parse_length(args.wavelength),
                     distance=parse_length(args.distance), stage_modes=modes,
                     free=free, fixed=fixed)
    if data.n_points < len(free):
        raise ValueError("underdetermined: fewer data points than free parameters")
    init_raw = _parse_assignments(args.init)
    init = {n: _parse_param_value(n, v) for n, v in init_raw.items()} or None
    weighted = False if args.unweighted else None
    result = fit(model, data, init=init, weighted=weighted)
    report = extract_report(result, data)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_text())
    print(f"wrote {args.out}")
    if not result.converged:
        print(f"fit did not converge: {result.message}", file=sys.stderr)
        return 1
    return 0


def cmd_compare(args) -> int:
    a = curve_io.read_curve_csv(args.curve_a)
    b = curve_io.read_curve_csv(args.curve_b)
    report = compare_curves(a, b)
    sys.stdout.write(report.to_text())
    return 1 if report.max_abs_z > 4 else 0


def cmd_plot(args) -> int:
    curves = [curve_io.read_curve_csv(path) for path in args.curves]
    if args.labels:
        labels = [s.strip() for s in args.labels.split(",")]
        if len(labels) != len(curves):
            raise ValueError("number of labels must match number of curves")
    else:
        labels = [os.path.basename(str(p)) for p in args.curves]
    svg = render_curves_svg(list(zip(labels, curves)))
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "compare": cmd_compare,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
