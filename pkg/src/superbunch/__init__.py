"""Thermal-light speckle statistics: HBT bunching, two-photon super
bunching via cascaded incoherent channel pairs, Monte Carlo simulation
and model fitting."""

from .analytic import (
    AnalyticModel,
    ModelKind,
    evaluate_curve,
    fringe_period,
    g2_cascade,
    g2_fringe,
    g2_hbt,
    g2_scanned,
    peak_to_background,
    sinc,
)
from .correlator import CorrAccumulator, ComparisonReport, compare_curves, merge
from .fitting import FitModel, FitReport, FitResult, extract_report, fit, fwhm_of_curve, residuals
from .model import (
    CascadeConfig,
    ChannelStage,
    G2Curve,
    OpticalConfig,
    StageMode,
    angle_from_degrees,
    angle_to_degrees,
    validate_config,
)
from .scenario import Scenario, ScenarioResult, builtin_scenarios, get_scenario, run_scenario
from .speckle import (
    McRunConfig,
    SourceModel,
    SpeckleRealization,
    apply_channel_stages,
    draw_source_phases,
    draw_stage_samples,
    propagate_field,
    run_simulation,
    substream,
    synthesize_realization,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticModel",
    "CascadeConfig",
    "ChannelStage",
    "ComparisonReport",
    "CorrAccumulator",
    "FitModel",
    "FitReport",
    "FitResult",
    "G2Curve",
    "McRunConfig",
    "ModelKind",
    "OpticalConfig",
    "Scenario",
    "ScenarioResult",
    "SourceModel",
    "SpeckleRealization",
    "StageMode",
    "angle_from_degrees",
    "angle_to_degrees",
    "apply_channel_stages",
    "builtin_scenarios",
    "compare_curves",
    "draw_source_phases",
    "draw_stage_samples",
    "evaluate_curve",
    "extract_report",
    "fit",
    "fringe_period",
    "fwhm_of_curve",
    "g2_cascade",
    "g2_fringe",
    "g2_hbt",
    "g2_scanned",
    "get_scenario",
    "merge",
    "peak_to_background",
    "propagate_field",
    "residuals",
    "run_scenario",
    "run_simulation",
    "sinc",
    "substream",
    "synthesize_realization",
    "validate_config",
]
