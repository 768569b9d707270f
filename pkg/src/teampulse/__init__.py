"""Dynamic-complexity heatmaps and interaction networks from badge audio volume."""

__version__ = "0.1.0"

from .complexity import (
    AnalysisWindow,
    ComplexitySeries,
    ScalePolicy,
    complexity_series,
    distribution,
    dynamic_complexity,
    fluctuation,
    team_average,
)
from .ingest import parse_badge_log, resample_series, write_badge_log
from .instability import InstabilityEvent, PhaseSegmentation, detect_instabilities, segment_phases
from .model import MISSING, DataError, Recording, VolumeSeries, align_members
from .netmetrics import (
    InteractionNetwork,
    Utterance,
    build_network,
    energy,
    engagement,
    utterances_from_activity,
)
from .pipeline import PipelineConfig, analyze_recording, run_pipeline
from .render import colormap, emit_figure_set, emit_network_dot, render_heatmap
from .synth import ScenarioSpec, benchmark_scenario, generate_recording
from .vad import SpeakerActivity, detect_voice_activity, frame_correlation

__all__ = [
    "AnalysisWindow", "ComplexitySeries", "DataError", "InstabilityEvent",
    "InteractionNetwork", "MISSING", "PhaseSegmentation", "PipelineConfig", "Recording",
    "ScalePolicy", "analyze_recording", "benchmark_scenario", "emit_figure_set", "run_pipeline",
    "ScenarioSpec", "SpeakerActivity", "Utterance", "VolumeSeries", "align_members",
    "build_network", "colormap", "complexity_series", "detect_instabilities",
    "detect_voice_activity", "distribution", "dynamic_complexity", "emit_network_dot",
    "energy", "engagement", "fluctuation", "frame_correlation", "generate_recording",
    "parse_badge_log", "render_heatmap", "resample_series", "segment_phases",
    "team_average", "utterances_from_activity", "write_badge_log",
]
