"""End-to-end analysis: resample, complexity, detection, VAD, networks, render.

:func:`analyze_recording` works in memory; :func:`run_pipeline` reads a log
from disk and writes the full artifact bundle.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import shutil
import tempfile
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .complexity import ComplexitySeries, ScalePolicy, complexity_series, team_average
from .ingest import parse_badge_log, resample_recording
from .instability import detect_instabilities, segment_phases
from .model import DataError, Recording, format_time, parse_time
from .netmetrics import build_network, utterances_from_activity
from .render import AVERAGE_LABEL, emit_figure_set, render_heatmap
from .vad import detect_voice_activity


@dataclass
class PipelineConfig:
    input: str | None = None
    format: str | None = None
    resample: float = 5.0
    min_bin_coverage: float = 0.5
    dc_window: int = 12
    dc_step: int = 1
    scale: str = "global"
    detect_window: int = 60
    sd_mult: float = 2.0
    merge_gap: float = 60.0
    min_defined: int = 30
    per_member: bool = False
    vad_threshold: float = 0.40
    vad_floor_margin: float = 1.5
    vad_floor_window: float = 60.0
    response_window: int = 5
    directed: bool = False
    annotations: str | None = None
    out_dir: str | None = None
    seed: int | None = None

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in obj.items() if k in known})


@dataclass
class AnalysisResult:
    config: PipelineConfig
    recording: Recording
    resampled: Recording
    per_member: list[ComplexitySeries]
    average: ComplexitySeries
    events: list
    segmentation: object
    activity: object
    networks: list
    member_events: dict = field(default_factory=dict)


class StageError(Exception):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def analyze_recording(recording: Recording, config: PipelineConfig | None = None) -> AnalysisResult:
    cfg = config or PipelineConfig()
    scale = ScalePolicy.parse(cfg.scale)
    with _Stage("complexity"):
        resampled = resample_recording(recording, cfg.resample, cfg.min_bin_coverage)
        per_member = [complexity_series(resampled.series[m], cfg.dc_window, cfg.dc_step, scale)
                      for m in resampled.members]
        average = team_average(per_member)
    with _Stage("detect"):
        events = detect_instabilities(average, cfg.detect_window, cfg.sd_mult,
                                      cfg.merge_gap, cfg.min_defined)
        member_events = {}
        if cfg.per_member:
            member_events = {s.member: detect_instabilities(s, cfg.detect_window, cfg.sd_mult,
                                                            cfg.merge_gap, cfg.min_defined)
                             for s in per_member}
    with _Stage("vad"):
        activity = detect_voice_activity(recording, cfg.vad_threshold,
                                         cfg.vad_floor_margin, cfg.vad_floor_window)
    with _Stage("networks"):
        segmentation = segment_phases(events, (activity.start, activity.end))
        utts = utterances_from_activity(activity)
        networks = [build_network(activity, ph, cfg.response_window, utterances=utts)
                    for ph in segmentation.phases]
    return AnalysisResult(cfg, recording, resampled, per_member, average, events,
                          segmentation, activity, networks, member_events)


# --- serialisation ----------------------------------------------------------

def _cell(v) -> str:
    return "" if np.isnan(v) else repr(float(v))


def complexity_csv(series) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["member", "window_end_t", "F", "D", "DC"])
    for s in series:
        for t, f, d, dc in zip(s.window_end_times, s.f, s.d, s.dc):
            w.writerow([s.member, format_time(t), _cell(f), _cell(d), _cell(dc)])
    return buf.getvalue()


def read_complexity_csv(path) -> tuple[list[ComplexitySeries], ComplexitySeries]:
    """Read member rows and the ``Average`` rows back; the average is
    recomputed when the file has none."""
    rows: dict[str, list] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                vals = [float(row[k]) if row[k] != "" else np.nan for k in ("F", "D", "DC")]
                rows.setdefault(row["member"], []).append((parse_time(row["window_end_t"]), *vals))
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: bad complexity row ({exc})") from None
    if not rows:
        raise DataError(f"{path}: no complexity rows")

    def series(name, data):
        a = np.array(data, dtype=float).reshape(-1, 4)
        return ComplexitySeries(name, a[:, 0], a[:, 1], a[:, 2], a[:, 3])

    members = [series(m, d) for m, d in rows.items() if m != AVERAGE_LABEL]
    if AVERAGE_LABEL in rows:
        average = series(AVERAGE_LABEL, rows[AVERAGE_LABEL])
    else:
        average = team_average(members)
    return members, average


def detect_json(events, segmentation, member_events=None) -> dict:
    out = {
        "events": [{"t": format_time(e.time), "dc": e.peak_dc, "mean": e.window_mean,
                    "sd": e.window_sd} for e in events],
        "phases": [{"start": format_time(a), "end": format_time(b)}
                   for a, b in segmentation.phases],
    }
    if member_events:
        out["per_member"] = {m: [{"t": format_time(e.time), "dc": e.peak_dc} for e in evs]
                             for m, evs in member_events.items()}
    return out


def activity_jsonl(activity) -> str:
    return "".join(json.dumps({"t": format_time(activity.start + i), "active": sorted(a)}) + "\n"
                   for i, a in enumerate(activity.active))


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_annotations(path) -> list[tuple[str, float, float]]:
    """Known task segments: a JSON list of ``{label, start, end}`` objects, or
    an object holding such a list under ``segments`` (the simulator sidecar)."""
    with open(path) as fh:
        obj = json.load(fh)
    if isinstance(obj, dict):
        obj = obj.get("segments", [])
    try:
        return [(str(a["label"]), parse_time(a["start"]), parse_time(a["end"])) for a in obj]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad annotation entry ({exc})") from None


def write_bundle(result: AnalysisResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    (out_dir / "complexity.csv").write_text(complexity_csv([*result.per_member, result.average]))
    (out_dir / "detect.json").write_text(
        _dump(detect_json(result.events, result.segmentation, result.member_events)))
    (out_dir / "vad.jsonl").write_text(activity_jsonl(result.activity))
    net_dir = out_dir / "networks"
    net_dir.mkdir(exist_ok=True)
    dots = emit_figure_set(result.networks)
    for k, (net, dot) in enumerate(zip(result.networks, dots)):
        (net_dir / f"phase_{k:02d}.json").write_text(_dump(net.to_dict(directed=cfg.directed)))
        (net_dir / f"phase_{k:02d}.dot").write_text(dot)
    annotations = result.recording.meta.get("annotations", ())
    if cfg.annotations:
        annotations = load_annotations(cfg.annotations)
    (out_dir / "heatmap.svg").write_text(
        render_heatmap(result.per_member, result.average, result.events, annotations))


def _resolved_paths(config: PipelineConfig) -> dict:
    """Absolute input paths, so a manifest can be replayed from anywhere."""
    out = {"input": str(Path(config.input).resolve())}
    if config.annotations:
        out["annotations"] = str(Path(config.annotations).resolve())
    return out


def run_pipeline(config: PipelineConfig) -> Path:
    """Analyse ``config.input`` and write the bundle to ``config.out_dir``.

    Outputs are assembled in a scratch directory and moved into place only
    when every stage succeeded.
    """
    if not config.input or not config.out_dir:
        raise DataError("run_pipeline needs both input and out_dir")
    out_dir = Path(config.out_dir)
    with _Stage("ingest"):
        recording = parse_badge_log(config.input, config.format)
        digest = file_sha256(config.input)
    result = analyze_recording(recording, config)

    out_dir.parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=".teampulse-", dir=out_dir.parent))
    try:
        with _Stage("render"):
            write_bundle(result, scratch)
            manifest = {
                "tool": "teampulse",
                "version": __version__,
                "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                "input": str(Path(config.input).resolve()),
                "input_sha256": digest,
                "config": {**asdict(config), **_resolved_paths(config)},
                "events": len(result.events),
                "phases": len(result.segmentation),
            }
            (scratch / "manifest.json").write_text(_dump(manifest))
        if out_dir.exists():
            shutil.rmtree(out_dir)
        scratch.rename(out_dir)
    except BaseException:
        shutil.rmtree(scratch, ignore_errors=True)
        raise
    return out_dir


def config_from_manifest(path) -> PipelineConfig:
    with open(path) as fh:
        manifest = json.load(fh)
    cfg = PipelineConfig.from_dict(manifest["config"])
    if cfg.input and Path(cfg.input).exists():
        digest = file_sha256(cfg.input)
        if digest != manifest.get("input_sha256"):
            raise DataError(f"input {cfg.input} no longer matches the manifest hash")
    return cfg
