"""Command-line driver: ``teampulse <stage> ...``.

Every option can also be set through an environment variable named
``TEAMPULSE_`` plus the option's destination in upper case, for example
``TEAMPULSE_VAD_THRESHOLD=0.5``.  Exit codes: 0 success, 1 usage error,
2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .complexity import ScalePolicy, complexity_series, team_average
from .ingest import parse_badge_log, resample_recording, write_badge_log
from .instability import detect_instabilities, segment_phases
from .model import DataError, format_time, parse_time
from .netmetrics import InteractionNetwork, build_network, utterances_from_activity
from .pipeline import (
    PipelineConfig,
    StageError,
    activity_jsonl,
    complexity_csv,
    config_from_manifest,
    detect_json,
    load_annotations,
    read_complexity_csv,
    run_pipeline,
)
from .render import emit_figure_set, render_heatmap
from .synth import ScenarioSpec, benchmark_scenario, generate_recording
from .vad import detect_voice_activity

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
ENV_PREFIX = "TEAMPULSE_"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- option groups --------------------------------------------------------

def _add_input(p):
    p.add_argument("input", nargs="?", help="badge log (.jsonl or .csv)")
    p.add_argument("--format", choices=("jsonl", "csv"), help="override format detection")


def _add_complexity(p):
    g = p.add_argument_group("complexity")
    g.add_argument("--resample", type=float, default=5.0, help="bin width in seconds (default 5)")
    g.add_argument("--min-bin-coverage", type=float, default=0.5)
    g.add_argument("--dc-window", type=int, default=12)
    g.add_argument("--dc-step", type=int, default=1)
    g.add_argument("--scale", default="global", help="global | window | fixed:<lo>:<hi>")


def _add_detect(p):
    g = p.add_argument_group("detection")
    g.add_argument("--detect-window", type=int, default=60)
    g.add_argument("--sd-mult", type=float, default=2.0)
    g.add_argument("--merge-gap", type=float, default=60.0)
    g.add_argument("--min-defined", type=int, default=30)
    g.add_argument("--per-member", action="store_true",
                   help="also detect on every member's own series")


def _add_vad(p):
    g = p.add_argument_group("voice activity")
    g.add_argument("--vad-threshold", type=float, default=0.40)
    g.add_argument("--vad-floor-margin", type=float, default=1.5)
    g.add_argument("--vad-floor-window", type=float, default=60.0)


def _add_networks(p):
    g = p.add_argument_group("networks")
    g.add_argument("--response-window", type=int, default=5)
    g.add_argument("--directed", action="store_true", help="also export directed response counts")


def _apply_env(parser: argparse.ArgumentParser) -> None:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                _apply_env(sub)
            continue
        if not action.option_strings or action.dest == "help":
            continue
        raw = os.environ.get(ENV_PREFIX + action.dest.upper())
        if raw is None:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            action.default = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                action.default = action.type(raw)
            except ValueError:
                parser.error(f"bad value {raw!r} in {ENV_PREFIX}{action.dest.upper()}")
        else:
            action.default = raw


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="teampulse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a synthetic badge log and its ground truth")
    p.add_argument("--scenario", help="scenario JSON; default is the four-regime benchmark")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--members", type=int, default=7)
    p.add_argument("--minutes", type=float, default=30.0)
    p.add_argument("--out", required=True, help="log path (.jsonl or .csv)")

    p = sub.add_parser("ingest", help="validate a log and print a summary")
    _add_input(p)
    p.add_argument("--out", help="write the canonical, sorted log here")

    p = sub.add_parser("vad", help="per-second speaker sets as JSONL")
    _add_input(p)
    _add_vad(p)
    p.add_argument("--out")

    p = sub.add_parser("complexity", help="F, D and DC per window as CSV")
    _add_input(p)
    _add_complexity(p)
    p.add_argument("--out")

    p = sub.add_parser("detect", help="critical instabilities and phases as JSON")
    p.add_argument("complexity_csv")
    _add_detect(p)
    p.add_argument("--log", help="badge log whose span the phases should cover")
    p.add_argument("--start", help="span start (ISO time); default: first window")
    p.add_argument("--end", help="span end (ISO time); default: last window")
    p.add_argument("--out")

    p = sub.add_parser("networks", help="per-phase energy/engagement networks as JSON")
    _add_input(p)
    p.add_argument("--detect", required=True, help="JSON written by 'detect'")
    _add_vad(p)
    _add_networks(p)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("render", help="heatmap SVG and network DOT files")
    p.add_argument("--complexity", required=True, help="CSV written by 'complexity'")
    p.add_argument("--detect", help="JSON written by 'detect'")
    p.add_argument("--networks", help="directory written by 'networks'")
    p.add_argument("--annotations", help="known task segments JSON")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("analyze", help="run every stage and write a bundle")
    _add_input(p)
    _add_complexity(p)
    _add_detect(p)
    _add_vad(p)
    _add_networks(p)
    p.add_argument("--annotations", help="known task segments JSON")
    p.add_argument("--manifest", help="re-run the configuration recorded in a manifest")
    p.add_argument("--out-dir", required=True)

    _apply_env(parser)
    return parser


# --- commands ---------------------------------------------------------------

def _need_input(args):
    if not args.input:
        raise DataError("an input log is required")
    return parse_badge_log(args.input, args.format)


def cmd_simulate(args):
    if args.scenario:
        with open(args.scenario) as fh:
            spec = ScenarioSpec.from_dict(json.load(fh))
    else:
        spec = benchmark_scenario(args.seed, args.members, args.minutes)
    rec, truth = generate_recording(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_badge_log(rec, out)
    truth_path = out.with_name(out.stem + ".truth.json")
    sidecar = {"scenario": spec.to_dict(), **truth.to_dict()}
    truth_path.write_text(json.dumps(sidecar, indent=2) + "\n")
    print(json.dumps({"log": str(out), "truth": str(truth_path),
                      "transitions": sidecar["transitions"]}))


def cmd_ingest(args):
    rec = _need_input(args)
    if args.out:
        write_badge_log(rec, args.out)
    summary = {
        "members": list(rec.members),
        "start": format_time(rec.start),
        "end": format_time(rec.end),
        "sample_period": rec.sample_period,
        "samples": len(rec.series[rec.members[0]]),
        "coverage": {m: float(1 - rec.series[m].missing.mean()) for m in rec.members},
    }
    print(json.dumps(summary, indent=2))


def cmd_vad(args):
    rec = _need_input(args)
    act = detect_voice_activity(rec, args.vad_threshold, args.vad_floor_margin,
                                args.vad_floor_window)
    _emit(activity_jsonl(act), args.out)


def _config(args) -> PipelineConfig:
    known = vars(PipelineConfig())
    return PipelineConfig(**{k: v for k, v in vars(args).items() if k in known})


def cmd_complexity(args):
    rec = _need_input(args)
    scale = ScalePolicy.parse(args.scale)
    r = resample_recording(rec, args.resample, args.min_bin_coverage)
    per = [complexity_series(r.series[m], args.dc_window, args.dc_step, scale) for m in r.members]
    _emit(complexity_csv([*per, team_average(per)]), args.out)


def cmd_detect(args):
    members, avg = read_complexity_csv(args.complexity_csv)
    events = detect_instabilities(avg, args.detect_window, args.sd_mult, args.merge_gap,
                                  args.min_defined)
    if args.log:
        rec = parse_badge_log(args.log)
        span = (rec.start, rec.start + int(rec.end - rec.start))
    else:
        span = (parse_time(args.start) if args.start else float(avg.window_end_times[0]),
                parse_time(args.end) if args.end else float(avg.window_end_times[-1]))
    inside = [e for e in events if span[0] < e.time < span[1]]
    seg = segment_phases(inside, span)
    member_events = None
    if args.per_member:
        member_events = {s.member: detect_instabilities(s, args.detect_window, args.sd_mult,
                                                        args.merge_gap, args.min_defined)
                         for s in members}
    _emit(json.dumps(detect_json(inside, seg, member_events), indent=2) + "\n", args.out)


def _load_phases(path):
    with open(path) as fh:
        obj = json.load(fh)
    try:
        return [(parse_time(p["start"]), parse_time(p["end"])) for p in obj["phases"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad phases ({exc})") from None


def cmd_networks(args):
    rec = _need_input(args)
    act = detect_voice_activity(rec, args.vad_threshold, args.vad_floor_margin,
                                args.vad_floor_window)
    utts = utterances_from_activity(act)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for k, phase in enumerate(_load_phases(args.detect)):
        net = build_network(act, phase, args.response_window, utterances=utts)
        (out / f"phase_{k:02d}.json").write_text(
            json.dumps(net.to_dict(directed=args.directed), indent=2) + "\n")


def cmd_render(args):
    members, avg = read_complexity_csv(args.complexity)
    events = []
    if args.detect:
        with open(args.detect) as fh:
            events = [parse_time(e["t"]) for e in json.load(fh)["events"]]
    annotations = load_annotations(args.annotations) if args.annotations else ()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "heatmap.svg").write_text(render_heatmap(members, avg, events, annotations))
    if args.networks:
        files = sorted(Path(args.networks).glob("phase_*.json"))
        nets = [InteractionNetwork.from_dict(json.loads(f.read_text())) for f in files]
        for f, dot in zip(files, emit_figure_set(nets)):
            (out / (f.stem + ".dot")).write_text(dot)


def cmd_analyze(args):
    if args.manifest:
        cfg = config_from_manifest(args.manifest)
        cfg.out_dir = args.out_dir
    else:
        if not args.input:
            raise DataError("an input log is required")
        cfg = _config(args)
    out = run_pipeline(cfg)
    print(json.dumps({"bundle": str(out)}))


COMMANDS = {
    "simulate": cmd_simulate, "ingest": cmd_ingest, "vad": cmd_vad,
    "complexity": cmd_complexity, "detect": cmd_detect, "networks": cmd_networks,
    "render": cmd_render, "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except StageError as exc:
        print(f"teampulse {args.command}: {exc}", file=sys.stderr)
        data = isinstance(exc.cause, (DataError, OSError))
        return EXIT_DATA if data else EXIT_INTERNAL
    except (DataError, OSError) as exc:
        print(f"teampulse {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"teampulse {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
