"""Command-line entry point: ``probtrack <command> ...``.

Commands
    synth   generate detection and ground-truth files for a scenario
    track   run the tracker over one or more detection files
    eval    CLEAR MOT and IDF1 of a results file against ground truth
    score   NLL, energy score and sample IoU of detections matched to gt
    viz     render one frame to SVG
    replay  re-run a recorded manifest and check its outputs byte for byte

``synth``, ``track`` and ``eval`` write a JSON manifest next to their
outputs (``<output>.manifest.json``) that ``replay`` consumes.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, formats, synth
from .assignment import hungarian, iou_cost
from .config import config_from_values, load_config, load_manifest, make_manifest, sha256_file, write_manifest
from .formats import FormatError, atomic_write
from .motmetrics import evaluate, format_table
from .scoring import score_report
from .tracker import EXTENSIONS, TrackerConfig, run_sequence
from .viz import render_svg

log = logging.getLogger("probtrack")


class _Toggle(argparse.Action):
    """Collects --enable/--disable in command-line order."""

    def __call__(self, parser, namespace, value, option_string=None):
        toggles = list(getattr(namespace, self.dest) or [])
        toggles.append((option_string == "--enable", value))
        setattr(namespace, self.dest, toggles)


def _add_tracker_flags(p: argparse.ArgumentParser) -> None:
    choices = [*EXTENSIONS, "all"]
    p.add_argument("--config", type=Path, help="key = value tracker config file")
    p.add_argument("--tau1", type=float, help="ellipse filter threshold on arrival")
    p.add_argument("--tau2", type=float, help="ellipse filter threshold before the relaxed stage")
    p.add_argument("--enable", dest="toggles", action=_Toggle, choices=choices, metavar="EXT",
                   help=f"switch an extension on ({', '.join(choices)}); repeatable")
    p.add_argument("--disable", dest="toggles", action=_Toggle, choices=choices, metavar="EXT",
                   help="switch an extension off; repeatable")


def resolve_config(args) -> TrackerConfig:
    """Defaults, then --config, then --tau1/--tau2, then toggles in order."""
    cfg = load_config(args.config) if args.config else TrackerConfig()
    values = {}
    if args.tau1 is not None:
        values["tau1"] = args.tau1
    if args.tau2 is not None:
        values["tau2"] = args.tau2
    for on, name in args.toggles or []:
        for ext in EXTENSIONS if name == "all" else (name,):
            values[f"enable_{ext}"] = on
    return config_from_values(values, cfg)


def _manifest_path(out: Path, given: Path | None = None) -> Path:
    return given if given is not None else out.with_name(out.name + ".manifest.json")


def _finite(obj):
    """Replace NaN with None so the JSON stays standard."""
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_finite(obj), indent=2, sort_keys=True) + "\n"


# -- synth ----------------------------------------------------------------

def _scenario_from_args(args) -> synth.ScenarioSpec:
    if args.spec is not None:
        try:
            data = json.loads("\n".join(formats.read_lines(args.spec)))
            spec = synth.ScenarioSpec.from_dict(data)
        except (json.JSONDecodeError, TypeError, KeyError) as e:
            raise FormatError(f"bad scenario spec: {e}", args.spec) from None
    else:
        make = synth.SCENARIOS[args.scenario]
        kwargs = {}
        if args.objects is not None:
            kwargs["n_objects"] = args.objects
        if args.frames is not None:
            kwargs["frame_count"] = args.frames
        if args.scenario != "noiseless" and args.seed is not None:
            kwargs["seed"] = args.seed
        spec = make(**kwargs)
    if args.seed is not None:
        spec.seed = args.seed
    return spec


def run_synth(spec: synth.ScenarioSpec, det_path: Path, gt_path: Path, cov: str) -> None:
    gt, dets = synth.generate(spec)
    formats.write_detections(det_path, dets, cov)
    formats.write_gt(gt_path, gt)


def cmd_synth(args) -> int:
    spec = _scenario_from_args(args)
    run_synth(spec, args.det, args.gt, args.cov)
    manifest = make_manifest(
        "synth", {"scenario": spec.to_dict(), "cov": args.cov}, {},
        {"detections": args.det, "gt": args.gt}, seed=spec.seed,
    )
    write_manifest(_manifest_path(args.det, args.manifest), manifest)
    print(f"wrote {args.det} and {args.gt} ({spec.frame_count} frames, {spec.n_objects} objects)")
    return 0


# -- track ----------------------------------------------------------------

def run_track(det_path: Path, out_path: Path, cfg: TrackerConfig) -> None:
    frames = formats.load_detections(det_path)
    formats.write_results(out_path, run_sequence(frames, cfg))


def _track_one(det_path: Path, out_path: Path, manifest_path: Path, cfg: TrackerConfig, seed: int) -> Path:
    run_track(det_path, out_path, cfg)
    manifest = make_manifest("track", {}, {"detections": det_path}, {"results": out_path}, cfg, seed)
    write_manifest(manifest_path, manifest)
    return out_path


def cmd_track(args) -> int:
    cfg = resolve_config(args)
    seed = 0 if args.seed is None else args.seed
    if len(args.detections) == 1 and not args.out.is_dir():
        jobs = [(args.detections[0], args.out, _manifest_path(args.out, args.manifest))]
    else:
        if args.manifest is not None:
            raise ValueError("--manifest needs a single detection file")
        args.out.mkdir(parents=True, exist_ok=True)
        jobs = []
        for det in args.detections:
            out = args.out / f"{det.stem}.results.csv"
            jobs.append((det, out, _manifest_path(out)))
        if len({j[1] for j in jobs}) < len(jobs):
            raise ValueError("detection files share a name; results would collide")
    # one tracker per sequence, so sequences are independent
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        done = list(pool.map(lambda j: _track_one(*j, cfg, seed), jobs))
    for out in done:
        print(f"wrote {out}")
    return 0


# -- eval -----------------------------------------------------------------

def run_eval(results_path: Path, gt_path: Path, iou_thr: float) -> dict:
    return evaluate(formats.load_gt(gt_path), formats.load_results(results_path), iou_thr)


def cmd_eval(args) -> int:
    metrics = run_eval(args.results, args.gt, args.iou)
    if args.out is not None:
        atomic_write(args.out, _dump_json(metrics))
        manifest = make_manifest("eval", {"iou_thr": args.iou},
                                 {"results": args.results, "gt": args.gt}, {"metrics": args.out})
        write_manifest(_manifest_path(args.out, args.manifest), manifest)
    sys.stdout.write(_dump_json(metrics) if args.json else format_table(metrics))
    return 0


# -- score ----------------------------------------------------------------

def match_detections(det_frames, gt_frames, iou_thr: float = 0.5):
    """Per-frame Hungarian matching of detections to gt at ``IoU >= iou_thr``.

    Returns parallel lists ``(gt boxes, detections)``.
    """
    gt_by_frame = {f.frame: f.objects for f in gt_frames}
    gts, dets = [], []
    for f in det_frames:
        objects = gt_by_frame.get(f.frame, [])
        if not objects or not f.detections:
            continue
        cost = iou_cost([g.box for g in objects], [d.mean for d in f.detections],
                        track_labels=[g.label for g in objects],
                        det_labels=[d.label for d in f.detections])
        for r, c in hungarian(cost, 1.0 - iou_thr).pairs:
            gts.append(objects[r].box)
            dets.append(f.detections[c])
    return gts, dets


def cmd_score(args) -> int:
    gts, dets = match_detections(formats.load_detections(args.detections), formats.load_gt(args.gt), args.iou)
    seed = 0 if args.seed is None else args.seed
    report = score_report(gts, dets, m=args.samples, seed=seed)
    text = _dump_json(report.to_dict())
    if args.out is not None:
        atomic_write(args.out, text)
    sys.stdout.write(text)
    return 0


# -- viz ------------------------------------------------------------------

def cmd_viz(args) -> int:
    dets = formats.load_detections(args.detections) if args.detections else None
    results = formats.load_results(args.results) if args.results else None
    gt = formats.load_gt(args.gt) if args.gt else None
    if dets is None and results is None and gt is None:
        raise ValueError("viz needs at least one of --detections, --results, --gt")
    render_svg(args.out, args.frame, dets, results, gt, tuple(args.size))
    print(f"wrote {args.out}")
    return 0


# -- replay ---------------------------------------------------------------

def _target(path: str, out_dir: Path | None) -> Path:
    return Path(path) if out_dir is None else out_dir / Path(path).name


def replay(manifest: dict, out_dir: Path | None = None) -> list[str]:
    """Re-run ``manifest``; returns the output roles whose bytes differ."""
    inputs, outputs, params = manifest["inputs"], manifest["outputs"], manifest["params"]
    for role, rec in inputs.items():
        if sha256_file(rec["path"]) != rec["sha256"]:
            raise ValueError(f"input {role} ({rec['path']}) changed since the manifest was written")
    targets = {role: _target(rec["path"], out_dir) for role, rec in outputs.items()}
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    command = manifest["command"]
    if command == "synth":
        run_synth(synth.ScenarioSpec.from_dict(params["scenario"]), targets["detections"],
                  targets["gt"], params["cov"])
    elif command == "track":
        cfg = TrackerConfig.from_dict(manifest["config"])
        run_track(Path(inputs["detections"]["path"]), targets["results"], cfg)
    elif command == "eval":
        metrics = run_eval(Path(inputs["results"]["path"]), Path(inputs["gt"]["path"]), params["iou_thr"])
        atomic_write(targets["metrics"], _dump_json(metrics))
    else:
        raise ValueError(f"cannot replay command {command!r}")
    return [role for role, rec in outputs.items() if sha256_file(targets[role]) != rec["sha256"]]


def cmd_replay(args) -> int:
    manifest = load_manifest(args.manifest)
    try:
        mismatched = replay(manifest, args.out_dir)
    except KeyError as e:
        raise FormatError(f"manifest lacks field {e}", args.manifest) from None
    if mismatched:
        print(f"probtrack: replay differs for {', '.join(mismatched)}", file=sys.stderr)
        return 1
    print(f"replay of {manifest['command']} matches ({len(manifest['outputs'])} outputs)")
    return 0


# -- parser ---------------------------------------------------------------

def _size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    return w, h


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="probtrack", description="Uncertainty-aware multi-object tracking.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("synth", help="write detections and gt for a scenario")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", choices=sorted(synth.SCENARIOS))
    src.add_argument("--spec", type=Path, help="scenario JSON (ScenarioSpec fields)")
    p.add_argument("--objects", type=int, help="object count for generated scenarios")
    p.add_argument("--frames", type=int, help="frame count for generated scenarios")
    p.add_argument("--cov", choices=sorted(formats.COV_ARITY), default="diag4")
    p.add_argument("--seed", type=int)
    p.add_argument("--det", type=Path, required=True, help="detection CSV to write")
    p.add_argument("--gt", type=Path, required=True, help="gt CSV to write")
    p.add_argument("--manifest", type=Path)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("track", help="track detection files")
    p.add_argument("detections", type=Path, nargs="+")
    p.add_argument("-o", "--out", type=Path, required=True,
                   help="results CSV, or a directory when several inputs are given")
    p.add_argument("--manifest", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1, help="sequences tracked concurrently")
    _add_tracker_flags(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="MOTA/IDF1 of results against gt")
    p.add_argument("results", type=Path)
    p.add_argument("gt", type=Path)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("-o", "--out", type=Path, help="metrics JSON to write")
    p.add_argument("--manifest", type=Path)
    p.add_argument("--json", action="store_true", help="print JSON instead of the table")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("score", help="probabilistic detection scores")
    p.add_argument("detections", type=Path)
    p.add_argument("gt", type=Path)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--out", type=Path)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("viz", help="render one frame to SVG")
    p.add_argument("--frame", type=int, required=True)
    p.add_argument("--detections", type=Path)
    p.add_argument("--results", type=Path)
    p.add_argument("--gt", type=Path)
    p.add_argument("--size", type=_size, default=(640, 480), help="image size WxH")
    p.add_argument("-o", "--out", type=Path, required=True)
    p.set_defaults(func=cmd_viz)

    p = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out-dir", type=Path, help="write outputs here instead of their recorded paths")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FormatError, ValueError, OSError) as e:
        print(f"probtrack {args.command}: error: {e}", file=sys.stderr)
        return 1
