"""Command-line front end.

Four subcommands cover the batch workflow:

    synth  generate a synthetic annotated corpus (opening-axis text format)
    build  turn a dataset directory into per-scene map-stack files
    eval   score builder reconstructions against the annotations
    viz    render one stack file as per-channel grayscale images

Options may come from a JSON config file (--config); explicit flags win
over config values, config values win over defaults.  Every command is
deterministic given its inputs, config and seed.  Per-scene failures are
logged and counted, never fatal; the exit code is nonzero only on hard
errors such as unreadable inputs or a corrupt stack file.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .annotations import (
    AnnotationError,
    AnnotationSet,
    SynthParams,
    parse_cornell,
    parse_jacquard,
    scale_annotations,
    serialize_jacquard,
    synth_scene,
)
from .evaluation import BUILDERS, config_fingerprint, reconstruct_and_score
from .inference import fuse_quality
from .mapbuild import BuilderConfig, build_binned_maps
from .stackio import channel_names, load_stack, save_stack

log = logging.getLogger("graspmaps")

FORMATS = ("jacquard", "cornell", "synth")

# Source pixel dimensions assumed per dataset format unless overridden.
DATASET_DIMS = {"jacquard": (1024, 1024), "cornell": (640, 480)}

SYNTH_MANIFEST = "synth_manifest.json"


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must contain a JSON object")
    return data


def _resolve(args: argparse.Namespace, config: dict, key: str, default):
    """Flag value if given, else config-file value, else the default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _builder_config(args: argparse.Namespace, config: dict) -> BuilderConfig:
    size = _resolve(args, config, "size", (320, 320))
    return BuilderConfig(
        bins=int(_resolve(args, config, "bins", 3)),
        jaw_policy=_resolve(args, config, "jaw_policy", "minimum"),
        quality_mode=_resolve(args, config, "quality_mode", "soft"),
        decay=_resolve(args, config, "decay", "linear"),
        out_width=int(size[0]),
        out_height=int(size[1]),
        gamma_mode=_resolve(args, config, "gamma_mode", "region"),
    )


def _scene_id_from_path(rel: str, fmt: str) -> str:
    stem = rel[: -len(".txt")]
    if fmt == "jacquard" and stem.endswith("_grasps"):
        stem = stem[: -len("_grasps")]
    if fmt == "cornell" and stem.endswith("cpos"):
        stem = stem[: -len("cpos")]
    return stem.replace("/", "__")


def _scan_scenes(
    root: Path, fmt: str, image_size: tuple[int, int] | None
) -> tuple[list[tuple[str, AnnotationSet]], int]:
    """Collect (scene_id, annotations) from a dataset directory.

    Unreadable or unparseable files are logged and counted, not raised.
    Returns the scenes sorted by id plus the skip count.
    """
    if not root.is_dir():
        raise OSError(f"dataset directory not found: {root}")
    scenes: list[tuple[str, AnnotationSet]] = []
    skipped = 0
    if fmt == "synth":
        manifest_path = root / SYNTH_MANIFEST
        manifest = json.loads(manifest_path.read_text())
        width = int(manifest["image_width"])
        height = int(manifest["image_height"])
        for entry in manifest["scenes"]:
            path = root / entry["file"]
            try:
                ann = parse_jacquard(path.read_text(), width, height, entry["id"])
            except (AnnotationError, OSError) as exc:
                log.warning("skipping %s: %s", entry["file"], exc)
                skipped += 1
                continue
            scenes.append((entry["id"], ann))
    else:
        width, height = image_size if image_size else DATASET_DIMS[fmt]
        pattern = "*_grasps.txt" if fmt == "jacquard" else "pcd*cpos.txt"
        for path in sorted(root.rglob(pattern)):
            rel = path.relative_to(root).as_posix()
            scene_id = _scene_id_from_path(rel, fmt)
            try:
                text = path.read_text()
                if fmt == "jacquard":
                    ann = parse_jacquard(text, width, height, scene_id)
                else:
                    ann, nan_groups = parse_cornell(text, width, height, scene_id)
                    if nan_groups:
                        log.warning("%s: dropped %d unparseable groups", rel, nan_groups)
            except (AnnotationError, OSError, UnicodeDecodeError) as exc:
                log.warning("skipping %s: %s", rel, exc)
                skipped += 1
                continue
            scenes.append((scene_id, ann))
    scenes.sort(key=lambda pair: pair[0])
    return scenes, skipped


def _image_size_arg(args: argparse.Namespace) -> tuple[int, int] | None:
    pair = getattr(args, "image_size", None)
    if pair is None:
        return None
    return int(pair[0]), int(pair[1])


def cmd_build(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    cfg = _builder_config(args, config)
    fmt = _resolve(args, config, "format", "jacquard")
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scenes, skipped = _scan_scenes(Path(args.dataset_dir), fmt, _image_size_arg(args))
    entries = []
    for scene_id, ann in scenes:
        try:
            scaled = scale_annotations(ann, cfg.out_width, cfg.out_height)
            stack = build_binned_maps(scaled, cfg)
        except ValueError as exc:
            log.warning("skipping %s: %s", scene_id, exc)
            skipped += 1
            continue
        fname = f"{scene_id}.gmap"
        save_stack(stack, out / fname)
        entries.append(
            {"id": scene_id, "annotations": len(scaled.rects), "file": fname}
        )
    if not entries:
        log.warning("no scenes built from %s", args.dataset_dir)
    manifest = {
        "format": fmt,
        "config": cfg.to_dict(),
        "config_fingerprint": config_fingerprint(cfg),
        "scenes": entries,
        "skipped": skipped,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    cfg = _builder_config(args, config)
    fmt = _resolve(args, config, "format", "jacquard")
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    builder = _resolve(args, config, "builder", "binned")
    thresholds = [float(t) for t in _resolve(args, config, "thresholds", (0.25, 0.30, 0.50))]
    angle_tol_deg = _resolve(args, config, "angle_tol", None)
    angle_tol = math.radians(float(angle_tol_deg)) if angle_tol_deg is not None else None
    scenes, scan_skipped = _scan_scenes(Path(args.dataset_dir), fmt, _image_size_arg(args))
    scaled = [
        scale_annotations(ann, cfg.out_width, cfg.out_height) for _, ann in scenes
    ]
    report = reconstruct_and_score(scaled, cfg, builder, thresholds, angle_tol)
    report = dataclasses.replace(report, skipped=report.skipped + scan_skipped)
    text = report.to_json() + "\n"
    sys.stdout.write(text)
    if args.out is not None:
        Path(args.out).write_text(text)
    return 0


def _write_gray(path: Path, plane: np.ndarray) -> None:
    lo = float(plane.min())
    hi = float(plane.max())
    if hi > lo:
        scaled = (plane - lo) * (255.0 / (hi - lo))
    else:
        scaled = np.zeros_like(plane)
    Image.fromarray(np.round(scaled).astype(np.uint8), mode="L").save(path)


def cmd_viz(args: argparse.Namespace) -> int:
    stack = load_stack(Path(args.stack))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    groups = (stack.q, stack.cos2phi, stack.sin2phi, stack.omega, stack.o)
    planes = [group[i] for group in groups for i in range(stack.bins)]
    planes.append(stack.gamma)
    for name, plane in zip(channel_names(stack.bins), planes):
        _write_gray(out / f"{name}.png", plane)
    fused = fuse_quality(stack).planes.max(axis=0)
    _write_gray(out / "fused.png", fused)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = int(_resolve(args, config, "seed", 0))
    count = int(_resolve(args, config, "count", 10))
    size = _resolve(args, config, "size", (320, 320))
    width, height = int(size[0]), int(size[1])
    bins = int(_resolve(args, config, "bins", 3))
    rects_min = int(_resolve(args, config, "rects_min", 1))
    rects_max = int(_resolve(args, config, "rects_max", 5))
    dup_fraction = float(_resolve(args, config, "dup_fraction", 0.0))
    non_overlapping = bool(_resolve(args, config, "non_overlapping", False))
    half_jaw = bool(_resolve(args, config, "half_jaw", False))
    snap_centers = bool(_resolve(args, config, "snap_centers", False))
    if not 1 <= rects_min <= rects_max:
        raise ValueError(f"need 1 <= rects_min <= rects_max, got {rects_min}..{rects_max}")
    # Keep the synthetic center band proportional to the short image side.
    side = min(width, height)
    center_min = max(1.0, round(side * 0.125))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []
    for i in range(count):
        num_rects = int(rng.integers(rects_min, rects_max + 1))
        params = SynthParams(
            seed=seed * 1_000_003 + i,
            num_rects=num_rects,
            image_width=width,
            image_height=height,
            center_min=center_min,
            center_max=side - center_min,
            duplicate_center_fraction=dup_fraction,
            bins=bins,
            non_overlapping=non_overlapping,
            half_jaw=half_jaw,
            snap_centers=snap_centers,
        )
        scene = synth_scene(params, scene_id=f"scene{i:05d}")
        fname = f"{scene.scene_id}_grasps.txt"
        (out / fname).write_text(serialize_jacquard(scene))
        entries.append(
            {"id": scene.scene_id, "file": fname, "annotations": len(scene.rects)}
        )
    manifest = {
        "image_width": width,
        "image_height": height,
        "seed": seed,
        "count": count,
        "scenes": entries,
    }
    (out / SYNTH_MANIFEST).write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return 0


def _add_map_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bins", type=int, help="orientation bin count")
    p.add_argument("--jaw-policy", dest="jaw_policy", choices=("minimum", "maximum"))
    p.add_argument("--quality-mode", dest="quality_mode", choices=("soft", "binary"))
    p.add_argument("--decay", choices=("linear",))
    p.add_argument("--gamma-mode", dest="gamma_mode", choices=("region", "centers"))
    p.add_argument(
        "--size", type=int, nargs=2, metavar=("W", "H"), help="output map size"
    )


def _add_dataset_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("dataset_dir", help="dataset directory to scan")
    p.add_argument("--format", choices=FORMATS, help="annotation layout (default jacquard)")
    p.add_argument(
        "--image-size",
        dest="image_size",
        type=int,
        nargs=2,
        metavar=("W", "H"),
        help="source image size override for jacquard/cornell",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graspmaps",
        description="Orientation-binned grasp map construction, extraction and scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="write per-scene map stacks plus a manifest")
    _add_dataset_options(p_build)
    _add_map_options(p_build)
    p_build.add_argument("--config", help="JSON config file (flags win)")
    p_build.add_argument("--out", required=True, help="output directory")
    p_build.set_defaults(func=cmd_build)

    p_eval = sub.add_parser("eval", help="score builder reconstructions, emit JSON report")
    _add_dataset_options(p_eval)
    _add_map_options(p_eval)
    p_eval.add_argument("--builder", choices=BUILDERS)
    p_eval.add_argument("--thresholds", type=float, nargs="+", metavar="T")
    p_eval.add_argument(
        "--angle-tol",
        dest="angle_tol",
        type=float,
        help="angle criterion in degrees (off when absent)",
    )
    p_eval.add_argument("--config", help="JSON config file (flags win)")
    p_eval.add_argument("--out", help="also write the report to this file")
    p_eval.set_defaults(func=cmd_eval)

    p_viz = sub.add_parser("viz", help="render a stack file as grayscale images")
    p_viz.add_argument("stack", help="map-stack file")
    p_viz.add_argument("--out", required=True, help="output directory")
    p_viz.set_defaults(func=cmd_viz)

    p_synth = sub.add_parser("synth", help="generate a synthetic annotated corpus")
    p_synth.add_argument("--count", type=int, help="number of scenes (default 10)")
    p_synth.add_argument("--seed", type=int, help="corpus seed (default 0)")
    p_synth.add_argument("--bins", type=int, help="bin count assumed for angle gaps")
    p_synth.add_argument(
        "--size", type=int, nargs=2, metavar=("W", "H"), help="image size"
    )
    p_synth.add_argument("--rects-min", dest="rects_min", type=int)
    p_synth.add_argument("--rects-max", dest="rects_max", type=int)
    p_synth.add_argument(
        "--dup-fraction",
        dest="dup_fraction",
        type=float,
        help="fraction of rects sharing a center with a partner",
    )
    p_synth.add_argument(
        "--non-overlapping", dest="non_overlapping", action=argparse.BooleanOptionalAction
    )
    p_synth.add_argument(
        "--half-jaw", dest="half_jaw", action=argparse.BooleanOptionalAction
    )
    p_synth.add_argument(
        "--snap-centers", dest="snap_centers", action=argparse.BooleanOptionalAction
    )
    p_synth.add_argument("--config", help="JSON config file (flags win)")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
