"""Command-line batch interface.

Exit codes: 0 success, 2 validation/usage error, 3 degenerate geometry,
4 I/O error. `--json` prints the machine-readable report on stdout. All
outputs are deterministic for identical inputs and configuration.
"""
from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .bank import MotionBank, MotionClip, loop_clip
from .body import load_asset
from .config import load_config
from .errors import DegenerateGeometryError, ValidationError, WorldMotionError
from .ingest import parse_bundle
from .motion import load_sequence, save_sequence
from .pipeline import edit_motion, render_motion
from .trajectory import load_keypoints
from .worldframe import load_camera

EXIT_VALIDATION = 2
EXIT_DEGENERATE = 3
EXIT_IO = 4


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, DegenerateGeometryError):
        return EXIT_DEGENERATE
    if isinstance(exc, (ValidationError, WorldMotionError)):
        return EXIT_VALIDATION
    if isinstance(exc, OSError):
        return EXIT_IO
    raise exc


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (WorldMotionError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(_exit_code(exc))

    return wrapper


def _config_options(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
                     help="TOML config; CLI flags override its values."),
        click.option("--arc-norm", type=click.Choice(["l1", "l2"]), default=None),
        click.option("--no-rescale-arc", "rescale_arc", flag_value=False, default=None,
                     help="Evaluate the raw original arc profile instead of rescaling."),
        click.option("--yaw-only", "yaw_only", flag_value=True, default=None,
                     help="Remove only the yaw of the original orientation (keeps lean)."),
        click.option("--smooth-window", "heading_smooth_window", type=int, default=None),
        click.option("--foot-window", "foot_window", type=int, default=None),
        click.option("--alignment-yaw", "alignment_yaw", type=float, default=None),
        click.option("--workers", type=int, default=None, help="0 = one per core."),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def _build_config(config_path, **overrides):
    return load_config(config_path, overrides)


@click.group()
def main():
    """World-space human-motion editing toolkit."""


@main.command()
@click.argument("bundle_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--trajectory", "trajectory_file", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="JSON keypoint list [{frame?, u, v}].")
@click.option("--asset", "asset_file", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "out_file", required=True, type=click.Path(path_type=Path),
              help="Edited motion JSON output.")
@click.option("--report", "report_file", type=click.Path(path_type=Path), default=None)
@click.option("--clip", "clip_id", default=None, help="Substitute a motion-bank clip.")
@click.option("--bank", "bank_dir", type=click.Path(path_type=Path), default=None)
@click.option("--frames", "n_frames", type=int, default=None)
@click.option("--blend-window", type=int, default=4)
@click.option("--json", "as_json", is_flag=True, help="Print the report to stdout.")
@_config_options
@handle_errors
def edit(bundle_dir, trajectory_file, asset_file, out_file, report_file, clip_id,
         bank_dir, n_frames, blend_window, as_json, config_path, **overrides):
    """Re-route a scene's motion along a drawn 2D trajectory."""
    config = _build_config(config_path, **overrides)
    bundle = parse_bundle(bundle_dir)
    asset = load_asset(asset_file)
    keypoints = load_keypoints(trajectory_file)
    clip = None
    if clip_id is not None:
        if bank_dir is None:
            raise ValidationError("--clip requires --bank")
        clip = MotionBank(bank_dir).get(clip_id)

    result = edit_motion(bundle, asset, keypoints, config, clip=clip,
                         n_frames=n_frames, blend_window=blend_window)
    out_file.parent.mkdir(parents=True, exist_ok=True)
    save_sequence(out_file, result.sequence)
    report = dict(result.report)
    report["output"] = out_file.name
    text = json.dumps(report, indent=2, sort_keys=True)
    if report_file is not None:
        report_file.parent.mkdir(parents=True, exist_ok=True)
        report_file.write_text(text)
    if as_json:
        click.echo(text)
    else:
        click.echo(f"edited {report['frames']} frames -> {out_file}")


@main.command()
@click.argument("sequence_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--asset", "asset_file", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--camera", "camera_file", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--resolution", default="512x512", help="WIDTHxHEIGHT, e.g. 512x512.")
@click.option("--json", "as_json", is_flag=True)
@_config_options
@handle_errors
def render(sequence_file, asset_file, camera_file, out_dir, resolution, as_json,
           config_path, **overrides):
    """Render depth/normal/semantic/hand/mask guidance maps for a sequence."""
    config = _build_config(config_path, **overrides)
    try:
        w, h = (int(x) for x in resolution.lower().split("x"))
    except ValueError as exc:
        raise ValidationError(f"bad --resolution {resolution!r}; expected WxH") from exc
    seq = load_sequence(sequence_file)
    asset = load_asset(asset_file)
    cam = load_camera(camera_file)
    manifest = render_motion(seq, asset, cam, (w, h), out_dir, config)
    if as_json:
        click.echo(json.dumps(manifest, indent=2, sort_keys=True))
    else:
        click.echo(f"rendered {manifest['frame_count']} frames -> {out_dir}")


@main.group()
def bank():
    """Manage the motion bank (a directory of tagged clips)."""


@bank.command("add")
@click.argument("bank_dir", type=click.Path(path_type=Path))
@click.option("--id", "clip_id", required=True)
@click.option("--motion", "motion_file", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--tags", default="", help="Comma-separated tags.")
@click.option("--source-meta", default="")
@click.option("--loopable/--no-loopable", default=True)
@click.option("--overwrite", is_flag=True)
@handle_errors
def bank_add(bank_dir, clip_id, motion_file, tags, source_meta, loopable, overwrite):
    """Store a motion file as a tagged clip."""
    seq = load_sequence(motion_file)
    clip = MotionClip(
        id=clip_id,
        tags=tuple(t.strip() for t in tags.split(",") if t.strip()),
        sequence=seq,
        loopable=loopable,
        source_meta=source_meta,
    )
    MotionBank(bank_dir).add(clip, overwrite=overwrite)
    click.echo(f"added clip {clip_id} ({seq.frame_count} frames)")


@bank.command("list")
@click.argument("bank_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--tag", default=None)
@click.option("--json", "as_json", is_flag=True)
@handle_errors
def bank_list(bank_dir, tag, as_json):
    """List clips, optionally filtered by tag (case-insensitive)."""
    store = MotionBank(bank_dir)
    clips = store.query(tag)
    if as_json:
        entries = store.entries()
        doc = {c.id: entries[c.id] for c in clips}
        click.echo(json.dumps(doc, indent=2, sort_keys=True))
    else:
        for c in clips:
            tags = ",".join(c.tags)
            click.echo(f"{c.id}\t{c.sequence.frame_count} frames\t[{tags}]")


@bank.command("loop")
@click.argument("bank_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--id", "clip_id", required=True)
@click.option("--frames", "n_frames", required=True, type=int)
@click.option("--blend-window", type=int, default=4)
@click.option("--out", "out_file", required=True, type=click.Path(path_type=Path))
@handle_errors
def bank_loop(bank_dir, clip_id, n_frames, blend_window, out_file):
    """Loop a clip to an exact frame count and write the motion file."""
    clip = MotionBank(bank_dir).get(clip_id)
    looped = loop_clip(clip, n_frames, blend_window)
    out_file.parent.mkdir(parents=True, exist_ok=True)
    save_sequence(out_file, looped)
    delta = looped.frames[-1].translation - looped.frames[0].translation
    click.echo(
        f"looped {clip_id} to {n_frames} frames; net displacement "
        f"[{delta[0]:.3f}, {delta[1]:.3f}, {delta[2]:.3f}] m"
    )


if __name__ == "__main__":
    main()
