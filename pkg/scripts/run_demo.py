#!/usr/bin/env python3
"""End-to-end demo: loop the bank clip along the drawn quarter circle and render.

Builds the demo workspace if it is missing, then runs the same code paths as
`worldmotion edit` and `worldmotion render` and prints the report.
"""
import argparse
import json
import time
from pathlib import Path

from worldmotion.bank import MotionBank
from worldmotion.body import load_asset
from worldmotion.config import EditConfig
from worldmotion.ingest import parse_bundle
from worldmotion.motion import save_sequence
from worldmotion.pipeline import edit_motion, render_motion
from worldmotion.trajectory import load_keypoints


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--demo-dir", type=Path, default=Path("demo"))
    parser.add_argument("--resolution", default="512x512")
    parser.add_argument("--workers", type=int, default=0)
    args = parser.parse_args()

    demo = args.demo_dir
    if not (demo / "bundle").exists():
        from make_demo_scene import main as make_scene  # noqa: F401  (sibling script)
        import sys

        sys.argv = ["make_demo_scene.py", "--out", str(demo)]
        make_scene()

    bundle = parse_bundle(demo / "bundle")
    asset = load_asset(demo / "asset.body.bin")
    keypoints = load_keypoints(demo / "trajectory.json")
    clip = MotionBank(demo / "bank").get("walk01")
    config = EditConfig(workers=args.workers)

    result = edit_motion(bundle, asset, keypoints, config, clip=clip,
                         n_frames=bundle.frame_count, blend_window=4)
    out = demo / "output"
    out.mkdir(exist_ok=True)
    save_sequence(out / "edited.motion.json", result.sequence)
    (out / "report.json").write_text(json.dumps(result.report, indent=2, sort_keys=True))

    w, h = (int(x) for x in args.resolution.lower().split("x"))
    start = time.perf_counter()
    manifest = render_motion(result.sequence, asset, bundle.camera, (w, h),
                             out / "render", config)
    elapsed = time.perf_counter() - start

    print(json.dumps(result.report, indent=2, sort_keys=True))
    print(f"\nrendered {manifest['frame_count']} frames at {w}x{h} "
          f"in {elapsed:.1f} s -> {out / 'render'}")


if __name__ == "__main__":
    main()
