#!/usr/bin/env python3
"""Create a self-contained demo workspace: scene bundle, motion bank, trajectory.

Layout under --out (default: demo/):
    bundle/            synthetic walking scene (estimator-bundle format)
    bank/              one walking clip
    trajectory.json    a quarter-circle redraw, drawn as projected keypoints
    asset.body.bin     the mannequin
"""
import argparse
import json
from pathlib import Path

import numpy as np

from worldmotion.bank import MotionBank, MotionClip
from worldmotion.body import save_asset
from worldmotion.mannequin import build_mannequin
from worldmotion.render import project_vertices
from worldmotion.synthetic import make_bundle_dir, make_scene_camera, make_walk_sequence


def quarter_circle_keypoints(cam, n_keypoints=13, n_frames=120):
    t = np.linspace(0.0, np.pi / 2, n_keypoints)
    radius = 1.8
    pts = np.zeros((n_keypoints, 3))
    pts[:, 0] = 0.6 + radius * np.sin(t)
    pts[:, 2] = 0.6 + radius * (1.0 - np.cos(t))
    uv, _, ok = project_vertices(pts, cam)
    assert ok.all(), "quarter circle leaves the camera frustum"
    frames = np.round(np.linspace(0, n_frames - 1, n_keypoints)).astype(int)
    return [{"frame": int(f), "u": float(u), "v": float(v)} for (u, v), f in zip(uv, frames)]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("demo"))
    parser.add_argument("--frames", type=int, default=120)
    args = parser.parse_args()

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    asset = build_mannequin()
    save_asset(out / "asset.body.bin", asset)

    cam = make_scene_camera(center=np.array([2.0, 1.7, -4.5]),
                            look_at=np.array([2.0, 0.9, 1.5]))
    make_bundle_dir(out / "bundle", asset, n_frames=args.frames, speed_wobble=0.3, camera=cam)

    bank = MotionBank(out / "bank")
    walk = make_walk_sequence(asset, n_frames=40, speed=1.1)
    bank.add(MotionClip(id="walk01", tags=("walking",), sequence=walk,
                        source_meta="synthetic gait generator"), overwrite=True)

    (out / "trajectory.json").write_text(
        json.dumps(quarter_circle_keypoints(cam, n_frames=args.frames), indent=2)
    )
    print(f"demo scene written to {out}/ ({args.frames} frames)")


if __name__ == "__main__":
    main()
