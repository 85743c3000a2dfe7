#!/usr/bin/env python3
"""Build the synthetic mannequin asset and write it to assets/.

The asset is fully procedural, so this script reproduces the shipped file
bit-for-bit.
"""
import argparse
from pathlib import Path

from worldmotion.body import save_asset
from worldmotion.mannequin import build_mannequin


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path,
                        default=Path(__file__).resolve().parent.parent / "assets" / "mannequin.body.bin")
    parser.add_argument("--json", action="store_true", help="write the pure-JSON twin instead")
    args = parser.parse_args()

    asset = build_mannequin()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_asset(args.out, asset, json_variant=args.json)
    print(f"{args.out}: {asset.vertex_count} vertices, {len(asset.faces)} faces, "
          f"{asset.joint_count} joints, {asset.shape_count} shape directions")


if __name__ == "__main__":
    main()
