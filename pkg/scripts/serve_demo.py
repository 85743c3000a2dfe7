#!/usr/bin/env python3
"""Serve the edit API over the demo scene (builds the scene if missing).

The trajectory-studio frontend talks to this:
    python scripts/serve_demo.py --port 8900
"""
import argparse
from pathlib import Path

import uvicorn

from worldmotion.service import create_app


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--demo-dir", type=Path, default=Path("demo"))
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8900)
    args = parser.parse_args()

    demo = args.demo_dir
    if not (demo / "bundle").exists():
        import sys

        from make_demo_scene import main as make_scene

        sys.argv = ["make_demo_scene.py", "--out", str(demo)]
        make_scene()

    print(f"scene bundle:  {demo / 'bundle'}")
    print(f"body asset:    {demo / 'asset.body.bin'}")
    print("create a session with:")
    print(f'  curl -X POST http://{args.host}:{args.port}/sessions '
          f'-H "Content-Type: application/json" '
          f'-d \'{{"bundle_path": "{demo / "bundle"}", "asset_path": "{demo / "asset.body.bin"}"}}\'')
    uvicorn.run(create_app(demo / "bank"), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
