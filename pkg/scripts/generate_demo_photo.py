#!/usr/bin/env python3
"""Write the synthetic demo foot photo to disk.

A 100x100 white PNG with a pure-red 20x20 square at (20, 30), padded to an
exact byte size (default 61440, the average upload seen in deployment).
Feed it to `footscan demo-exam --image <file>` or upload it by hand.

Usage: python scripts/generate_demo_photo.py [out.png] [--bytes N]
"""

from __future__ import annotations

import argparse
from pathlib import Path

from footscan.synthetic import demo_png


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", nargs="?", default="demo-foot.png",
                        type=Path)
    parser.add_argument("--bytes", type=int, default=61_440,
                        help="exact output file size")
    args = parser.parse_args()
    payload = demo_png(args.bytes)
    args.output.write_bytes(payload)
    print(f"wrote {args.output} ({len(payload)} bytes)")


if __name__ == "__main__":
    main()
