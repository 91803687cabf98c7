"""CLI: pats-exporter export --image I --patch-size S --out F [--model M]"""

from __future__ import annotations

import argparse
import sys

from .export import ExportSpec, export_descriptors


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pats-exporter")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="write a PATS-DESC file for an image grid")
    p.add_argument("--image", required=True, help="PGM/PPM image")
    p.add_argument("--patch-size", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default="pool:32", help="pool:<d> | constant:<d> | torchvision:<name>")
    args = parser.parse_args(argv)
    try:
        out = export_descriptors(
            ExportSpec(image=args.image, patch_size=args.patch_size, out=args.out, model=args.model)
        )
    except (ValueError, OSError) as exc:
        print(f"pats-exporter: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
