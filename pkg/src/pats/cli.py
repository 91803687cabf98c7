"""Command-line surface: synth, match, eval, export-vis.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .core import PatsError
from .descriptors import AreaBackend, DescriptorBackend
from .imgio import load_image, read_matches, write_matches, write_pnm
from .metrics import LossConfig, evaluate
from .subdivision import run_hierarchy
from .synth import GroundTruthWarp, generate_pair
from .viz import export_overlay_svg

__all__ = ["main"]

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def parse_warp_spec(spec: str) -> GroundTruthWarp:
    """identity | scale:S | affine:a,b,c,d,tx,ty | homography:h11,...,h33"""
    kind, _, rest = spec.partition(":")
    if kind == "identity":
        return GroundTruthWarp.identity()
    values = [float(v) for v in rest.split(",")] if rest else []
    if kind == "scale":
        if len(values) != 1:
            raise PatsError("scale warp needs one value, e.g. scale:2.0")
        return GroundTruthWarp.uniform_scale(values[0])
    if kind == "affine":
        if len(values) != 6:
            raise PatsError("affine warp needs a,b,c,d,tx,ty")
        a, b, c, d, tx, ty = values
        return GroundTruthWarp.affine(np.array([[a, b], [c, d]]), (tx, ty))
    if kind == "homography":
        if len(values) != 9:
            raise PatsError("homography warp needs 9 values")
        return GroundTruthWarp.homography(np.array(values).reshape(3, 3))
    raise PatsError(f"unknown warp spec {spec!r}")


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise PatsError(f"bad size {text!r}, expected WIDTHxHEIGHT")


def _load_sidecar(path: str) -> tuple[GroundTruthWarp, tuple[int, int]]:
    with open(path) as fh:
        doc = json.load(fh)
    warp = GroundTruthWarp.from_dict(doc)
    size = tuple(doc.get("size", (0, 0)))
    return warp, (int(size[0]), int(size[1]))


def _cmd_synth(args) -> int:
    warp = parse_warp_spec(args.warp)
    size = _parse_size(args.size)
    source, target, warp = generate_pair(args.seed, size, warp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_pnm(out / "source.pgm", source.gray())
    write_pnm(out / "target.pgm", target.gray())
    sidecar = dict(warp.to_dict(), seed=args.seed, size=[size[0], size[1]])
    (out / "warp.json").write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
    print(f"wrote {out / 'source.pgm'}, {out / 'target.pgm'}, {out / 'warp.json'}")
    return 0


def _cmd_match(args) -> int:
    config = load_config(args.config) if args.config else RunConfig()
    pad = config.hierarchy.coarsest
    source = load_image(args.src, pad_multiple=pad)
    target = load_image(args.dst, pad_multiple=pad)

    if args.desc_src or args.desc_dst:
        if not (args.desc_src and args.desc_dst):
            raise PatsError("--desc-src and --desc-dst must be given together")
        desc_backend = (
            DescriptorBackend("file", args.desc_src),
            DescriptorBackend("file", args.desc_dst),
        )
    elif config.descriptor_backend == "handcrafted":
        desc_backend = DescriptorBackend("handcrafted")
    else:
        raise PatsError(
            "config descriptor backend 'file' needs --desc-src/--desc-dst"
        )

    if args.gt_warp:
        warp, _ = _load_sidecar(args.gt_warp)
        area_backend = AreaBackend("ground_truth", warp=warp)
    elif config.area_backend == "unit":
        area_backend = AreaBackend("unit")
    elif config.area_backend == "file" and args.desc_dst:
        area_backend = AreaBackend("file", path=args.desc_dst)
    else:
        raise PatsError(f"area backend {config.area_backend!r} needs --gt-warp or --desc-dst")

    result = run_hierarchy(
        source,
        target,
        descriptor_backend=desc_backend,
        area_backend=area_backend,
        hierarchy=config.hierarchy,
        sinkhorn=config.sinkhorn,
        matcher_config=config.matcher,
    )
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    ow, oh = source.effective_orig_size
    kept = [
        c
        for c in result.correspondences
        if 0 <= c.source_pos[0] <= ow and 0 <= c.source_pos[1] <= oh
    ]
    write_matches(kept, args.out)
    print(f"wrote {len(kept)} matches to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    warp, size = _load_sidecar(args.warp)
    matches = read_matches(args.matches)
    report = evaluate(
        matches,
        warp,
        precision_threshold=args.tau,
        coverage_grid=args.grid,
        source_size=size,
        target_size=size,
        loss_config=LossConfig(theta=args.theta),
    )
    Path(args.out).write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")
    print(
        f"precision={report.precision:.4f} coverage={report.coverage:.4f} "
        f"mean_epe={report.mean_epe:.3f} matches={report.match_count}"
    )
    return 0


def _cmd_export_vis(args) -> int:
    source = load_image(args.src)
    target = load_image(args.dst)
    matches = read_matches(args.matches)
    export_overlay_svg(matches, source, target, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="pats", description="Patch area transportation matching")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic pair with known warp")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", default="256x256", help="WIDTHxHEIGHT")
    p.add_argument("--warp", default="identity", help="identity | scale:S | affine:... | homography:...")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("match", help="match two images")
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--desc-src", help="PATS-DESC file for the source grid")
    p.add_argument("--desc-dst", help="PATS-DESC file for the target grid")
    p.add_argument("--config", help="RunConfig JSON")
    p.add_argument("--gt-warp", help="warp sidecar enabling the ground-truth area backend")
    p.add_argument("--out", required=True, help="matches JSONL path")
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("eval", help="score matches against a ground-truth warp")
    p.add_argument("--matches", required=True)
    p.add_argument("--warp", required=True, help="warp sidecar JSON")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--tau", type=float, default=3.0, help="precision threshold, px")
    p.add_argument("--grid", type=int, default=10, help="coverage grid cells per side")
    p.add_argument("--theta", type=float, default=32.0, help="inlier split distance, px")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("export-vis", help="write a side-by-side SVG overlay")
    p.add_argument("--matches", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_vis)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        return args.func(args)
    except (PatsError, OSError) as exc:
        print(f"pats: error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
