"""Command-line interface: ``pansharp synth | fuse | evaluate``.

Exit codes: 0 success, 1 parameter error, 2 I/O error, 3 degenerate input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .atrous import atrous_decompose
from .errors import PansharpError, ParameterError
from .fusion import TABLE_ORDER, FusionMethod, FusionParams, fuse
from .harness import EvalConfig, SyntheticScene, emit_report, run_evaluation, synth_scene
from .io import load_band, load_multiband, save_band, save_multiband, save_raw_f32
from .raster import MultiBandImage, RasterBand, upsample_image

log = logging.getLogger("pansharp")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _ratio(ms: MultiBandImage, pan: RasterBand) -> int:
    rh, qh = divmod(pan.height, ms.height)
    rw, qw = divmod(pan.width, ms.width)
    if qh or qw or rh != rw or rh < 1:
        raise ParameterError(
            f"PAN {pan.width}x{pan.height} is not an integer multiple of MS {ms.width}x{ms.height}")
    return rh


def _params(args, ratio: int) -> FusionParams:
    return FusionParams(levels=args.levels, boxcar_window=args.window, epsilon=args.epsilon, ratio=ratio)


def _add_fusion_options(p):
    p.add_argument("--levels", type=int, default=2, help="a trous levels (default 2)")
    p.add_argument("--window", type=int, default=None, help="boxcar window, odd (default 2*ratio+1)")
    p.add_argument("--epsilon", type=float, default=None, help="denominator floor (default 1e-6*mean(PAN))")


def cmd_synth(args) -> int:
    scene = synth_scene(args.seed, args.size, args.ratio, args.bands)
    out = Path(args.out)
    save_multiband(scene.ms, out / "ms.txt")
    save_band(scene.pan, out / "pan.pgm")
    save_multiband(scene.truth, out / "truth.txt")
    print(f"wrote {out / 'ms.txt'} ({scene.ms.band_count} bands, {scene.ms.width}x{scene.ms.height}), "
          f"{out / 'pan.pgm'} ({scene.pan.width}x{scene.pan.height}), {out / 'truth.txt'}")
    return 0


def cmd_fuse(args) -> int:
    method = FusionMethod.parse(args.method)
    ms = load_multiband(args.ms)
    pan = load_band(args.pan)
    ratio = _ratio(ms, pan)
    params = _params(args, ratio)
    fused = fuse(method, upsample_image(ms, ratio), pan, params)
    save_multiband(fused, args.out)
    if args.dump_planes:
        dump = Path(args.dump_planes)
        dump.mkdir(parents=True, exist_ok=True)
        decomp = atrous_decompose(pan, params.levels)
        for j, plane in enumerate(decomp.planes, start=1):
            save_raw_f32(plane, dump / f"w{j}.f32")
        save_raw_f32(decomp.residual, dump / f"c{decomp.levels}.f32")
    print(f"{method.label}: wrote {args.out}")
    return 0


def _parse_methods(text: str):
    if text.strip().lower() == "all":
        return TABLE_ORDER
    return tuple(FusionMethod.parse(m) for m in text.split(",") if m.strip())


def cmd_evaluate(args) -> int:
    ms = load_multiband(args.ms)
    pan = load_band(args.pan)
    ratio = _ratio(ms, pan)
    config = EvalConfig(
        methods=_parse_methods(args.methods),
        params=_params(args, ratio),
        mi_bins=args.mi_bins,
        q_window=args.q_window,
        output_dir=Path(args.save_images) if args.save_images else None,
        wald=args.wald,
    )
    reports = run_evaluation(config, SyntheticScene(ms, pan))
    emit_report(reports, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pansharp", description="Pansharpening and fusion quality evaluation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic MS/PAN scene")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--size", type=int, default=256, help="PAN size in pixels")
    p.add_argument("--ratio", type=int, default=4)
    p.add_argument("--bands", type=int, default=3)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fuse", help="fuse one MS/PAN pair")
    p.add_argument("--method", required=True, choices=[m.value for m in FusionMethod])
    p.add_argument("--ms", required=True, help="MS manifest")
    p.add_argument("--pan", required=True, help="PAN pgm")
    p.add_argument("--out", required=True, help="output manifest")
    p.add_argument("--dump-planes", metavar="DIR", help="also export PAN wavelet planes as f32 raw")
    _add_fusion_options(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("evaluate", help="fuse with several methods and write a metrics CSV")
    p.add_argument("--ms", required=True, help="MS manifest")
    p.add_argument("--pan", required=True, help="PAN pgm")
    p.add_argument("--methods", default="all", help="'all' or comma-separated list, e.g. whpm,hpm")
    p.add_argument("--mi-bins", type=int, default=64)
    p.add_argument("--q-window", type=int, default=8)
    p.add_argument("--wald", action="store_true", help="evaluate at reduced resolution")
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--save-images", metavar="DIR", help="write fused images here")
    _add_fusion_options(p)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PansharpError as exc:
        print(f"pansharp: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
