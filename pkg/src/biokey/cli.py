"""Command-line front end.

Commands run individual stages or the whole pipeline:

    biokey fingerprint FP.pgm -o out/        -> out/minutiae.txt
    biokey iris EYE.pgm -o out/              -> out/iris_features.txt
    biokey fuse MINUTIAE IRIS_FEATURES ...   -> out/template.txt
    biokey keygen TEMPLATE --key-bits 256    -> out/key.txt, out/key.hex
    biokey pipeline FP.pgm EYE.pgm ...       -> all of the above

Stage failures exit with stage-identifying codes: 2 fingerprint, 3 iris,
4 fusion/keygen.
"""

import argparse
import sys
from pathlib import Path

from . import fingerprint, fusion, imaging, iris, keygen

EXIT_FINGERPRINT = 2
EXIT_IRIS = 3
EXIT_FUSION = 4


def _fail(code: int, stage: str, exc: Exception) -> int:
    print(f"biokey: {stage} stage failed: {exc}", file=sys.stderr)
    return code


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_fingerprint(args, out: Path) -> list[fingerprint.Minutia]:
    img = imaging.load_pgm(args.fingerprint)
    minutiae, stages = fingerprint.minutiae_pipeline(
        img,
        seg_threshold=args.seg_threshold,
        gauss_sigma=args.gauss_sigma,
        gabor_f0=args.gabor_f0,
        gabor_sigma_x=args.gabor_sigma_x,
        gabor_sigma_y=args.gabor_sigma_y,
        ridge_bright=args.ridge_bright,
    )
    (out / "minutiae.txt").write_text(fingerprint.format_minutiae(minutiae))
    if args.dump_stages:
        order = ["equalized", "wiener", "segmented", "enhanced", "binarized", "thinned"]
        for i, name in enumerate(order, start=1):
            imaging.save_pgm(stages[name], out / f"fp_{i:02d}_{name}.pgm")
    return minutiae


def _run_iris(args, out: Path) -> tuple[list[int], list[int]]:
    img = imaging.load_pgm(args.iris)
    features, stages = iris.iris_pipeline(
        img,
        canny_sigma=args.canny_sigma,
        canny_high=args.canny_high,
        canny_low=args.canny_low,
        pupil_range=(args.pupil_rmin, args.pupil_rmax),
        iris_range=(args.iris_rmin, args.iris_rmax),
        meridian_deg=args.meridian_deg,
        lash_threshold=args.lash_threshold,
        reflection_threshold=args.reflection_threshold,
        radial_res=args.radial_res,
        angular_res=args.angular_res,
        log_gabor_f0=args.log_gabor_f0,
        log_gabor_sigma_ratio=args.log_gabor_sigma_ratio,
    )
    i1, i2 = fusion.quantize_iris(features.i1, features.i2)
    (out / "iris_features.txt").write_text(
        "".join(f"{a} {b}\n" for a, b in zip(i1, i2)))
    if args.dump_stages:
        order = ["edges", "boundaries", "normalized", "normalized_mask"]
        for i, name in enumerate(order, start=1):
            imaging.save_pgm(stages[name], out / f"iris_{i:02d}_{name}.pgm")
    return i1, i2


def _run_key(args, out: Path, template: list[int]) -> keygen.KeyBits:
    distinct = keygen.distinct_components(template)
    key = keygen.generate_key(template, args.key_bits)
    if len(distinct) < args.key_bits:
        print(
            f"biokey: warning: only {len(distinct)} distinct template values for a "
            f"{args.key_bits}-bit key; the trailing {args.key_bits - len(distinct)} "
            f"bits repeat one parity fill value", file=sys.stderr)
    (out / "key.txt").write_text(key.bit_string() + "\n")
    (out / "key.hex").write_text(key.hex_string() + "\n")
    return key


def _cmd_fingerprint(args) -> int:
    out = _out_dir(args)
    try:
        minutiae = _run_fingerprint(args, out)
    except Exception as exc:
        return _fail(EXIT_FINGERPRINT, "fingerprint", exc)
    print(f"wrote {out / 'minutiae.txt'} ({len(minutiae)} minutiae)")
    return 0


def _cmd_iris(args) -> int:
    out = _out_dir(args)
    try:
        i1, _ = _run_iris(args, out)
    except Exception as exc:
        return _fail(EXIT_IRIS, "iris", exc)
    print(f"wrote {out / 'iris_features.txt'} ({len(i1)} samples)")
    return 0


def _cmd_fuse(args) -> int:
    out = _out_dir(args)
    try:
        minutiae = fingerprint.parse_minutiae(Path(args.minutiae).read_text())
        pairs = [line.split() for line in Path(args.iris_features).read_text().split("\n")
                 if line.strip()]
        features = fusion.FeatureVectors(
            f1=tuple(m.x for m in minutiae),
            f2=tuple(m.y for m in minutiae),
            i1=tuple(int(p[0]) for p in pairs),
            i2=tuple(int(p[1]) for p in pairs),
        )
        template = fusion.fuse(features, args.seed)
        (out / "template.txt").write_text(fusion.format_template(template))
    except Exception as exc:
        return _fail(EXIT_FUSION, "fusion", exc)
    print(f"wrote {out / 'template.txt'} ({len(template)} components)")
    return 0


def _cmd_keygen(args) -> int:
    out = _out_dir(args)
    try:
        template = fusion.parse_template(Path(args.template).read_text())
        key = _run_key(args, out, template)
    except Exception as exc:
        return _fail(EXIT_FUSION, "keygen", exc)
    print(f"wrote {out / 'key.txt'} ({key.k} bits)")
    return 0


def _cmd_pipeline(args) -> int:
    out = _out_dir(args)
    try:
        minutiae = _run_fingerprint(args, out)
    except Exception as exc:
        return _fail(EXIT_FINGERPRINT, "fingerprint", exc)
    try:
        i1, i2 = _run_iris(args, out)
    except Exception as exc:
        return _fail(EXIT_IRIS, "iris", exc)
    try:
        features = fusion.FeatureVectors(
            f1=tuple(m.x for m in minutiae),
            f2=tuple(m.y for m in minutiae),
            i1=tuple(i1),
            i2=tuple(i2),
        )
        template = fusion.fuse(features, args.seed)
        (out / "template.txt").write_text(fusion.format_template(template))
        key = _run_key(args, out, template)
    except Exception as exc:
        return _fail(EXIT_FUSION, "fusion", exc)
    print(f"{len(minutiae)} minutiae + {len(i1)} iris samples -> "
          f"{len(template)} template components -> {key.k}-bit key")
    print(f"wrote {out / 'key.txt'} and {out / 'key.hex'}")
    return 0


def _add_common(parser):
    parser.add_argument("-o", "--out", default=".", help="output directory")
    parser.add_argument("--dump-stages", action="store_true",
                        help="also write one PGM per pipeline stage")


def _add_fingerprint_opts(parser):
    g = parser.add_argument_group("fingerprint tunables")
    g.add_argument("--seg-threshold", type=float, default=None,
                   help="block gradient-spread threshold; default 0.05 * image max")
    g.add_argument("--gauss-sigma", type=float, default=fingerprint.GAUSS_SIGMA,
                   help="pre-enhancement Gaussian sigma, pixels")
    g.add_argument("--gabor-f0", type=float, default=fingerprint.GABOR_F0,
                   help="ridge frequency, cycles/pixel")
    g.add_argument("--gabor-sigma-x", type=float, default=fingerprint.GABOR_SIGMA,
                   help="Gabor envelope sigma along the carrier, pixels")
    g.add_argument("--gabor-sigma-y", type=float, default=fingerprint.GABOR_SIGMA,
                   help="Gabor envelope sigma across the carrier, pixels")
    g.add_argument("--ridge-bright", action="store_true",
                   help="treat the brighter phase as ridges when binarizing")


def _add_iris_opts(parser):
    g = parser.add_argument_group("iris tunables")
    g.add_argument("--canny-sigma", type=float, default=iris.CANNY_SIGMA,
                   help="edge-detection smoothing sigma, pixels")
    g.add_argument("--canny-high", type=float, default=iris.CANNY_HIGH,
                   help="strong-edge threshold, fraction of max gradient")
    g.add_argument("--canny-low", type=float, default=None,
                   help="weak-edge threshold; default 0.4 * high")
    g.add_argument("--pupil-rmin", type=float, default=iris.PUPIL_RANGE[0],
                   help="minimum pupil radius, pixels")
    g.add_argument("--pupil-rmax", type=float, default=iris.PUPIL_RANGE[1],
                   help="maximum pupil radius, pixels")
    g.add_argument("--iris-rmin", type=float, default=iris.IRIS_RANGE[0],
                   help="minimum iris radius, pixels")
    g.add_argument("--iris-rmax", type=float, default=iris.IRIS_RANGE[1],
                   help="maximum iris radius, pixels")
    g.add_argument("--meridian-deg", type=float, default=iris.MERIDIAN_DEG,
                   help="iris-boundary edge window around horizontal, degrees")
    g.add_argument("--lash-threshold", type=int, default=iris.LASH_THRESHOLD,
                   help="intensities below this are masked as eyelashes")
    g.add_argument("--reflection-threshold", type=int, default=iris.REFLECTION_THRESHOLD,
                   help="intensities above this are masked as reflections")
    g.add_argument("--radial-res", type=int, default=iris.RADIAL_RES,
                   help="normalized raster rows")
    g.add_argument("--angular-res", type=int, default=iris.ANGULAR_RES,
                   help="normalized raster columns")
    g.add_argument("--log-gabor-f0", type=float, default=iris.LOG_GABOR_F0,
                   help="log-Gabor center frequency, cycles/sample")
    g.add_argument("--log-gabor-sigma-ratio", type=float, default=iris.LOG_GABOR_SIGMA_RATIO,
                   help="log-Gabor bandwidth ratio sigma/f0")


def _add_key_opts(parser):
    g = parser.add_argument_group("key tunables")
    g.add_argument("--seed", type=int, default=1, help="64-bit shuffle seed")
    g.add_argument("--key-bits", type=int, default=keygen.KEY_BITS,
                   help="number of key bits to derive")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biokey",
        description="Derive a deterministic cryptographic key from a fingerprint "
                    "image and an iris image (binary PGM inputs).")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("fingerprint", formatter_class=fmt,
                       help="extract minutiae from a fingerprint PGM")
    p.add_argument("fingerprint", help="fingerprint image (binary PGM)")
    _add_common(p)
    _add_fingerprint_opts(p)
    p.set_defaults(func=_cmd_fingerprint)

    p = sub.add_parser("iris", formatter_class=fmt,
                       help="extract texture features from an eye PGM")
    p.add_argument("iris", help="eye image (binary PGM)")
    _add_common(p)
    _add_iris_opts(p)
    p.set_defaults(func=_cmd_iris)

    p = sub.add_parser("fuse", formatter_class=fmt,
                       help="fuse minutiae and iris feature files into a template")
    p.add_argument("minutiae", help="minutiae text file (x y kind per line)")
    p.add_argument("iris_features", help="quantized iris feature file (i1 i2 per line)")
    _add_common(p)
    _add_key_opts(p)
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("keygen", formatter_class=fmt,
                       help="derive the key from a template file")
    p.add_argument("template", help="template text file (one component per line)")
    _add_common(p)
    _add_key_opts(p)
    p.set_defaults(func=_cmd_keygen)

    p = sub.add_parser("pipeline", formatter_class=fmt,
                       help="run both stages, fuse, and derive the key")
    p.add_argument("fingerprint", help="fingerprint image (binary PGM)")
    p.add_argument("iris", help="eye image (binary PGM)")
    _add_common(p)
    _add_fingerprint_opts(p)
    _add_iris_opts(p)
    _add_key_opts(p)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
