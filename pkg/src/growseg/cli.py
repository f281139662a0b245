"""Command-line entry points.

    segcli run --config cfg.json [--k 20 --seed 0 ...]
    segcli stage <name> --config cfg.json [...]
    segcli gen-synthetic --spec gen.json [--output-dir DIR]

Exit codes: 0 success, 2 configuration error, 3 pipeline error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, GrowSegError
from .pipeline import STAGES, PipelineConfig, run_pipeline, run_stage
from .synthetic import SyntheticSpec, write_synthetic


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="pipeline config JSON")
    parser.add_argument("--input-header", help="override input header path")
    parser.add_argument("--input-data", help="override input data path")
    parser.add_argument("--output-dir", help="override output directory")
    parser.add_argument("--asf-radius", type=int, help="alternating filter radius")
    parser.add_argument("--scales", type=int, help="gradient scale count")
    parser.add_argument("--quant-levels", type=int, help="quantization levels for minima")
    parser.add_argument("--min-seed-size", type=int, help="smallest kept seed, in pixels")
    parser.add_argument("--red-band", type=int, help="red band index for NDVI")
    parser.add_argument("--nir-band", type=int, help="NIR band index for NDVI")
    parser.add_argument("--k", type=int, help="number of label groups")
    parser.add_argument("--restarts", type=int, help="k-means restarts")
    parser.add_argument("--seed", type=int, dest="prng_seed", help="PRNG seed")
    parser.add_argument("--neighborhood", choices=["moore8", "vn4"], help="automaton neighborhood")
    parser.add_argument("--max-iters", type=int, help="automaton iteration cap")
    parser.add_argument("--rgb-bands", type=_csv_ints, help="overlay bands, e.g. 3,2,1")
    parser.add_argument("--overlay-color", type=_csv_ints, help="contour color, e.g. 255,255,0")


def _overrides(args: argparse.Namespace) -> dict:
    keys = (
        "input_header",
        "input_data",
        "output_dir",
        "asf_radius",
        "scales",
        "quant_levels",
        "min_seed_size",
        "red_band",
        "nir_band",
        "k",
        "restarts",
        "prng_seed",
        "neighborhood",
        "max_iters",
        "rgb_bands",
        "overlay_color",
    )
    return {key: getattr(args, key) for key in keys}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="segcli", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the full pipeline")
    _add_override_flags(run_p)

    stage_p = sub.add_parser("stage", help="run a single stage")
    stage_p.add_argument("name", choices=list(STAGES))
    _add_override_flags(stage_p)

    gen_p = sub.add_parser("gen-synthetic", help="generate a synthetic test image")
    gen_p.add_argument("--spec", required=True, help="generator spec JSON")
    gen_p.add_argument("--output-dir", default=".", help="where to write the image files")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = PipelineConfig.from_json(args.config, _overrides(args))
            manifest = run_pipeline(config)
            print(json.dumps({"output_dir": config.output_dir, "outputs": sorted(manifest.output_hashes)}))
        elif args.command == "stage":
            config = PipelineConfig.from_json(args.config, _overrides(args))
            info = run_stage(args.name, config)
            print(json.dumps({"stage": args.name, "info": info}, sort_keys=True))
        else:
            spec = SyntheticSpec.from_json(args.spec)
            paths = write_synthetic(spec, args.output_dir)
            print(json.dumps(paths, sort_keys=True))
    except ConfigError as exc:
        print(f"segcli: config error: {exc}", file=sys.stderr)
        return 2
    except (GrowSegError, OSError, ValueError) as exc:
        print(f"segcli: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
