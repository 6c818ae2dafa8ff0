"""Command-line entry points.

Every command is a thin wrapper over the library: it reads files, calls the
same functions tests call in-process, and writes artifacts.  Bad input of
any kind — missing files, malformed JSON, code errors, invalid geometry —
exits with status 2 and a one-line message on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .assembly import AssemblyError, assemble
from .citygen import (
    AssetLibrary,
    CityConfig,
    CityGenError,
    building_instantiation,
    city_instantiation,
    generate_layout,
    parse_layout_input,
)
from .core import Camera, GaussianSet, InvalidParameterError
from .grammar import GrammarError, load_manifest, parse, serialize_program
from .ply import Checkpoint, PlyFormatError, load_checkpoint, save_checkpoint, write_splat_ply
from .render import RenderConfig, render
from .service import image_to_png_bytes, load_library, serve
from .trainer import DatasetError, TrainConfig, TrainError, load_dataset, train, write_metrics

INPUT_ERRORS = (
    AssemblyError,
    CityGenError,
    DatasetError,
    FileNotFoundError,
    GrammarError,
    InvalidParameterError,
    IsADirectoryError,
    KeyError,
    NotADirectoryError,
    PlyFormatError,
    TypeError,
    ValueError,
    json.JSONDecodeError,
)


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _read_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _train_config(path: "str | None") -> TrainConfig:
    if path is None:
        return TrainConfig()
    raw = _read_json(path)
    if not isinstance(raw, dict):
        raise ValueError("config must be a JSON object")
    render_raw = raw.pop("render", None)
    if render_raw is not None:
        raw["render"] = RenderConfig(**render_raw)
    return TrainConfig(**raw)


def _checkpoint_scene(ckpt: Checkpoint):
    """World-space content of a checkpoint; None when it places nothing."""
    if ckpt.instantiations is None or len(ckpt.instantiations) == 0:
        return None
    return assemble(ckpt.instantiations, ckpt.bases, ckpt.variances)


def cmd_fit(args) -> int:
    dataset = load_dataset(args.dataset)
    code_text = _read_text(args.code)
    manifest = load_manifest(_read_json(args.manifest))
    config = _train_config(args.config)
    result = train(dataset, code_text, manifest, config)
    save_checkpoint(args.out, result.checkpoint)
    write_metrics(f"{args.out}/metrics.ndjson", result.metrics)
    if result.final_psnr is not None:
        print(f"final test psnr: {result.final_psnr:.2f} dB")
    print(f"checkpoint written to {args.out}")
    return 0


def cmd_render(args) -> int:
    ckpt = load_checkpoint(args.library)
    cam = Camera.from_json(_read_json(args.camera))
    scene = _checkpoint_scene(ckpt)
    if scene is None:
        scene = GaussianSet.empty()
    out = render(scene, cam, RenderConfig())
    with open(args.out, "wb") as fh:
        fh.write(image_to_png_bytes(out.image))
    print(f"wrote {args.out}")
    return 0


def _save_building(library: AssetLibrary, ilist, variances, code_text: str,
                   out_dir: str) -> None:
    save_checkpoint(out_dir, Checkpoint(
        bases=library.bases, variances=variances, instantiations=ilist,
        code=code_text))


def cmd_assemble(args) -> int:
    library = load_library(args.library)
    code = parse(_read_text(args.code))
    dims = tuple(args.dims) if args.dims else None
    ilist, variances = building_instantiation(code, dims, library,
                                              seed=args.seed)
    _save_building(library, ilist, variances, _read_text(args.code), args.out)
    print(f"assembled {len(ilist)} instances -> {args.out}")
    return 0


def cmd_generate_building(args) -> int:
    library = load_library(args.library)
    code = library.code_by_id(args.building)
    dims = tuple(args.dims) if args.dims else None
    ilist, variances = building_instantiation(code, dims, library,
                                              seed=args.seed)
    _save_building(library, ilist, variances,
                   serialize_program(library.codes), args.out)
    print(f"generated {len(ilist)} instances -> {args.out}")
    return 0


def cmd_generate_city(args) -> int:
    library = load_library(args.library)
    payload = _read_json(args.layout)
    boundary, roads = parse_layout_input(payload)
    config = CityConfig()
    layout = generate_layout(boundary, roads, library, config, seed=args.seed)
    ilist, variances = city_instantiation(layout, library)
    save_checkpoint(args.out, Checkpoint(
        bases=library.bases, variances=variances, instantiations=ilist,
        code=serialize_program(library.codes)))
    layout_path = f"{args.out}/layout_out.json"
    with open(layout_path, "w", encoding="utf-8") as fh:
        json.dump(layout.to_json(), fh, indent=2)
    print(f"city with {len(layout.placements)} buildings, "
          f"{len(ilist)} instances -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    serve(args.library, port=args.port)
    return 0


def cmd_export(args) -> int:
    ckpt = load_checkpoint(args.library)
    scene = _checkpoint_scene(ckpt)
    if scene is None:
        raise ValueError("checkpoint has no instantiations to export")
    write_splat_ply(args.out, scene.gaussians)
    print(f"exported {len(scene)} gaussians -> {args.out}")
    return 0


def _add_dims(p: argparse.ArgumentParser):
    p.add_argument("--dims", type=float, nargs=3, default=None,
                   metavar=("L", "W", "H"),
                   help="building dimensions in meters (default: from code)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="procsplat",
        description="Procedural Gaussian-splatting asset workshop")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit shared assets to a view dataset")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--code", required=True, help="procedural code file")
    p.add_argument("--manifest", required=True, help="asset manifest JSON")
    p.add_argument("--config", default=None, help="training config JSON")
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.set_defaults(run=cmd_fit)

    p = sub.add_parser("render", help="render a checkpoint to PNG")
    p.add_argument("--library", required=True, help="checkpoint directory")
    p.add_argument("--camera", required=True, help="camera JSON file")
    p.add_argument("--out", required=True, help="output PNG path")
    p.set_defaults(run=cmd_render)

    p = sub.add_parser("assemble", help="assemble edited code into a scene")
    p.add_argument("--library", required=True, help="checkpoint directory")
    p.add_argument("--code", required=True, help="procedural code file")
    _add_dims(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.set_defaults(run=cmd_assemble)

    p = sub.add_parser("generate-building",
                       help="rebuild a library building at new size/seed")
    p.add_argument("--library", required=True, help="checkpoint directory")
    p.add_argument("--building", required=True, help="building id in library")
    _add_dims(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.set_defaults(run=cmd_generate_building)

    p = sub.add_parser("generate-city", help="generate a city from a layout")
    p.add_argument("--layout", required=True,
                   help="layout JSON: {boundary, primary_roads}")
    p.add_argument("--library", required=True, help="checkpoint directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.set_defaults(run=cmd_generate_city)

    p = sub.add_parser("serve", help="run the workshop HTTP service")
    p.add_argument("--library", required=True, help="checkpoint directory")
    p.add_argument("--port", type=int, default=8731)
    p.set_defaults(run=cmd_serve)

    p = sub.add_parser("export", help="export a checkpoint as one flat PLY")
    p.add_argument("--library", required=True, help="checkpoint directory")
    p.add_argument("--out", required=True, help="output .ply path")
    p.set_defaults(run=cmd_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except TrainError as err:
        print(f"error: training aborted at iteration {err.iteration}: {err}",
              file=sys.stderr)
        return 1
    except INPUT_ERRORS as err:
        message = str(err) or type(err).__name__
        print(f"error: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
