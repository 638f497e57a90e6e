"""Command-line entry points for every pipeline stage.

One subcommand per stage: synth, train, denoise, evaluate, bench,
inspect, rate-serve. Exit codes by failure class: 2 for configuration
problems, 3 for data problems, 4 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .baselines import METHODS, get_denoiser, load_param_file
from .data import (
    BScan,
    Domain,
    PhantomConfig,
    crop_to_record,
    load_bscan,
    pad_to_multiple,
    phantom_batch,
    save_bscan,
)
from .errors import ConfigError, DataError, DespeckleError, FormatError
from .inspection import (
    extract_feature_maps,
    generator_layer_names,
    skeletonize_layers,
    thickness_profile,
    write_overlay_grid,
    write_thickness_csv,
)
from .metrics import benchmark_runtime, evaluate_methods
from .model import (
    DiscriminatorSpec,
    GeneratorSpec,
    TrainConfig,
    build_denoiser,
    discriminator_score_report,
    load_checkpoint,
    train,
    write_loss_log,
)

log = logging.getLogger("despeckle")

MANIFEST_NAME = "manifest.json"
SAMPLE_FILES = {"clean": Domain.CLEAN, "hn": Domain.HIGH_NOISE, "ln": Domain.LOW_NOISE}


def _comma_list(raw: str) -> list[str]:
    return [item.strip() for item in raw.split(",") if item.strip()]


def _comma_ints(raw: str) -> list[int]:
    try:
        return [int(item) for item in _comma_list(raw)]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {raw!r}") from exc


# -- synth -----------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    if args.config:
        cfg = PhantomConfig.from_json(args.config)
    else:
        cfg = PhantomConfig(height=args.height, width=args.width)
    out = Path(args.out)
    samples = phantom_batch(cfg, args.n, seed0=args.seed)
    entries = []
    for i, sample in enumerate(samples):
        sample_dir = out / f"sample_{i:03d}"
        save_bscan(sample_dir / "clean.png", sample.clean, bit_depth=16)
        save_bscan(sample_dir / "hn.png", sample.hn, bit_depth=16)
        save_bscan(sample_dir / "ln.png", sample.ln, bit_depth=16)
        entries.append(
            {
                "id": sample_dir.name,
                "seed": sample.seed,
                "frames_hn": sample.frames_hn,
                "frames_ln": sample.frames_ln,
            }
        )
    manifest = {
        "schema": "phantom-set/v1",
        "n": len(entries),
        "seed": args.seed,
        "config": {
            "height": cfg.height,
            "width": cfg.width,
            "n_layers": cfg.n_layers,
            "curvature": cfg.curvature,
            "reflectivities": list(cfg.reflectivities),
            "frames_hn": cfg.frames_hn,
            "frames_ln": cfg.frames_ln,
            "seed": cfg.seed,
        },
        "samples": entries,
    }
    with open(out / MANIFEST_NAME, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    log.info("wrote %d phantom triples to %s", len(entries), out)
    return 0


# -- dataset loading shared by train/evaluate/bench -------------------------


def _sample_dirs(root: Path) -> list[Path]:
    with open(root / MANIFEST_NAME) as fh:
        manifest = json.load(fh)
    return [root / entry["id"] for entry in manifest["samples"]]


def _load_images(path: str, domain: Domain) -> list[BScan]:
    """Images for one noise domain: a phantom-set directory (uses the
    manifest plus per-sample ``hn.png``/``ln.png``) or a flat directory
    of single-channel images."""
    root = Path(path)
    if not root.is_dir():
        raise DataError(f"{root} is not a directory")
    name = {Domain.HIGH_NOISE: "hn.png", Domain.LOW_NOISE: "ln.png"}[domain]
    if (root / MANIFEST_NAME).is_file():
        return [load_bscan(d / name, domain) for d in _sample_dirs(root)]
    files = sorted(p for p in root.iterdir() if p.suffix.lower() in (".png", ".tif", ".tiff"))
    if not files:
        raise DataError(f"no images found under {root}")
    return [load_bscan(p, domain) for p in files]


def _load_pairs(path: str) -> list[tuple[BScan, BScan]]:
    """(hn, ln) pairs from a phantom-set directory."""
    root = Path(path)
    if not (root / MANIFEST_NAME).is_file():
        raise DataError(f"{root} has no {MANIFEST_NAME}; run synth first")
    pairs = []
    for d in _sample_dirs(root):
        pairs.append(
            (load_bscan(d / "hn.png", Domain.HIGH_NOISE), load_bscan(d / "ln.png", Domain.LOW_NOISE))
        )
    return pairs


# -- train -------------------------------------------------------------------


def _load_spec(path: str, cls):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read spec file {path}: {exc}") from exc
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"bad field in {path}: {exc}") from exc


def cmd_train(args: argparse.Namespace) -> int:
    cfg = TrainConfig.from_json_file(args.config) if args.config else TrainConfig()
    gen_spec = _load_spec(args.gen_spec, GeneratorSpec) if args.gen_spec else None
    disc_spec = _load_spec(args.disc_spec, DiscriminatorSpec) if args.disc_spec else None
    hn_set = _load_images(args.hn, Domain.HIGH_NOISE)
    ln_set = _load_images(args.ln, Domain.LOW_NOISE)
    out = Path(args.out)
    resume = load_checkpoint(args.resume) if args.resume else None
    log.info(
        "training on %d HN / %d LN images for %d epochs (mode=%s)",
        len(hn_set), len(ln_set), cfg.epochs, cfg.mode,
    )
    checkpoints = train(
        hn_set, ln_set, cfg,
        gen_spec=gen_spec, disc_spec=disc_spec,
        checkpoint_dir=out, resume_from=resume,
    )
    write_loss_log(checkpoints[-1].loss_history, out / "loss_log.csv")
    log.info("wrote %d checkpoints and loss_log.csv to %s", len(checkpoints), out)
    return 0


# -- denoise -----------------------------------------------------------------


def _checkpoint_denoiser(ckpt_path: str):
    """Single-argument denoiser from a checkpoint, padding as needed."""
    ckpt = load_checkpoint(ckpt_path)
    run = build_denoiser(ckpt)
    multiple = ckpt.gen_spec.divisor

    def denoise(scan: BScan) -> BScan:
        padded, record = pad_to_multiple(scan, multiple)
        return crop_to_record(run(padded), record)

    denoise.__name__ = "checkpoint_denoiser"
    return denoise


def cmd_denoise(args: argparse.Namespace) -> int:
    scan = load_bscan(args.infile, Domain.HIGH_NOISE)
    out = _checkpoint_denoiser(args.ckpt)(scan)
    save_bscan(args.outfile, out, bit_depth=args.bit_depth)
    log.info("denoised %s -> %s", args.infile, args.outfile)
    return 0


# -- evaluate / bench ---------------------------------------------------------


def _build_method_table(names: list[str], ckpt: str | None, params_path: str | None):
    params = load_param_file(params_path) if params_path else {}
    table = {}
    for name in names:
        if name == "raw":
            table[name] = lambda scan: scan
        elif name == "ours":
            if not ckpt:
                raise ConfigError("method 'ours' needs --ckpt")
            table[name] = _checkpoint_denoiser(ckpt)
        elif name in METHODS:
            table[name] = get_denoiser(name, params.get(name))
        else:
            raise ConfigError(
                f"unknown method {name!r}; options: raw, {', '.join(METHODS)}, ours"
            )
    return table


def cmd_evaluate(args: argparse.Namespace) -> int:
    methods = _build_method_table(_comma_list(args.methods), args.ckpt, args.params)
    pairs = _load_pairs(args.pairs)
    log.info("evaluating %d methods on %d pairs", len(methods), len(pairs))
    report = evaluate_methods(pairs, methods, subpixel=not args.no_subpixel)
    report.to_csv(args.out)
    if args.scores and args.ckpt:
        ckpt = load_checkpoint(args.ckpt)
        score_report = discriminator_score_report(
            ckpt, [hn for hn, _ in pairs], [ln for _, ln in pairs]
        )
        score_report.to_csv(args.scores)
        log.info("wrote discriminator score report to %s", args.scores)
    log.info("wrote metric report to %s", args.out)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    methods = _build_method_table(_comma_list(args.methods), args.ckpt, args.params)
    images = [hn for hn, _ in _load_pairs(args.pairs)]
    if args.limit:
        images = images[: args.limit]
    log.info("timing %d methods over %d images x%d", len(methods), len(images), args.repeats)
    report = benchmark_runtime(methods, images, repeats=args.repeats)
    report.to_csv(args.out)
    log.info("wrote runtime report to %s", args.out)
    return 0


# -- inspect -------------------------------------------------------------------


def cmd_inspect(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(args.ckpt)
    scan = load_bscan(args.infile, Domain.HIGH_NOISE)
    layer = args.layer
    names = generator_layer_names(ckpt.gen_spec)
    if layer not in names:
        raise ConfigError(f"unknown layer {layer!r}; options: {', '.join(names)}")
    padded, _ = pad_to_multiple(scan, ckpt.gen_spec.divisor)
    feature_set = extract_feature_maps(ckpt, padded, layer)
    out = Path(args.out)
    channels = _comma_ints(args.channels) if args.channels else None
    grid_path = out / f"{layer.replace(' ', '_')}.png"
    write_overlay_grid(grid_path, padded, feature_set, channels=channels, alpha=args.alpha)
    log.info("wrote overlay grid to %s", grid_path)
    if args.thickness_channel is not None:
        upscaled = feature_set.upscaled_to(padded.height, padded.width)
        skel = skeletonize_layers(padded, upscaled.maps[args.thickness_channel])
        csv_path = out / f"thickness_channel_{args.thickness_channel}.csv"
        write_thickness_csv(skel, csv_path)
        profile = thickness_profile(skel, scale_um_per_px=args.scale_um)
        log.info(
            "channel %d thickness: mean %.2f %s over %d columns (csv: %s)",
            args.thickness_channel,
            profile.mean if profile.mean is not None else float("nan"),
            profile.unit,
            profile.values.size,
            csv_path,
        )
    return 0


# -- rate-serve ------------------------------------------------------------------


def cmd_rate_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .rating import build_app

    data_dir = args.data_dir or os.environ.get("DATA_DIR")
    if not data_dir:
        raise ConfigError("pass --data-dir or set DATA_DIR")
    port = args.port or int(os.environ.get("PORT", "8000"))
    app = build_app(data_dir)
    log.info("serving rating API on %s:%d (data: %s)", args.host, port, data_dir)
    uvicorn.run(app, host=args.host, port=port, log_level="info")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="despeckle",
        description="OCT b-scan despeckling: synthesis, training, denoising, "
        "evaluation, inspection, and the blind rating service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate phantom HN/LN/clean triples")
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=0, help="base seed (sample i uses seed+i)")
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--config", help="phantom config JSON (overrides --height/--width)")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("train", help="train the translation model")
    p.add_argument("--hn", required=True, help="high-noise image directory")
    p.add_argument("--ln", required=True, help="low-noise image directory")
    p.add_argument("--out", required=True, help="checkpoint/log directory")
    p.add_argument("--config", help="training config JSON")
    p.add_argument("--gen-spec", help="generator architecture JSON")
    p.add_argument("--disc-spec", help="discriminator architecture JSON")
    p.add_argument("--resume", help="checkpoint to resume from")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("denoise", help="denoise one image with a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--bit-depth", type=int, default=16, choices=(8, 16))
    p.set_defaults(fn=cmd_denoise)

    p = sub.add_parser("evaluate", help="metric report over a phantom set")
    p.add_argument("--pairs", required=True, help="phantom-set directory")
    p.add_argument("--methods", default="raw,median,wavelet,bilateral,nlmeans,bm3d,ours")
    p.add_argument("--ckpt", help="checkpoint for method 'ours'")
    p.add_argument("--params", help="baseline parameter JSON")
    p.add_argument("--out", required=True, help="metric CSV path")
    p.add_argument("--scores", help="also write a discriminator score CSV here")
    p.add_argument("--no-subpixel", action="store_true", help="integer-only registration")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("bench", help="runtime report over a phantom set")
    p.add_argument("--pairs", required=True, help="phantom-set directory")
    p.add_argument("--methods", default="median,wavelet,bilateral,nlmeans,bm3d,ours")
    p.add_argument("--ckpt", help="checkpoint for method 'ours'")
    p.add_argument("--params", help="baseline parameter JSON")
    p.add_argument("--out", required=True, help="runtime CSV path")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--limit", type=int, help="cap the number of images")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("inspect", help="feature-map overlays and thickness CSV")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--layer", required=True, help='stage name, e.g. "residual block 6"')
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--channels", help="comma-separated channel indices (default: all)")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument(
        "--thickness-channel",
        type=int,
        help="also skeletonize this channel and write a thickness CSV",
    )
    p.add_argument("--scale-um", type=float, help="micrometers per pixel for thickness stats")
    p.set_defaults(fn=cmd_inspect)

    p = sub.add_parser("rate-serve", help="run the blind rating HTTP service")
    p.add_argument("--data-dir", help="rating data directory (or env DATA_DIR)")
    p.add_argument("--port", type=int, help="listen port (or env PORT, default 8000)")
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(fn=cmd_rate_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return 2
    except (DataError, FormatError, OSError) as exc:
        log.error("data error: %s", exc)
        return 3
    except DespeckleError as exc:
        log.error("runtime error: %s", exc)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
