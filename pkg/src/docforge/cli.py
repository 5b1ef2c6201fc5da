"""Command-line entry points.

Subcommands: synth, distort, train, eval, probe {gate,agm,bias,hist},
report. The DOCFORGE_SEED environment variable overrides the global seed
wherever one applies.
"""

import argparse
import json
import os
import sys
from pathlib import Path


def _env_seed(default=None):
    raw = os.environ.get("DOCFORGE_SEED")
    return int(raw) if raw not in (None, "") else default


def cmd_synth(args) -> int:
    from .synth import CorpusConfig, build_dataset

    config = CorpusConfig.from_json(args.config) if args.config else CorpusConfig()
    seed = _env_seed(args.seed)
    if seed is not None:
        config.global_seed = seed
    manifest = build_dataset(config, args.out)
    print(f"wrote {len(manifest.entries)} entries under {args.out}")
    return 0


def cmd_distort(args) -> int:
    from .distortions import battery, distort, distort_bytes, transform_mask
    from .jpeg import encode_jpeg
    from .synth import load_manifest, load_mask
    from PIL import Image
    import numpy as np

    manifest = load_manifest(args.manifest)
    specs = battery(args.battery)
    root = manifest.root
    n = 0
    for entry in manifest.entries:
        pixels = np.asarray(Image.open(root / entry.path).convert("RGB"))
        mask = load_mask(root / entry.mask)
        for spec in specs:
            if spec.kind == "clean":
                continue
            stem = Path(entry.path).with_suffix("")
            out_path = root / f"{stem}.{spec.code}.jpg"
            if spec.reencodes:
                data = distort_bytes(pixels, spec)
            else:
                data = encode_jpeg(distort(pixels, spec), 100)
            out_path.write_bytes(data)
            moved = transform_mask(mask, spec, pixels.shape)
            Image.fromarray(moved * 255).save(root / f"{stem}.{spec.code}.mask.png")
            n += 1
    print(f"wrote {n} distorted images beside originals")
    return 0


def cmd_train(args) -> int:
    from .harness import TrainConfig, train

    config = TrainConfig.from_json(args.config)
    seed = _env_seed()
    if seed is not None:
        config.seed = seed
    ckpt = train(config)
    print(f"checkpoint: {ckpt}")
    return 0


def cmd_eval(args) -> int:
    from .distortions import battery
    from .harness import evaluate

    specs = battery(args.battery)
    report = evaluate(args.ckpt, args.manifest, specs, split=args.split,
                      max_images=args.max_images)
    report.to_json(args.report)
    report.to_csv(Path(args.report).with_suffix(".csv"))
    print(report.to_text())
    return 0


def cmd_probe(args) -> int:
    from .distortions import battery, default_battery
    from .harness import (MetricsReport, agm_probe, bias_statistic,
                          corpus_hash, gate_ablation, score_histogram)
    from .synth import load_manifest

    manifest = load_manifest(args.manifest)
    specs = battery(args.battery) if args.battery else default_battery()
    report = MetricsReport(corpus_hash=corpus_hash(manifest))
    if args.kind == "gate":
        report.gate_table = gate_ablation(args.ckpt, manifest, specs,
                                          split=args.split,
                                          max_images=args.max_images)
    elif args.kind == "agm":
        report.agm = agm_probe(args.ckpt, manifest, split=args.split,
                               gate_modes=("adaptive", "fixed_1", "fixed_0"))
    elif args.kind == "bias":
        report.delta_sc = bias_statistic(args.ckpt, manifest, split=args.split,
                                         max_images=args.max_images)
    elif args.kind == "hist":
        report.histograms = score_histogram(args.ckpt, manifest, specs,
                                            split=args.split,
                                            max_images=args.max_images)
    out = args.report or f"probe_{args.kind}.json"
    report.to_json(out)
    print(json.dumps(json.loads(Path(out).read_text()), indent=1)[:2000])
    return 0


def cmd_report(args) -> int:
    from .harness import MetricsReport

    in_dir = Path(args.input)
    paths = sorted(in_dir.glob("*.json")) if in_dir.is_dir() else [in_dir]
    for path in paths:
        try:
            report = MetricsReport.from_json(path)
        except (TypeError, KeyError, json.JSONDecodeError):
            continue
        print(f"== {path.name}")
        if args.format == "text":
            print(report.to_text())
        elif args.format == "csv":
            out = path.with_suffix(".csv")
            report.to_csv(out)
            print(f"wrote {out}")
        elif args.format == "plots":
            written = report.render_plots(path.parent / "plots")
            for w in written:
                print(f"wrote {w}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="docforge",
                                description="document forgery localization toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic corpus")
    s.add_argument("--config", default=None)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("distort", help="write distorted copies of a corpus")
    s.add_argument("--manifest", required=True)
    s.add_argument("--battery", required=True)
    s.set_defaults(func=cmd_distort)

    s = sub.add_parser("train", help="train from a JSON config")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="run the distortion battery")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--battery", default=None)
    s.add_argument("--report", required=True)
    s.add_argument("--split", default="test")
    s.add_argument("--max-images", type=int, default=None)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("probe", help="analysis probes")
    s.add_argument("kind", choices=("gate", "agm", "bias", "hist"))
    s.add_argument("--ckpt", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--battery", default=None)
    s.add_argument("--report", default=None)
    s.add_argument("--split", default="test")
    s.add_argument("--max-images", type=int, default=None)
    s.set_defaults(func=cmd_probe)

    s = sub.add_parser("report", help="render saved reports")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--format", choices=("text", "csv", "plots"), default="text")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
