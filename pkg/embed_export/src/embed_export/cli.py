"""Command-line interface: discover a manifest, then export embeddings."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .export import export
from .manifest import ExportError, ExportManifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Embed per-client image folders into FDSM dataset files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("discover", help="scan an images root and write a manifest")
    d.add_argument("--images", required=True, type=Path)
    d.add_argument("--model", default="mobilenet_v3_small")
    d.add_argument("--layer", default="features")
    d.add_argument("--embed-dim", type=int, default=64)
    d.add_argument("--resize", type=int, nargs=2, default=(224, 224),
                   metavar=("HEIGHT", "WIDTH"))
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True, type=Path)

    e = sub.add_parser("export", help="run the encoder and write FDSM files")
    e.add_argument("--images", required=True, type=Path)
    e.add_argument("--manifest", required=True, type=Path)
    e.add_argument("--weights", type=Path, default=None,
                   help="optional encoder state-dict checkpoint")
    e.add_argument("--batch-size", type=int, default=32)
    e.add_argument("--out", required=True, type=Path)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "discover":
            manifest = ExportManifest.discover(
                args.images, model=args.model, layer=args.layer,
                embed_dim=args.embed_dim, resize=tuple(args.resize),
                seed=args.seed,
            )
            manifest.save(args.out)
            print(f"wrote manifest for {len(manifest.clients)} clients to {args.out}",
                  file=sys.stderr)
        else:
            manifest = ExportManifest.load(args.manifest)
            written = export(args.images, manifest, args.out,
                             weights_path=args.weights,
                             batch_size=args.batch_size)
            print(f"wrote {len(written)} FDSM files to {args.out}", file=sys.stderr)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def entrypoint() -> None:
    raise SystemExit(main())
