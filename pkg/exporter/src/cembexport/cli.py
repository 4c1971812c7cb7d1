"""Command-line entry point for the embedding exporter."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .export import ExportError, ExportJob, export, export_pair


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cemb-export")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="encode a tokenized corpus into a CEMB store")
    p.add_argument("--corpus", required=True, help="one pre-tokenized sentence per line")
    p.add_argument("--out", required=True, help="output store path")
    p.add_argument("--layer", default="top", help="layer selector recorded in the manifest")
    p.add_argument("--encoder", default="hashed", help="encoder identifier (hashed / hf:<path>)")
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--swap-lexicon", default=None, help="lexicon TSV enabling paired export")
    p.add_argument("--out-swapped", default=None, help="output store for the swapped twin")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if (args.swap_lexicon is None) != (args.out_swapped is None):
            raise ExportError("--swap-lexicon and --out-swapped must be given together")
        if not Path(args.corpus).exists():
            raise ExportError(f"missing corpus file {args.corpus}")
        if args.swap_lexicon is not None:
            if not Path(args.swap_lexicon).exists():
                raise ExportError(f"missing lexicon file {args.swap_lexicon}")
            export_pair(
                args.corpus, args.swap_lexicon, args.out, args.out_swapped,
                encoder=args.encoder, layer=args.layer, batch_size=args.batch_size,
            )
        else:
            export(
                ExportJob(
                    corpus=Path(args.corpus), encoder=args.encoder,
                    layer=args.layer, out=Path(args.out), batch_size=args.batch_size,
                )
            )
        return 0
    except (ExportError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
