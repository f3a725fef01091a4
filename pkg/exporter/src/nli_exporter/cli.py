"""nli-export: command-line front end for the bundle exporter."""

from __future__ import annotations

import argparse
import sys

from .exporter import DEFAULT_TOLERANCE, ExportError, export_pretrained


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nli-export",
        description="Export a pretrained three-way NLI sequence-pair classifier "
                    "into a portable inference bundle (graph + tokenizer + manifest).")
    parser.add_argument("--model", required=True,
                        help="Model id or local directory loadable by transformers.")
    parser.add_argument("--out", required=True,
                        help="Bundle output directory (created if missing).")
    parser.add_argument("--max-length", type=int, default=None,
                        help="Max sequence length baked into the bundle "
                             "(default: tokenizer limit, capped at 1024).")
    parser.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE,
                        help="Max allowed logit deviation in the export self-check.")
    parser.add_argument("--identity", default=None,
                        help="Identity string recorded in the manifest (default: the model id).")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        info = export_pretrained(args.model, args.out,
                                 max_sequence_length=args.max_length,
                                 tolerance=args.tolerance,
                                 identity=args.identity)
    except (ExportError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"bundle written to {info.path}")
    print(f"self-check: max logit delta {info.self_check_max_delta:.3e} "
          f"over {info.manifest['self_check_pairs']} pairs")
    print(f"graph sha256: {info.manifest['graph_sha256']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
