"""Batch conversion entry point.  Exit codes: 0 ok, 2 usage, 3 data."""

import argparse
import json
import sys

from .errors import ConversionError
from .imagenet16 import convert_imagenet16
from .nasbench import extract_nasbench


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tlnas-convert", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    nb = sub.add_parser("nasbench", help="benchmark checkpoint -> fixture JSON-lines")
    nb.add_argument("--db", required=True, help="checkpoint file")
    nb.add_argument("--out", required=True, help="fixture JSON-lines to write")
    im = sub.add_parser("imagenet16", help="image pickles -> flat .tlnas binaries")
    im.add_argument("--pickles", required=True, help="directory with the batch files")
    im.add_argument("--out-dir", required=True, help="directory for the .tlnas files")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "nasbench":
            count = extract_nasbench(args.db, args.out)
            print(count)
        else:
            counts = convert_imagenet16(args.pickles, args.out_dir)
            print(json.dumps(counts, sort_keys=True))
    except (ConversionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
