"""Command-line entry point: embexport --kind ... --model ... --data ... --out ..."""

from __future__ import annotations

import argparse
import json
import sys

from .dataset import DatasetError
from .encoders import EncoderError
from .export import KINDS, ExportError, ExportJob, run_job
from .textprep import EmptyTextError
from .writers import WriteError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embexport",
        description="Export pretrained embeddings to the WEMB/SEMB interchange formats.",
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument(
        "--model",
        required=True,
        help="text table path (word-table) or encoder spec: stub:<dim> | hf:<checkpoint>",
    )
    parser.add_argument("--data", required=True, help="dataset file")
    parser.add_argument("--out", required=True, help="output WEMB/SEMB path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(kind=args.kind, model=args.model, data=args.data, out=args.out)
    try:
        summary = run_job(job)
    except (ExportError, DatasetError, EncoderError, WriteError, EmptyTextError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
