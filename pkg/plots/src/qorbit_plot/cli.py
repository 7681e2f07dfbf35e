"""Command line for rendering tracking-run CSVs into static images.

Exit codes: 0 ok, 2 bad arguments or unreadable file, 3 bad CSV contents
(missing columns or an empty trace).
"""

from __future__ import annotations

import argparse
import sys

from .render import EmptyTraceError, MissingColumnsError, PlotSpec, RenderError, render

EXIT_OK = 0
EXIT_ARGS = 2
EXIT_BAD_CSV = 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qorbit-plot", description=__doc__)
    parser.add_argument("--kind", required=True, choices=("bloch3d", "field", "perf"))
    parser.add_argument(
        "--csv", required=True, action="append",
        help="input trajectory CSV; repeat to overlay perf curves",
    )
    parser.add_argument("--labels", default=None, help="comma-separated curve labels")
    parser.add_argument("--out", required=True, help="output image file")
    args = parser.parse_args(argv)

    labels = tuple(args.labels.split(",")) if args.labels else ()
    try:
        spec = PlotSpec(kind=args.kind, csv_paths=tuple(args.csv), out_path=args.out, labels=labels)
    except RenderError as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    try:
        render(spec)
    except (MissingColumnsError, EmptyTraceError) as exc:
        print(f"bad csv: {exc}", file=sys.stderr)
        return EXIT_BAD_CSV
    except RenderError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    print(f"wrote {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
