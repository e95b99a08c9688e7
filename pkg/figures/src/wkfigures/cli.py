"""``render-figure`` entry point: spec JSON in, SVG + PNG out."""

from __future__ import annotations

import argparse
import json
import sys

from .render import FigureSpec, SchemaError, SpecError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render-figure",
        description="Render a chart described by a figure-spec JSON file.",
    )
    parser.add_argument("--spec", required=True, help="path to the figure-spec JSON")
    args = parser.parse_args(argv)

    try:
        spec = FigureSpec.from_json(args.spec)
        written = render(spec)
    except (SchemaError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: cannot parse {args.spec}: {exc}", file=sys.stderr)
        return 2

    print(json.dumps({"written": written}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
