"""Command-line front end.

Verbs:
    aloha-lab analytic  --config cfg [--out path] [--seed S]
    aloha-lab simulate  --config cfg [--out path] [--seed S]
    aloha-lab sweep     --config cfg [--out path] [--seed S]
    aloha-lab figure ID [--config cfg] [--out path] [--seed S]

Each verb forces the experiment kind; the config supplies parameters (see
experiments.parse_config for the format).  Without --out (or ``out`` in
the config) the CSV goes to stdout.  Exit codes: 0 success, 2 config
error, 3 solver error in a non-sweep run.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    FIGURE_IDS,
    UNBOUNDED,
    ConfigError,
    build_spec,
    emit_csv,
    render_csv,
    run_experiment,
    with_overrides,
)

_VERB_KIND = {"analytic": "analytic_point", "simulate": "sim_point", "sweep": "sweep"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aloha-lab",
        description="Batch-service slotted Aloha: analysis, simulation, figure sweeps",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("analytic", "simulate", "sweep"):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--seed", type=int, help="override the config seed")
    p = sub.add_parser("figure")
    p.add_argument("figure_id", choices=FIGURE_IDS)
    p.add_argument("--config", help="optional config with scale overrides")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--seed", type=int, help="override the config seed")
    return parser


def _load_keys(path: str | None) -> dict[str, str]:
    from .experiments import _parse_keys

    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return _parse_keys(fh.read())


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        keys = _load_keys(args.config)
        if args.verb == "figure":
            spec = build_spec(keys, kind="figure", figure_id=args.figure_id)
        else:
            spec = build_spec(keys, kind=_VERB_KIND[args.verb])
        spec = with_overrides(spec, seed=args.seed, output_path=args.out)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"aloha-lab: config error: {exc}", file=sys.stderr)
        return 2

    rows = run_experiment(spec)
    try:
        if spec.output_path:
            emit_csv(rows, spec.output_path)
        else:
            sys.stdout.write(render_csv(rows))
    except OSError as exc:
        print(f"aloha-lab: cannot write output: {exc}", file=sys.stderr)
        return 2

    if spec.kind in ("analytic_point", "sim_point"):
        if any(row.analytic_value == UNBOUNDED for row in rows):
            print("aloha-lab: no stable operating point (mean delay unbounded)",
                  file=sys.stderr)
            return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
