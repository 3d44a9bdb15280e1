"""Command-line entry point: ``gaugep {simulate,oracle,compare,sweep,recipes}``.

Exit codes: 0 done/pass, 1 usage, 2 validation, 3 divergence abort,
4 comparison failure.
"""

import argparse
import logging
import os
from pathlib import Path
import sys

from . import recipes as _recipes
from .config import load, with_overrides
from .errors import ConfigurationError, DivergenceAbort, GaugePError
from .estimator import compare_series
from .output import read_series, write_table
from . import runner

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_DIVERGED, EXIT_COMPARE = 0, 1, 2, 3, 4

log = logging.getLogger("gaugep")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _workers(args, cfg=None):
    if args.workers is not None:
        return args.workers
    env = os.environ.get("WORKER_COUNT")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigurationError(f"WORKER_COUNT={env!r} is not an integer") from None
        if n < 1:
            raise ConfigurationError("WORKER_COUNT must be >= 1")
        return n
    return cfg.workers if cfg is not None else 1


def _configs(args):
    """``[(label, cfg)]`` from ``--config`` or ``--recipe``."""
    if bool(args.config) == bool(args.recipe):
        raise _UsageError("give exactly one of --config or --recipe")
    if args.config:
        cfg = load(args.config)
        items = [(cfg.label or Path(args.config).stem, cfg)]
        prefix = ""
    else:
        try:
            rec = _recipes.get(args.recipe)
        except KeyError as e:
            raise _UsageError(str(e.args[0])) from None
        items = list(rec.variants.items())
        if getattr(args, "variant", None):
            items = [(k, v) for k, v in items if k == args.variant]
            if not items:
                raise _UsageError(f"recipe {rec.name} has no variant {args.variant!r}")
        prefix = rec.name + "_"
    out = []
    for label, cfg in items:
        if args.seed is not None:
            cfg = with_overrides(cfg, seed=args.seed)
        out.append((prefix + label, cfg))
    return out


class _UsageError(Exception):
    pass


def _outdir(args):
    d = Path(args.out or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_simulate(args):
    out = _outdir(args)
    for label, cfg in _configs(args):
        res = runner.simulate(cfg, _workers(args, cfg))
        csv_path = out / (f"{label}.csv" if args.recipe else cfg.csv)
        json_path = out / (f"{label}.json" if args.recipe else cfg.summary)
        runner.write_simulation(res, csv_path, json_path)
        print(f"{label}: {res.system_id} {cfg.n_traj} trajectories in {res.wall_time:.1f}s "
              f"-> {csv_path}")
    return EXIT_OK


def cmd_oracle(args):
    out = _outdir(args)
    items = _configs(args)
    if args.recipe:
        rec = _recipes.get(args.recipe)
        if not rec.oracle:
            raise ConfigurationError(f"recipe {rec.name} has no oracle")
        items = [(rec.name + "_oracle", items[0][1])]
    for label, cfg in items:
        res = runner.oracle(cfg, _workers(args, cfg))
        stem = label if args.recipe else Path(cfg.csv).stem + "_oracle"
        csv_path = out / f"{stem}.csv"
        runner.write_oracle(res, csv_path, out / f"{stem}.json")
        print(f"{label}: {res.kind} (dim={res.dim}) -> {csv_path}")
    return EXIT_OK


def cmd_sweep(args):
    out = _outdir(args)
    for label, cfg in _configs(args):
        if not cfg.sweep_param:
            raise ConfigurationError("config has no sweep_param")
        header, rows = runner.sweep(cfg, _workers(args, cfg))
        path = out / f"{label}_sweep.csv"
        write_table(path, header, rows, {"kind": "sweep", "param": cfg.sweep_param,
                                         "readout_time": cfg.readout_time})
        print(f"{label}: {len(rows)} points -> {path}")
    return EXIT_OK


def cmd_compare(args):
    a, b = read_series(args.file_a), read_series(args.file_b)
    names = [args.column] if args.column else a.moment_names()
    missing = [n for n in names if n not in b.moment_names()]
    if not names or missing:
        raise ConfigurationError(f"schema mismatch: columns {missing or names} not in both files")
    reports = [compare_series(a.series(n), b.series(n), args.z, args.t_min, args.t_max)
               for n in names]
    text = "".join(r.to_markdown() + "\n" for r in reports)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    worst = max(r.max_z for r in reports)
    ok = all(r.passed for r in reports)
    print(f"max z = {worst:.3f}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_COMPARE


def cmd_recipes(args):
    for name, rec in _recipes.RECIPES.items():
        kinds = ", ".join(rec.variants)
        print(f"{name:20s} {rec.description} [{rec.kind}; variants: {kinds}]")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="gaugep", description="Gauge-P stochastic simulations and exact references")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", metavar="PATH")
            sp.add_argument("--recipe", metavar="NAME")
            sp.add_argument("--variant", metavar="LABEL", help="run a single recipe variant")
            sp.add_argument("--seed", type=int, metavar="N")
        sp.add_argument("--workers", type=int, metavar="N")
        sp.add_argument("--out", metavar="DIR")

    common(sub.add_parser("simulate", help="run a stochastic ensemble"))
    common(sub.add_parser("oracle", help="exact reference for a configuration"))
    common(sub.add_parser("sweep", help="steady-state readout over a parameter list"))
    c = sub.add_parser("compare", help="z-score comparison of two series files")
    c.add_argument("file_a")
    c.add_argument("file_b")
    c.add_argument("--z", type=float, default=3.0, help="pass threshold on max z")
    c.add_argument("--column", help="moment column (default: all shared)")
    c.add_argument("--t-min", type=float)
    c.add_argument("--t-max", type=float)
    c.add_argument("--report", metavar="PATH", help="write the markdown report here")
    sub.add_parser("recipes", help="list figure recipes")
    return p


COMMANDS = {"simulate": cmd_simulate, "oracle": cmd_oracle, "sweep": cmd_sweep,
            "compare": cmd_compare, "recipes": cmd_recipes}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if getattr(args, "workers", None) is not None and args.workers < 1:
        print("gaugep: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except _UsageError as e:
        print(f"gaugep: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceAbort as e:
        print(f"gaugep: divergence abort: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except (GaugePError, OSError) as e:
        print(f"gaugep: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
