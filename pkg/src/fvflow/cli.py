"""Command line: ``solver run``, ``solver converge``, ``solver list-problems``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import SCHEMES, TAU_RULES, RunConfig
from .errors import FVFlowError
from .harness import (convergence_study, convergence_table_text, emit_convergence, emit_outputs, plan_run,
                      run)
from .problems import builtin_problems, get_problem


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        value = json.loads(value)
    except json.JSONDecodeError:
        pass  # keep as string
    return key, value


def _common(p: argparse.ArgumentParser):
    p.add_argument("-c", "--config", help="JSON config file (defaults used if omitted)")
    p.add_argument("-o", "--outdir", help="output directory (overrides output_dir)")
    p.add_argument("--problem")
    p.add_argument("--param", action="append", type=_param, default=[], metavar="KEY=VALUE",
                   help="problem parameter, e.g. alpha=5 or case=super")
    p.add_argument("--N", type=int)
    p.add_argument("--Nx", type=int)
    p.add_argument("--Ny", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--tau-rule", choices=TAU_RULES)
    p.add_argument("--tau-coef", type=float)
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--t-end", type=float)
    p.add_argument("--limiter", dest="limiter", action="store_true", default=None)
    p.add_argument("--no-limiter", dest="limiter", action="store_false")
    p.add_argument("--seed", type=int, help="recorded only; the schemes are deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solver", description="Finite volume solver for nonlinear drift-diffusion")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("run", help="run one configured simulation"))
    conv = sub.add_parser("converge", help="refinement study against an exact solution")
    _common(conv)
    conv.add_argument("--levels", required=True, help="comma-separated cell counts, e.g. 40,80,160,320")
    sub.add_parser("list-problems", help="list the built-in problems")
    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
    changes = {}
    for name in ("problem", "N", "Nx", "Ny", "tau", "tau_rule", "tau_coef", "scheme", "t_end", "limiter",
                 "seed"):
        v = getattr(args, name)
        if v is not None:
            changes[name] = v
    if args.param:
        changes["params"] = {**cfg.params, **dict(args.param)}
    if args.outdir:
        changes["output_dir"] = args.outdir
    cfg = cfg.replace(**changes)
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    cfg = config_from_args(args)
    result = run(cfg)
    files = emit_outputs(result, cfg.output_dir)
    last = result.energy[-1]
    print(f"{result.metadata['problem']}: {last.step} steps to t = {last.time:.6g}, "
          f"mass {last.mass:.12g}, energy {last.energy:.12g}")
    print(f"wrote {len(files)} files to {cfg.output_dir}")
    return 0


def cmd_converge(args) -> int:
    cfg = config_from_args(args)
    try:
        levels = [int(s) for s in args.levels.split(",") if s.strip()]
    except ValueError:
        print(f"error: bad --levels {args.levels!r}", file=sys.stderr)
        return 2
    rows = convergence_study(cfg, levels)
    meta = {k: v for k, v in plan_run(cfg.replace(N=levels[0])).__dict__.items()
            if k in ("scheme", "tau_rule", "tau_coef")}
    meta.update(problem=cfg.inline.get("name", "inline") if cfg.inline else cfg.problem,
                levels=levels, limiter=cfg.limiter)
    emit_convergence(rows, cfg.output_dir, meta)
    sys.stdout.write(convergence_table_text(rows))
    return 0


def cmd_list(args) -> int:
    for name in builtin_problems():
        p = get_problem(name)
        grid = "x".join(map(str, p.N)) if isinstance(p.N, tuple) else str(p.N)
        print(f"{name:14s} {p.dim}D  N={grid:6s} tau={p.tau_rule}:{p.tau_coef:g}  t_end={p.t_end:g}  {p.description}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "converge": cmd_converge, "list-problems": cmd_list}[args.command]
    try:
        return handler(args)
    except FVFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
