"""Command-line entry point: ``wirecalc COMMAND [FILE] [SYSTEM] [options]``.

Exit status: 0 on success, 1 for diagnostics (bad input, unknown names,
unsupported requests), 2 when a compositionality check finds a mismatch.
"""

from __future__ import annotations

import argparse
import shlex
import sys

from ..errors import WirecalcError
from . import render
from .commands import COMMANDS, CommandError, Result
from .dsl import WorkspaceError
from .plans import ALIASES, PLANS
from .workspace import Workspace

EXIT_OK, EXIT_DIAGNOSTICS, EXIT_INVARIANT = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wirecalc", description="Compose open dynamical systems along wiring diagrams.")
    parser.add_argument("--format", choices=("text", "machine", "json"), default="text",
                        help="output format; 'machine' (alias 'json') is sorted, byte-stable JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, file_required=True):
        p = sub.add_parser(name, help=help_)
        p.add_argument("file", nargs="?", help="workspace file (.wd)")
        p.add_argument("--file", dest="file_opt", metavar="FILE", help="workspace file, as an option")
        p.set_defaults(file_required=file_required)
        p.add_argument("system", nargs="?", help="system name (default: the last application)")
        return p

    plan_choices = list(PLANS) + list(ALIASES)
    p = add("compose", "materialise a composite system")
    p.add_argument("--plan", choices=plan_choices, default="tensor-then-wire")
    for name, what in (("stst", "counts"), ("stst-sets", "sets"), ("stst-measure", "measure")):
        p = add(name, f"steady-state {what} matrix")
        p.add_argument("--plan", choices=plan_choices, default="tensor-then-wire")
        p.add_argument("--direct", action="store_true", help="materialise the composite instead of using a plan")
    p = add("stream", "run a discrete system on a stream of inputs")
    p.add_argument("--init", help="initial states, one per component, space separated")
    p.add_argument("--inputs", default="", help="input points separated by spaces; ports joined by ','")
    p = add("euler", "Euler discretisation of a continuous system")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--init", help="initial state coordinates")
    p.add_argument("--inputs", default="", help="input points separated by spaces; coordinates joined by ','")
    p.add_argument("--steps", type=int, help="number of steps for systems without inputs")
    for name, help_ in (("roots", "steady states at an input"),
                        ("linearize", "linearisation at the steady states for an input"),
                        ("stability", "stability verdicts")):
        p = add(name, help_)
        p.add_argument("--at", help="input coordinates, comma separated")
        p.add_argument("--mode", choices=("auto", "exact-affine", "newton"), default="auto")
    p = add("check-compositional", "compare composing-then-evaluating with evaluating-then-composing",
            file_required=False)
    p.add_argument("--random", type=int, default=0, help="also check this many random instances per kind")
    p.add_argument("--samples", type=int, default=200, help="sample points per continuous check")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    add("run", "execute the 'run' lines of a workspace")
    add("check", "parse and resolve a workspace")
    return parser


def _execute(args, ws: Workspace | None) -> Result:
    skip = ("command", "file", "file_opt", "file_required", "system", "format")
    opts = {k: v for k, v in vars(args).items() if k not in skip}
    return COMMANDS[args.command](ws, args.system, **opts)


def _run_file(parser, args, ws: Workspace) -> tuple[list[Result], int]:
    results, status = [], EXIT_OK
    for r in ws.runs:
        argv = [r.command, args.file, *r.args]
        try:
            sub = parser.parse_args(["--format", args.format, *argv])
        except SystemExit:
            raise CommandError(f"{r.loc[0]}:{r.loc[1]}: cannot parse 'run {shlex.join([r.command, *r.args])}'")
        if sub.command in ("run", "check"):
            raise CommandError(f"{r.loc[0]}:{r.loc[1]}: 'run {sub.command}' is not allowed inside a workspace")
        res = _execute(sub, ws)
        res.text = f"$ {shlex.join([r.command, *r.args])}\n{res.text}"
        results.append(res)
        status = max(status, res.status)
    return results, status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.file_opt:
        if args.file:
            args.system = args.system or args.file
        args.file = args.file_opt
    if args.file_required and not args.file:
        parser.error(f"{args.command} needs a workspace file")
    out, err = sys.stdout, sys.stderr
    try:
        ws = Workspace.from_file(args.file) if args.file else None
        if args.command == "check":
            n = len(ws.systems)
            results = [Result(f"{args.file}: ok ({n} systems, {len(ws.wirings)} wirings)",
                              {"ok": True, "systems": sorted(ws.systems), "wirings": sorted(ws.wirings)})]
            status = EXIT_OK
        elif args.command == "run":
            results, status = _run_file(parser, args, ws)
        else:
            res = _execute(args, ws)
            results, status = [res], res.status
    except WorkspaceError as e:
        for d in e.diagnostics:
            print(f"{args.file}:{d}", file=err)
        return EXIT_DIAGNOSTICS
    except OSError as e:
        print(f"wirecalc: {e}", file=err)
        return EXIT_DIAGNOSTICS
    except (CommandError, WirecalcError, KeyError, ValueError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else str(e)
        print(f"wirecalc: error: {msg}", file=err)
        return EXIT_DIAGNOSTICS
    if args.format in ("json", "machine"):
        payload = results[0].data if len(results) == 1 and args.command != "run" else [r.data for r in results]
        print(render.dumps(payload), file=out)
    else:
        print("\n\n".join(r.text for r in results), file=out)
    return status


if __name__ == "__main__":
    sys.exit(main())
