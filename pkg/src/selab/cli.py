"""Command-line front end.

Exit codes: 0 success, 1 hypothesis violated, 2 numerical failure or no
solution found, 64 usage error.  Logging verbosity comes from SEL_LOG
(debug, info or quiet).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import MeasureDescriptor, MeasureKind, classify
from .constants import ProblemParams, constant_report, phi_roots
from .errors import DomainError, NumericalError
from .report import UsageError, emit_report, to_plain

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2, 64

log = logging.getLogger("selab")


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _Usage(f"{self.prog}: error: {message}")


def _setup_logging() -> None:
    level = {"debug": logging.DEBUG, "info": logging.INFO, "quiet": logging.ERROR}.get(
        os.environ.get("SEL_LOG", "").lower(), logging.WARNING
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; '#' starts a comment."""
    out: dict[str, str] = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _Usage(f"{path}:{n}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _params_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--N", type=int, default=3, help="dimension N >= 2")
    p.add_argument("--p", type=float, default=2.0, help="source exponent p > 1")
    p.add_argument("--q", type=float, default=1.2, help="gradient exponent 1 < q < 2")
    p.add_argument("--m", type=float, default=1.0, help="absorption coefficient m >= 0")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write the main artifact here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="selab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("constants", help="closed-form constants")
    _params_args(c)
    _common(c)

    c = sub.add_parser("phi-roots", help="constant self-similar solutions")
    _params_args(c)
    _common(c)

    c = sub.add_parser("profile", help="half-sphere profile by shooting")
    _params_args(c)
    _common(c)
    c.add_argument("--kind", choices=("psi", "omega", "eta", "chi"), required=True)
    c.add_argument("--n-steps", type=int, default=512)
    c.add_argument("--tol", type=float, default=1e-8)
    c.add_argument("--all", action="store_true", help="report every bracketed solution")

    c = sub.add_parser("classify", help="regime verdicts")
    _params_args(c)
    _common(c)
    c.add_argument("--measure", choices=("dirac", "general"), default="dirac")
    c.add_argument("--mass", type=float, default=1.0)

    c = sub.add_parser("pde2d", help="planar half-annulus solve and exponent fit")
    _params_args(c)
    _common(c)
    c.set_defaults(N=2)
    c.add_argument("--inner", choices=("dirac", "psi", "chi", "eta", "omega"), default="dirac")
    c.add_argument("--outer", choices=("zero", "separable"), default=None)
    c.add_argument("--gradient", action="store_true", help="enable m|∇u|^q")
    c.add_argument("--source", action="store_true", help="enable -u^p")
    c.add_argument("--initial", choices=("continuation", "separable"), default="continuation")
    c.add_argument("--r-min", type=float, default=1e-3)
    c.add_argument("--r-max", type=float, default=1e3)
    c.add_argument("--n-r", type=int, default=256)
    c.add_argument("--n-theta", type=int, default=128)
    c.add_argument("--mass", type=float, default=1.0)
    c.add_argument("--width", type=float, default=1e-6)
    c.add_argument("--tol", type=float, default=1e-10)
    c.add_argument("--ray", type=float, default=math.pi / 2)
    c.add_argument("--meta", help="write run metadata JSON here")

    c = sub.add_parser("sweep", help="grid sweep over parameters")
    _params_args(c)
    _common(c)
    c.add_argument(
        "--axis", action="append", default=[], help="name:start:stop:count, name in p/q/m"
    )
    c.add_argument(
        "--what", choices=("classify", "constants", "phi-roots", "profile"), default="classify"
    )
    c.add_argument("--kind", choices=("psi", "omega", "eta", "chi"), default="psi")
    c.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    return parser


def _parse(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cfg = read_config(known.config)
        # subparser defaults sit between flags and built-in defaults
        cmd = next((a for a in argv if not a.startswith("-")), None)
        subs = parser._subparsers._group_actions[0].choices  # noqa: SLF001
        if cmd in subs:
            target = subs[cmd]
            dests = {a.dest for a in target._actions}  # noqa: SLF001
            unknown = sorted(set(cfg) - dests)
            if unknown:
                raise _Usage(f"unknown config key(s): {', '.join(unknown)}")
            for action in target._actions:  # noqa: SLF001
                if action.dest in cfg:
                    val = cfg[action.dest]
                    if action.type is not None:
                        val = action.type(val)
                    elif isinstance(action, argparse._StoreTrueAction):  # noqa: SLF001
                        val = val.lower() in ("1", "true", "yes", "on")
                    action.default = val
    return parser.parse_args(argv)


def _params(ns) -> ProblemParams:
    return ProblemParams(ns.N, ns.p, ns.q, ns.m)


def _write(ns, data: bytes) -> None:
    if ns.out:
        Path(ns.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


# --------------------------------------------------------------------------
# commands


def _cmd_constants(ns) -> int:
    _write(ns, emit_report(constant_report(_params(ns)), ns.format))
    return EXIT_OK


def _cmd_phi_roots(ns) -> int:
    params = _params(ns)
    roots = phi_roots(params)
    _write(ns, emit_report({"params": params, "roots": list(roots), "count": len(roots)}, ns.format))
    return EXIT_OK


def _cmd_profile(ns) -> int:
    from .profiles import solve_all_profiles

    params = _params(ns)
    sols = solve_all_profiles(ns.kind, params, tol=ns.tol, n_steps=ns.n_steps)
    if not sols:
        print(
            f"no {ns.kind} profile found (consistent with nonexistence) for {params.as_dict()}",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL
    chosen = sols if ns.all else sols[:1]
    summary = {"solutions": [s.summary() for s in chosen], "count": len(sols)}
    if ns.out:
        Path(ns.out).write_bytes(chosen[0].to_csv().encode("utf-8"))
        sys.stdout.buffer.write(emit_report(summary, "json"))
    elif ns.format == "csv":
        sys.stdout.buffer.write(chosen[0].to_csv().encode("utf-8"))
    else:
        sys.stdout.buffer.write(emit_report(summary, "json"))
    return EXIT_OK


def _measure(ns) -> MeasureDescriptor:
    if ns.measure == "dirac":
        return MeasureDescriptor(MeasureKind.DIRAC_POINT, ns.mass)
    return MeasureDescriptor(MeasureKind.GENERAL_NONNEGATIVE, None)


def _cmd_classify(ns) -> int:
    _write(ns, emit_report(classify(_params(ns), _measure(ns)), ns.format))
    return EXIT_OK


def _cmd_pde2d(ns) -> int:
    from .halfdisk import (
        BoundarySpec,
        MollifiedDirac,
        PolarGrid,
        SeparableProfile,
        Terms,
        fit_exponent,
        solve_bvp,
    )

    params = _params(ns)
    grid = PolarGrid(ns.r_min, ns.r_max, ns.n_r, ns.n_theta)
    if ns.inner == "dirac":
        bnd = BoundarySpec(MollifiedDirac(ns.mass, ns.width), outer=ns.outer or "zero")
    else:
        bnd = BoundarySpec(SeparableProfile(ns.inner), outer=ns.outer or "separable")
    terms = Terms(ns.gradient, ns.source)
    initial = "separable" if ns.initial == "separable" else None
    sol = solve_bvp(grid, params, terms, bnd, tol=ns.tol, initial=initial)
    fit = fit_exponent(sol, ns.ray)
    meta = sol.metadata({"ray": ns.ray, "slope": fit.slope, "r2": fit.r2})
    if ns.meta:
        Path(ns.meta).write_bytes(emit_report(meta, "json"))
    if ns.out:
        Path(ns.out).write_bytes(emit_report(sol, "csv"))
        sys.stdout.buffer.write(emit_report(meta, "json"))
    else:
        _write(ns, emit_report(sol if ns.format == "csv" else meta, ns.format))
    return EXIT_OK


def parse_axis(text: str) -> tuple[str, np.ndarray]:
    try:
        name, a, b, n = text.split(":")
        start, stop, count = float(a), float(b), int(n)
    except ValueError:
        raise _Usage(f"axis {text!r}: expected name:start:stop:count")
    if name not in ("p", "q", "m"):
        raise _Usage(f"axis {text!r}: name must be one of p, q, m")
    if count < 1:
        raise _Usage(f"axis {text!r}: count must be positive")
    return name, np.linspace(start, stop, count)


def _sweep_point(job):
    what, kind, values = job
    try:
        params = ProblemParams(**values)
        if what == "classify":
            out = classify(params)
        elif what == "constants":
            out = constant_report(params)
        elif what == "phi-roots":
            out = {"roots": list(phi_roots(params))}
        else:
            from .profiles import solve_profile

            sol = solve_profile(kind, params)
            out = sol.summary() if sol is not None else {"found": False}
        return {"params": values, "result": to_plain(out)}
    except DomainError as exc:
        return {"params": values, "error": str(exc), "hypothesis": exc.hypothesis}
    except NumericalError as exc:
        return {"params": values, "error": str(exc), "stage": exc.stage}


def _cmd_sweep(ns) -> int:
    if not ns.axis:
        raise _Usage("sweep needs at least one --axis")
    axes = [parse_axis(a) for a in ns.axis]
    names = [n for n, _ in axes]
    if len(set(names)) != len(names):
        raise _Usage("repeated sweep axis")
    base = {"N": ns.N, "p": ns.p, "q": ns.q, "m": ns.m}
    grids = np.meshgrid(*[v for _, v in axes], indexing="ij")
    jobs = []
    for idx in np.ndindex(grids[0].shape):
        vals = dict(base)
        for name, g in zip(names, grids):
            vals[name] = float(g[idx])
        jobs.append((ns.what, ns.kind, vals))
    if ns.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            results = list(pool.map(_sweep_point, jobs, chunksize=max(1, len(jobs) // (4 * ns.jobs))))
    else:
        results = [_sweep_point(j) for j in jobs]
    for i, r in enumerate(results):
        r["index"] = i
    if ns.format == "csv":
        rows = []
        for r in results:
            row = {"index": r["index"], **r["params"]}
            res = r.get("result", {})
            for k, v in (res.items() if isinstance(res, dict) else []):
                if not isinstance(v, (dict, list)):
                    row[k] = v
            if "error" in r:
                row["error"] = r["error"]
            rows.append(row)
        _write(ns, emit_report(rows, "csv"))
    else:
        doc = {
            "what": ns.what,
            "axes": [{"name": n, "values": v} for n, v in axes],
            "base": base,
            "count": len(results),
            "results": results,
        }
        _write(ns, emit_report(doc, "json"))
    return EXIT_OK


COMMANDS = {
    "constants": _cmd_constants,
    "phi-roots": _cmd_phi_roots,
    "profile": _cmd_profile,
    "classify": _cmd_classify,
    "pde2d": _cmd_pde2d,
    "sweep": _cmd_sweep,
}


def run(argv: list[str] | None = None) -> int:
    _setup_logging()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = _parse(argv)
        return COMMANDS[ns.command](ns)
    except _Usage as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        hyp = f" [hypothesis: {exc.hypothesis}]" if exc.hypothesis else ""
        print(f"domain error: {exc}{hyp}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalError as exc:
        print(f"numerical failure at stage {exc.stage}: {exc}", file=sys.stderr)
        history = getattr(exc, "residual_history", None)
        if history:
            print(f"residual history: {history}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
