"""Command-line frontend: ``solve``, ``order``, ``basin`` and ``report``.

Exit codes: 0 success, 1 reproduction mismatch (``report`` only),
2 usage or configuration error, 3 numerical failure, 4 I/O error.
Option values come from flags first, then a ``key = value`` config file
(``--config``), then defaults. ``OCTOROOT_DIGITS`` replaces the default
working precision.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from . import tables
from .basin import GridSpec, PaletteError, colorize
from .convergence import UndefinedOrderError, acoc, coc, run
from .expr import BUILTIN_NAMES, ExprError, ParseError, Problem, UnknownProblemError, builtin
from .methods import ALL_METHODS, DEFAULT_PARAMS, MethodId
from .numerics import PrecisionContext

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

DEFAULT_DIGITS = 1200
COMMANDS = ("solve", "order", "basin", "report")


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# Option parsing


def _positive_int(text) -> int:
    try:
        v = int(str(text).strip())
    except ValueError:
        raise UsageError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise UsageError(f"expected a positive integer, got {text!r}")
    return v


def _positive_real(text) -> float:
    try:
        v = float(str(text).strip())
    except ValueError:
        raise UsageError(f"expected a positive number, got {text!r}") from None
    if not v > 0:
        raise UsageError(f"expected a positive number, got {text!r}")
    return v


def _digits(text) -> int:
    v = _positive_int(text)
    if v < 16:
        raise UsageError("--digits must be at least 16")
    return v


def _tol(text) -> Decimal:
    try:
        v = Decimal(str(text).strip())
    except InvalidOperation:
        raise UsageError(f"expected a tolerance, got {text!r}") from None
    if not v > 0:
        raise UsageError("--tol must be positive")
    return v


def _bounds(text) -> tuple:
    parts = str(text).replace(" ", "").split(",")
    if len(parts) != 4:
        raise UsageError("--bounds needs re_min,re_max,im_min,im_max")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"bad --bounds {text!r}") from None


def _choice(*options):
    def conv(text):
        v = str(text).strip().lower()
        if v not in options:
            raise UsageError(f"expected one of {', '.join(options)}, got {text!r}")
        return v

    return conv


def _text(text) -> str:
    return str(text).strip()


# name -> converter; names match the long flags with dashes turned into underscores
OPTIONS = {
    "method": _text,
    "problem": _text,
    "expr": _text,
    "root": _text,
    "guess": _text,
    "digits": _digits,
    "max_iter": _positive_int,
    "tol": _tol,
    "width": _positive_int,
    "height": _positive_int,
    "bounds": _bounds,
    "escape_tol": _positive_real,
    "sampling": _choice("edge", "center"),
    "format": _choice("text", "csv", "json"),
    "image": _choice("ppm", "png"),
    "out": _text,
    "only": _choice("table2", "table5"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="octoroot",
        description="Eighth-order root finders: single runs, order tables, basin images.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    helps = {
        "solve": "run one method on one problem and print the iterates",
        "order": "errors, COC and ACOC for methods x problems",
        "basin": "render basins of attraction and print I/P, NC%%, Ic/C",
        "report": "recompute both reference tables with images and compare",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="file of key = value lines")
        p.add_argument("--method", help="m1..m6, a comma list, or 'all'")
        p.add_argument("--problem", help="builtin name (f1..f4, p1..p6), a comma list, or 'all'")
        p.add_argument("--expr", help="target function of x")
        p.add_argument("--root", help="known root (comma list of roots for basin)")
        p.add_argument("--guess", help="starting point")
        p.add_argument("--digits", help="decimal digits of working precision")
        p.add_argument("--max-iter", dest="max_iter", help="iteration cap")
        p.add_argument("--tol", help="stop when |x_{n+1} - x_n| is below this")
        p.add_argument("--width", help="grid width in pixels")
        p.add_argument("--height", help="grid height in pixels")
        p.add_argument("--bounds", help="re_min,re_max,im_min,im_max")
        p.add_argument("--escape-tol", dest="escape_tol", help="distance to a root that counts as converged")
        p.add_argument("--sampling", help="edge or center")
        p.add_argument("--format", help="text, csv or json")
        p.add_argument("--image", help="ppm or png")
        p.add_argument("--out", help="output file or directory")
        p.add_argument("--only", help="table2 or table5 (report)")
    return parser


def read_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in OPTIONS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)
    explicit: set = field(default_factory=set)

    def get(self, key, default=None):
        return self.options.get(key, default)


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    """Merge flags over the config file over defaults."""
    raw = {}
    if args.config:
        raw.update(read_config(args.config))
    for key in OPTIONS:
        v = getattr(args, key, None)
        if v is not None:
            raw[key] = v
    opts = {k: OPTIONS[k](v) for k, v in raw.items()}
    explicit = set(opts)
    if "digits" not in opts:
        env = environ.get("OCTOROOT_DIGITS")
        if env:
            try:
                opts["digits"] = _digits(env)
            except UsageError as exc:
                raise UsageError(f"OCTOROOT_DIGITS: {exc}") from None
        else:
            opts["digits"] = DEFAULT_DIGITS
    return RunConfig(args.command, opts, explicit)


def _split(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def select_methods(cfg: RunConfig, default=ALL_METHODS) -> list[MethodId]:
    text = cfg.get("method")
    if text is None:
        return list(default)
    if text.lower() == "all":
        return list(ALL_METHODS)
    try:
        return [MethodId.parse(p) for p in _split(text)]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _builtin(name: str) -> Problem:
    try:
        return builtin(name.lower())
    except UnknownProblemError as exc:
        raise UsageError(str(exc)) from None


def select_problems(cfg: RunConfig, default, *, all_names=BUILTIN_NAMES, need_guess=False, need_roots=False) -> list[Problem]:
    expr = cfg.get("expr")
    if expr is not None:
        if cfg.get("problem") is not None:
            raise UsageError("give either --problem or --expr, not both")
        roots = _split(cfg.get("root") or "")
        guess = cfg.get("guess")
        if need_guess and guess is None:
            raise UsageError("--expr needs --guess")
        if need_roots and not roots:
            raise UsageError("basin with --expr needs --root listing the roots")
        try:
            return [
                Problem.from_strings(
                    "expr",
                    expr,
                    root=roots[0] if len(roots) == 1 and not need_roots else None,
                    guess=guess,
                    roots=roots if need_roots else (),
                )
            ]
        except ParseError as exc:
            raise UsageError(f"cannot parse expression: {exc}") from None
    text = cfg.get("problem")
    if text is None:
        names = list(default)
    elif text.lower() == "all":
        names = list(all_names)
    else:
        names = _split(text)
    return [_builtin(n) for n in names]


# ---------------------------------------------------------------------------
# Output


def atomic_write(path, data: bytes) -> None:
    """Write via a temporary file in the same directory and rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def encode_ppm(buffer: np.ndarray) -> bytes:
    buf = np.ascontiguousarray(buffer, dtype=np.uint8)
    if buf.ndim != 3 or buf.shape[2] != 3:
        raise ValueError("image buffer must have shape (height, width, 3)")
    h, w = buf.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + buf.tobytes()


def encode_png(buffer: np.ndarray) -> bytes:
    try:
        from PIL import Image
    except ImportError:
        raise UsageError("PNG output needs Pillow; use --image ppm") from None
    out = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(buffer, dtype=np.uint8), "RGB").save(out, format="PNG")
    return out.getvalue()


def write_image(buffer: np.ndarray, path, fmt: str = "ppm") -> None:
    """Write an RGB8 buffer as binary PPM (P6) or PNG."""
    data = encode_ppm(buffer) if fmt == "ppm" else encode_png(buffer)
    try:
        atomic_write(path, data)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write image {path}: {exc.strerror}") from None


def write_text(path, text: str) -> None:
    try:
        atomic_write(path, text.encode("utf-8"))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None


def _emit(text: str, out) -> None:
    out.write(text)
    if not text.endswith("\n"):
        out.write("\n")


# ---------------------------------------------------------------------------
# Commands


def _stop_tol(cfg: RunConfig, ctx):
    t = cfg.get("tol")
    return None if t is None else ctx.mp.mpf(str(t))


def cmd_solve(cfg: RunConfig, out=sys.stdout) -> int:
    methods = select_methods(cfg, default=(MethodId.M1,))
    if len(methods) != 1:
        raise UsageError("solve takes a single --method")
    method = methods[0]
    problems = select_problems(cfg, ("f1",))
    if len(problems) != 1:
        raise UsageError("solve takes a single problem")
    problem = problems[0]
    ctx = PrecisionContext(cfg.get("digits"))
    try:
        x0 = problem.guess_value(ctx) if cfg.get("guess") is None else _constant(cfg.get("guess"), ctx)
    except ExprError as exc:
        raise UsageError(f"bad --guess: {exc}") from None
    if x0 is None:
        raise UsageError(f"problem {problem.name} has no default guess; pass --guess")
    if cfg.get("root") is not None and cfg.get("expr") is None:
        try:
            root = _constant(cfg.get("root"), ctx)
        except ExprError as exc:
            raise UsageError(f"bad --root: {exc}") from None
    else:
        root = problem.root_value(ctx)
    trace = run(method, DEFAULT_PARAMS, problem, x0, max_iter=cfg.get("max_iter", 4),
                stop_tol=_stop_tol(cfg, ctx), root=root)
    errors = trace.errors
    try:
        c = coc(trace) if errors is not None else None
    except (UndefinedOrderError, ValueError):
        c = None
    try:
        a = acoc(trace)
    except (UndefinedOrderError, ValueError):
        a = None
    fmt = cfg.get("format", "text")
    if fmt == "json":
        obj = {
            "method": method.label,
            "problem": problem.name,
            "digits": ctx.digits,
            "iterates": [tables.full_str(v) for v in trace.iterates],
            "errors": None if errors is None else [tables.full_str(e) for e in errors],
            "residuals": [tables.full_str(r) for r in trace.residuals],
            "coc": c,
            "acoc": a,
            "stop_reason": trace.stop_reason,
            "failure": trace.failure,
        }
        _emit(json.dumps(obj, indent=2, sort_keys=True), out)
    elif fmt == "csv":
        lines = ["n,error,residual"]
        for n, r in enumerate(trace.residuals):
            e = "nan" if errors is None else tables.format_mantissa(errors[n])
            lines.append(f"{n},{e},{tables.format_mantissa(r)}")
        lines.append(f"coc,{tables.format_mantissa(c, 6)},")
        lines.append(f"acoc,{tables.format_mantissa(a, 6)},")
        _emit("\n".join(lines), out)
    else:
        lines = [f"{method.label} on {problem.name} ({problem.source}) at {ctx.digits} digits"]
        lines.append(f"{'n':>3}  {'|x_n - x*|':<12}  {'|f(x_n)|':<12}")
        for n, r in enumerate(trace.residuals):
            e = "-" if errors is None else tables.format_mantissa(errors[n])
            lines.append(f"{n:>3}  {e:<12}  {tables.format_mantissa(r):<12}")
        lines.append(f"COC   {'undefined' if c is None else f'{c:.5f}'}")
        lines.append(f"ACOC  {'undefined' if a is None else f'{a:.5f}'}")
        lines.append(f"stop  {trace.stop_reason}")
        _emit("\n".join(lines), out)
    if trace.stop_reason == "error":
        raise NumericFailure(f"{method.label} failed on {problem.name}: {trace.failure}")
    return EXIT_OK


def _constant(text: str, ctx):
    from .expr import constant_value, parse

    return constant_value(parse(text), ctx)


def cmd_order(cfg: RunConfig, out=sys.stdout) -> int:
    methods = select_methods(cfg)
    problems = select_problems(cfg, tables.TABLE2_PROBLEMS, all_names=tables.TABLE2_PROBLEMS, need_guess=True)
    digits = cfg.get("digits")
    rows = []
    for p in problems:
        for m in methods:
            rows.append(tables.order_row(m, p, digits, cfg.get("max_iter", 4),
                                         stop_tol=_stop_tol(cfg, PrecisionContext(digits))))
    fmt = cfg.get("format", "text")
    if fmt == "csv":
        _emit(tables.to_csv(tables.ORDER_HEADER, rows), out)
    elif fmt == "json":
        _emit(tables.to_json(rows), out)
    else:
        lines = [f"{'problem':<8}{'method':<7}{'e1':<12}{'e2':<12}{'e3':<12}{'COC':<10}{'ACOC':<10}"]
        for r in rows:
            f = r.csv_fields()
            cs = "undefined" if r.coc is None else f"{r.coc:.5f}"
            ac = "undefined" if r.acoc is None else f"{r.acoc:.5f}"
            lines.append(f"{f[0]:<8}{f[1]:<7}{f[2]:<12}{f[3]:<12}{f[4]:<12}{cs:<10}{ac:<10}")
        _emit("\n".join(lines), out)
    failed = [r for r in rows if r.status != "ok"]
    if failed:
        raise NumericFailure("; ".join(f"{r.method} on {r.problem}: {r.note}" for r in failed))
    return EXIT_OK


def grid_spec(cfg: RunConfig) -> GridSpec:
    kw = {}
    if "bounds" in cfg.options:
        kw.update(zip(("re_min", "re_max", "im_min", "im_max"), cfg.get("bounds")))
    for key in ("width", "height", "max_iter", "escape_tol", "sampling"):
        if key in cfg.options:
            kw[key] = cfg.get(key)
    # explicit precision switches basins to the scalar high-precision path
    if "digits" in cfg.explicit:
        kw["digits"] = cfg.get("digits")
    try:
        return GridSpec(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _image_targets(out_opt, combos, ext) -> list[Path]:
    if out_opt is not None and len(combos) == 1 and Path(out_opt).suffix.lower() in (".ppm", ".png"):
        return [Path(out_opt)]
    base = Path(out_opt) if out_opt is not None else Path(".")
    if not base.is_dir():
        raise OSError(2, f"output directory {base} does not exist")
    return [base / f"basin_{p.name}_{m.label}.{ext}" for p, m in combos]


def cmd_basin(cfg: RunConfig, out=sys.stdout) -> int:
    methods = select_methods(cfg, default=(MethodId.M1,))
    problems = select_problems(cfg, ("p1",), all_names=tables.TABLE5_PROBLEMS, need_roots=True)
    for p in problems:
        if not p.root_values():
            raise UsageError(f"problem {p.name} has no known roots")
    spec = grid_spec(cfg)
    ext = cfg.get("image", "ppm")
    combos = [(p, m) for p in problems for m in methods]
    targets = _image_targets(cfg.get("out"), combos, ext)
    rows = []
    for (p, m), path in zip(combos, targets):
        row = tables.basin_row(m, p, spec)
        try:
            img = colorize(row.grid)
        except PaletteError as exc:
            raise UsageError(str(exc)) from None
        write_image(img, path, ext)
        rows.append(row)
    fmt = cfg.get("format", "text")
    if fmt == "csv":
        _emit(tables.to_csv(tables.BASIN_HEADER, rows), out)
    elif fmt == "json":
        _emit(tables.to_json(rows), out)
    else:
        lines = [f"{'method':<7}{'polynomial':<12}{'I/P':<10}{'NC%':<12}{'Ic/C':<10}"]
        for r in rows:
            lines.append(f"{r.method:<7}{r.polynomial:<12}{r.ipp:<10.4g}{r.nc:<12.4g}{r.icc:<10.4g}")
        _emit("\n".join(lines), out)
    return EXIT_OK


def cmd_report(cfg: RunConfig, out=sys.stdout) -> int:
    outdir = Path(cfg.get("out") or "repro")
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot create {outdir}: {exc.strerror}") from None
    only = cfg.get("only")
    digits = cfg.get("digits")
    checks = []
    if only in (None, "table2"):
        rows = tables.order_table(digits=digits, max_iter=cfg.get("max_iter", 4))
        write_text(outdir / "table2.csv", tables.to_csv(tables.ORDER_HEADER, rows))
        checks += tables.check_order(rows, digits)
    if only in (None, "table5"):
        ext = cfg.get("image", "ppm")
        spec = GridSpec(sampling=cfg.get("sampling", "edge"))
        rows = tables.basin_table(spec=spec)
        for r in rows:
            write_image(colorize(r.grid), outdir / f"basin_{r.polynomial}_{r.method}.{ext}", ext)
        write_text(outdir / "table5.csv", tables.to_csv(tables.BASIN_HEADER, rows))
        checks += tables.check_basins(rows)
    n_fail = sum(c.failed for c in checks)
    n_lim = sum(c.status == "precision-limited" for c in checks)
    lines = [f"{c.status.upper():<18} {c.key:<7} {c.quantity:<5} {c.detail}" for c in checks]
    lines.append(f"{len(checks) - n_fail - n_lim} passed, {n_fail} failed, {n_lim} precision-limited; output in {outdir}")
    _emit("\n".join(lines), out)
    return EXIT_MISMATCH if n_fail else EXIT_OK


_HANDLERS = {"solve": cmd_solve, "order": cmd_order, "basin": cmd_basin, "report": cmd_report}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.command is None:
        parser.print_usage(err)
        return EXIT_USAGE
    try:
        cfg = resolve_config(args)
        return _HANDLERS[args.command](cfg, out)
    except UsageError as exc:
        print(f"octoroot {args.command}: {exc}", file=err)
        return EXIT_USAGE
    except NumericFailure as exc:
        print(f"octoroot {args.command}: numerical failure: {exc}", file=err)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"octoroot {args.command}: {exc.strerror or exc}", file=err)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
