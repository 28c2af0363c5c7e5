"""Batch front end: run refinement studies, emit CSV and SVG convergence plots.

Exit codes: 0 success, 2 configuration error, 3 solver failure.  The CSV
is deterministic across repeated runs; measured wall times are printed
to stderr and only written to the CSV when --wall-times is given.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import saddle
from .adaptivity import run_adaptive, run_uniform
from .mesh import initial_mesh, refine_uniform
from .problems import polynomial_problem, singular_problem
from .spaces import build_space_triple

CSV_HEADER = "level,ndof_x,estimator,true_error,effectivity,beta,wall_time_s"


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def records_to_csv(records, include_wall_time=False):
    lines = [CSV_HEADER]
    for r in records:
        fields = [r.level, r.ndof_x, r.estimator, r.true_error, r.effectivity, r.beta,
                  r.wall_time if include_wall_time else None]
        lines.append(",".join(_fmt(f) for f in fields))
    return "\n".join(lines) + "\n"


def write_csv(records, path, include_wall_time=False):
    with open(path, "w") as fh:
        fh.write(records_to_csv(records, include_wall_time))


# ---------------------------------------------------------------- SVG plot

_W, _H = 640, 480
_MARGIN = 60
_COLORS = ["#1f6fb2", "#c23b22", "#3a7d44"]


def _ticks(lo, hi):
    return range(math.ceil(lo - 1e-9), math.floor(hi + 1e-9) + 1)


def write_svg(path, series, guide_slopes=(), xlabel="trial dofs", ylabel="value"):
    """Log-log plot: one polyline per series plus dashed reference slopes.

    series is a list of (label, xs, ys) with positive values.
    """
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys) if y > 0]
    if not pts:
        raise ValueError("nothing to plot")
    lx = [math.log10(x) for x, _ in pts]
    ly = [math.log10(y) for _, y in pts]
    x0, x1 = min(lx) - 0.1, max(lx) + 0.1
    y0, y1 = min(ly) - 0.2, max(ly) + 0.2

    def px(v):
        return _MARGIN + (v - x0) / (x1 - x0) * (_W - 2 * _MARGIN)

    def py(v):
        return _H - _MARGIN - (v - y0) / (y1 - y0) * (_H - 2 * _MARGIN)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}">',
           f'<rect x="{_MARGIN}" y="{_MARGIN}" width="{_W - 2 * _MARGIN}" '
           f'height="{_H - 2 * _MARGIN}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.1f}" y1="{_H - _MARGIN}" x2="{px(t):.1f}" '
                   f'y2="{_H - _MARGIN + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.1f}" y="{_H - _MARGIN + 20}" font-size="12" '
                   f'text-anchor="middle">1e{t}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{_MARGIN - 5}" y1="{py(t):.1f}" x2="{_MARGIN}" '
                   f'y2="{py(t):.1f}" stroke="black"/>')
        out.append(f'<text x="{_MARGIN - 8}" y="{py(t):.1f}" font-size="12" '
                   f'text-anchor="end" dominant-baseline="middle">1e{t}</text>')
    out.append(f'<text x="{_W / 2}" y="{_H - 15}" font-size="13" '
               f'text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="18" y="{_H / 2}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 18 {_H / 2})">{ylabel}</text>')

    anchor = None
    for k, (label, xs, ys) in enumerate(series):
        coords = [(math.log10(x), math.log10(y)) for x, y in zip(xs, ys) if y > 0]
        if not coords:
            continue
        if anchor is None:
            anchor = coords[-1]
        path_pts = " ".join(f"{px(cx):.2f},{py(cy):.2f}" for cx, cy in coords)
        color = _COLORS[k % len(_COLORS)]
        out.append(f'<polyline points="{path_pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        out.append(f'<text x="{_W - _MARGIN - 8}" y="{_MARGIN + 16 + 14 * k}" '
                   f'font-size="12" text-anchor="end" fill="{color}">{label}</text>')

    for slope in guide_slopes:
        ax, ay = anchor
        cy0 = ay + slope * (x0 + 0.1 - ax)
        cy1 = ay + slope * (x1 - 0.1 - ax)
        out.append(f'<line x1="{px(x0 + 0.1):.2f}" y1="{py(cy0):.2f}" '
                   f'x2="{px(x1 - 0.1):.2f}" y2="{py(cy1):.2f}" stroke="gray" '
                   f'stroke-dasharray="5,4"/>')
        out.append(f'<text x="{px(x1 - 0.1):.2f}" y="{py(cy1) - 5:.2f}" font-size="11" '
                   f'fill="gray" text-anchor="end">slope {slope:g}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


# ---------------------------------------------------------------- driver

def _parse_problem(text, parser):
    if text == "singular":
        return singular_problem()
    if text.startswith("poly:"):
        try:
            k = int(text.split(":", 1)[1])
        except ValueError:
            parser.error(f"bad polynomial degree in --problem {text!r}")
        if k < 1:
            parser.error("polynomial problem degree must be >= 1")
        return polynomial_problem(k)
    parser.error(f"unknown problem {text!r} (use 'singular' or 'poly:K')")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="minresfem",
        description="Residual-minimizing FEM runs: uniform or adaptive "
                    "refinement studies and inf-sup diagnostics.")
    parser.add_argument("--mode", required=True,
                        choices=["uniform", "adaptive", "diagnostics"])
    parser.add_argument("--p", type=int, required=True, help="polynomial degree (>= 1)")
    parser.add_argument("--problem", default="singular",
                        help="'singular' or 'poly:K' (default: singular)")
    parser.add_argument("--theta", type=float, default=0.6,
                        help="bulk marking parameter in (0, 1] (default: 0.6)")
    parser.add_argument("--levels", type=int, help="number of refinements (uniform/diagnostics)")
    parser.add_argument("--max-dofs", type=int, help="trial dof budget (adaptive)")
    parser.add_argument("--out-csv", required=True, help="output CSV path")
    parser.add_argument("--out-svg", help="optional SVG convergence plot")
    parser.add_argument("--wall-times", action="store_true",
                        help="write measured wall times into the CSV "
                             "(breaks byte-reproducibility)")
    return parser


def _diagnostics_records(p, levels):
    from .adaptivity import RunRecord
    from .diagnostics import practical_infsup

    records = []
    mesh = initial_mesh()
    for level in range(levels + 1):
        spaces = build_space_triple(mesh, p)
        beta = practical_infsup(mesh, p)
        records.append(RunRecord(level=level, ndof_x=spaces.X.ndof, estimator=None,
                                 beta=beta))
        if level < levels:
            mesh = refine_uniform(mesh)
    return records


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.p < 1:
        parser.error("--p must be >= 1")
    if not 0.0 < args.theta <= 1.0:
        parser.error("--theta must lie in (0, 1]")
    if args.mode == "adaptive" and args.max_dofs is None:
        parser.error("--mode adaptive requires --max-dofs")
    if args.mode in ("uniform", "diagnostics") and args.levels is None:
        parser.error(f"--mode {args.mode} requires --levels")
    if args.levels is not None and args.levels < 0:
        parser.error("--levels must be >= 0")
    if args.max_dofs is not None and args.max_dofs < 1:
        parser.error("--max-dofs must be >= 1")

    try:
        if args.mode == "adaptive":
            problem = _parse_problem(args.problem, parser)
            records = run_adaptive(problem, args.p, args.theta, args.max_dofs)
        elif args.mode == "uniform":
            problem = _parse_problem(args.problem, parser)
            records = run_uniform(problem, args.p, args.levels)
        else:
            records = _diagnostics_records(args.p, args.levels)
    except saddle.SaddleSolveError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3

    write_csv(records, args.out_csv, include_wall_time=args.wall_times)
    for r in records:
        print(f"level {r.level}: ndof_x={r.ndof_x} estimator={r.estimator} "
              f"wall={r.wall_time:.3f}s", file=sys.stderr)

    if args.out_svg:
        xs = [r.ndof_x for r in records]
        series = []
        if any(r.estimator is not None for r in records):
            series.append(("estimator", xs, [r.estimator for r in records]))
        if any(r.true_error is not None for r in records):
            series.append(("true error", xs, [r.true_error for r in records]))
        if any(r.beta is not None for r in records):
            series.append(("beta", xs, [r.beta for r in records]))
        write_svg(args.out_svg, series, guide_slopes=(-0.25, -args.p / 2),
                  ylabel="estimator / error")
    return 0


if __name__ == "__main__":
    sys.exit(main())
