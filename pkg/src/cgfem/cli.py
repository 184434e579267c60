"""Command-line driver for the smooth and crack experiment suites.

    cgfem smooth --methods fem,cgfem --degrees 1,2 --sizes 8,16,32
    cgfem crack  --sizes 1,2,3,4
    cgfem plot   out/smooth.csv --out out/

The default output directory is "." unless the CGFEM_OUT environment
variable is set.  Exit code is 0 on full success, 2 if any record errored.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from .experiments import (
    CRACK_METHODS,
    CSV_HEADER,
    SMOOTH_METHODS,
    ExperimentConfig,
    run_crack_suite,
    run_smooth_suite,
    write_csv,
)


def _int_list(text):
    return tuple(int(p) for p in text.split(",") if p)


def _str_list(text):
    return tuple(p for p in text.split(",") if p)


def _out_dir():
    return Path(os.environ.get("CGFEM_OUT", "."))


def _add_common(p):
    p.add_argument("--sizes", type=_int_list, default=None,
                   help="comma-separated N values (smooth) or j values (crack)")
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--ft-l", type=int, default=1, dest="ft_l")
    p.add_argument("--radius", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tip-depth", type=int, default=8, dest="tip_depth")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--skip-scn", action="store_true")
    p.add_argument("--zero-timings", action="store_true",
                   help="write 0.000 in the timing columns (reproducible output)")


def build_parser():
    parser = argparse.ArgumentParser(prog="cgfem")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("smooth", help="high-order smooth-problem suite")
    ps.add_argument("--methods", type=_str_list, default=SMOOTH_METHODS)
    ps.add_argument("--degrees", type=_int_list, default=(1, 2, 3))
    ps.add_argument("--mesh", type=_str_list, default=("uniform", "perturbed"))
    _add_common(ps)

    pc = sub.add_parser("crack", help="slit-domain suite (degree 1)")
    pc.add_argument("--methods", type=_str_list, default=CRACK_METHODS)
    _add_common(pc)

    pp = sub.add_parser("plot", help="render EE/SCN charts from a suite CSV")
    pp.add_argument("csv", type=Path)
    pp.add_argument("--out", type=Path, default=None)
    return parser


def _run_suite(args, suite):
    config = ExperimentConfig(
        suite=suite,
        methods=tuple(args.methods),
        degrees=tuple(args.degrees) if suite == "smooth" else (1,),
        mesh_kinds=tuple(args.mesh) if suite == "smooth" else ("uniform",),
        sizes=args.sizes or ((8, 16, 32, 64) if suite == "smooth" else (1, 2, 3, 4, 5)),
        sigma=args.sigma,
        ft_l=args.ft_l,
        radius=args.radius,
        seed=args.seed,
        tip_depth=args.tip_depth,
        compute_scn=not args.skip_scn,
        zero_timings=args.zero_timings,
    )
    records = (
        run_smooth_suite(config) if suite == "smooth" else run_crack_suite(config)
    )
    out = args.out or (_out_dir() / f"{suite}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as f:
        write_csv(records, f, zero_timings=config.zero_timings)
    failed = [r for r in records if r.error]
    for r in failed:
        print(f"error: {r.method} k={r.k} {r.mesh_kind} N={r.size}: {r.error}",
              file=sys.stderr)
    print(f"wrote {len(records)} records to {out}")
    return 2 if failed else 0


def read_records_csv(path):
    """Parse CSV rows, skipping # lines; malformed rows are reported and
    skipped (returns rows as dicts with numeric fields converted)."""
    rows = []
    names = CSV_HEADER.split(",")
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line == CSV_HEADER:
                continue
            parts = line.split(",")
            if len(parts) != len(names):
                print(f"warning: skipping malformed CSV row at line {lineno}",
                      file=sys.stderr)
                continue
            try:
                rows.append(
                    {
                        "method": parts[0],
                        "k": int(parts[1]),
                        "mesh": parts[2],
                        "N": int(parts[3]),
                        "h": float(parts[4]),
                        "dof": int(parts[5]),
                        "EE": float(parts[6]),
                        "SCN": float(parts[7]),
                    }
                )
            except ValueError:
                print(f"warning: skipping malformed CSV row at line {lineno}",
                      file=sys.stderr)
    return rows


def emit_plots(csv_path, out_dir):
    """Log-log EE and SCN charts (SVG) plus gnuplot .dat files per curve.

    The x axis is sqrt(DOF) on both charts.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    csv_path = Path(csv_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = read_records_csv(csv_path)
    stem = csv_path.stem
    written = []
    for quantity in ("EE", "SCN"):
        curves = {}
        for row in rows:
            v = row[quantity]
            if not math.isfinite(v) or v <= 0.0 or row["dof"] <= 0:
                continue
            key = (row["method"], row["k"], row["mesh"])
            curves.setdefault(key, []).append((math.sqrt(row["dof"]), v))
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        for (method, k, mesh), pts in sorted(curves.items()):
            pts.sort()
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            label = f"{method} k={k} {mesh}"
            ax.loglog(xs, ys, marker="o", label=label)
            dat = out_dir / f"{stem}_{quantity}_{method}_k{k}_{mesh}.dat"
            with open(dat, "w") as f:
                f.write(f"# {label}: sqrt_dof {quantity}\n")
                for x, y in pts:
                    f.write(f"{x!r} {y!r}\n")
            written.append(dat)
        ax.set_xlabel("sqrt(DOF)")
        ax.set_ylabel(quantity)
        if curves:
            ax.legend(fontsize=7)
        else:
            ax.text(0.5, 0.5, "no curves selected", ha="center", va="center",
                    transform=ax.transAxes)
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        svg = out_dir / f"{stem}_{quantity}.svg"
        fig.savefig(svg)
        plt.close(fig)
        written.append(svg)
    return written


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "smooth":
        return _run_suite(args, "smooth")
    if args.command == "crack":
        return _run_suite(args, "crack")
    out = args.out or _out_dir()
    emit_plots(args.csv, out)
    print(f"plots written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
