"""Command-line harness for convergence studies.

Runs one manufactured example through a chosen scheme on a ladder of
uniform meshes (or one mesh file), prints a plain-text error/order
table, and optionally writes the same data as CSV, compares two
schemes, or gates the run on convergence-order criteria.

Exit codes: 0 success, 1 check violation, 2 bad flags, 3 solver failure.
"""

import argparse
import csv
import sys

import numpy as np

from . import analysis, forms, mesh as mesh_mod, polybasis, weakcalc
from .analysis import NORM_KEYS
from .systems import SingularSystemError

CSV_COLUMNS = (
    "h",
    "err_triple", "ord_triple",
    "err_l2u", "ord_l2u",
    "err_p", "ord_p",
    "err_lambda", "ord_lambda",
)

# finest-pair order gates per example: ("abs", target, tol) or ("min", bound)
ORDER_GATES = {
    1: {
        "triple": ("abs", 1.0, 0.05),
        "l2u": ("abs", 2.0, 0.05),
        "p": ("abs", 1.0, 0.05),
        "lambda": ("min", 1.9),
    },
    2: {
        "triple": ("abs", 1.0, 0.05),
        "l2u": ("abs", 2.0, 0.05),
        "p": ("min", 1.5),
        "lambda": ("min", 1.6),
    },
}
EQUIV_RTOL = 1e-6


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wgstokes",
        description="Convergence studies for weak Galerkin Stokes solvers "
        "on the unit square.",
    )
    parser.add_argument("--example", type=int, choices=(1, 2), required=True,
                        help="manufactured solution id")
    parser.add_argument("--k", type=int, default=1, metavar="INT",
                        help="polynomial degree (default 1)")
    parser.add_argument("--levels", default="4,8,16,32", metavar="CSV",
                        help="comma-separated uniform mesh sizes n "
                        "(default 4,8,16,32)")
    parser.add_argument("--method", choices=("wg", "hwg", "schur"),
                        default="wg", help="scheme to run (default wg)")
    parser.add_argument("--compare", choices=("wg", "hwg", "schur"),
                        metavar="METHOD",
                        help="also run METHOD and print the max relative "
                        "discrepancy per norm")
    parser.add_argument("--out", metavar="PATH",
                        help="write the table as CSV to PATH")
    parser.add_argument("--check", choices=("orders", "equivalence", "all"),
                        help="gate the run: exit 1 if the selected criteria "
                        "fail")
    parser.add_argument("--mesh", dest="mesh_path", metavar="PATH",
                        help="run on a single mesh file instead of --levels")
    parser.add_argument("--seed", type=int, default=0, metavar="INT",
                        help="seed for the random property sub-checks of "
                        "--check all (default 0)")
    return parser


def parse_levels(text, parser):
    try:
        levels = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        parser.error(f"--levels must be comma-separated integers, got {text!r}")
    if not levels or any(n < 1 for n in levels):
        parser.error("--levels needs positive mesh sizes")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        parser.error("--levels must be strictly increasing")
    return levels


def _fmt_err(v):
    return f"{v:.4e}"


def _fmt_ord(v):
    return "  ---  " if np.isnan(v) else f"{v:7.4f}"


def text_table(record):
    lines = [f"{record.case_name}  method={record.method}  k={record.k}"]
    header = f"{'h':>10}"
    for key in NORM_KEYS:
        header += f"  {'err_' + key:>12}  {'order':>7}"
    lines.append(header)
    for i in range(record.num_levels):
        n = record.ns[i]
        hcell = f"1/{n}" if n is not None else f"{record.h[i]:.4e}"
        row = f"{hcell:>10}"
        for key in NORM_KEYS:
            row += f"  {_fmt_err(record.errors[key][i]):>12}"
            row += f"  {_fmt_ord(record.orders[key][i]):>7}"
        lines.append(row)
    return "\n".join(lines)


def write_csv(path, record):
    """CSV mirror of the text table, full float precision, LF endings."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i in range(record.num_levels):
            row = [repr(float(record.h[i]))]
            for key in NORM_KEYS:
                row.append(repr(float(record.errors[key][i])))
                o = record.orders[key][i]
                row.append("" if np.isnan(o) else repr(float(o)))
            writer.writerow(row)


def run_single_mesh(case, k, method, path):
    msh = mesh_mod.read_mesh(path)
    sol, tables, lf = analysis.solve_on_mesh(case, msh, k, method)
    norms = analysis.error_norms(sol, case, tables, lf)
    return analysis.ConvergenceRecord(
        case_name=case.name,
        method=method,
        k=k,
        ns=[None],
        h=np.array([float(np.max(msh.h_T))]),
        errors={key: np.array([norms[key]]) for key in NORM_KEYS},
        orders={key: np.array([np.nan]) for key in NORM_KEYS},
    )


def compare_records(rec, other):
    """Max relative discrepancy per norm over all shared levels."""
    out = {}
    for key in NORM_KEYS:
        a, b = rec.errors[key], other.errors[key]
        denom = np.maximum(np.abs(a), 1e-300)
        out[key] = float(np.max(np.abs(a - b) / denom))
    return out


def check_orders(record, example, out):
    if record.num_levels < 2:
        out.append("check orders: FAIL (needs at least two levels)")
        return False
    ok = True
    for key, gate in ORDER_GATES[example].items():
        got = record.orders[key][-1]
        if gate[0] == "abs":
            _, target, tol = gate
            passed = np.isfinite(got) and abs(got - target) <= tol
            desc = f"|ord - {target}| <= {tol}"
        else:
            _, bound = gate
            passed = np.isfinite(got) and got >= bound
            desc = f"ord >= {bound}"
        ok &= passed
        out.append(
            f"check orders [{key}]: got {got:.4f}, need {desc}: "
            f"{'PASS' if passed else 'FAIL'}"
        )
    return ok


def check_equivalence(discrepancies, out):
    worst = max(discrepancies.values())
    passed = worst <= EQUIV_RTOL
    out.append(
        f"check equivalence: max relative discrepancy {worst:.3e} "
        f"(tol {EQUIV_RTOL:.0e}): {'PASS' if passed else 'FAIL'}"
    )
    return passed


def run_property_checks(case, k, method, seed, out):
    """Cheap randomized identities on the coarsest practical mesh."""
    rng = np.random.default_rng(seed)
    msh = mesh_mod.build_uniform_square(4)
    tables = polybasis.build_tables(msh, k)
    lf = forms.assemble_local(tables)
    ok = True

    worst = 0.0
    for _ in range(5):
        u0 = rng.standard_normal((msh.num_elements, 2, tables.m_k))
        ub = rng.standard_normal((msh.num_edges, 2, tables.d_e))
        sides = ub[msh.element_edges]
        v = weakcalc.pack_local(tables, u0, sides)
        quad = float(np.einsum("ti,tij,tj->", v, lf.A, v))
        tstar = analysis.norm_triple(lf, u0, sides)
        worst = max(worst, abs(quad - tstar**2) / max(quad, 1e-300))
    passed = worst <= 1e-10
    ok &= passed
    out.append(
        f"check property [energy identity]: max rel defect {worst:.3e} "
        f"(tol 1e-10): {'PASS' if passed else 'FAIL'}"
    )

    zero = lambda pts: np.zeros(pts.shape[:-1] + (2,))
    sol, _, _ = analysis.solve_on_mesh(
        analysis.ManufacturedCase(
            cid=case.cid, name="zero", u=zero, p=lambda pts: np.zeros(pts.shape[:-1]),
            f=zero, grad_u=lambda pts: np.zeros(pts.shape[:-1] + (2, 2)),
            div_u=lambda pts: np.zeros(pts.shape[:-1]),
        ),
        msh, k, method,
    )
    mag = max(
        float(np.max(np.abs(sol.u0))),
        float(np.max(np.abs(sol.ub))),
        float(np.max(np.abs(sol.p))),
    )
    passed = mag <= 1e-10
    ok &= passed
    out.append(
        f"check property [zero data]: max coefficient {mag:.3e} "
        f"(tol 1e-10): {'PASS' if passed else 'FAIL'}"
    )
    return ok


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.k < 1:
        parser.error("--k must be at least 1")
    if args.mesh_path is not None and args.check == "orders":
        parser.error("--check orders needs --levels, not --mesh")
    if args.compare == args.method:
        parser.error("--compare must name a different method")
    levels = parse_levels(args.levels, parser)

    compare_method = args.compare
    if compare_method is None and args.check in ("equivalence", "all"):
        compare_method = "wg" if args.method != "wg" else "hwg"

    case = analysis.make_case(args.example)
    try:
        if args.mesh_path is not None:
            record = run_single_mesh(case, args.k, args.method, args.mesh_path)
            other = (
                run_single_mesh(case, args.k, compare_method, args.mesh_path)
                if compare_method else None
            )
        else:
            record = analysis.run_convergence(case, args.k, levels, args.method)
            other = (
                analysis.run_convergence(case, args.k, levels, compare_method)
                if compare_method else None
            )
    except (SingularSystemError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3

    print(text_table(record))
    if args.out:
        write_csv(args.out, record)
        print(f"wrote {args.out}")

    lines = []
    discrepancies = None
    if other is not None:
        discrepancies = compare_records(record, other)
        worst = max(discrepancies.values())
        parts = ", ".join(f"{k} {v:.3e}" for k, v in discrepancies.items())
        print(
            f"compare {record.method} vs {other.method}: "
            f"max relative discrepancy {worst:.3e} ({parts})"
        )

    ok = True
    if args.check in ("orders", "all"):
        ok &= check_orders(record, args.example, lines)
    if args.check in ("equivalence", "all"):
        ok &= check_equivalence(discrepancies, lines)
    if args.check == "all":
        ok &= run_property_checks(case, args.k, args.method, args.seed, lines)
    for line in lines:
        print(line)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
