"""Time the compiled kernel lane against the NumPy lane.

Runs the three hot kernels (weak-operator maps, local form matrices,
static condensation) on a uniform mesh and reports best-of-N wall
times per lane.  Usage:

    python3 benchmarks/bench_kernels.py --n 64 --k 1 --repeats 5
"""

import argparse
import time

import numpy as np

from wgstokes import forms, kernels, mesh, polybasis


def best_of(fn, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(n, k, repeats):
    msh = mesh.build_uniform_square(n)
    tables = polybasis.build_tables(msh, k)
    we_loc = np.ascontiguousarray(tables.we[msh.element_edges])
    chi_loc = np.ascontiguousarray(tables.chi[msh.element_edges])
    map_args = (
        tables.wq, tables.phi, tables.dphi, we_loc, chi_loc,
        tables.phi_tr, msh.normals, tables.m_r, tables.d_e,
    )
    zero = lambda pts: np.zeros(np.asarray(pts).shape[:-1] + (2,))
    F = forms.load_vector(zero, tables)

    lanes = {"numpy": kernels.get_lane("numpy")}
    try:
        lanes["cython"] = kernels.get_lane("cython")
    except ImportError:
        print("compiled lane not built; timing the NumPy lane only")

    print(f"mesh n={n} ({msh.num_elements} elements), k={k}, "
          f"best of {repeats}")
    header = f"{'kernel':<14}" + "".join(f"{name:>12}" for name in lanes)
    if len(lanes) == 2:
        header += f"{'speedup':>10}"
    print(header)

    rows = {}
    for name, lane in lanes.items():
        t_maps, (G, W, R) = best_of(lambda: lane.weak_maps(*map_args), repeats)
        lf_args = (G, W, R, msh.h_T, tables.m_k, tables.m_r, tables.d_e)
        t_forms, (A, B, _) = best_of(lambda: lane.local_forms(*lf_args), repeats)
        t_cond, _ = best_of(
            lambda: lane.condense(A, B, F, 2 * tables.m_k), repeats
        )
        rows[name] = (t_maps, t_forms, t_cond)

    for i, kernel in enumerate(("weak_maps", "local_forms", "condense")):
        line = f"{kernel:<14}"
        for name in lanes:
            line += f"{rows[name][i] * 1e3:>10.2f}ms"
        if len(lanes) == 2:
            line += f"{rows['numpy'][i] / rows['cython'][i]:>9.2f}x"
        print(line)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64, help="mesh subdivisions")
    ap.add_argument("--k", type=int, default=1, help="polynomial degree")
    ap.add_argument("--repeats", type=int, default=5, help="timing repeats")
    args = ap.parse_args(argv)
    run(args.n, args.k, args.repeats)


if __name__ == "__main__":
    main()
