"""Benchmark the stiffness-assembly kernels: compiled extension vs numpy.

Usage: python benchmarks/bench_assembly.py [--target-h 0.1 0.05 0.025] [--repeats 5]
"""

import argparse
import time

from illusion_lab import conductivity, kernels
from illusion_lab import mesh as msh
from illusion_lab.mesh import triangle_centroids


def best_of(repeats, fn):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--target-h", type=float, nargs="+",
                        default=[0.1, 0.05, 0.025])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("note: compiled extension not built; benchmarking the numpy "
              "backend only (pip install -e . --no-build-isolation)")

    field = conductivity.make_case(1, 1.0, 2.0, r_D=1.0)
    print(f"{'h':>8} {'triangles':>10} " + " ".join(f"{b:>12}" for b in backends)
          + ("   speedup" if len(backends) == 2 else ""))
    for h in args.target_h:
        mesh = msh.build_disk_mesh(2.0, [1.0], h)
        sigma = field.evaluate_many(triangle_centroids(mesh))
        times = {}
        for backend in backends:
            times[backend] = best_of(
                args.repeats,
                lambda b=backend: kernels.stiffness_triplets(
                    mesh.nodes, mesh.triangles, sigma, backend=b))
        row = f"{h:8.3f} {mesh.n_triangles:10d} " + " ".join(
            f"{times[b] * 1e3:10.2f}ms" for b in backends)
        if len(backends) == 2:
            row += f"   {times['python'] / times['compiled']:8.2f}x"
        print(row)


if __name__ == "__main__":
    main()
