"""One-max and sphere benchmarks for the GA at the default settings.

    python scripts/ga_benchmark.py [--runs 100]
"""

import argparse
import time

import numpy as np

from adriana import ga_optimizer as ga


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=100)
    args = ap.parse_args()

    bits = {"a": ga.Bound(0, 1), "b": ga.Bound(0, 1)}
    box = {"x": ga.Bound(-5, 5), "y": ga.Bound(-5, 5)}
    sphere = lambda g: sum(v * v for v in ga.decode(g, box).values())

    for name, space, f, solved in [
        ("one-max (20 bits)", bits, lambda g: -float(np.sum(g)), lambda r: r.best_fitness == -20),
        ("sphere (2-d, |x|<=5)", box, sphere, lambda r: r.best_fitness < 0.05),
    ]:
        t0 = time.perf_counter()
        results = [ga.run_ga(ga.GaConfig(seed=s, search_space=space), f) for s in range(args.runs)]
        hits = sum(solved(r) for r in results)
        evals = np.mean([r.evaluations for r in results])
        print(f"{name:22s} solved {hits}/{args.runs}  mean evaluations {evals:.0f}  "
              f"{time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
