"""Time the compiled and pure-Python guidance kernels on the same transport job.

    python benchmarks/bench_guidance.py [--n 2000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from pilotwave import kernels
from pilotwave.evolution import EvolutionSpec
from pilotwave.experiments import FREE_GRID, line
from pilotwave.trajectories import GuidanceField, integrate_ensemble
from pilotwave.wavefn import density, gaussian_wavefunction, sample_positions


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    psi0 = gaussian_wavefunction(line(FREE_GRID), 0.0, 1.0, 1.0)
    field = GuidanceField.evolved(psi0, EvolutionSpec(0.01, args.steps))
    x0 = sample_positions(density(psi0), args.n, seed=0)
    field.kernel_data  # build spectra outside the timed region

    results = {}
    for name in sorted(kernels.BACKENDS):
        best = np.inf
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            ens = integrate_ensemble(field, x0, backend=name)
            best = min(best, time.perf_counter() - t0)
        results[name] = (best, ens.positions)
        rate = args.n * args.steps / best
        print(f"{name:>7}: {best:8.3f} s  ({rate:,.0f} trajectory-steps/s)")

    if len(results) == 2:
        diff = np.max(np.abs(results["cython"][1] - results["python"][1]))
        print(f"speedup: {results['python'][0] / results['cython'][0]:.1f}x, max |diff| = {diff:.2e}")
    else:
        print("compiled extension not available; only the fallback was timed")


if __name__ == "__main__":
    main()
