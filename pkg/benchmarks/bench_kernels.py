"""Benchmark the compiled kernels against the pure-numpy fallback.

Two workloads:

* the full certification pipeline on the bundled reference models
  (dominated by the SDP operator-splitting loop), and
* batched spectral-abscissa evaluation on random matrix stacks
  (the sampling oracle's inner kernel).

Run from the repository root::

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import statistics
import time
from pathlib import Path

import numpy as np

import siscert.sdpsolver as sdpsolver
from siscert import certify, cli
from siscert._kernels import _fallback

try:
    from siscert._kernels import _core
except ImportError:
    _core = None

MODELS = Path(__file__).parents[1] / "models"


def _time(fn, repeats):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best.append(time.perf_counter() - t0)
    return min(best), statistics.median(best), out


def bench_pipeline(backend_name, impl, repeats):
    """Time both certification paths with the given admm kernel."""
    saved = sdpsolver.admm_run
    sdpsolver.admm_run = impl.admm_run
    results = {}
    try:
        for label, path, analyze in (
            ("global-sdp", MODELS / "infinite_2d.toml",
             certify.theorem1_analyze),
            ("domain-sdp", MODELS / "mixed_periodic_2d.toml",
             certify.theorem2_analyze),
        ):
            model = cli.parse_model(str(path))
            tmin, tmed, verdict = _time(lambda: analyze(model), repeats)
            results[label] = (tmin, tmed, verdict.status,
                              verdict.epsilon_star)
    finally:
        sdpsolver.admm_run = saved
    return results


def bench_abscissa(impl, repeats, stacks):
    results = {}
    for label, (B, n, seed) in stacks.items():
        rng = np.random.default_rng(seed)
        mats = (rng.standard_normal((B, n, n))
                + 1j * rng.standard_normal((B, n, n)))
        tmin, tmed, vals = _time(lambda: impl.abscissa_batch(mats, 1e-8),
                                 repeats)
        results[label] = (tmin, tmed, float(vals.max()))
    return results


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    backends = [("python", _fallback)]
    if _core is not None:
        backends.append(("compiled", _core))
    else:
        print("compiled extension not built; benchmarking fallback only")

    stacks = {
        "abscissa B=256 n=4": (256, 4, 0),
        "abscissa B=32 n=8": (32, 8, 1),
    }

    rows = []
    pipeline = {}
    for name, impl in backends:
        pipeline[name] = bench_pipeline(name, impl, args.repeats)
        for label, (tmin, tmed, status, eps) in pipeline[name].items():
            rows.append((label, name, tmin, tmed,
                         f"{status} eps*={eps:.4f}"))
        for label, (tmin, tmed, vmax) in bench_abscissa(
                impl, args.repeats, stacks).items():
            rows.append((label, name, tmin, tmed, f"max={vmax:.6f}"))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  {'backend':<9} {'best s':>9} "
          f"{'median s':>9}  result")
    for label, name, tmin, tmed, note in rows:
        print(f"{label:<{width}}  {name:<9} {tmin:>9.4f} {tmed:>9.4f}  "
              f"{note}")

    if _core is not None:
        print()
        for label in pipeline["python"]:
            py = pipeline["python"][label]
            cc = pipeline["compiled"][label]
            speedup = py[0] / max(cc[0], 1e-12)
            same = (py[2] == cc[2]
                    and abs(py[3] - cc[3]) <= 1e-6 * (1.0 + abs(py[3])))
            print(f"{label}: compiled is {speedup:.2f}x the fallback "
                  f"(same verdict and optimum: {same})")


if __name__ == "__main__":
    main()
