"""Times the compiled coordinate descent kernel against the pure-numpy twin.

Both kernels implement the same contract (see ``sparseda._cdpure``); this
script fits the same penalized programs with each and reports wall times,
the speedup, and the max-norm gap between the two solutions.  Run as

    python3 benchmarks/bench_backends.py [--sizes 50 100 200 300] [--repeats 5]
"""

import argparse
import math
import time

import numpy as np

from sparseda import _cdpure
from sparseda.model import CovarianceSpec, make_model, sample_dataset
from sparseda.sda import gram_program
from sparseda.theory import lambda_sda

try:
    from sparseda import _cdcore
except ImportError:
    _cdcore = None


def build_program(p: int, seed: int):
    s = math.ceil(2.0 * p**0.45)
    n = 4 * p
    model_seed, data_seed = np.random.SeedSequence([seed, p]).spawn(2)
    model = make_model(p, s, CovarianceSpec("identity", p), seed=model_seed)
    dataset = sample_dataset(model, n, seed=data_seed)
    return gram_program(dataset, lambda_sda(model, n))


def run_kernel(kernel, qp, repeats: int):
    best = math.inf
    v = np.zeros(qp.q.shape[0])
    for _ in range(repeats):
        v = np.zeros(qp.q.shape[0])
        start = time.perf_counter()
        sweeps, kkt, converged, _ = kernel(qp.q, qp.c, qp.lam, v, 1e-10, 100_000, None)
        best = min(best, time.perf_counter() - start)
        if not converged:
            raise RuntimeError(f"kernel did not converge (kkt={kkt:.2e})")
    return best, sweeps, v


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 300])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    if _cdcore is None:
        print("compiled kernel not built; timing the python kernel only")
    header = f"{'p':>5} {'sweeps':>7} {'python ms':>10}"
    if _cdcore is not None:
        header += f" {'compiled ms':>12} {'speedup':>8} {'max gap':>9}"
    print(header)
    for p in args.sizes:
        qp = build_program(p, args.seed)
        t_py, sweeps, v_py = run_kernel(_cdpure.cd_lasso, qp, args.repeats)
        line = f"{p:>5} {sweeps:>7} {1e3 * t_py:>10.2f}"
        if _cdcore is not None:
            t_c, _, v_c = run_kernel(_cdcore.cd_lasso, qp, args.repeats)
            gap = float(np.abs(v_py - v_c).max())
            line += f" {1e3 * t_c:>12.2f} {t_py / t_c:>7.1f}x {gap:>9.1e}"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
