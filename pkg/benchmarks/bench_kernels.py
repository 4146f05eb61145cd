"""Compare the compiled kernels with the NumPy fallback.

Run ``python3 benchmarks/bench_kernels.py``. Each workload is timed with
``timeit`` (best of several repeats) on every available backend, and the
outputs of the two backends are compared.
"""

import argparse
import timeit

import numpy as np

from platoon_game import _backend
from platoon_game.oracle import ControlLaw, best_response_check, integrate
from platoon_game.scenario import paper_sec5


def workloads():
    cfg = paper_sec5()
    law = ControlLaw.from_strategy(cfg.strategy_object())
    t = np.linspace(0.0, 10.0, 10001)
    times = np.append(np.arange(10000) * 1e-3, 10.0)
    rng = np.random.default_rng(0)
    x0 = rng.normal(size=(17, 3))
    u = rng.normal(size=(len(times), 17))
    um = rng.normal(size=(len(times) - 1, 17))
    k = _backend.kernels
    return {
        "expm_batch (1e4 times)": lambda: k().expm_batch(0.5, t),
        "gramian_batch (1e4 times)": lambda: k().gramian_batch(0.5, t),
        "rk4_linear (1e4 steps x 17 systems)": lambda: k().rk4_linear(0.5, x0, times, u, um),
        "integrate sec5 nash (dt=1e-3)": lambda: integrate(law, cfg, 1e-3).states,
        "best_response_check follower 1": lambda: best_response_check(1, law, cfg).min_margin,
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    backends = _backend.available()
    jobs = workloads()
    print(f"{'workload':40s}" + "".join(f"{b:>14s}" for b in backends) + f"{'speedup':>10s}{'max|diff|':>12s}")
    prev = _backend.name()
    try:
        for label, fn in jobs.items():
            best, outs = {}, {}
            for b in backends:
                _backend.use(b)
                outs[b] = np.asarray(fn())
                best[b] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            row = f"{label:40s}" + "".join(f"{best[b] * 1e3:11.2f} ms" for b in backends)
            if len(backends) == 2:
                diff = float(np.max(np.abs(outs["compiled"] - outs["python"])))
                row += f"{best['python'] / best['compiled']:9.1f}x{diff:12.2g}"
            print(row)
    finally:
        _backend.use(prev)


if __name__ == "__main__":
    main()
