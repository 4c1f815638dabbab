"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from magloop import _pykernels
from magloop.engine import cell_components, step_matrices, step_plan
from magloop.profiles import Biharmonic

try:
    from magloop import _ckernels
except ImportError:
    _ckernels = None


def cases():
    prof = Biharmonic(math.pi / 2, 9.966)
    plan = step_plan(prof, 0.0, 100.0, 2048)
    comps = cell_components(plan.beta, plan.h)
    _, E, integ = step_matrices(prof, "cylindrical", 0.0, 10.0, 2048)
    force = np.array([0.0, 0.0, 0.3, -0.7])
    q0 = np.array([1.0, 0.0, 0.0, 0.5])
    t = (np.arange(2048) + 0.5) / 2048
    s1, s2 = np.sin(2 * np.pi * t), np.sin(4 * np.pi * t)
    g = np.linspace(-12, 12, 128)
    p1, p2 = (a.ravel() for a in np.meshgrid(g, g, indexing="ij"))
    zero = np.zeros_like(p1)
    return {
        "cell_chain (204800 steps)": lambda m: m.cell_chain(*comps),
        "chain4 (20480 steps)": lambda m: m.chain4(E),
        "affine_chain (20480 steps)": lambda m: m.affine_chain(E, integ, force, q0),
        "cell_grid (128^2 x 2048)": lambda m: m.cell_grid(zero, p1, p2, s1, s2, 1 / 2048),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    print(f"{'kernel':30s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}")
    for name, fn in cases().items():
        times = {b: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat))
                 for b, m in backends.items()}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:30s}" + "".join(f"{times[b]:11.4f}s" for b in backends) + f"{speed:9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
