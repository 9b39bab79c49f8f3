"""Compare the compiled kernels with the plain numpy/Python fallback.

Each mode runs in its own interpreter because the switch is read at import:

    python3 benchmarks/bench_kernels.py --depths 8 10 12
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKLOAD = r"""
import json, sys, time
import numpy as np
from setdyn import _jit, build_graph, make_model, terminal_sccs
from setdyn.geometry import BoxCover, WorkingDomain

depth, repeat = int(sys.argv[1]), int(sys.argv[2])
dom = WorkingDomain((-4.0,), (4.0,))
svm = make_model("saturating", alpha=2.0, beta=0.0, eps=0.1)
cover = BoxCover.full(dom, depth)

def once():
    t = {}
    s = time.perf_counter(); g = build_graph(svm, cover, incoming=True); t["build"] = time.perf_counter() - s
    s = time.perf_counter(); terms = terminal_sccs(g); t["scc"] = time.perf_counter() - s
    seed = np.zeros(g.n, dtype=bool); seed[g.n // 2] = True
    s = time.perf_counter(); g.closure(seed); g.back_closure(seed); t["closure"] = time.perf_counter() - s
    return t, len(terms)

once()  # warm-up (compilation or cache load)
best = None
for _ in range(repeat):
    t, nterm = once()
    best = t if best is None else {k: min(best[k], t[k]) for k in t}
print(json.dumps({"jit": _jit.HAS_NUMBA, "depth": depth, "terms": nterm, **best}))
"""


def run(depth, repeat, disable):
    env = dict(os.environ, SETDYN_DISABLE_JIT="1" if disable else "0")
    out = subprocess.run(
        [sys.executable, "-c", WORKLOAD, str(depth), str(repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(out.stdout)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--depths", type=int, nargs="+", default=[8, 10, 12])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    print(f"{'depth':>5} {'stage':>8} {'numba s':>10} {'fallback s':>11} {'speedup':>8}")
    for depth in args.depths:
        fast = run(depth, args.repeat, False)
        slow = run(depth, args.repeat, True)
        assert fast["terms"] == slow["terms"]
        for stage in ("build", "scc", "closure"):
            a, b = fast[stage], slow[stage]
            print(f"{depth:>5} {stage:>8} {a:>10.4f} {b:>11.4f} {b / a if a > 0 else float('inf'):>7.1f}x")


if __name__ == "__main__":
    t0 = time.perf_counter()
    main()
    print(f"total {time.perf_counter() - t0:.1f}s")
