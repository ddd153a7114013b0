"""Compiled kernels vs the pure-Python fallback.

Each mode runs in its own interpreter because the choice is fixed at import
time by QSC_BENCH_DISABLE_JIT. Example:

    python3 benchmarks/bench_kernels.py --runs 5
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

_CHILD = r"""
import json, sys, time
from dataclasses import replace
from qsc_bench import _accel
from qsc_bench.netlink import DeterministicRng
from qsc_bench.runner import MB2, execute, preset
from qsc_bench.transport import TransportParams, deliver_stream

runs = int(sys.argv[1])
profile = preset("congested").profile
params = TransportParams()

t0 = time.perf_counter()
deliver_stream(3000, 0.0, profile, params, DeterministicRng(0))  # compile / warm
warm = time.perf_counter() - t0

t0 = time.perf_counter()
for i in range(runs):
    deliver_stream(MB2, 0.0, profile, params, DeterministicRng(i))
stream = (time.perf_counter() - t0) / runs

spec = replace(preset("congested"), runs=runs)
t0 = time.perf_counter()
res = execute(spec, workers=1)
scenario = time.perf_counter() - t0
fingerprint = [s.total_download_time_s for ss in res.samples.values() for s in ss]

print(json.dumps({"jit": _accel.JIT_ENABLED, "warm_s": warm, "stream_s": stream,
                  "scenario_s": scenario, "fingerprint": fingerprint}))
"""


def measure(disable_jit: bool, runs: int) -> dict:
    env = dict(os.environ)
    env.pop("QSC_BENCH_DISABLE_JIT", None)
    if disable_jit:
        env["QSC_BENCH_DISABLE_JIT"] = "1"
    out = subprocess.run(
        [sys.executable, "-c", _CHILD, str(runs)], env=env, check=True, capture_output=True, text=True
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=5, help="2 MB transfers and runs per suite (default: %(default)s)")
    args = ap.parse_args(argv)

    fast = measure(False, args.runs)
    slow = measure(True, args.runs)
    print(f"congested profile, {args.runs} runs")
    print(f"{'mode':<10}{'first call s':>14}{'2 MB stream ms':>16}{'scenario ms':>13}")
    for label, r in (("numba", fast), ("python", slow)):
        print(f"{label:<10}{r['warm_s']:>14.3f}{r['stream_s'] * 1e3:>16.3f}{r['scenario_s'] * 1e3:>13.1f}")
    print(f"speedup: stream x{slow['stream_s'] / fast['stream_s']:.1f}, scenario x{slow['scenario_s'] / fast['scenario_s']:.1f}")
    same = fast["fingerprint"] == slow["fingerprint"]
    print(f"identical results: {same}")
    return 0 if same and fast["jit"] and not slow["jit"] else 1


if __name__ == "__main__":
    sys.exit(main())
