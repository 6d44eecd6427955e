#!/usr/bin/env python3
"""Sweep the penalty decay factor over the bundled scripted suite.

For each decay value, runs the full engine on all 20 tasks and reports the
metrics plus total rollbacks and tokens. Larger decay values penalize an
abandoned path more gently, so correction takes more attempts; on these
scripted tasks everything still converges within the 2x budget, which makes
the token column the interesting one.

Usage: python scripts/decay_sweep.py [--values 0.5,0.7,0.9,0.95,0.99]
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from backgen.engine import SessionConfig  # noqa: E402
from backgen.harness import run_benchmark, scripted_provider_factory  # noqa: E402
from backgen.metrics import MODE_ROCODE  # noqa: E402
from backgen.suite import build_suite  # noqa: E402


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--values", default="0.5,0.6,0.7,0.8,0.85,0.9,0.95,0.98,0.99")
    parser.add_argument("--parallelism", type=int, default=4)
    args = parser.parse_args()

    suite = build_suite()
    tasks = [st.task for st in suite]
    factory = scripted_provider_factory(
        {st.task.task_id: st.model_json for st in suite})
    max_len = max(st.max_generation_length for st in suite)

    print(f"{'decay':>6} {'pass_rate':>10} {'avg_ratio':>10} {'ccp':>6} "
          f"{'rollbacks':>10} {'tokens':>8}")
    for value in (float(v) for v in args.values.split(",")):
        config = SessionConfig(decay=value, max_generation_length=max_len)
        doc = run_benchmark(tasks, MODE_ROCODE, config, factory,
                            parallelism=args.parallelism)
        records = doc["trials"][0]["records"]
        rollbacks = sum(s["rollback_count"]
                        for r in records for s in r["samples"])
        tokens = sum(s["tokens_consumed"]
                     for r in records for s in r["samples"])
        m = doc["metrics"]
        print(f"{value:>6.2f} {m['pass_rate']:>10.3f} "
              f"{m['avg_pass_ratio']:>10.3f} {m['ccp']:>6.3f} "
              f"{rollbacks:>10d} {tokens:>8d}")


if __name__ == "__main__":
    main()
