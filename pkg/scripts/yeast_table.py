"""Compare methods on the Yeast ME2-vs-rest CSV over repeated 7:3 splits.

    python scripts/yeast_table.py --trials 30 --out results/yeast.jsonl
"""

import argparse
import logging
import time
from pathlib import Path

from skewfit import bench

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--csv", type=Path, default=ROOT / "data" / "yeast_me2.csv")
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--methods", nargs="+", default=list(bench.METHODS))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("results/yeast.jsonl"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = bench.ExperimentConfig(csv=str(args.csv), label_column="class", positive_label="ME2",
                                 name="Yeast", trials=args.trials, methods=tuple(args.methods),
                                 seed=args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    results, _ = bench.run_experiment(cfg)
    bench.save_results(results, args.out)
    print(bench.emit_report(results, "markdown"))
    print(f"total {time.perf_counter() - t0:.0f}s")


if __name__ == "__main__":
    main()
