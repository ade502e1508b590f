#!/usr/bin/env python3
"""Run the whole pipeline on one corpus directory.

Steps: balance the manifest, generate noisy training lines, train the
scorer, decode every utterance, and print the evaluation table. All
artifacts land next to the inputs; rerunning with the same seed reproduces
every file byte for byte.

Example:
    python scripts/make_synthetic_corpus.py --out-dir /tmp/corpus --seed 42
    python scripts/run_pipeline.py --corpus-dir /tmp/corpus --seed 17
"""

import argparse
import sys
from pathlib import Path

from p2g import cli


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--corpus-dir", required=True,
                        help="directory holding grids.jsonl and manifest.jsonl")
    parser.add_argument("--seed", type=int, required=True)
    parser.add_argument("--target-hours", type=float, default=0.02,
                        help="per-language oversampling target")
    parser.add_argument("--n-best", type=int, default=4)
    parser.add_argument("--k", type=int, default=4)
    parser.add_argument("--s", type=int, default=2)
    args = parser.parse_args(argv)

    d = Path(args.corpus_dir)
    grids, refs = str(d / "grids.jsonl"), str(d / "manifest.jsonl")
    seed = str(args.seed)
    steps = [
        ["balance", "--in", refs, "--out", str(d / "balanced.jsonl"),
         "--target-hours", str(args.target_hours), "--seed", seed],
        ["augment", "--grids", grids, "--refs", str(d / "balanced.jsonl"),
         "--out", str(d / "train.txt"), "--n-best", str(args.n_best)],
        ["train-scorer", "--in", str(d / "train.txt"),
         "--out", str(d / "scorer.json"), "--order", "2", "--alpha", "0.1"],
        ["decode", "--grids", grids, "--scorer", str(d / "scorer.json"),
         "--k", str(args.k), "--s", str(args.s),
         "--out", str(d / "decoded.jsonl")],
        ["eval", "--refs", refs, "--hyps", str(d / "decoded.jsonl"),
         "--out", str(d / "report.json")],
    ]
    for step in steps:
        print(f"$ p2g {' '.join(step)}")
        code = cli.main(step)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
