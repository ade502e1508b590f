#!/usr/bin/env python3
"""Write a synthetic multilingual corpus (posterior grids + manifest).

The four built-in languages have disjoint phoneme inventories and tiny
grapheme maps, which makes the corpus convenient for exercising the full
pipeline end to end without any real acoustic model.

Example:
    python scripts/make_synthetic_corpus.py --out-dir /tmp/corpus --seed 42
"""

import argparse
import sys
from pathlib import Path

from p2g import synth
from p2g.ctc import save_grids
from p2g.data import manifest_stats, save_manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--utts-per-lang", type=int, default=8)
    args = parser.parse_args(argv)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grids, manifest = synth.build_corpus(seed=args.seed,
                                         utts_per_lang=args.utts_per_lang)
    save_grids(grids, out / "grids.jsonl")
    save_manifest(manifest, out / "manifest.jsonl")
    for lang, st in sorted(manifest_stats(manifest).items()):
        print(f"{lang}: {st.records} utterances, {st.hours * 3600:.1f}s")
    print(f"wrote {out / 'grids.jsonl'} and {out / 'manifest.jsonl'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
