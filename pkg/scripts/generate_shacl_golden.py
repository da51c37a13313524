"""Produce golden verdicts for the shape-validation corpus.

Runs the self-contained reference validator (scripts/shacl_reference.py)
over every fixture pair and writes golden.json next to it. Goldens are
committed; the differential test compares the engine against them.
"""

from __future__ import annotations

import json
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import shacl_reference  # noqa: E402

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS_DIR = os.path.join(ROOT, "tests", "fixtures", "shacl")
FOCUS = "http://ex/inst"


def main():
    pairs = sorted(d for d in os.listdir(CORPUS_DIR)
                   if os.path.isdir(os.path.join(CORPUS_DIR, d)))
    for name in pairs:
        pair_dir = os.path.join(CORPUS_DIR, name)
        with open(os.path.join(pair_dir, "shapes.nt"), encoding="utf-8") as fh:
            shapes_nt = fh.read()
        with open(os.path.join(pair_dir, "data.nt"), encoding="utf-8") as fh:
            data_nt = fh.read()
        verdict = shacl_reference.validate(shapes_nt, data_nt, FOCUS)
        with open(os.path.join(pair_dir, "golden.json"), "w", encoding="utf-8") as fh:
            json.dump({"focus": FOCUS, **verdict}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"{name}: conforms={verdict['conforms']} "
              f"violated={verdict['violatedConstraints']}")
    print(f"wrote {len(pairs)} golden files")


if __name__ == "__main__":
    sys.exit(main())
