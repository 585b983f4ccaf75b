#!/usr/bin/env python3
"""Regenerate the checked-in data/mini fixture.

The fixture is fully deterministic: same generator seed, same split seed,
same bytes on disk. Rerunning this script must produce no diff.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from graphmix.graphdata import SplitSpec, random_split, save_dataset
from graphmix.synthetic import make_synthetic


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "mini"))
    args = parser.parse_args()

    ds = make_synthetic()
    spec = SplitSpec(per_class_train=5, num_val=50, test="remaining", seed=0)
    masks = random_split(ds, spec)
    ds = ds.with_split(*masks)
    out = os.path.abspath(args.out)
    os.makedirs(out, exist_ok=True)
    save_dataset(ds, out, split="standard")
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
