#!/usr/bin/env python3
"""Regenerate the bundled synthetic sample dataset.

Deterministic: re-running leaves src/mpnet/data/sample_meltpool.csv unchanged.
"""

from pathlib import Path

from mpnet.synth import make_sample_dataset, write_csv

OUT = Path(__file__).resolve().parents[1] / "src" / "mpnet" / "data" / "sample_meltpool.csv"


def main():
    ds = make_sample_dataset(seed=2024)
    write_csv(ds, OUT)
    print(f"wrote {len(ds)} records to {OUT}")


if __name__ == "__main__":
    main()
