"""Build the shipped models and run the full oracle-conformance sweep on each."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from sptmbqc import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="conformance_runs")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n", type=int, default=6)
    args = parser.parse_args()
    out = Path(args.out)

    runs = [
        ("cluster", ["model", "build", "--group", "Z2xZ2"]),
        ("perturbed", ["model", "perturb", "--strength", "0.3", "--junk-dim", "2", "--seed", "7"]),
    ]
    worst = 0
    for name, build_args in runs:
        mdir = out / name
        code = cli.main(build_args + ["--out", str(mdir)])
        if code:
            return code
        model_file = next(p for p in mdir.iterdir() if p.suffix == ".json" and "model" in p.name)
        code = cli.main(["run", "conform", "--model", str(model_file), "--n", str(args.n),
                         "--seed", str(args.seed), "--out", str(mdir / "conform")])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
