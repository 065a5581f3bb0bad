#!/usr/bin/env python3
"""Run the whole pipeline on the canonical synthetic dataset.

Produces, under the output directory: the benchmark CSV, a selection, a
trained tree model, the generated C selector plus its reference predictions,
and the report tables. Everything is reproducible from --seed.
"""

import argparse
import sys
from pathlib import Path

from kernelprune.cli import main as cli


def run(argv) -> None:
    print("+ kernelprune " + " ".join(argv))
    code = cli(argv)
    if code != 0:
        sys.exit(code)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-dir", default="pipeline_out")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--spec", default=str(
        Path(__file__).resolve().parent.parent / "configs" / "canonical.json"))
    parser.add_argument("--budget", type=int, default=8)
    parser.add_argument("--method", default="decision-tree")
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = str(out / "benchmarks.csv")
    selection = str(out / "selection.json")
    model = str(out / "model.json")
    seed = str(args.seed)

    run(["synth", "--spec", args.spec, "--out", data])
    run(["validate", "--data", data])
    run(["pca", "--data", data, "--out", str(out / "variance.csv")])
    run(["prune", "--data", data, "--method", args.method,
         "--budget", str(args.budget), "--seed", seed, "--out", selection])
    run(["evaluate", "--data", data, "--selection", selection, "--seed", seed])
    run(["train", "--data", data, "--selection", selection,
         "--kind", "decision-tree", "--seed", seed, "--out", model])
    run(["evaluate", "--data", data, "--model", model, "--seed", seed])
    run(["codegen", "--model", model,
         "--header", str(out / "selector.h"),
         "--doc", str(out / "selector.json"),
         "--predictions", str(out / "predictions.csv")])
    run(["report", "--data", data, "--seed", seed,
         "--out-dir", str(out / "report")])
    print(f"pipeline artifacts in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
