"""Run compare, cross-validation and the LSTM stage ladder on one config.

    python3 scripts/reproduce_tables.py [--config configs/default.json] [--out out/tables]

Each step writes into its own subdirectory and prints the Markdown report.
"""

import argparse
import sys
from pathlib import Path

from voltforecast.cli import main

CV_MODELS = ("Linear regressor", "Decision Tree")


def run(label: str, argv: list[str], report: Path) -> int:
    print(f"== {label}", flush=True)
    code = main(argv)
    if code == 0 and report.exists():
        print(report.read_text())
    else:
        print(f"{label} exited with status {code}")
    return code


def main_script() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", default="configs/default.json")
    parser.add_argument("--out", default="out/tables")
    args = parser.parse_args()
    out = Path(args.out)
    common = ["--config", args.config, "--no-timestamp"]

    codes = [run("model comparison", ["compare", *common, "--out", str(out / "compare")],
                 out / "compare" / "report.md")]
    for name in CV_MODELS:
        sub = out / ("cv_" + name.lower().replace(" ", "_"))
        codes.append(run(f"cross-validation: {name}", ["cv", *common, "--model", name, "--out", str(sub)],
                         sub / "cv_report.md"))
    codes.append(run("LSTM stages", ["stages", *common, "--out", str(out / "stages")],
                     out / "stages" / "stages_report.md"))
    return max(codes)


if __name__ == "__main__":
    sys.exit(main_script())
