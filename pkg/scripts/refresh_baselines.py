#!/usr/bin/env python3
"""Recompute the frozen benchmark numbers and rewrite baselines.txt.

Run from the repository root after any change that legitimately moves the
pinned experiments, then inspect the diff before committing.
"""

import pathlib

from levelform.benchmarks import domination_benchmark, uniform_benchmark

TARGET = pathlib.Path(__file__).resolve().parents[1] / "src" / "levelform" / "baselines.txt"


def main() -> None:
    dom = domination_benchmark()
    uni = uniform_benchmark()
    lines = [
        "# measured by scripts/refresh_baselines.py; do not edit by hand",
        f"sparse_domination_max_ratio = {dom.max_ratio!r}",
        f"uniform_budget_constant = {uni.max_ratio!r}",
        "",
    ]
    TARGET.write_text("\n".join(lines))
    print(f"wrote {TARGET}")
    print(f"  sparse_domination_max_ratio = {dom.max_ratio!r} "
          f"(worst eta {dom.worst_eta})")
    print(f"  uniform_budget_constant = {uni.max_ratio!r}")


if __name__ == "__main__":
    main()
