#!/usr/bin/env python3
"""Compare the bundled distribution schemes and print the KPI table.

Usage: python scripts/run_scheme_comparison.py [scenario_file]
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from citydist.report import render
from citydist.scenario import load_scenario
from citydist.schemes import compare_schemes

DEFAULT = pathlib.Path(__file__).resolve().parent.parent / "scenarios" / "bordeaux.scenario"


def main():
    path = sys.argv[1] if len(sys.argv) > 1 else str(DEFAULT)
    scenario = load_scenario(path)
    names = scenario.scheme_names()
    table = compare_schemes([scenario.scheme(n) for n in names])
    print(f"scenario: {scenario.name}  (baseline: {table.baseline})")
    print(render(table, "table"))
    ucc = next(r for r in table.rows if r.scheme == "ucc").report
    pi = next(r for r in table.rows if r.scheme == "pi").report
    if ucc and pi:
        saving = (ucc.total_cost - pi.total_cost) / ucc.total_cost * 100
        print(f"hub scheme saves {saving:.1f}% of the consolidation-center total cost")


if __name__ == "__main__":
    main()
