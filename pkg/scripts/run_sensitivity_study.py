#!/usr/bin/env python3
"""Speed and lead-time sweeps on the hub scheme's city layer; emits CSV files.

Usage: python scripts/run_sensitivity_study.py [output_dir]
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from citydist.report import emit_report
from citydist.scenario import load_scenario
from citydist.sweep import SweepSpec, sweep_parameter

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    out_dir = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "results"
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario = load_scenario(str(ROOT / "scenarios" / "bordeaux.scenario"))
    scheme = scenario.scheme("pi")

    speed = sweep_parameter(SweepSpec("speed_kmh", 15, 30, 2.5, scheme, layer_index=1))
    emit_report(speed, "csv", str(out_dir / "speed_sweep.csv"))
    print(f"speed sweep: {len(speed.rows)} rows -> {out_dir / 'speed_sweep.csv'}")

    lead = sweep_parameter(SweepSpec("lead_time_h", 0.25, 8.0, 0.25, scheme,
                                     layer_index=1))
    emit_report(lead, "csv", str(out_dir / "lead_time_sweep.csv"))
    feasible = sum(1 for r in lead.rows if r.feasible)
    print(f"lead-time sweep: {len(lead.rows)} rows ({feasible} feasible), "
          f"tours change at {lead.detected_threshold} h, "
          f"infeasible at and below {lead.infeasible_below} h "
          f"-> {out_dir / 'lead_time_sweep.csv'}")


if __name__ == "__main__":
    main()
