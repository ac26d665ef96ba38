"""Tuning sweep over virtual mass and damping.

Lower admittance parameters feel lighter but eventually ring; the sweep
reports force, tracking and a spectral oscillation score for every cell.
"""

import argparse

from gaitforge import config
from gaitforge.sweep import run_sweep

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--jobs", type=int, default=2)
args = parser.parse_args()

base = config.from_dict({"loop": {"duration": 10}})
cells = run_sweep(base, masses=[0.5, 2.0, 8.0, 16.0], dampings=[0.0, 4.0, 16.0], jobs=args.jobs)
print(f"{'m_v':>5} {'c_v':>5}  {'peak N':>7} {'rms m/s':>8} {'osc':>6}")
for c in cells:
    if c.status != "ok":
        print(f"{c.virtual_mass:5g} {c.virtual_damping:5g}  skipped: {c.reason}")
        continue
    mark = "  rings" if c.oscillatory else ""
    print(f"{c.virtual_mass:5g} {c.virtual_damping:5g}  {c.peak_swing_force:7.1f} "
          f"{c.tracking_rms:8.4f} {c.oscillation_ratio:6.1f}{mark}")
