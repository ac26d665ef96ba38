"""Stairs and uneven ground.

On a stair the platform slides back along the slope measured at each heel
strike, so the avatar climbs. On uneven ground each footstep lands at its
own height and there is no sliding slope.
"""

import argparse
from pathlib import Path

import numpy as np

from gaitforge import config
from gaitforge.export import export, footstep_heights
from gaitforge.runtime import simulate

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--out", type=Path, default=Path("demo_out"))
args = parser.parse_args()

for slope in (0.3, -0.3):
    log = simulate(config.from_dict({"terrain": {"kind": "stair", "slope": slope},
                                     "loop": {"duration": 15}}))
    _, h = footstep_heights(log)
    print(f"stair {slope:+.1f}: estimated slope {log['m_k'][-1]:+.4f}, forward {-log['d_x'][-1]:.2f} m, "
          f"height {-log['d_z'][-1]:+.3f} m, footsteps {np.round(h[:5], 3)} ...")
    export(log, "travel", args.out / f"stair_{slope:+.1f}")

log = simulate(config.from_dict({"terrain": {"kind": "uneven", "step_heights": [0.0, 0.05, 0.10]},
                                 "loop": {"duration": 15}}))
stance_ground = np.concatenate([log.foot(f, "ground")[log.foot(f, "phase") == 1] for f in range(2)])
print(f"uneven: stance ground heights {np.unique(np.round(stance_ground * 1000)).tolist()} mm, "
      f"slope stays {log['m_k'].max()}")
print("travel exports in", args.out)
