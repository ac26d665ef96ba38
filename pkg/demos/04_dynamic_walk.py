"""Walk start and stop with the force-driven speed estimate.

The synthetic user speeds up from standing to 0.4 m/s and back; the treadmill
speed is integrated from the horizontal push on the stance platform.
"""

import argparse
from pathlib import Path

import numpy as np

from gaitforge import config
from gaitforge.export import export
from gaitforge.runtime import simulate

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--out", type=Path, default=Path("demo_out"))
args = parser.parse_args()

cfg = config.from_dict({"walk": {"mode": "dynamic"}, "loop": {"duration": 14}})
log = simulate(cfg)
t, v = log["t"], log["v_x"]
for tk in np.arange(0, 14.01, 1.0):
    k = min(int(tk * 1000), len(log) - 1)
    print(f"t={tk:4.1f} s  planned {cfg.walker_params().speed(tk):.2f}  estimated {v[k]:.3f} m/s  "
          f"forward {-log['d_x'][k]:.2f} m")
assert np.all(np.diff(-log["d_x"]) >= 0)
for path in export(log, "travel", args.out / "dynamic"):
    print("wrote", path)
