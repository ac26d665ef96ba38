"""Admittance step response: the discrete controller against the closed form.

A constant push on a virtual mass-damper settles at f / c_v; the lighter the
virtual mass, the faster it gets there.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from gaitforge.admittance import AdmittanceParams, AxisAdmittanceState, analytic_step_response, step_admittance

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--out", type=Path, default=Path("demo_out"))
args = parser.parse_args()
args.out.mkdir(parents=True, exist_ok=True)

dt, force = 0.001, 4.0
t = np.arange(1, 10_001) * dt
fig, ax = plt.subplots(figsize=(7, 4))
for m_v in (2.0, 8.0, 16.0):
    p = AdmittanceParams(m_v, 4.0)
    s = AxisAdmittanceState(saturation_limit=None)
    v = np.empty_like(t)
    for k in range(t.size):
        s = step_admittance(p, s, force, dt)
        v[k] = s.desired_velocity
    exact = np.array([analytic_step_response(p, force, tk) for tk in t])
    print(f"m_v={m_v:5.1f} kg  tau={p.time_constant:.1f} s  v(10 s)={v[-1]:.4f} m/s  "
          f"max rel err {np.max(np.abs(v - exact) / exact):.2e}")
    ax.plot(t, v, label=f"m_v={m_v:g} kg")
    ax.plot(t, exact, "k:", lw=0.8)
ax.set_xlabel("t [s]")
ax.set_ylabel("desired velocity [m/s]")
ax.set_title("4 N step, c_v = 4 N*s/m (dotted: closed form)")
ax.legend()
fig.savefig(args.out / "admittance_step.png", dpi=120, bbox_inches="tight")
print(f"plot written to {args.out / 'admittance_step.png'}")
