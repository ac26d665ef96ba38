"""Compiled control tick shared by every runtime mode.

State lives in small float arrays so numba can run thousands of ticks per
call. The per-module helpers (admittance, classification, ground, estimator,
plant) are the same functions the public dataclass APIs call.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .admittance import admittance_update
from .gait import STANCE, SWING, classify
from .plant import impedance_force, lag_step, lowpass_step, REF_LOAD, REF_VX, REF_VZ, REF_X, REF_Z
from .terrain import estimate_step, ground_z, slope_from

# Parameter vector layout.
(P_DT, P_MV, P_CV, P_VSAT, P_EPS, P_LIFT, P_DWELL, P_MASS, P_SPEEDLIM, P_DYNAMIC, P_FIXV,
 P_TERRAIN, P_FLATH, P_SLOPE, P_TAU, P_XMIN, P_XMAX, P_ZMIN, P_ZMAX, P_VLIM, P_ALPHA,
 P_KH, P_BH, P_HMASS, P_G, P_RAMP, P_SLOPECOMP, P_ALLOWREV, P_SEEDPLAT, P_DELAY) = range(30)
N_PARAMS = 30

# Per-foot state layout.
(F_PHASE, F_LAST_EVENT, F_STEP, F_VDX, F_VDZ, F_LPX, F_LPZ, F_X, F_Z, F_VX, F_VZ,
 F_TSTRIKE, F_SX, F_SZ, F_CLEARED) = range(15)
N_FOOT = 15

# Walk state layout.
W_VX, W_DX, W_DZ, W_MK, W_COUNT = range(5)
N_WALK = 5

# Telemetry flag bits.
FLAG_OVERRUN = 1
FLAG_LIMIT = 2
FLAG_FORCE_FAULT = 4
FLAG_DEGENERATE_SLOPE = 8
FLAG_EXTERNAL_FALLBACK = 16

HEAD_COLUMNS = ["tick", "t", "t_read", "t_start", "t_end", "jitter", "flags"]
FOOT_FIELDS = ["phase", "fx", "fz", "vdx", "vdz", "vx", "vz", "x", "z", "ground"]
WALK_COLUMNS = ["v_x", "d_x", "d_z", "m_k", "step"]
COLUMNS = (HEAD_COLUMNS
           + [f"f{i}_{name}" for i in range(2) for name in FOOT_FIELDS]
           + WALK_COLUMNS)
N_COLS = len(COLUMNS)
COL = {name: i for i, name in enumerate(COLUMNS)}
FOOT0 = len(HEAD_COLUMNS)
WALK0 = FOOT0 + 2 * len(FOOT_FIELDS)


@njit(cache=True)
def _ground(p, heights, ext, foot, step, x):
    return ground_z(int(p[P_TERRAIN]), p[P_FLATH], p[P_SLOPE], heights, step, x,
                    ext[foot, 0], ext[foot, 1] > 0.5)


@njit(cache=True)
def next_step(strike_count, other_swinging):
    """Footstep a foot lands on when it lifts off now.

    Footsteps are numbered by heel strike. If the other foot is already in
    the air it lands first and takes the next number.
    """
    return strike_count + (2 if other_swinging else 1)


@njit(cache=True)
def run_ticks(k0, k1, p, heights, ref, noise, feet, walk, queue, ext, out):
    """Run ticks ``k0 <= k < k1``, writing one telemetry row per tick into ``out[k]``."""
    dt = p[P_DT]
    delay = int(p[P_DELAY])
    meas = np.zeros((2, 2))
    grounds = np.zeros(2)
    cmd = np.zeros((2, 2))
    for k in range(k0, k1):
        t = k * dt
        flags = 0
        # Sense: the user's force on each platform, filtered plus noise.
        for f in range(2):
            load = 0.0
            if feet[f, F_PHASE] == STANCE:
                ramp_in = min(1.0, max(0.0, (t - feet[f, F_TSTRIKE]) / p[P_RAMP]))
                load = p[P_HMASS] * p[P_G] * min(ramp_in, ref[k, f, REF_LOAD])
            fx, fz = impedance_force(p[P_KH], p[P_BH], ref[k, f, REF_X], ref[k, f, REF_Z],
                                     ref[k, f, REF_VX], ref[k, f, REF_VZ], feet[f, F_X],
                                     feet[f, F_Z], feet[f, F_VX], feet[f, F_VZ], load)
            feet[f, F_LPX] = lowpass_step(feet[f, F_LPX], fx, p[P_ALPHA])
            feet[f, F_LPZ] = lowpass_step(feet[f, F_LPZ], fz, p[P_ALPHA])
            meas[f, 0] = feet[f, F_LPX] + noise[k, f, 0]
            meas[f, 1] = feet[f, F_LPZ] + noise[k, f, 1]
            if not (math.isfinite(meas[f, 0]) and math.isfinite(meas[f, 1])):
                flags |= FLAG_FORCE_FAULT
        # Virtual ground under each foot: a swing foot is heading for its next step.
        for f in range(2):
            g, fell_back = _ground(p, heights, ext, f, int(feet[f, F_STEP]), feet[f, F_X])
            grounds[f] = g
            if fell_back:
                flags |= FLAG_EXTERNAL_FALLBACK
        # Classify and handle contact events.
        for f in range(2):
            phase = int(feet[f, F_PHASE])
            tip = (k - feet[f, F_LAST_EVENT]) * dt
            fz = meas[f, 1] if math.isfinite(meas[f, 1]) else 0.0
            new = classify(phase, feet[f, F_Z], grounds[f], fz, p[P_EPS], p[P_LIFT],
                           p[P_DWELL], tip)
            # A swing foot must rise above its target step once before it can
            # land on it, otherwise stepping up would re-strike at lift-off.
            if phase == SWING:
                if feet[f, F_Z] > grounds[f] + p[P_EPS]:
                    feet[f, F_CLEARED] = 1.0
                if feet[f, F_CLEARED] < 0.5:
                    new = SWING
            if new == phase:
                continue
            feet[f, F_LAST_EVENT] = k
            feet[f, F_PHASE] = new
            if new == STANCE:
                walk[W_COUNT] += 1
                feet[f, F_TSTRIKE] = t
                feet[f, F_SX] = feet[f, F_X]
                feet[f, F_SZ] = grounds[f]
                feet[f, F_VDX] = 0.0
                feet[f, F_VDZ] = 0.0
                if p[P_SLOPECOMP] > 0.5:
                    o = 1 - f
                    zo, fb = _ground(p, heights, ext, o, int(feet[o, F_STEP]), feet[o, F_X])
                    mk, degenerate = slope_from(feet[f, F_SX], feet[f, F_SZ], feet[o, F_X], zo,
                                                walk[W_MK])
                    walk[W_MK] = mk
                    if degenerate:
                        flags |= FLAG_DEGENERATE_SLOPE
            else:
                feet[f, F_STEP] = next_step(walk[W_COUNT], feet[1 - f, F_PHASE] == SWING)
                feet[f, F_CLEARED] = 0.0
                if p[P_SEEDPLAT] > 0.5:
                    lim = p[P_VSAT]
                    vx, vz = feet[f, F_VX], feet[f, F_VZ]
                    if lim > 0.0:
                        vx = min(max(vx, -lim), lim)
                        vz = min(max(vz, -lim), lim)
                    feet[f, F_VDX] = vx
                    feet[f, F_VDZ] = vz
                else:
                    feet[f, F_VDX] = 0.0
                    feet[f, F_VDZ] = 0.0
        # Walking velocity: fixed, or integrated ground reaction while any foot stands.
        if p[P_DYNAMIC] > 0.5:
            grf = 0.0
            standing = False
            for f in range(2):
                if feet[f, F_PHASE] == STANCE and math.isfinite(meas[f, 0]):
                    grf -= meas[f, 0]
                    standing = True
            if standing:
                walk[W_VX] = estimate_step(walk[W_VX], grf, p[P_MASS], dt, p[P_SPEEDLIM],
                                           p[P_ALLOWREV] > 0.5)
        else:
            walk[W_VX] = p[P_FIXV]
        v_px = -walk[W_VX]
        v_pz = walk[W_MK] * v_px
        # Commands: stance feet ride the virtual ground, swing feet follow the admittance.
        for f in range(2):
            if feet[f, F_PHASE] == STANCE:
                cmd[f, 0] = v_px
                cmd[f, 1] = v_pz
            else:
                if math.isfinite(meas[f, 0]) and math.isfinite(meas[f, 1]):
                    feet[f, F_VDX] = admittance_update(feet[f, F_VDX], meas[f, 0], p[P_MV],
                                                       p[P_CV], dt, p[P_VSAT])
                    feet[f, F_VDZ] = admittance_update(feet[f, F_VDZ], meas[f, 1], p[P_MV],
                                                       p[P_CV], dt, p[P_VSAT])
                cmd[f, 0] = feet[f, F_VDX]
                cmd[f, 1] = feet[f, F_VDZ]
        walk[W_DX] += v_px * dt
        walk[W_DZ] += v_pz * dt
        # Transport delay, then the actuator lag.
        slot = k % delay
        for f in range(2):
            applied_x = queue[f, 0, slot]
            applied_z = queue[f, 1, slot]
            queue[f, 0, slot] = cmd[f, 0]
            queue[f, 1, slot] = cmd[f, 1]
            vx, x, hx = lag_step(feet[f, F_VX], feet[f, F_X], applied_x, dt, p[P_TAU],
                                 p[P_VLIM], p[P_XMIN], p[P_XMAX])
            vz, z, hz = lag_step(feet[f, F_VZ], feet[f, F_Z], applied_z, dt, p[P_TAU],
                                 p[P_VLIM], p[P_ZMIN], p[P_ZMAX])
            feet[f, F_VX], feet[f, F_X], feet[f, F_VZ], feet[f, F_Z] = vx, x, vz, z
            if hx or hz:
                flags |= FLAG_LIMIT
        # Telemetry row.
        row = out[k]
        row[0] = k
        row[1] = t
        row[2] = t
        row[3] = (k - delay) * dt if k >= delay else np.nan
        row[4] = t
        row[5] = 0.0
        row[6] = flags
        for f in range(2):
            b = FOOT0 + 10 * f
            row[b] = feet[f, F_PHASE]
            row[b + 1] = meas[f, 0]
            row[b + 2] = meas[f, 1]
            row[b + 3] = cmd[f, 0]
            row[b + 4] = cmd[f, 1]
            row[b + 5] = feet[f, F_VX]
            row[b + 6] = feet[f, F_VZ]
            row[b + 7] = feet[f, F_X]
            row[b + 8] = feet[f, F_Z]
            row[b + 9] = grounds[f]
        row[WALK0] = walk[W_VX]
        row[WALK0 + 1] = walk[W_DX]
        row[WALK0 + 2] = walk[W_DZ]
        row[WALK0 + 3] = walk[W_MK]
        row[WALK0 + 4] = walk[W_COUNT]
