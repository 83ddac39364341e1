#!/usr/bin/env python3
"""Zeeman level diagram and the DEER dip on the reporter resonance.

Sweeps the static field to trace the NV ms=0 <-> ms=+-1 transition branches
and the surface-electron (g=2) branch, then simulates the NV DEER signal as
a function of the reporter drive frequency at fixed echo time: a Lorentzian
dip centered on gamma_e * B whose depth is set by the dipolar coupling.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from reporterspin import (
    FieldSetting,
    NO_DECAY,
    SpinSystem,
    deer_spectrum,
    save_table,
    zeeman_diagram,
    zeeman_reporter,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# --- level diagram vs field ------------------------------------------------

fields_G = np.linspace(0.0, 700.0, 141)
branches = {"nv_lower": [], "nv_upper": [], "reporter": []}
for B in fields_G:
    diagram = zeeman_diagram(FieldSetting(B))
    for key in branches:
        branches[key].append(diagram[key] / (2 * np.pi))  # rad/us -> MHz

save_table(
    {"field_G": fields_G, **{k: np.array(v) for k, v in branches.items()}},
    OUT / "zeeman_branches.dat",
    meta={"units": "MHz"},
)

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
ax1.plot(fields_G, branches["nv_lower"], label="NV ms=0 to -1")
ax1.plot(fields_G, branches["nv_upper"], label="NV ms=0 to +1")
ax1.plot(fields_G, branches["reporter"], label="reporter (g=2)")
ax1.set_xlabel("field (G)")
ax1.set_ylabel("transition frequency (MHz)")
ax1.legend(fontsize=8)

# --- DEER spectrum at 383 G --------------------------------------------------

B = 383.0
scene = SpinSystem(
    nv_position=[0, 0, 0],
    nv_axis=[0, 0, 1],
    reporter_sites=[[3.0, 0.0, 3.0]],
    proton_sites=np.zeros((0, 3)),
    field=FieldSetting(B, np.array([0.0, 0.0, 1.0])),
    surface_z=3.0,
)
center = zeeman_reporter(scene.field)
omega = np.linspace(center - 300, center + 300, 601)
signal = deer_spectrum(omega, scene, linewidth=25.0, t_nv=0.35, dec=NO_DECAY)
save_table(
    {"omega_rad_us": omega, "signal": signal},
    OUT / "deer_spectrum.dat",
    meta={"field_G": B, "t_nv_us": 0.35},
)

ax2.plot(omega / (2 * np.pi), signal)
ax2.axvline(center / (2 * np.pi), ls=":", color="gray")
ax2.set_xlabel("drive frequency (MHz)")
ax2.set_ylabel("NV echo signal")
fig.tight_layout()
fig.savefig(OUT / "zeeman_and_deer_spectrum.png", dpi=160)

print(f"reporter resonance at {center / (2 * np.pi):.1f} MHz for B = {B} G")
print(f"wrote {OUT / 'zeeman_and_deer_spectrum.png'}")
