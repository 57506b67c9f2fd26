# Walk through the five figure recipes with the library API.
#
#   python demos/figures.py [output_dir]
#
# Each section runs a bundled preset, prints the numbers worth looking at,
# and renders the figures next to the products.  fig4 is the slow one
# (three 1024^2 Wigner functions, a few seconds each).

# %%
import sys
from pathlib import Path

import numpy as np

from chirpqpm import load_preset
from chirpqpm.grating import design_period
from chirpqpm.io import read_table
from chirpqpm.render import render
from chirpqpm.scenario import run_scenario

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")

# %% design point: the poling period that phase-matches 800 -> 1600 + 1600 nm
cfg = load_preset("fig1")
print(f"design period {design_period(cfg.crystal, cfg.pump_center):.4f} um (grating uses {cfg.lambda_c} um)")

# %% fig1: unchirped baseline, one flat-topped peak centred on 1.6 um
run = run_scenario(cfg, out / "fig1")
_, rows = read_table(out / "fig1" / "sps_widths.tsv")
print("fig1 FWHM %.3f um" % rows[0][3])
render(out / "fig1")

# %% fig2: chirp broadens the signal spectrum, more so for D > 0
run = run_scenario(load_preset("fig2"), out / "fig2", workers=4)
_, rows = read_table(out / "fig2" / "sps_widths.tsv")
for tag, d, r, fwhm, _, w5, clipped, dip in sorted(rows, key=lambda row: row[1]):
    print(f"fig2 D={d:+.1e}  FWHM {fwhm:.3f} um  5% width {w5:.3f} um{'  (clipped)' if clipped else ''}")
render(out / "fig2")

# %% fig3: moving the reference point z0 = r L opens a dip at degeneracy
run = run_scenario(load_preset("fig3"), out / "fig3", workers=4)
_, rows = read_table(out / "fig3" / "sps_widths.tsv")
print("fig3 dip at 1.6 um:", [(d, r) for tag, d, r, *_, dip in rows if dip == 1])
render(out / "fig3")

# %% fig4: Wigner functions and purities for D = 0, -5e-6, +3e-6
run = run_scenario(load_preset("fig4"), out / "fig4", workers=3)
_, sch = read_table(out / "fig4" / "schmidt.tsv")
_, mom = read_table(out / "fig4" / "cwf_moments.tsv")
for s, m in zip(sch, mom):
    print(f"fig4 {s[0]}  K {s[3]:.1f}  purity {s[4]:.4f}  t-omega corr {m[4]:+.3f}  curvature corr {m[5]:+.3f}")
render(out / "fig4")

# %% fig5: Schmidt number against chirp for three reference positions
run = run_scenario(load_preset("fig5"), out / "fig5", workers=4)
cols, rows = read_table(out / "fig5" / "sweep.tsv")
rows = np.array([row[:5] for row in rows], dtype=float)
for z0 in np.unique(rows[:, 1]):
    k = rows[rows[:, 1] == z0]
    print(f"fig5 z0={z0:+7.0f} um  K(D) from {np.nanmin(k[:, 3]):.1f} to {np.nanmax(k[:, 3]):.1f}")
render(out / "fig5")
print("figures in", ", ".join(str(out / n / "figures") for n in ("fig1", "fig2", "fig3", "fig4", "fig5")))
