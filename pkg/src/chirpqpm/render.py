"""Figures from the data products of a run directory.

Rendering reads only the files on disk (after checking them against the
manifest hashes) so figures can be restyled without recomputing anything.
"""
from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import io as pio  # noqa: E402
from .biphoton import FrequencyGrid, wavelength_density  # noqa: E402
from .dispersion import C_UM  # noqa: E402
from .scenario import verify_products, write_manifest  # noqa: E402

STYLES = {
    "default": {"cmap": "viridis", "signed_cmap": "RdBu_r", "dpi": 120},
    "print": {"cmap": "Greys", "signed_cmap": "PuOr_r", "dpi": 300},
}


def _save(fig, path, dpi):
    buf = io.BytesIO()
    # fixed metadata keeps the PNG bytes reproducible
    fig.savefig(buf, format="png", dpi=dpi, metadata={"Software": None})
    plt.close(fig)
    pio.atomic_write(path, buf.getvalue())


def _lam(omega):
    return 2 * np.pi * C_UM / np.asarray(omega)


def render_jsi(path_bin, path_png, style):
    j = pio.load_jsa(path_bin)
    lam_s = j.grid_s.wavelength
    lam_i = j.grid_i.wavelength
    fig, ax = plt.subplots(figsize=(5, 4.2))
    mesh = ax.pcolormesh(lam_i, lam_s, j.intensity / j.intensity.max(), shading="auto", cmap=style["cmap"])
    ax.set_xlabel("idler wavelength (µm)")
    ax.set_ylabel("signal wavelength (µm)")
    ax.set_title(f"JSI  D = {float(j.meta.get('chirp_per_um2', 0)):.1e} µm⁻²,  r = {float(j.meta.get('r', 0)):.2f}")
    fig.colorbar(mesh, ax=ax, label="normalised intensity")
    _save(fig, path_png, style["dpi"])


def render_sps(path_tsv, path_png, style, density="wavelength"):
    columns, rows = pio.read_table(path_tsv)
    data = np.array(rows, dtype=float)
    omega = data[:, 0]
    fig, ax = plt.subplots(figsize=(6, 4))
    for k, tag in enumerate(columns[2:]):
        s = data[:, 2 + k]
        if density == "wavelength":
            grid = FrequencyGrid(omega[0], omega[-1], omega.size)
            x, y = wavelength_density(s, grid)
        else:
            x, y = _lam(omega), s
        ax.plot(x, y / y.max(), label=tag.split("_", 1)[1])
    ax.set_xlabel("signal wavelength (µm)")
    ax.set_ylabel("normalised SPS" + (" (per µm)" if density == "wavelength" else " (per ω)"))
    ax.legend(fontsize=7)
    _save(fig, path_png, style["dpi"])


def render_cwf(path_bin, path_png, style):
    w = pio.load_cwf(path_bin)
    lam = w.omega_grid.wavelength
    vmax = float(np.abs(w.values).max())
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    mesh = ax.pcolormesh(
        w.t / 1e3, lam, w.values, shading="auto", cmap=style["signed_cmap"], vmin=-vmax, vmax=vmax
    )
    ax.set_xlabel("time (ps)")
    ax.set_ylabel("signal wavelength (µm)")
    fig.colorbar(mesh, ax=ax, label="W (signed)")
    _save(fig, path_png, style["dpi"])


def render_sweep(path_tsv, path_png, style):
    _, rows = pio.read_table(path_tsv)
    fig, ax = plt.subplots(figsize=(6, 4))
    by_z0 = {}
    for d, z0, r, k, _p, _e in rows:
        by_z0.setdefault((z0, r), []).append((d, k))
    for (z0, r), pts in by_z0.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", ms=3, label=f"z0 = {r:+.2f} L")
    ax.set_xlabel("chirp D (µm⁻²)")
    ax.set_ylabel("Schmidt number K")
    ax.legend()
    _save(fig, path_png, style["dpi"])


def render(directory, style="default", density="wavelength"):
    """Render every product of a run directory into ``figures/``.

    Returns the list of written image paths; they are added to the
    manifest's ``derived`` section.
    """
    out = Path(directory)
    manifest = verify_products(out)
    if style not in STYLES:
        raise ValueError(f"unknown style {style!r}; choose from {sorted(STYLES)}")
    st = STYLES[style]
    written = []
    for name, entry in sorted(manifest["files"].items()):
        kind = entry["kind"]
        stem = Path(name).stem
        target = out / "figures" / f"{stem}.png"
        if kind == "jsa":
            render_jsi(out / name, target, st)
        elif kind == "sps":
            render_sps(out / name, target, st, density)
        elif kind == "cwf":
            render_cwf(out / name, target, st)
        elif kind == "sweep":
            render_sweep(out / name, target, st)
        else:
            continue
        written.append(target)
    derived = {}
    for path in written:
        rel = str(path.relative_to(out))
        derived[rel] = {"sha256": pio.sha256(path), "bytes": path.stat().st_size}
    # drop figures of an earlier render that this one did not reproduce
    for rel in manifest.get("derived", {}):
        if rel not in derived and (out / rel).exists():
            (out / rel).unlink()
    manifest["derived"] = derived
    write_manifest(out, manifest)
    return written
