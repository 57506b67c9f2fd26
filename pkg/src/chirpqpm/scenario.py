"""Scenario orchestration: compute the requested products and the manifest.

Output directory layout::

    resolved.cfg          fully resolved scenario (reloads with load_config)
    jsa_<tag>.bin         complex joint amplitude per (D, r) point   [jsi]
    jsi_<tag>.tsv         |f|^2 as text, if scenario.jsi_text        [jsi]
    sps.tsv               signal spectra, one column per point       [sps]
    sps_widths.tsv        FWHM and 5% widths, central dip flag       [sps]
    cwf_<tag>.bin         chronocyclic Wigner function               [cwf]
    cwf_moments.tsv       mixed and curvature moments                [cwf]
    schmidt_<tag>.bin     Schmidt coefficients                       [schmidt]
    schmidt.tsv           K and purity by both routes                [schmidt]
    sweep.tsv             K and purity over the (D, z0) lattice      [sweep]
    manifest.json         written last

Points may be computed in parallel; every file is written by the calling
thread, in point order, through an atomic rename.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import io as pio
from .analysis import (
    cwf,
    cwf_curvature_moment,
    cwf_mixed_moment,
    purity,
    reduced_density_matrix,
    schmidt,
    schmidt_sweep,
)
from .biphoton import central_dip, jsa, single_photon_spectrum, spectral_width
from .config import ScenarioConfig, to_cfg_text
from .errors import ChirpQPMError, ProductIntegrityError

MANIFEST = "manifest.json"
OUTPUT_ENV = "CHIRPQPM_OUTPUT_DIR"
DIP_WAVELENGTH = 1.6  # um, degenerate signal for the 800 nm pump


def point_tag(index, chirp, r):
    return f"{index:02d}_D{chirp:+.2e}_r{r:+.3f}"


@dataclass
class PointResult:
    index: int
    chirp: float
    r: float
    tag: str
    jsa: object = None
    sps: np.ndarray | None = None
    widths: tuple | None = None
    dip: bool | None = None
    cwf: object = None
    moments: tuple | None = None
    schmidt: object = None
    trace_purity: float | None = None
    error: str = ""


@dataclass
class RunResult:
    output_dir: Path
    manifest: dict
    points: list = field(default_factory=list)
    sweep: list = field(default_factory=list)

    @property
    def ok(self):
        return self.manifest["status"] == "complete"


def _compute_point(cfg: ScenarioConfig, index, chirp, r, needs):
    res = PointResult(index, chirp, r, point_tag(index, chirp, r))
    try:
        grid = cfg.grid()
        j = jsa(cfg.grating(chirp, r), cfg.crystal, cfg.pump(), grid, grid)
        res.jsa = j
        if "sps" in needs:
            res.sps = single_photon_spectrum(j)
            fw = spectral_width(res.sps, grid, "fwhm")
            q5 = spectral_width(res.sps, grid, 0.05)
            res.widths = (fw, q5)
            try:
                res.dip = central_dip(res.sps, grid, DIP_WAVELENGTH)
            except ChirpQPMError:
                res.dip = None  # grid too coarse to decide; recorded as "-"
        if "cwf" in needs:
            w = cwf(j, t_window=cfg.cwf_window)
            mm = cwf_mixed_moment(w)
            res.cwf = w
            res.moments = (mm, cwf_curvature_moment(w))
        if "schmidt" in needs:
            res.schmidt = schmidt(j)
            res.trace_purity = purity(reduced_density_matrix(j))
    except ChirpQPMError as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    return res


def _prepare_dir(out: Path):
    """Clear products of a previous run; refuse directories we did not create."""
    out.mkdir(parents=True, exist_ok=True)
    entries = [p for p in out.iterdir() if not p.name.startswith(".")]
    if not entries:
        return
    manifest_path = out / MANIFEST
    if not manifest_path.exists():
        raise ProductIntegrityError(
            f"output directory {out} is not empty and has no manifest; refusing to mix products"
        )
    try:
        old = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ProductIntegrityError(f"cannot read existing manifest in {out}: {exc}") from None
    known = set(old.get("files", {})) | set(old.get("derived", {})) | {MANIFEST}
    foreign = sorted(str(p.relative_to(out)) for p in out.rglob("*")
                     if p.is_file() and str(p.relative_to(out)) not in known)
    if foreign:
        raise ProductIntegrityError(f"output directory {out} holds files not in its manifest: {foreign}")
    for name in known:
        target = out / name
        if target.exists():
            target.unlink()
    figures = out / "figures"
    if figures.is_dir() and not any(figures.iterdir()):
        figures.rmdir()


def resolve_output_dir(cfg: ScenarioConfig, output_dir=None) -> Path:
    if output_dir is not None:
        return Path(output_dir)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    base = os.environ.get(OUTPUT_ENV)
    return Path(base or "chirpqpm_output") / cfg.name


def run_scenario(cfg: ScenarioConfig, output_dir=None, workers=1) -> RunResult:
    """Compute every requested product of ``cfg`` and write them with a manifest.

    Per-point failures do not stop the run: they are listed under
    ``errors`` in the manifest and its ``status`` becomes ``partial``.
    """
    out = resolve_output_dir(cfg, output_dir)
    _prepare_dir(out)
    needs = set(cfg.outputs)
    files = {}

    def record(name, kind):
        path = out / name
        files[name] = {"kind": kind, "sha256": pio.sha256(path), "bytes": path.stat().st_size}

    def write_table(name, kind, columns, rows, comments=()):
        pio.write_table(out / name, columns, rows, comments)
        record(name, kind)

    pio.atomic_write(out / "resolved.cfg", to_cfg_text(cfg).encode("utf-8"))
    record("resolved.cfg", "config")

    points = []
    if needs & {"jsi", "sps", "cwf", "schmidt"}:
        jobs = [(i, d, r) for i, (d, r) in enumerate(cfg.points())]

        def one(job):
            return _compute_point(cfg, *job, needs)

        if workers and workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                points = list(pool.map(one, jobs))
        else:
            points = [one(job) for job in jobs]

    errors = [
        {"point": p.tag, "chirp": p.chirp, "r": p.r, "error": p.error} for p in points if p.error
    ]
    good = [p for p in points if not p.error]
    grid = cfg.grid()
    omega = grid.omega

    if "jsi" in needs:
        for p in good:
            pio.save_jsa(out / f"jsa_{p.tag}.bin", p.jsa)
            record(f"jsa_{p.tag}.bin", "jsa")
            if cfg.jsi_text:
                rows = [[float(v) for v in row] for row in p.jsa.intensity]
                write_table(
                    f"jsi_{p.tag}.tsv", "jsi_text",
                    [f"i{k}" for k in range(grid.n_points)], rows,
                    comments=(f"|f|^2 rows: signal omega, columns: idler omega; "
                              f"omega from {grid.omega_min!r} to {grid.omega_max!r} rad/s, "
                              f"{grid.n_points} points", f"D = {p.chirp!r} 1/um^2, r = {p.r!r}"),
                )

    if "sps" in needs and good:
        columns = ["omega_rad_s", "wavelength_um"] + [p.tag for p in good]
        rows = [
            [omega[k], float(grid.wavelength[k])] + [float(p.sps[k]) for p in good]
            for k in range(grid.n_points)
        ]
        write_table("sps.tsv", "sps", columns, rows,
                    comments=("signal spectral density per unit omega, unit area over omega",))
        rows = [
            [p.tag, p.chirp, p.r, p.widths[0].wavelength, p.widths[0].omega, p.widths[1].wavelength,
             int(p.widths[0].clipped or p.widths[1].clipped), "-" if p.dip is None else int(p.dip)]
            for p in good
        ]
        write_table("sps_widths.tsv", "sps_widths",
                    ["tag", "D", "r", "fwhm_um", "fwhm_rad_s", "width_5pct_um", "clipped", "dip_1600nm"], rows)

    if "cwf" in needs and good:
        for p in good:
            pio.save_cwf(out / f"cwf_{p.tag}.bin", p.cwf, {"chirp_per_um2": p.chirp, "r": p.r})
            record(f"cwf_{p.tag}.bin", "cwf")
        rows = [
            [p.tag, p.chirp, p.r, p.moments[0].covariance, p.moments[0].correlation,
             p.moments[1], p.moments[0].std_omega, p.moments[0].std_t, p.cwf.imag_residue]
            for p in good
        ]
        write_table("cwf_moments.tsv", "cwf_moments",
                    ["tag", "D", "r", "covariance", "correlation", "curvature_correlation",
                     "std_omega", "std_t_fs", "imag_residue"], rows,
                    comments=("moments of |W|; t in fs, omega in rad/s",))

    if "schmidt" in needs and good:
        for p in good:
            pio.save_schmidt(out / f"schmidt_{p.tag}.bin", p.schmidt, {"chirp_per_um2": p.chirp, "r": p.r})
            record(f"schmidt_{p.tag}.bin", "schmidt")
        rows = [[p.tag, p.chirp, p.r, p.schmidt.k_number, p.schmidt.purity, p.trace_purity] for p in good]
        write_table("schmidt.tsv", "schmidt", ["tag", "D", "r", "K", "purity_svd", "purity_trace"], rows)

    sweep_rows = []
    if "sweep" in needs:
        sweep_rows = schmidt_sweep(cfg, cfg.sweep_chirps, cfg.sweep_z0, workers=workers)
        rows = [[s.chirp, s.z0, s.r, s.k_number, s.purity, s.error or "-"] for s in sweep_rows]
        write_table("sweep.tsv", "sweep", ["D", "z0_um", "r", "K", "purity", "error"], rows,
                    comments=("Schmidt number over the (D, z0) lattice",))
        errors += [
            {"point": f"sweep_D{s.chirp:+.2e}_z0{s.z0:+.1f}", "chirp": s.chirp, "r": s.r, "error": s.error}
            for s in sweep_rows if s.error
        ]

    manifest = {
        "format": "chirpqpm-manifest",
        "format_version": 1,
        "package_version": __version__,
        "scenario": cfg.name,
        "status": "partial" if errors else "complete",
        "config": cfg.to_mapping(),
        "files": dict(sorted(files.items())),
        "errors": errors,
        "derived": {},
    }
    write_manifest(out, manifest)
    return RunResult(out, manifest, points, sweep_rows)


def write_manifest(out, manifest):
    text = json.dumps(manifest, indent=2, sort_keys=False, allow_nan=True) + "\n"
    pio.atomic_write(Path(out) / MANIFEST, text.encode("utf-8"))


def read_manifest(out) -> dict:
    path = Path(out) / MANIFEST
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ProductIntegrityError(f"cannot read manifest {path}: {exc}") from None
    except ValueError as exc:
        raise ProductIntegrityError(f"corrupt manifest {path}: {exc}") from None


def verify_products(out, manifest=None) -> dict:
    """Check every listed product against its recorded hash."""
    out = Path(out)
    manifest = read_manifest(out) if manifest is None else manifest
    for name, entry in manifest.get("files", {}).items():
        path = out / name
        if not path.exists():
            raise ProductIntegrityError(f"product {name} listed in the manifest is missing")
        digest = pio.sha256(path)
        if digest != entry["sha256"]:
            raise ProductIntegrityError(
                f"product {name} fails its hash check (manifest {entry['sha256'][:12]}..., file {digest[:12]}...)"
            )
    return manifest
