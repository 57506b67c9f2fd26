"""Joint spectral amplitude, marginal spectra and spectral widths."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dispersion import (
    C_UM,
    SellmeierModel,
    omega_to_wavelength,
    wavelength_to_omega,
    wavenumber,
)
from .errors import ChirpQPMError, DegenerateSpectrumError, DispersionRangeError
from .grating import ChirpedGrating, phase_mismatch, phasematching

DEFAULT_WINDOW = (1.0, 2.8)  # um
DEFAULT_POINTS = 1024


def fwhm_to_sigma(fwhm_omega):
    """sigma of exp(-nu^2/sigma^2) whose *intensity* FWHM is ``fwhm_omega``."""
    return fwhm_omega / np.sqrt(2 * np.log(2))


@dataclass(frozen=True)
class PumpEnvelope:
    """Gaussian pump amplitude exp(-(nu_s + nu_i)^2 / sigma^2), nu = omega - omega_c."""

    omega_c: float
    sigma: float
    pump_center_wavelength: float | None = None
    pump_fwhm_wavelength: float | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ChirpQPMError(f"pump bandwidth sigma must be positive, got {self.sigma}")

    @classmethod
    def from_wavelength(cls, center, fwhm):
        """Pump centred at ``center`` um with intensity FWHM ``fwhm`` um."""
        omega_p = wavelength_to_omega(center)
        fwhm_omega = 2 * np.pi * C_UM * fwhm / center**2
        return cls(float(omega_p / 2), float(fwhm_to_sigma(fwhm_omega)), center, fwhm)


def pump_envelope(p: PumpEnvelope, omega_s, omega_i):
    detuning = np.asarray(omega_s) + np.asarray(omega_i) - 2 * p.omega_c
    return np.exp(-((detuning / p.sigma) ** 2))


@dataclass(frozen=True)
class FrequencyGrid:
    omega_min: float
    omega_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise ChirpQPMError("a frequency grid needs at least 2 points")
        if not self.omega_max > self.omega_min:
            raise ChirpQPMError("omega_max must exceed omega_min")

    @classmethod
    def from_wavelengths(cls, lam_min, lam_max, n_points):
        """Uniform in omega between the two vacuum wavelengths (um)."""
        return cls(
            float(wavelength_to_omega(lam_max)), float(wavelength_to_omega(lam_min)), int(n_points)
        )

    @property
    def omega(self):
        return np.linspace(self.omega_min, self.omega_max, self.n_points)

    @property
    def step(self):
        return (self.omega_max - self.omega_min) / (self.n_points - 1)

    @property
    def wavelength(self):
        return omega_to_wavelength(self.omega)


@dataclass
class JsaGrid:
    """Normalised joint amplitude on ``grid_s x grid_i``.

    ``norm`` is the integral of |f|^2 before normalisation; ``meta`` carries
    the physical parameters for serialisation.
    """

    grid_s: FrequencyGrid
    grid_i: FrequencyGrid
    values: np.ndarray
    norm: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def intensity(self):
        return np.abs(self.values) ** 2


def normalize_amplitude(values, grid_s, grid_i):
    norm = float(np.sum(np.abs(values) ** 2) * grid_s.step * grid_i.step)
    if not norm > 0 or not np.isfinite(norm):
        raise ChirpQPMError(f"joint amplitude has non-positive or non-finite norm {norm}")
    return values / np.sqrt(norm), norm


def from_values(values, grid_s, grid_i, meta=None) -> JsaGrid:
    """Wrap an arbitrary sampled amplitude (e.g. a synthetic test state)."""
    values, norm = normalize_amplitude(np.asarray(values, dtype=complex), grid_s, grid_i)
    return JsaGrid(grid_s, grid_i, values, norm, dict(meta or {}))


def _check_corners(disp, grid_s, grid_i):
    corners = [
        ("signal", grid_s.omega_min), ("signal", grid_s.omega_max),
        ("idler", grid_i.omega_min), ("idler", grid_i.omega_max),
        ("pump (signal+idler)", grid_s.omega_min + grid_i.omega_min),
        ("pump (signal+idler)", grid_s.omega_max + grid_i.omega_max),
    ]
    for label, omega in corners:
        try:
            wavenumber(disp, omega)
        except DispersionRangeError as exc:
            raise DispersionRangeError(
                exc.wavelength, exc.bound, exc.which,
                context=f"grid corner {label} at omega={omega:.6e} rad/s",
            ) from exc


def jsa(
    g: ChirpedGrating,
    disp: SellmeierModel,
    p: PumpEnvelope,
    grid_s: FrequencyGrid,
    grid_i: FrequencyGrid,
    block=256,
) -> JsaGrid:
    """Sample f = Phi(ws, wi) gamma(ws + wi) on the grid and normalise it."""
    _check_corners(disp, grid_s, grid_i)
    ws = grid_s.omega
    wi = grid_i.omega
    values = np.empty((ws.size, wi.size), dtype=complex)
    for start in range(0, ws.size, block):
        rows = ws[start:start + block, None]
        pm = phase_mismatch(g, disp, rows, wi[None, :])
        values[start:start + block] = phasematching(g, pm) * pump_envelope(p, rows, wi[None, :])
    values, norm = normalize_amplitude(values, grid_s, grid_i)
    meta = {
        "lambda_c_um": g.lambda_c, "chirp_per_um2": g.chirp, "z0_um": g.z0,
        "A_um": g.A, "B_um": g.B, "order": g.order, "r": g.r,
        "sellmeier_model": disp.name, "temperature_C": disp.temperature,
        "pump_omega_c": p.omega_c, "pump_sigma": p.sigma,
    }
    return JsaGrid(grid_s, grid_i, values, norm, meta)


def single_photon_spectrum(j: JsaGrid):
    """Signal marginal S(ws) = sum_k |f|^2 dwi; integrates to one over grid_s."""
    return np.sum(np.abs(j.values) ** 2, axis=1) * j.grid_i.step


def idler_spectrum(j: JsaGrid):
    return np.sum(np.abs(j.values) ** 2, axis=0) * j.grid_s.step


def wavelength_density(spectrum, grid: FrequencyGrid):
    """Convert a per-omega density to per-wavelength (area preserving).

    Returns ``(wavelength, density)`` with wavelength in um, ascending.
    """
    lam = grid.wavelength
    dens = np.asarray(spectrum) * 2 * np.pi * C_UM / lam**2
    return lam[::-1], dens[::-1]


@dataclass(frozen=True)
class SpectralWidth:
    omega: float          # rad/s
    wavelength: float     # um
    fraction: float
    omega_low: float
    omega_high: float
    clipped: bool         # level set reaches the grid edge


def _crossing(w0, w1, s0, s1, level):
    if s1 == s0:
        return w0
    return w0 + (level - s0) * (w1 - w0) / (s1 - s0)


def spectral_width(spectrum, grid: FrequencyGrid, metric="fwhm") -> SpectralWidth:
    """Extent of ``{omega : S(omega) >= q max S}`` with linear edge interpolation.

    ``metric`` is ``"fwhm"`` (q = 1/2) or a fraction ``q`` in (0, 1).
    """
    q = 0.5 if metric == "fwhm" else float(metric)
    if not 0 < q < 1:
        raise ValueError(f"level fraction must be in (0, 1), got {q}")
    s = np.asarray(spectrum, dtype=float)
    peak = np.max(s) if s.size else 0.0
    if not np.isfinite(peak) or peak <= 0:
        raise DegenerateSpectrumError("spectrum has no positive maximum")
    level = q * peak
    w = grid.omega
    above = np.flatnonzero(s >= level)
    lo_i, hi_i = above[0], above[-1]
    clipped = lo_i == 0 or hi_i == s.size - 1
    w_lo = w[lo_i] if lo_i == 0 else _crossing(w[lo_i - 1], w[lo_i], s[lo_i - 1], s[lo_i], level)
    w_hi = w[hi_i] if hi_i == s.size - 1 else _crossing(w[hi_i], w[hi_i + 1], s[hi_i], s[hi_i + 1], level)
    lam_width = float(omega_to_wavelength(w_lo) - omega_to_wavelength(w_hi))
    return SpectralWidth(float(w_hi - w_lo), lam_width, q, float(w_lo), float(w_hi), bool(clipped))


def central_dip(spectrum, grid: FrequencyGrid, wavelength, tolerance=0.01, min_contrast=0.05):
    """True if S has a local minimum within ``tolerance`` um of ``wavelength``
    with a higher lobe on each side.

    The signal marginal is not exactly symmetric about degeneracy, so the
    minimum may sit a few grid points off the nominal wavelength.  Each side
    lobe must exceed the minimum by ``min_contrast`` (relative).
    """
    s = np.asarray(spectrum, dtype=float)
    lam = grid.wavelength
    band = np.flatnonzero(np.abs(lam - wavelength) <= tolerance)
    if band.size < 3:
        raise ChirpQPMError(f"grid too coarse to resolve a +-{tolerance} um band at {wavelength} um")
    i0 = band[np.argmin(s[band])]
    if i0 in (band[0], band[-1]) or i0 == 0 or i0 == s.size - 1:
        return False
    threshold = s[i0] * (1 + min_contrast)
    return bool(s[:i0].max() > threshold and s[i0 + 1:].max() > threshold)
