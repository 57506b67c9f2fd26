"""Heralded single-photon diagnostics: reduced density matrix, chronocyclic
Wigner function, Schmidt number and purity."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .biphoton import FrequencyGrid, JsaGrid, jsa
from .errors import AliasingError, ChirpQPMError, SchmidtError

FS = 1e-15
# Lagrange weights for the midpoint of six equispaced samples, innermost first
_MIDPOINT_WEIGHTS = (150 / 256, -25 / 256, 3 / 256)


@dataclass
class ReducedDensityMatrix:
    grid: FrequencyGrid
    values: np.ndarray  # rho_s(omega, omega'), trace normalised with d omega
    trace: float


def reduced_density_matrix(j: JsaGrid) -> ReducedDensityMatrix:
    """rho[a, b] = sum_k f[a, k] conj(f[b, k]) d omega_i, unit trace."""
    f = j.values
    rho = (f @ f.conj().T) * j.grid_i.step
    # exact Hermitian symmetry; BLAS does not guarantee it bitwise
    rho = 0.5 * (rho + rho.conj().T)
    trace = float(np.real(np.trace(rho)) * j.grid_s.step)
    return ReducedDensityMatrix(j.grid_s, rho / trace, 1.0)


def purity(rdm: ReducedDensityMatrix) -> float:
    """Tr(rho^2) = int int |rho(w, w')|^2 dw dw'."""
    return float(np.sum(np.abs(rdm.values) ** 2) * rdm.grid.step**2)


@dataclass
class SchmidtResult:
    k_number: float
    purity: float
    schmidt_coefficients: np.ndarray


def schmidt(j: JsaGrid) -> SchmidtResult:
    """Schmidt decomposition from the SVD of f * sqrt(dws dwi)."""
    kernel = j.values * np.sqrt(j.grid_s.step * j.grid_i.step)
    try:
        sv = np.linalg.svd(kernel, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        finite = np.isfinite(kernel).mean()
        raise SchmidtError(
            f"SVD did not converge ({exc}); finite fraction {finite:.3f}, "
            f"Frobenius norm {np.linalg.norm(np.nan_to_num(kernel)):.3e}, shape {kernel.shape}"
        ) from exc
    lam = sv**2
    total = lam.sum()
    if not total > 0:
        raise SchmidtError("joint amplitude is identically zero")
    lam = lam / total
    p = float(np.sum(lam**2))
    return SchmidtResult(1.0 / p, p, lam)


@dataclass
class CwfGrid:
    omega_grid: FrequencyGrid
    t: np.ndarray           # fs, uniform
    values: np.ndarray      # W[omega, t]; integrates to one over d omega dt(s)
    imag_residue: float     # max |Im W| / max |W| before the real part was taken

    @property
    def t_step(self):
        return float(self.t[1] - self.t[0])


def mean_time(j: JsaGrid) -> float:
    """Centroid (s) of the heralded signal wavepacket in the Wigner time frame.

    Uses the phase step between neighbouring samples, which is exact for a
    linear spectral phase as long as it advances by less than pi per step.
    """
    f = j.values
    prod = f[:-1].conj() * f[1:]
    weight = np.abs(prod)
    total = weight.sum()
    if not total > 0:
        return 0.0
    # for f = g exp(i w tau), W peaks at t = -tau
    return float(-np.sum(np.angle(prod) * weight) / (total * j.grid_s.step))


def _lag_table(rho, rows):
    """G[j, m] = rho(w_j + m h/2, w_j - m h/2) for lags m = -(2N-2) .. 2N-2.

    Odd lags sit between grid points; they are filled by six-point
    midpoint interpolation along the line of constant lag.  The weights sum
    to one, so the frequency marginal stays the discrete autocorrelation.
    """
    n = rho.shape[0]
    lags = np.arange(-(2 * n - 2), 2 * n - 1)
    half = lags // 2  # floor
    odd = (lags % 2).astype(bool)
    j = rows[:, None]

    def pick(p, q):
        ok = (p >= 0) & (p < n) & (q >= 0) & (q < n)
        out = np.zeros(ok.shape, dtype=complex)
        out[ok] = rho[p[ok], q[ok]]
        return out

    even_part = pick(j + half, j - half)
    # odd m = 2h + 1: the target (j+h+1/2, j-h-1/2) is midway between
    # (j+h+1, j-h) and (j+h, j-h-1); step k moves both ends k further out
    odd_part = np.zeros_like(even_part)
    for k, weight in enumerate(_MIDPOINT_WEIGHTS):
        odd_part += weight * (pick(j + half + 1 + k, j - half + k) + pick(j + half - k, j - half - 1 - k))
    return lags, np.where(odd, odd_part, even_part)


def cwf(j: JsaGrid, t_window=None, t_center=None, block=128) -> CwfGrid:
    """Chronocyclic Wigner function of the heralded signal photon.

        W(w, t) = 1/(2 pi) int dw_i int dw' f(w + w'/2, w_i) f*(w - w'/2, w_i) e^{i w' t}

    The idler is traced out.  ``t_window`` (s) crops the output and must not
    exceed the unaliased window 2 pi / d omega; ``t_center`` (s) defaults to
    the wavepacket centroid.
    """
    h = j.grid_s.step
    nyquist = 2 * np.pi / h
    if t_window is not None and t_window > nyquist:
        raise AliasingError(t_window, nyquist)
    t0 = mean_time(j) if t_center is None else float(t_center)

    rho = (j.values @ j.values.conj().T) * j.grid_i.step
    rho = 0.5 * (rho + rho.conj().T)
    n = rho.shape[0]
    n_lags = 4 * n - 3
    m_len = sfft.next_fast_len(n_lags)
    mid = m_len // 2
    dt = nyquist / m_len
    t = t0 + (np.arange(m_len) - mid) * dt

    values = np.empty((n, m_len))
    imag = 0.0
    for start in range(0, n, block):
        rows = np.arange(start, min(start + block, n))
        lags, table = _lag_table(rho, rows)
        phase = np.exp(1j * lags * h * t0 - 2j * np.pi * lags * mid / m_len)
        padded = np.zeros((rows.size, m_len), dtype=complex)
        padded[:, lags % m_len] = table * phase
        block_w = sfft.ifft(padded, axis=1) * (m_len * h / (2 * np.pi))
        imag = max(imag, float(np.abs(block_w.imag).max()))
        values[rows] = block_w.real
    peak = float(np.abs(values).max())
    residue = imag / peak if peak > 0 else 0.0

    if t_window is not None:
        keep = np.abs(t - t0) <= t_window / 2
        t, values = t[keep], values[:, keep]
    return CwfGrid(j.grid_s, t / FS, values, residue)


def cwf_marginals(w: CwfGrid):
    """(spectrum over omega, temporal intensity over t in fs), each of unit area."""
    dt = w.t_step
    spectrum = np.sum(w.values, axis=1) * dt
    spectrum = spectrum / (np.sum(spectrum) * w.omega_grid.step)
    temporal = np.sum(w.values, axis=0) * w.omega_grid.step
    temporal = temporal / (np.sum(temporal) * dt)
    return spectrum, temporal


@dataclass(frozen=True)
class MixedMoment:
    covariance: float     # rad/s * fs
    std_omega: float
    std_t: float

    @property
    def correlation(self):
        return self.covariance / (self.std_omega * self.std_t)


def cwf_mixed_moment(w: CwfGrid) -> MixedMoment:
    """First mixed central moment of |W| in (omega, t)."""
    weight = np.abs(w.values)
    total = weight.sum()
    omega = w.omega_grid.omega
    p_w = weight.sum(axis=1) / total
    p_t = weight.sum(axis=0) / total
    mw = np.sum(p_w * omega)
    mt = np.sum(p_t * w.t)
    dw = omega - mw
    dt = w.t - mt
    cov = float(dw @ weight @ dt / total)
    return MixedMoment(cov, float(np.sqrt(np.sum(p_w * dw**2))), float(np.sqrt(np.sum(p_t * dt**2))))


def cwf_curvature_moment(w: CwfGrid) -> float:
    """Correlation of t with (omega - <omega>)^2 under |W|.

    Near degeneracy the chirp bends the time-frequency ridge rather than
    tilting it; this is the moment that picks up the bend (negative for a
    cap-shaped ridge, positive for a cup).
    """
    weight = np.abs(w.values)
    total = weight.sum()
    omega = w.omega_grid.omega
    p_w = weight.sum(axis=1) / total
    p_t = weight.sum(axis=0) / total
    u = (omega - np.sum(p_w * omega)) ** 2
    u = u - np.sum(p_w * u)
    dt = w.t - np.sum(p_t * w.t)
    cov = float(u @ weight @ dt / total)
    return cov / float(np.sqrt(np.sum(p_w * u**2) * np.sum(p_t * dt**2)))


@dataclass
class SweepRow:
    chirp: float
    z0: float
    r: float
    k_number: float
    purity: float
    error: str = ""


def schmidt_sweep(config, d_values=None, z0_values=None, workers=None):
    """Schmidt number over a (D, z0) lattice.

    ``config`` supplies crystal, pump, grid and grating defaults (a
    :class:`~chirpqpm.config.ScenarioConfig`).  ``z0_values`` are in um; both
    default to the config's sweep lists, falling back to its scenario points.
    Per-point failures are recorded in the row and the sweep carries on.
    """
    if d_values is None:
        d_values = config.sweep_chirps or config.chirps
    if z0_values is None:
        z0_values = config.sweep_z0 or config.z0_values
    d_values, z0_values = list(d_values), list(z0_values)
    disp = config.crystal
    pump = config.pump()
    grid = config.grid()
    points = [(d, z0) for z0 in z0_values for d in d_values]

    def one(point):
        d, z0 = point
        r = z0 / config.length
        try:
            g = config.grating(d, r)
            res = schmidt(jsa(g, disp, pump, grid, grid))
            return SweepRow(d, z0, r, res.k_number, res.purity)
        except ChirpQPMError as exc:
            return SweepRow(d, z0, r, float("nan"), float("nan"), f"{type(exc).__name__}: {exc}")

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, points))
    return [one(p) for p in points]
