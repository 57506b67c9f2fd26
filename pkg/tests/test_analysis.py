import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chirpqpm.analysis import (
    cwf,
    cwf_marginals,
    purity,
    reduced_density_matrix,
    schmidt,
    schmidt_sweep,
)
from chirpqpm.biphoton import FrequencyGrid, from_values, jsa, single_photon_spectrum, spectral_width
from chirpqpm.errors import AliasingError, ChirpQPMError, SchmidtError
from conftest import N_CWF, N_FAST, baseline_cfg, baseline_jsa, ln_index_oracle

W0 = 1.2e15          # rad/s
HALF = 2.0e14
S = HALF / 8         # Gaussian amplitude width, rad/s


def synthetic_grid(n=256):
    return FrequencyGrid(W0 - HALF, W0 + HALF, n)


def gauss(w, centre=W0, width=S):
    return np.exp(-((w - centre) ** 2) / (2 * width**2))


def unit(v, grid):
    return v / np.sqrt(np.sum(np.abs(v) ** 2) * grid.step)


def factorable(tau=0.0):
    g = synthetic_grid()
    w = g.omega
    a = gauss(w) * np.exp(1j * w * tau)
    b = gauss(w, W0 + 1e13, 0.7 * S)
    return from_values(np.outer(a, b), g, g)


def two_mode():
    g = synthetic_grid()
    x = (g.omega - W0) / S
    a1, a2 = unit(gauss(g.omega), g), unit(x * gauss(g.omega), g)
    return from_values((np.outer(a1, a1) + np.outer(a2, a2)) / math.sqrt(2), g, g)


# -- Schmidt decomposition -------------------------------------------------

def test_factorable_k_is_one():
    res = schmidt(factorable())
    assert res.k_number == pytest.approx(1.0, abs=1e-6)
    assert res.schmidt_coefficients[1] < 1e-8


def test_two_equal_modes():
    res = schmidt(two_mode())
    assert res.k_number == pytest.approx(2.0, abs=1e-6)
    assert res.schmidt_coefficients[:2] == pytest.approx([0.5, 0.5], abs=1e-10)


def test_schmidt_invariants():
    res = schmidt(baseline_jsa(-5e-6, 0.5))
    lam = res.schmidt_coefficients
    assert res.purity == pytest.approx(1 / res.k_number, rel=1e-10)
    assert lam.sum() == pytest.approx(1.0, abs=1e-8)
    assert np.all(np.diff(lam) <= 0) and np.all(lam >= 0)
    assert res.k_number >= 1


def test_zero_amplitude_rejected():
    j = factorable()
    j.values = np.zeros_like(j.values)
    with pytest.raises(SchmidtError):
        schmidt(j)


def test_k_grid_convergence():
    k1 = schmidt(baseline_jsa(0.0, 0.5, N_FAST)).k_number
    k2 = schmidt(baseline_jsa(0.0, 0.5, 2 * N_FAST)).k_number
    assert abs(k1 - k2) < 0.02 * k2


# -- reduced density matrix ------------------------------------------------

def test_rdm_invariants():
    j = baseline_jsa(3e-6, 0.5)
    rdm = reduced_density_matrix(j)
    rho = rdm.values
    h = rdm.grid.step
    assert np.abs(rho - rho.conj().T).max() <= 1e-12 * np.abs(rho).max()
    assert np.real(np.trace(rho)) * h == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(rho * h).min() >= -1e-10
    assert np.allclose(np.real(np.diag(rho)), single_photon_spectrum(j), rtol=0, atol=1e-10 * np.real(np.diag(rho)).max())


def test_rdm_factorable_rank_one():
    rdm = reduced_density_matrix(factorable())
    ev = np.sort(np.linalg.eigvalsh(rdm.values * rdm.grid.step))[::-1]
    assert ev[0] == pytest.approx(1.0, abs=1e-10)
    assert ev[1] < 1e-8


@settings(max_examples=12, deadline=None)
@given(st.floats(-7e-6, 7e-6), st.sampled_from([-0.25, 0.0, 0.5, 1.0, 1.25]))
def test_two_path_purity(chirp, r):
    cfg = baseline_cfg()
    grid = FrequencyGrid.from_wavelengths(*cfg.window, 128)
    j = jsa(cfg.grating(chirp, r), cfg.crystal, cfg.pump(), grid, grid)
    assert abs(schmidt(j).purity - purity(reduced_density_matrix(j))) < 1e-8


def test_global_phase_invariance():
    j = baseline_jsa(3e-6, 0.5)
    k = from_values(j.values * np.exp(0.7j), j.grid_s, j.grid_i)
    assert schmidt(k).k_number == pytest.approx(schmidt(j).k_number, rel=1e-12)
    assert purity(reduced_density_matrix(k)) == pytest.approx(purity(reduced_density_matrix(j)), rel=1e-12)
    wj, wk = cwf(j), cwf(k)
    assert np.abs(wj.values - wk.values).max() <= 1e-12 * np.abs(wj.values).max()


# -- chronocyclic Wigner function ------------------------------------------

def test_gaussian_cwf_marginals_analytic():
    j = factorable()
    w = cwf(j, t_center=0.0)
    spec, temp = cwf_marginals(w)
    omega = w.omega_grid.omega
    spec_ref = np.exp(-((omega - W0) ** 2) / S**2) / (math.sqrt(math.pi) * S)
    s_fs = S * 1e-15
    temp_ref = s_fs * np.exp(-((s_fs * w.t) ** 2)) / math.sqrt(math.pi)
    assert np.abs(spec - spec_ref).max() <= 1e-6 * spec_ref.max()
    assert np.abs(temp - temp_ref).max() <= 1e-6 * temp_ref.max()


def test_gaussian_cwf_positive():
    w = cwf(factorable())
    assert w.values.min() >= -1e-6 * w.values.max()
    assert w.imag_residue < 1e-10


def test_cwf_sign_convention():
    # a linear spectral phase exp(i w tau) moves the wavepacket to t = -tau
    tau = 300e-15
    w = cwf(factorable(tau), t_center=0.0)
    _, temp = cwf_marginals(w)
    assert np.sum(temp * w.t) * w.t_step == pytest.approx(-300.0, abs=0.5)


def test_cwf_auto_centre_tracks_delay():
    tau = 300e-15
    w = cwf(factorable(tau))
    assert w.t[len(w.t) // 2] == pytest.approx(-300.0, abs=1.0)


def test_cwf_time_marginal_equals_sps():
    j = baseline_jsa(3e-6, 0.5)
    spec, _ = cwf_marginals(cwf(j))
    sps = single_photon_spectrum(j)
    inner = slice(1, -1)
    assert np.abs(spec[inner] - sps[inner]).max() <= 1e-6 * sps.max()


def test_cwf_frequency_marginal():
    w = cwf(baseline_jsa(-5e-6, 0.5, N_CWF))
    _, temp = cwf_marginals(w)
    assert temp.min() >= -1e-8 * temp.max()
    assert np.sum(temp) * w.t_step == pytest.approx(1.0, abs=1e-12)
    assert w.imag_residue < 1e-10


def test_cwf_aliasing_error():
    j = baseline_jsa(0.0, 0.5)
    limit = 2 * math.pi / j.grid_s.step
    with pytest.raises(AliasingError) as info:
        cwf(j, t_window=1.01 * limit)
    assert info.value.nyquist == pytest.approx(limit)


def test_cwf_window_crop():
    j = baseline_jsa(0.0, 0.5)
    w = cwf(j, t_window=1e-12)
    assert w.t.max() - w.t.min() <= 1000.0 + 1e-6


def group_delay_oracle(lam):
    """d k / d omega in s/um from the arbitrary-precision index."""
    with mp.workdps(40):
        c = mp.mpf(299792458) * 10**6
        dn = mp.diff(lambda x: ln_index_oracle(x, dps=40), mp.mpf(lam), h=mp.mpf("1e-12"))
        return float((ln_index_oracle(lam) - lam * dn) / c)


def test_transit_time_spread():
    # with D = 0 the heralded photon is emitted uniformly over the time the
    # pump and signal take to walk off across the crystal
    walk_off = abs(group_delay_oracle(0.8) - group_delay_oracle(1.6)) * 5000.0 / 1e-15
    assert walk_off == pytest.approx(1394.7, abs=0.5)
    w = cwf(baseline_jsa(0.0, 0.5, N_CWF))
    _, temp = cwf_marginals(w)
    width = spectral_width(temp, FrequencyGrid(w.t[0], w.t[-1], w.t.size)).omega
    assert width == pytest.approx(walk_off, rel=0.1)


# -- sweep -----------------------------------------------------------------

def test_sweep_rows_and_errors():
    cfg = baseline_cfg()
    small = type(cfg)(**{**cfg.__dict__, "n_points": 96})
    rows = schmidt_sweep(small, [0.0, 2e-6, -2e-4], [-1250.0, 2500.0])
    assert [(r.chirp, r.z0) for r in rows] == [
        (0.0, -1250.0), (2e-6, -1250.0), (-2e-4, -1250.0), (0.0, 2500.0), (2e-6, 2500.0), (-2e-4, 2500.0)
    ]
    assert rows[0].k_number == rows[3].k_number
    assert rows[1].k_number != rows[4].k_number
    # K(z) stays positive for z0 = -0.25 L but not for z0 = 0.5 L
    assert rows[2].error == ""
    assert "GratingError" in rows[5].error and math.isnan(rows[5].k_number)
    threaded = schmidt_sweep(small, [0.0, 2e-6, -2e-4], [-1250.0, 2500.0], workers=3)
    assert [r.k_number for r in threaded][:2] == [r.k_number for r in rows][:2]
    assert [r.error for r in threaded] == [r.error for r in rows]


def test_sweep_is_chirp_qpm_error_only():
    assert issubclass(SchmidtError, ChirpQPMError)
