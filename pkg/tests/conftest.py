import functools

import mpmath as mp
import numpy as np
import pytest

from chirpqpm import FrequencyGrid, jsa, load_preset

# acceptance grids: 512 points resolve widths and purities (converged to <1%);
# the CWF needs 1024 so the 2 pi / d omega time window clears the wavepacket
N_FAST = 512
N_CWF = 1024


def ln_index_oracle(lam, temperature=25, dps=40):
    """Congruent LN extraordinary index, evaluated in arbitrary precision."""
    with mp.workdps(dps):
        a = [mp.mpf(v) for v in ("5.35583", "0.100473", "0.20692", "100", "11.34927", "1.5334e-2")]
        b = [mp.mpf(v) for v in ("4.629e-7", "3.862e-8", "-0.89e-8", "2.657e-5")]
        T = mp.mpf(temperature)
        f = (T - mp.mpf("24.5")) * (T + mp.mpf("570.82"))
        l2 = mp.mpf(lam) ** 2
        n2 = (a[0] + b[0] * f + (a[1] + b[1] * f) / (l2 - (a[2] + b[2] * f) ** 2)
              + (a[3] + b[3] * f) / (l2 - a[4] ** 2) - a[5] * l2)
        return mp.sqrt(n2)


@functools.lru_cache(maxsize=None)
def baseline_cfg():
    return load_preset("fig1")


@functools.lru_cache(maxsize=None)
def baseline_jsa(chirp=0.0, r=0.5, n=N_FAST):
    cfg = baseline_cfg()
    grid = FrequencyGrid.from_wavelengths(*cfg.window, n)
    return jsa(cfg.grating(chirp, r), cfg.crystal, cfg.pump(), grid, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, filled in by test_acceptance.py and
# printed at the end of the session so it shows up without -s
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
