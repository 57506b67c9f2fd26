"""Photon-pair spectra from linearly chirped quasi-phase-matched crystals."""

__version__ = "0.1.0"

from .analysis import (  # noqa: E402
    cwf,
    cwf_curvature_moment,
    cwf_marginals,
    cwf_mixed_moment,
    purity,
    reduced_density_matrix,
    schmidt,
    schmidt_sweep,
)
from .biphoton import (  # noqa: E402
    FrequencyGrid,
    JsaGrid,
    PumpEnvelope,
    jsa,
    single_photon_spectrum,
    spectral_width,
)
from .config import ScenarioConfig, list_presets, load_config, load_preset  # noqa: E402
from .dispersion import CONGRUENT_LN_E, SellmeierModel, get_model, refractive_index, wavenumber  # noqa: E402
from .errors import ChirpQPMError  # noqa: E402
from .grating import (  # noqa: E402
    ChirpedGrating,
    design_period,
    local_period,
    phase_mismatch,
    phasematching,
    pmf_closed,
    pmf_quadrature,
    pmf_unchirped,
)
