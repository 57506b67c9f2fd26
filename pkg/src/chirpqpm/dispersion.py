"""Refractive index and wavenumber of the extraordinary ray.

Wavelengths are vacuum wavelengths in um, angular frequencies in rad/s and
wavenumbers in 1/um.  All functions accept scalars or numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ChirpQPMError, DispersionRangeError

# speed of light in um/s
C_UM = 299792458.0e6

FORMS = ("ln_thermal", "sellmeier")


@dataclass(frozen=True)
class SellmeierModel:
    """Temperature-parameterised Sellmeier model for one polarisation.

    ``form="ln_thermal"`` takes ten coefficients ``a1..a6, b1..b4``::

        n^2 = a1 + b1 f + (a2 + b2 f) / (l^2 - (a3 + b3 f)^2)
              + (a4 + b4 f) / (l^2 - a5^2) - a6 l^2,
        f   = (T - 24.5)(T + 570.82)

    ``form="sellmeier"`` takes ``A, B1, C1, B2, C2, ...`` for the
    temperature-independent ``n^2 = A + sum B_i l^2 / (l^2 - C_i)``.
    """

    name: str
    coefficients: tuple[float, ...]
    temperature: float = 25.0
    valid_range: tuple[float, float] = (0.4, 5.0)
    form: str = "ln_thermal"

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        object.__setattr__(self, "valid_range", tuple(float(v) for v in self.valid_range))
        lo, hi = self.valid_range
        if not 0 < lo < hi:
            raise ChirpQPMError(f"invalid validity range {self.valid_range}")
        if self.form not in FORMS:
            raise ChirpQPMError(f"unknown Sellmeier form {self.form!r}; expected one of {FORMS}")
        if self.form == "ln_thermal" and len(self.coefficients) != 10:
            raise ChirpQPMError("ln_thermal form needs exactly 10 coefficients (a1..a6, b1..b4)")
        if self.form == "sellmeier" and len(self.coefficients) % 2 != 1:
            raise ChirpQPMError("sellmeier form needs A followed by (B, C) pairs")

    def at_temperature(self, temperature: float) -> "SellmeierModel":
        return SellmeierModel(self.name, self.coefficients, temperature, self.valid_range, self.form)


# Congruent LiNbO3, extraordinary ray, temperature-dependent 1997 set.
CONGRUENT_LN_E = SellmeierModel(
    name="congruent_ln_e",
    coefficients=(
        5.35583, 0.100473, 0.20692, 100.0, 11.34927, 1.5334e-2,
        4.629e-7, 3.862e-8, -0.89e-8, 2.657e-5,
    ),
    temperature=25.0,
    valid_range=(0.4, 5.0),
)

BUILTIN_MODELS = {CONGRUENT_LN_E.name: CONGRUENT_LN_E}


def get_model(name: str, temperature: float | None = None) -> SellmeierModel:
    try:
        model = BUILTIN_MODELS[name]
    except KeyError:
        raise ChirpQPMError(
            f"unknown Sellmeier model {name!r}; built-in models: {sorted(BUILTIN_MODELS)}"
        ) from None
    return model if temperature is None else model.at_temperature(temperature)


def _check_range(model, lam):
    lo, hi = model.valid_range
    lam_min = np.min(lam)
    lam_max = np.max(lam)
    if not lam_min >= lo:
        raise DispersionRangeError(float(lam_min), lo, "lower")
    if not lam_max <= hi:
        raise DispersionRangeError(float(lam_max), hi, "upper")


def _n_squared(model, lam):
    c = model.coefficients
    l2 = lam * lam
    if model.form == "ln_thermal":
        t = model.temperature
        f = (t - 24.5) * (t + 570.82)
        a1, a2, a3, a4, a5, a6, b1, b2, b3, b4 = c
        return (
            a1 + b1 * f
            + (a2 + b2 * f) / (l2 - (a3 + b3 * f) ** 2)
            + (a4 + b4 * f) / (l2 - a5 * a5)
            - a6 * l2
        )
    n2 = np.full_like(l2, c[0])
    for b, cc in zip(c[1::2], c[2::2]):
        n2 = n2 + b * l2 / (l2 - cc)
    return n2


def refractive_index(model: SellmeierModel, wavelength):
    """n_e(wavelength) at the model temperature; wavelength in um."""
    lam = np.asarray(wavelength, dtype=float)
    _check_range(model, lam)
    n = np.sqrt(_n_squared(model, lam))
    return n if n.ndim else float(n)


def omega_to_wavelength(omega):
    omega = np.asarray(omega, dtype=float)
    with np.errstate(divide="ignore"):
        return 2 * np.pi * C_UM / omega


def wavelength_to_omega(wavelength):
    return 2 * np.pi * C_UM / np.asarray(wavelength, dtype=float)


def wavenumber(model: SellmeierModel, omega):
    """k(omega) = n(2 pi c / omega) omega / c in 1/um."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise DispersionRangeError(float("inf"), model.valid_range[1], "upper")
    lam = omega_to_wavelength(omega)
    k = np.asarray(refractive_index(model, lam)) * omega / C_UM
    return k if k.ndim else float(k)


def group_index(model: SellmeierModel, wavelength, step=1e-4):
    """n_g = n - lambda dn/dlambda by central differences."""
    lam = np.asarray(wavelength, dtype=float)
    dn = (refractive_index(model, lam + step) - refractive_index(model, lam - step)) / (2 * step)
    return refractive_index(model, lam) - lam * dn


def model_from_mapping(values: dict) -> SellmeierModel:
    """Build a model from a flat mapping (as read from a config section)."""
    temperature = float(values.get("temperature", 25.0))
    if "coefficients" not in values:
        return get_model(values.get("model", CONGRUENT_LN_E.name), temperature)
    coeffs = values["coefficients"]
    if isinstance(coeffs, str):
        coeffs = [float(c) for c in coeffs.replace(",", " ").split()]
    valid = values.get("valid_range", (0.4, 5.0))
    if isinstance(valid, str):
        valid = [float(v) for v in valid.replace(",", " ").split()]
    return SellmeierModel(
        name=values.get("model", "custom"),
        coefficients=tuple(coeffs),
        temperature=temperature,
        valid_range=tuple(valid),
        form=values.get("form", "ln_thermal"),
    )
