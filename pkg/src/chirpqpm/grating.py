"""Linearly chirped quasi-phase-matching grating and its phasematching function.

The local grating wavevector is ``K(z) = K0 + D (z0 + z)`` on the crystal
``z in [A, B]``.  Positions are in um, wavevectors in 1/um.  The
phasematching function is the crystal integral

    Phi = int_A^B exp(i [dk z - m D (z0 + z) z]) dz

which in the dimensionless variables ``s = z / L``, ``x = L dk``,
``xi = m D L^2``, ``r = z0 / L`` reads ``L int_a^b exp(i[x s - xi (r + s) s]) ds``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .dispersion import SellmeierModel, wavelength_to_omega, wavenumber
from .errors import (
    GratingError,
    NumericalDomainError,
    QuadratureError,
    SmallChirpError,
)

# below this |xi| the unchirped sinc form is used by phasematching(); the
# Faddeeva form stays accurate to ~1e-12 well below it, and the jump to the
# sinc limit is O(xi) L
XI_CROSSOVER = 1e-6
# accuracy box of complex_erf
ERF_BOX = 27.0

_EIGHTH_TURN = np.exp(1j * np.pi / 4)


@dataclass(frozen=True)
class ChirpedGrating:
    """QPM grating with central period ``lambda_c`` (um) and chirp ``chirp`` (1/um^2).

    ``z0`` is the reference coordinate where the local period equals
    ``lambda_c`` (at ``z = -z0``); the crystal occupies ``[A, B]``.
    """

    lambda_c: float
    chirp: float
    z0: float
    A: float
    B: float
    order: int = 1

    def __post_init__(self):
        if not self.B > self.A:
            raise GratingError(f"crystal boundaries need B > A, got A={self.A}, B={self.B}")
        if not self.lambda_c > 0:
            raise GratingError(f"central period must be positive, got {self.lambda_c}")
        if int(self.order) != self.order or self.order < 1:
            raise GratingError(f"QPM order must be a positive integer, got {self.order}")
        # K(z) is linear in z, so positivity at both faces covers the crystal
        for z in (self.A, self.B):
            if not self.k_local(z) > 0:
                raise GratingError(
                    f"local grating wavevector K({z}) = {self.k_local(z):.4g} 1/um is not "
                    "positive; chirp too strong for this crystal"
                )

    @classmethod
    def centered(cls, lambda_c, chirp, length, r=0.5, order=1):
        """Crystal on ``[-L, 0]`` with ``z0 = r L``."""
        return cls(lambda_c=lambda_c, chirp=chirp, z0=r * length, A=-length, B=0.0, order=order)

    @property
    def k0(self):
        return 2 * np.pi / self.lambda_c

    @property
    def length(self):
        return self.B - self.A

    @property
    def r(self):
        return self.z0 / self.length

    def k_local(self, z):
        return self.k0 + self.chirp * (self.z0 + z)

    @property
    def xi(self):
        return self.order * self.chirp * self.length**2


@dataclass(frozen=True)
class PhaseMismatch:
    delta_k: np.ndarray | float
    x: np.ndarray | float
    xi: float


def local_period(g: ChirpedGrating, z):
    """Local poling period 2 pi / K(z) in um."""
    z = np.asarray(z, dtype=float)
    if np.any(z < g.A) or np.any(z > g.B):
        raise GratingError(f"z outside the crystal [{g.A}, {g.B}]")
    period = 2 * np.pi / g.k_local(z)
    return period if period.ndim else float(period)


def phase_mismatch(g: ChirpedGrating, disp: SellmeierModel, omega_s, omega_i) -> PhaseMismatch:
    """Type-0 collinear mismatch k_p(ws + wi) - k(ws) - k(wi) - m K0."""
    omega_s = np.asarray(omega_s, dtype=float)
    omega_i = np.asarray(omega_i, dtype=float)
    dk = (
        wavenumber(disp, omega_s + omega_i)
        - wavenumber(disp, omega_s)
        - wavenumber(disp, omega_i)
        - g.order * g.k0
    )
    return PhaseMismatch(delta_k=dk, x=dk * g.length, xi=g.xi)


def design_period(disp: SellmeierModel, pump_wavelength, signal_wavelength=None, order=1):
    """Poling period (um) that zeroes the mismatch at the given wavelengths.

    Degenerate emission is assumed when ``signal_wavelength`` is omitted.
    """
    wp = wavelength_to_omega(pump_wavelength)
    ws = wp / 2 if signal_wavelength is None else wavelength_to_omega(signal_wavelength)
    dk = wavenumber(disp, wp) - wavenumber(disp, ws) - wavenumber(disp, wp - ws)
    if not dk > 0:
        raise GratingError("process cannot be quasi-phase-matched with a positive period")
    return float(2 * np.pi * order / dk)


def complex_erf(z):
    """Error function of a complex argument.

    Restricted to ``|Re z|, |Im z| <= 27``; beyond that ``exp(-z^2)`` leaves
    double precision in parts of the plane.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z.real) > ERF_BOX) or np.any(np.abs(z.imag) > ERF_BOX):
        bad = z.ravel()[np.argmax((np.abs(z.real) > ERF_BOX) | (np.abs(z.imag) > ERF_BOX))]
        raise NumericalDomainError(f"complex_erf argument {bad} outside |Re|,|Im| <= {ERF_BOX}")
    out = special.erf(z)
    if not np.all(np.isfinite(out)):
        bad = z.ravel()[np.argmax(~np.isfinite(np.ravel(out)))]
        raise NumericalDomainError(f"complex_erf overflows at {bad}")
    return out if out.ndim else complex(out)


def _endpoint_term(u, phase):
    # erf(u) = s - s exp(-u^2) w(i s u) with s = sign(Re u); w is then
    # evaluated in the closed upper half plane where it is bounded.
    # exp(i theta - u^2) collapses to exp(i phase) for these arguments.
    s = np.where(u.real >= 0, 1.0, -1.0)
    return s, s * np.exp(1j * phase) * special.wofz(1j * s * u)


def chirped_integral(x, xi, r, a=-1.0, b=0.0):
    """Closed form of ``int_a^b exp(i[x s - xi (r + s) s]) ds`` for ``xi != 0``.

    Completing the square gives

        sqrt(pi) / (2 e^{i pi/4} sqrt(xi)) e^{i (x - r xi)^2 / (4 xi)}
            (erf[e^{i pi/4} (2 b xi - x + r xi) / (2 sqrt(xi))]
             - erf[e^{i pi/4} (2 a xi - x + r xi) / (2 sqrt(xi))])

    with the principal fourth root of -1.  The erf difference is rewritten
    through the Faddeeva function so no large cancelling terms appear.
    """
    x = np.asarray(x, dtype=float)
    xi = float(xi)
    if xi == 0:
        raise SmallChirpError("chirped_integral needs xi != 0")
    root = _EIGHTH_TURN * np.sqrt(complex(xi))
    shift = x - xi * r
    centre = shift / (2 * xi)
    u_a = root * (a - centre)
    u_b = root * (b - centre)
    s_a, t_a = _endpoint_term(u_a, shift * a - xi * a * a)
    s_b, t_b = _endpoint_term(u_b, shift * b - xi * b * b)
    # stationary term only survives when the stationary point lies in [a, b],
    # where xi * centre^2 stays bounded
    stationary = np.where(s_a != s_b, np.exp(1j * xi * centre**2) * (s_b - s_a), 0.0)
    out = np.sqrt(np.pi) / (2 * root) * (stationary - t_b + t_a)
    if not np.all(np.isfinite(out)):
        idx = np.flatnonzero(~np.isfinite(out))[0]
        raise NumericalDomainError(
            f"non-finite phasematching value at x={np.broadcast_to(x, out.shape).flat[idx]}, "
            f"xi={xi}: erf arguments {np.broadcast_to(u_a, out.shape).flat[idx]}, "
            f"{np.broadcast_to(u_b, out.shape).flat[idx]}"
        )
    return out


def flat_integral(x, a=-1.0, b=0.0):
    """``int_a^b exp(i x s) ds`` = (b - a) sinc(x (b - a) / 2) exp(i x (a + b) / 2)."""
    x = np.asarray(x, dtype=float)
    width = b - a
    return width * np.sinc(x * width / (2 * np.pi)) * np.exp(0.5j * x * (a + b))


def _order_weight(g):
    # 2/(pi m) Fourier coefficient relative to first order
    return 1.0 / g.order


def pmf_closed(g: ChirpedGrating, pm: PhaseMismatch, min_xi=XI_CROSSOVER):
    """Phasematching function from the erf closed form (um, unnormalised).

    Raises :class:`SmallChirpError` when ``|xi| < min_xi``; callers below the
    crossover should use :func:`pmf_unchirped` (or :func:`phasematching`).
    """
    if abs(pm.xi) < min_xi or pm.xi == 0:
        raise SmallChirpError(
            f"|xi| = {abs(pm.xi):.3e} below crossover {min_xi:.1e}; use pmf_unchirped"
        )
    a = g.A / g.length
    b = g.B / g.length
    return g.length * _order_weight(g) * chirped_integral(pm.x, pm.xi, g.r, a, b)


def pmf_unchirped(g: ChirpedGrating, pm: PhaseMismatch):
    """Uniform-grating limit L sinc(dk L / 2) with the crystal-position phase."""
    a = g.A / g.length
    b = g.B / g.length
    return g.length * _order_weight(g) * flat_integral(pm.x, a, b)


def phasematching(g: ChirpedGrating, pm: PhaseMismatch, crossover=XI_CROSSOVER):
    if abs(pm.xi) < crossover:
        return pmf_unchirped(g, pm)
    return pmf_closed(g, pm, min_xi=crossover)


def _quad_one(x, xi, r, a, b, tol, limit):
    def phase(s):
        return x * s - xi * (r + s) * s

    # split so each piece carries at most ~pi of phase; the phase is a
    # parabola so its extrema are at the ends or the stationary point
    knots = [a, b]
    if xi != 0:
        centre = (x - xi * r) / (2 * xi)
        if a < centre < b:
            knots.insert(1, centre)
    edges = [knots[0]]
    for lo, hi in zip(knots[:-1], knots[1:]):
        swing = abs(phase(hi) - phase(lo))
        n = max(1, int(math.ceil(swing / np.pi)))
        # equal phase steps on a monotone stretch of the parabola
        targets = np.linspace(phase(lo), phase(hi), n + 1)[1:-1]
        pts = []
        for t in targets:
            pts.append(_invert_phase(phase, lo, hi, t))
        edges.extend(pts)
        edges.append(hi)

    total = 0j
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            val, e = integrate.quad(
                lambda s: np.exp(1j * phase(s)), lo, hi,
                epsabs=tol / len(edges), epsrel=0.0, limit=limit, complex_func=True,
            )
        if caught:
            first = str(caught[0].message).splitlines()[0]
            raise QuadratureError(f"quadrature failed on [{lo}, {hi}]: {first}", abs(e))
        total += val
        err += abs(e)
    if err > tol:
        raise QuadratureError(f"tolerance {tol:.1e} not reached", err)
    return total, err


def _invert_phase(phase, lo, hi, target):
    # bisection on a monotone stretch; 60 halvings reach double precision
    f_lo = phase(lo) - target
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        f_mid = phase(mid) - target
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pmf_quadrature(g: ChirpedGrating, pm: PhaseMismatch, tol=1e-9, limit=200):
    """Phasematching function by adaptive quadrature of the crystal integral.

    ``tol`` is an absolute tolerance on the dimensionless integral (unit
    integrand, unit length).  Independent of the closed form; used as its
    oracle.
    """
    a = g.A / g.length
    b = g.B / g.length
    xs = np.asarray(pm.x, dtype=float)
    out = np.empty(xs.shape, dtype=complex)
    for idx, x in np.ndenumerate(xs):
        out[idx] = _quad_one(float(x), float(pm.xi), g.r, a, b, tol, limit)[0]
    out *= g.length * _order_weight(g)
    return out if out.ndim else complex(out)
