"""Closed-form adiabatic and limiting solutions.

These expressions serve as independent cross-checks of the numerical
propagator: instantaneous dressed energies (including the trigonometric
closed form of the 3x3 eigenvalues), dynamical phases accumulated on the
adiabatically followed branch, the fast-modulation limits where the excited
states are eliminated, and the two special cases at the spectral critical
points (``omega_e = 0`` and ``v = 2 omega_e``).

Phase integrals run over the full pulse support ``[-W, W]``. The followed
branch starts and ends at zero energy there, so the absolute phases carry
no window-edge contribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import (
    CriticalPointError,
    CubicDomainError,
    FullTransferError,
    SingularCaseError,
    ValidationError,
)
from .model import PulseParams, SystemParams, envelope, envelope_rate, pulse_area

__all__ = [
    "DressedSpectrum",
    "TripleMargin",
    "ResonantCase",
    "dressed_energies_single",
    "alpha_adiabatic",
    "alpha_ae_limit",
    "magnus_effective_phase",
    "dressed_energies_three",
    "branch_index",
    "beta_adiabatic",
    "beta_ae_limit",
    "beta_ae_expanded",
    "resonant_case",
    "rabi_case_alpha",
    "adiabaticity_margin_triple",
]

_QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-11, limit=400)

# tolerance for clamping the arccos argument of the cubic eigenvalue form
_ARCCOS_CLAMP = 1e-12


def _require_delta_zero(s: SystemParams, what: str) -> None:
    if s.delta != 0:
        raise ValidationError(f"{what} is defined for delta = 0 only")


# ---------------------------------------------------------------------------
# two-level subspace
# ---------------------------------------------------------------------------


def dressed_energies_single(t, s: SystemParams):
    """Instantaneous eigenvalues (E_plus, E_minus) of the 2x2 rotating frame.

    E_pm = (-omega_e +- sqrt(omega_e^2 + Omega^2)) / 2.
    """
    _require_delta_zero(s, "dressed_energies_single")
    we = s.pulse.omega_e
    om_eff = np.hypot(we, envelope(t, s.pulse))
    return 0.5 * (-we + om_eff), 0.5 * (-we - om_eff)


def _single_branch_energy(t: float, p: PulseParams) -> float:
    # eigenvalue branch continuously connected to |1> (zero energy at Omega=0)
    we = p.omega_e
    sgn = 1.0 if we > 0 else -1.0
    om = envelope(t, p)
    return 0.5 * (-we + sgn * math.hypot(we, om))


def alpha_adiabatic(s: SystemParams) -> float:
    """Dynamical phase of ``|1>`` under adiabatic return.

    Integrates minus the dressed energy of the branch connected to ``|1>``:
    the upper branch for ``omega_e > 0``, the lower one for ``omega_e < 0``.
    Undefined at ``omega_e = 0`` (use :func:`rabi_case_alpha`).
    """
    _require_delta_zero(s, "alpha_adiabatic")
    p = s.pulse
    if p.omega_e == 0:
        raise CriticalPointError(
            "alpha_adiabatic is undefined at omega_e = 0; use rabi_case_alpha"
        )
    if p.omega0 == 0:
        return 0.0
    val, _ = quad(lambda t: _single_branch_energy(t, p), -p.window, p.window,
                  **_QUAD_OPTS)
    return -val


def alpha_ae_limit(s: SystemParams) -> float:
    """Fast-modulation (eliminated excited state) phase for the Gaussian pulse.

    Closed form -(1/4) sqrt(pi/2) omega0^2 t_p / omega_e, evaluated exactly.
    """
    p = s.pulse
    if p.omega_e == 0:
        raise CriticalPointError("alpha_ae_limit is singular at omega_e = 0")
    return -0.25 * math.sqrt(math.pi / 2.0) * p.omega0**2 * p.t_p / p.omega_e


def magnus_effective_phase(s: SystemParams) -> float:
    """Second-order average-Hamiltonian phase, -int Omega^2 / (4 omega_e) dt.

    For the Gaussian envelope this equals :func:`alpha_ae_limit` up to the
    (negligible) window truncation; the quadrature makes the identity checkable
    for any plugged-in envelope.
    """
    p = s.pulse
    if p.omega_e == 0:
        raise CriticalPointError("effective phase is singular at omega_e = 0")
    if p.omega0 == 0:
        return 0.0
    val, _ = quad(lambda t: envelope(t, p) ** 2, -p.window, p.window, **_QUAD_OPTS)
    return -val / (4.0 * p.omega_e)


# ---------------------------------------------------------------------------
# three-level subspace
# ---------------------------------------------------------------------------


@dataclass
class DressedSpectrum:
    """Eigenvalues of the 3x3 rotating frame from the trigonometric cubic form.

    ``energies[k]`` holds branch k with the fixed ordering
    E_1 <= E_2 <= E_0; ``p`` and ``q`` are the depressed-cubic intermediates
    (scalars, or arrays matching the time argument). ``branch`` is the index
    adiabatically connected to ``|11>`` (None at the critical points where
    the assignment is undefined).
    """

    energies: np.ndarray
    p: float | np.ndarray
    q: float | np.ndarray
    branch: int | None


def _cubic_intermediates(om, we: float, v: float):
    om2 = np.asarray(om, dtype=float) ** 2
    p = om2 + we * we - v * we + v * v / 3.0
    q = 2.0 * v**3 / 27.0 - v * v * we / 3.0 + v * we * we / 3.0 - om2 * v / 6.0
    return p, q


def _cubic_energies(om, we: float, v: float) -> np.ndarray:
    """Branch-indexed eigenvalues; om may be scalar or array (stacked axis 0)."""
    p, q = _cubic_intermediates(om, we, v)
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p_arr <= 0):
        raise CubicDomainError("cubic intermediate p must be positive")
    arg = 3.0 * q / p * np.sqrt(3.0 / (4.0 * p))
    bad = np.abs(arg) > 1.0 + _ARCCOS_CLAMP
    if np.any(bad):
        raise CubicDomainError(
            f"arccos argument out of range by more than {_ARCCOS_CLAMP}: "
            f"max |arg| = {float(np.max(np.abs(arg))):.3e}"
        )
    phi = np.arccos(np.clip(arg, -1.0, 1.0))
    amplitude = np.sqrt(4.0 * p / 3.0)
    shift = (v - 3.0 * we) / 3.0
    return np.stack(
        [shift + amplitude * np.cos((phi + 2.0 * math.pi * k) / 3.0) for k in (0, 1, 2)]
    )


def dressed_energies_three(t, s: SystemParams) -> DressedSpectrum:
    """Instantaneous 3x3 dressed energies at time(s) t, in closed form.

    The three values are the eigenvalues of the ``{|11>, |W>, |rr>}``
    rotating-frame matrix; branch k = 0 is always the top eigenvalue,
    k = 1 the bottom, k = 2 the middle one.
    """
    _require_delta_zero(s, "dressed_energies_three")
    we = s.pulse.omega_e
    v = s.v
    om = envelope(t, s.pulse)
    energies = _cubic_energies(om, we, v)
    p, q = _cubic_intermediates(om, we, v)
    try:
        branch = branch_index(we, v)
    except CriticalPointError:
        branch = None
    return DressedSpectrum(energies=energies, p=p, q=q, branch=branch)


def branch_index(omega_e: float, v: float) -> int:
    """Branch adiabatically connected to ``|11>``.

    k = 1 for omega_e < 0, k = 2 for 0 < omega_e < v/2, k = 0 for
    omega_e > v/2. The boundaries are spectral critical points where the
    assignment is undefined.
    """
    if omega_e == 0:
        raise CriticalPointError("branch index undefined at omega_e = 0")
    if omega_e == v / 2.0:
        raise CriticalPointError("branch index undefined at omega_e = v/2")
    if omega_e < 0:
        return 1
    return 2 if omega_e < v / 2.0 else 0


def beta_adiabatic(s: SystemParams) -> float:
    """Dynamical phase of ``|11>`` under adiabatic return.

    Integrates minus the branch energy selected by :func:`branch_index`
    from the closed-form spectrum (no repeated diagonalization).
    """
    _require_delta_zero(s, "beta_adiabatic")
    p = s.pulse
    k = branch_index(p.omega_e, s.v)
    if p.omega0 == 0:
        return 0.0
    we, v = p.omega_e, s.v

    def branch_energy(t):
        return float(_cubic_energies(envelope(t, p), we, v)[k])

    val, _ = quad(branch_energy, -p.window, p.window, **_QUAD_OPTS)
    return -val


def beta_ae_limit(s: SystemParams) -> float:
    """Two-photon phase with both excited states eliminated (quadrature).

    Evaluates -1/2 int Omega^2 / (omega_e + Omega^2 / (2 (v - 2 omega_e))) dt.
    Valid for drives much weaker than both omega_e and v - 2 omega_e; the
    caller is expected to check that regime.
    """
    p = s.pulse
    if s.v == 2 * p.omega_e:
        raise SingularCaseError(
            "beta_ae_limit is singular at v = 2 omega_e; use resonant_case"
        )
    if p.omega0 == 0:
        return 0.0
    gap = s.v - 2.0 * p.omega_e

    def integrand(t):
        om2 = envelope(t, p) ** 2
        return om2 / (p.omega_e + om2 / (2.0 * gap))

    val, _ = quad(integrand, -p.window, p.window, **_QUAD_OPTS)
    return -0.5 * val


def beta_ae_expanded(s: SystemParams) -> float:
    """Expanded Gaussian form of :func:`beta_ae_limit`.

    -(1/2) sqrt(pi/2) omega0^2 t_p / omega_e
    + (sqrt(pi)/8) omega0^4 t_p / (omega_e^2 (v - 2 omega_e)).
    """
    p = s.pulse
    if p.omega_e == 0:
        raise SingularCaseError("expanded form is singular at omega_e = 0")
    if s.v == 2 * p.omega_e:
        raise SingularCaseError(
            "expanded form is singular at v = 2 omega_e; use resonant_case"
        )
    lead = -0.5 * math.sqrt(math.pi / 2.0) * p.omega0**2 * p.t_p / p.omega_e
    corr = (
        math.sqrt(math.pi)
        / 8.0
        * p.omega0**4
        * p.t_p
        / (p.omega_e**2 * (s.v - 2.0 * p.omega_e))
    )
    return lead + corr


# ---------------------------------------------------------------------------
# special cases
# ---------------------------------------------------------------------------


@dataclass
class ResonantCase:
    """Final amplitudes of ``|11>`` and ``|rr>`` at two-photon resonance."""

    a11: complex
    a_rr: complex
    beta: float


def resonant_case(s: SystemParams) -> ResonantCase:
    """Two-photon resonant solution at ``v = 2 omega_e`` exactly.

    The doubly excited state stays coupled and the population oscillates:
    a11 = cos(beta) e^{i beta}, a_rr = i sin(beta) e^{i beta} with the real
    phase beta = omega_e T / 4 - (1/4) int sqrt(omega_e^2 + 4 Omega^2) dt,
    T being the full window span.
    """
    _require_delta_zero(s, "resonant_case")
    p = s.pulse
    if abs(s.v - 2.0 * p.omega_e) > 1e-12 * max(1.0, abs(s.v)):
        raise ValidationError("resonant_case requires v = 2 omega_e exactly")
    span = 2.0 * p.window
    val, _ = quad(
        lambda t: math.sqrt(p.omega_e**2 + 4.0 * envelope(t, p) ** 2),
        -p.window,
        p.window,
        **_QUAD_OPTS,
    )
    beta = p.omega_e * span / 4.0 - val / 4.0
    phase = np.exp(1j * beta)
    return ResonantCase(
        a11=math.cos(beta) * phase, a_rr=1j * math.sin(beta) * phase, beta=beta
    )


def rabi_case_alpha(s: SystemParams) -> float:
    """Phase of ``|1>`` at zero modulation: 0 or pi by the sign of cos(S/2).

    At ``omega_e = 0`` the drive produces plain Rabi cycling with the
    envelope area S; the returned phase jumps by pi whenever S crosses an
    odd multiple of pi.
    """
    _require_delta_zero(s, "rabi_case_alpha")
    p = s.pulse
    if p.omega_e != 0:
        raise ValidationError("rabi_case_alpha applies at omega_e = 0 only")
    c = math.cos(0.5 * pulse_area(p))
    if abs(c) < 1e-10:
        raise FullTransferError(
            "cos(S/2) = 0: population fully transferred out of |1>"
        )
    return 0.0 if c > 0 else math.pi


# ---------------------------------------------------------------------------
# three-level adiabaticity margin
# ---------------------------------------------------------------------------


@dataclass
class TripleMargin:
    """Worst-case non-adiabatic coupling between two 3x3 branches."""

    margin: float
    excluded_points: int


def adiabaticity_margin_triple(
    s: SystemParams, k: int, ell: int, samples: int = 20001
) -> TripleMargin:
    """Maximum of the branch-pair coupling ratio over the pulse window.

    Evaluates |2 dOmega/dt (E_k + E_l + 2 omega_e)| /
    (Omega^3 N_k N_l (E_l - E_k)^2) on a dense grid, where N are the
    eigenvector normalization factors. Grid points where a normalization
    denominator vanishes (e.g. the envelope is exactly zero at the window
    edge) are skipped and counted in ``excluded_points``. A degenerate pair
    reports an infinite margin.
    """
    _require_delta_zero(s, "adiabaticity_margin_triple")
    if k == ell or not {k, ell} <= {0, 1, 2}:
        raise ValidationError(f"branch pair must be two distinct of 0,1,2: {k},{ell}")
    p = s.pulse
    we, v = p.omega_e, s.v
    t = np.linspace(-p.window, p.window, samples)
    om = envelope(t, p)
    rate = envelope_rate(t, p)
    energies = _cubic_energies(np.maximum(om, 0.0), we, v)
    e_k, e_l = energies[k], energies[ell]
    gap2 = (e_l - e_k) ** 2
    if np.any(gap2 < 1e-24):
        return TripleMargin(margin=math.inf, excluded_points=0)

    with np.errstate(divide="ignore", invalid="ignore"):
        norm_k = np.sqrt(e_k**-2 + 2.0 * om**-2 + (v - 2 * we - e_k) ** -2)
        norm_l = np.sqrt(e_l**-2 + 2.0 * om**-2 + (v - 2 * we - e_l) ** -2)
        expr = np.abs(2.0 * rate * (e_k + e_l + 2.0 * we)) / (
            om**3 * norm_k * norm_l * gap2
        )
    valid = np.isfinite(expr)
    excluded = int(samples - np.count_nonzero(valid))
    margin = float(np.max(expr[valid])) if np.any(valid) else 0.0
    return TripleMargin(margin=margin, excluded_points=excluded)
