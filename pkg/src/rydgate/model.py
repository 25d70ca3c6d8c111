"""Pulse definitions, system parameters, and rotating-frame Hamiltonians.

Conventions used throughout the package:

* Time is measured in units of the pulse width ``t_p`` (default 1), all
  frequencies in units of ``1/t_p``.
* The pulse is centered at t = 0 and truncated outside
  ``[-W, W]`` with ``W = window_halfwidth * t_p``.
* The drive has quadratures ``Omega_x = Omega(t) sin(omega_e t)`` and
  ``Omega_y = Omega(t) cos(omega_e t)`` with a Gaussian envelope
  ``Omega(t) = omega0 exp(-t^2/t_p^2)`` unless a custom shape is plugged in.
* The one-photon detuning ``delta`` enters as the rotating-frame diagonal
  energy of each Rydberg excitation: ``delta - omega_e`` for one excitation
  and ``v + 2 delta - 2 omega_e`` for the doubly excited state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import ValidationError

__all__ = [
    "PulseParams",
    "SystemParams",
    "HamiltonianKind",
    "system",
    "envelope",
    "envelope_rate",
    "quadratures",
    "pulse_area",
    "hamiltonian",
    "adiabaticity_margin_single",
    "nonadiabatic_boundaries",
]


class HamiltonianKind(Enum):
    """Which representation of the driven two-qubit problem to build.

    SINGLE_ROTATING
        2x2 matrix in the basis ``{|1>, |r>}`` of the driven qubit, in the
        frame rotating with the modulation frequency.
    TRIPLE_ROTATING
        3x3 matrix in the basis ``{|11>, |W>, |rr>}`` with
        ``|W> = (|1r> + |r1>)/sqrt(2)``, same rotating frame.
    FULL_RWA
        9x9 matrix in the product basis ``{|0>, |1>, |r>} (x) {|0>, |1>, |r>}``
        ordered ``|00>, |01>, |0r>, |10>, |11>, |1r>, |r0>, |r1>, |rr>``,
        with the bare oscillating couplings ``(i/2) Omega e^{+-i omega_e t}``.
    """

    SINGLE_ROTATING = "single_rotating"
    TRIPLE_ROTATING = "triple_rotating"
    FULL_RWA = "full_rwa"

    @property
    def dim(self) -> int:
        return {"single_rotating": 2, "triple_rotating": 3, "full_rwa": 9}[self.value]


@dataclass(frozen=True)
class PulseParams:
    """Amplitude-modulated drive parameters.

    Parameters
    ----------
    omega0 : float
        Peak Rabi frequency, >= 0, in units of 1/t_p.
    t_p : float
        Pulse width; sets the time unit. Must be > 0.
    omega_e : float
        Modulation frequency, signed, in units of 1/t_p.
    window_halfwidth : float
        Truncation half-width in units of t_p. Must be >= 3 so the envelope
        at the window edge is below 1.3e-4 of the peak.
    shape : callable, optional
        Unit-peak envelope shape evaluated at t/t_p; defaults to the
        Gaussian ``exp(-x^2)``. Must be a picklable pure function.
    """

    omega0: float
    t_p: float = 1.0
    omega_e: float = 0.0
    window_halfwidth: float = 4.5
    shape: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if not self.omega0 >= 0:
            raise ValidationError(f"omega0 must be >= 0, got {self.omega0}")
        if not self.t_p > 0:
            raise ValidationError(f"t_p must be > 0, got {self.t_p}")
        if not self.window_halfwidth >= 3:
            raise ValidationError(
                f"window_halfwidth must be >= 3, got {self.window_halfwidth}"
            )

    @property
    def window(self) -> float:
        """Truncation half-width W in absolute time units."""
        return self.window_halfwidth * self.t_p


@dataclass(frozen=True)
class SystemParams:
    """Drive plus the interaction and detuning of the two-qubit system."""

    pulse: PulseParams
    v: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if not self.v >= 0:
            raise ValidationError(f"v must be >= 0, got {self.v}")


def system(
    omega0: float,
    omega_e: float = 0.0,
    v: float = 0.0,
    delta: float = 0.0,
    t_p: float = 1.0,
    window_halfwidth: float = 4.5,
    shape=None,
) -> SystemParams:
    """Convenience constructor for a full parameter set."""
    return SystemParams(
        pulse=PulseParams(
            omega0=omega0,
            t_p=t_p,
            omega_e=omega_e,
            window_halfwidth=window_halfwidth,
            shape=shape,
        ),
        v=v,
        delta=delta,
    )


# ---------------------------------------------------------------------------
# pulse functions
# ---------------------------------------------------------------------------


def envelope(t, p: PulseParams):
    """Envelope Rabi frequency Omega(t); exactly 0 outside [-W, W]."""
    t = np.asarray(t, dtype=float)
    x = t / p.t_p
    shape = np.exp(-x * x) if p.shape is None else p.shape(x)
    out = np.where(np.abs(t) <= p.window, p.omega0 * shape, 0.0)
    return float(out) if out.ndim == 0 else out


def _envelope_scalar(t: float, p: PulseParams) -> float:
    # fast scalar path used in ODE right-hand sides
    if abs(t) > p.window:
        return 0.0
    x = t / p.t_p
    if p.shape is None:
        return p.omega0 * math.exp(-x * x)
    return p.omega0 * float(p.shape(x))


def envelope_rate(t, p: PulseParams):
    """Time derivative of the envelope.

    Analytic for the Gaussian default; central finite difference (step
    1e-6 t_p) for plugged-in shapes.
    """
    t = np.asarray(t, dtype=float)
    if p.shape is None:
        out = np.where(
            np.abs(t) <= p.window, -2.0 * t / p.t_p**2 * envelope(t, p), 0.0
        )
        return float(out) if out.ndim == 0 else out
    h = 1e-6 * p.t_p
    out = (envelope(t + h, p) - envelope(t - h, p)) / (2 * h)
    return float(out) if np.ndim(out) == 0 else out


def quadratures(t, p: PulseParams):
    """Return (Omega_x, Omega_y) = Omega(t) (sin(omega_e t), cos(omega_e t))."""
    om = envelope(t, p)
    t = np.asarray(t, dtype=float)
    return om * np.sin(p.omega_e * t), om * np.cos(p.omega_e * t)


def pulse_area(p: PulseParams, t: float | None = None) -> float:
    """Accumulated envelope area S(t), integrated from the window start -W.

    With ``t=None`` the full-window area is returned, which for the Gaussian
    equals ``omega0 t_p sqrt(pi) erf(window_halfwidth)``.
    """
    w = p.window
    upper = w if t is None else min(float(t), w)
    if upper <= -w or p.omega0 == 0:
        return 0.0
    val, _ = quad(
        lambda x: _envelope_scalar(x, p), -w, upper, epsabs=1e-14, epsrel=1e-12,
        limit=200,
    )
    return val


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

_I3 = np.eye(3)
_L3 = np.zeros((3, 3))
_L3[2, 1] = 1.0  # |r><1| for one atom in the {|0>, |1>, |r>} basis
_L9 = np.kron(_L3, _I3) + np.kron(_I3, _L3)
_N_RYD = np.array([0, 0, 1, 0, 0, 1, 1, 1, 2], dtype=float)  # Rydberg excitations
_P_RR = np.zeros(9)
_P_RR[8] = 1.0


def hamiltonian(t: float, s: SystemParams, kind: HamiltonianKind) -> np.ndarray:
    """Instantaneous Hamiltonian matrix for the requested representation.

    All returned matrices are Hermitian. The two rotating-frame kinds are
    real symmetric; FULL_RWA carries the oscillating complex couplings.
    """
    p = s.pulse
    om = _envelope_scalar(float(t), p)
    we = p.omega_e
    if kind is HamiltonianKind.SINGLE_ROTATING:
        h = 0.5 * om
        return np.array(
            [[0.0, h], [h, s.delta - we]], dtype=complex
        )
    if kind is HamiltonianKind.TRIPLE_ROTATING:
        c = om / math.sqrt(2.0)
        return np.array(
            [
                [0.0, c, 0.0],
                [c, s.delta - we, c],
                [0.0, c, s.v + 2 * s.delta - 2 * we],
            ],
            dtype=complex,
        )
    if kind is HamiltonianKind.FULL_RWA:
        a = 0.5j * om * np.exp(-1j * we * float(t))
        diag = s.delta * _N_RYD + s.v * _P_RR
        return a * _L9 + np.conj(a) * _L9.T + np.diag(diag).astype(complex)
    raise ValidationError(f"unknown Hamiltonian kind: {kind!r}")


# ---------------------------------------------------------------------------
# adiabaticity diagnostics
# ---------------------------------------------------------------------------


def adiabaticity_margin_single(s: SystemParams, samples: int = 20001) -> float:
    """Worst-case non-adiabaticity of the driven two-level subspace.

    Returns the maximum over the window of
    ``|omega_e dOmega/dt| / (2 Omega_eff^3)`` with
    ``Omega_eff = sqrt(omega_e^2 + Omega^2)``; values well below 1 signal
    adiabatic population return. Requires delta = 0.

    At ``omega_e = 0`` with a nonzero drive the relevant gap closes at the
    pulse edges and the margin is reported as ``inf``.
    """
    if s.delta != 0:
        raise ValidationError("adiabaticity_margin_single requires delta = 0")
    p = s.pulse
    if p.omega0 == 0:
        return 0.0
    if p.omega_e == 0:
        return math.inf
    t = np.linspace(-p.window, p.window, samples)
    om = envelope(t, p)
    rate = envelope_rate(t, p)
    omega_eff = np.hypot(p.omega_e, om)
    return float(np.max(np.abs(p.omega_e * rate) / (2.0 * omega_eff**3)))


def nonadiabatic_boundaries(omega_e: float, v: float, t_p: float = 1.0):
    """Approximate peak-Rabi thresholds where adiabatic return breaks down.

    Returns ``(2 omega_e^2 t_p^2, (v - 2 omega_e)^2 t_p^2)``: the gap-closing
    estimates near ``omega_e = 0`` and near ``2 omega_e = v``.
    """
    return 2.0 * omega_e**2 * t_p**2, (v - 2.0 * omega_e) ** 2 * t_p**2
