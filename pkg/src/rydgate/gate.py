"""Two-qubit phase-gate assembly and scoring.

The gate family is diagonal in the computational basis,
``U = diag(1, e^{i alpha}, e^{i alpha}, e^{i beta})``, scored against the
controlled-Z target ``diag(1, 1, 1, -1)`` with the Hilbert-Schmidt fidelity
and against perfect entanglers with the entangling power. Leakage out of
the computational space is reported separately so every metric stays a
function of the two phases alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .model import HamiltonianKind, SystemParams
from .propagator import basis_state, phase_of, propagate

__all__ = [
    "GateReport",
    "assemble",
    "cz_fidelity",
    "entangling_power",
    "cartan_factors",
    "cartan_reassemble",
    "gate_from_dynamics",
    "gate_metrics",
]

#: leakage above this marks the report as non-unitary in the computational space
LEAKAGE_FLAG_THRESHOLD = 1e-4

_MAX_ENTANGLING_POWER = 2.0 / 9.0


@dataclass
class GateReport:
    """Phases, the diagonal unitary, and the derived performance metrics."""

    alpha: float
    beta: float
    unitary: np.ndarray
    fidelity_cz: float
    entangling_power: float
    entangling_phase: float
    leakage: float
    flagged_nonunitary: bool = False

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "fidelity_cz": self.fidelity_cz,
            "entangling_power": self.entangling_power,
            "entangling_phase": self.entangling_phase,
            "leakage": self.leakage,
            "flagged_nonunitary": self.flagged_nonunitary,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, **kwargs)


def cz_fidelity(alpha: float, beta: float) -> float:
    """Hilbert-Schmidt fidelity |Tr(U_cz^dag U)|^2 / 16 in closed form.

    Equals (1/8) [3 + 2 cos(alpha) - cos(beta) - 2 cos(alpha - beta)].
    """
    return (
        3.0 + 2.0 * math.cos(alpha) - math.cos(beta) - 2.0 * math.cos(alpha - beta)
    ) / 8.0


def entangling_power(alpha: float, beta: float) -> float:
    """Average output entanglement, (2/9) sin^2((2 alpha - beta)/2); max 2/9."""
    return _MAX_ENTANGLING_POWER * math.sin(0.5 * (2.0 * alpha - beta)) ** 2


def cartan_factors(alpha: float, beta: float):
    """Split the gate into global phase, local z rotations, and zz coupling.

    Returns ``((2 alpha + beta)/4, beta/4, (2 alpha - beta)/4)`` such that
    :func:`cartan_reassemble` reproduces the diagonal unitary. The third
    entry is the entangling phase divided by 4; it vanishes exactly when the
    gate factorizes into single-qubit rotations.
    """
    return (2.0 * alpha + beta) / 4.0, beta / 4.0, (2.0 * alpha - beta) / 4.0


def cartan_reassemble(global_phase: float, local_angle: float,
                      entangling_angle: float) -> np.ndarray:
    """Rebuild the 4x4 unitary from its factors.

    Uses the z convention where ``|1>`` carries eigenvalue +1, so the
    computational |00> element comes out exactly 1.
    """
    z = np.array([-1.0, 1.0])
    z_sum = np.add.outer(z, z).ravel()
    z_prod = np.multiply.outer(z, z).ravel()
    phases = global_phase + local_angle * z_sum - entangling_angle * z_prod
    return np.diag(np.exp(1j * phases))


def assemble(alpha: float, beta: float, leakage: float = 0.0) -> GateReport:
    """Build the diagonal gate for given phases and fill every metric."""
    if not (math.isfinite(alpha) and math.isfinite(beta)):
        raise ValueError(f"phases must be finite, got alpha={alpha}, beta={beta}")
    unitary = np.diag([1.0, np.exp(1j * alpha), np.exp(1j * alpha),
                       np.exp(1j * beta)])
    return GateReport(
        alpha=alpha,
        beta=beta,
        unitary=unitary,
        fidelity_cz=cz_fidelity(alpha, beta),
        entangling_power=entangling_power(alpha, beta),
        entangling_phase=2.0 * alpha - beta,
        leakage=leakage,
        flagged_nonunitary=leakage > LEAKAGE_FLAG_THRESHOLD,
    )


def gate_from_dynamics(s: SystemParams, tol: float = 1e-10) -> GateReport:
    """Assemble the gate realized by the drive, from exact propagation.

    Runs the single- and triple-subspace propagations, extracts the
    unwrapped phases alpha and beta, and reports
    ``leakage = 1 - min(return populations)``.
    """
    single = phase_of(s, HamiltonianKind.SINGLE_ROTATING, 0, tol=tol)
    triple = phase_of(s, HamiltonianKind.TRIPLE_ROTATING, 0, tol=tol)
    leakage = max(
        0.0, 1.0 - min(single.return_population, triple.return_population)
    )
    return assemble(single.phase, triple.phase, leakage=leakage)


def gate_metrics(s: SystemParams, tol: float = 1e-9):
    """Fast (fidelity_cz, entangling_power, leakage) without unwrapping.

    Both metrics depend on the phases only mod 2 pi, so the final amplitudes
    suffice; used by sweeps and noise sampling where the unwrapped values
    are not needed.
    """
    finals = []
    for kind in (HamiltonianKind.SINGLE_ROTATING, HamiltonianKind.TRIPLE_ROTATING):
        finals.append(propagate(s, kind, basis_state(kind, 0), tol=tol).amplitudes[0])
    alpha = float(np.angle(finals[0]))
    beta = float(np.angle(finals[1]))
    leakage = max(0.0, 1.0 - min(abs(finals[0]) ** 2, abs(finals[1]) ** 2))
    return cz_fidelity(alpha, beta), entangling_power(alpha, beta), leakage
