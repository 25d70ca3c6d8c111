import math

import numpy as np
import pytest

from rydgate.analytic import alpha_ae_limit
from rydgate.errors import IntegrationError, ValidationError
from rydgate.model import HamiltonianKind, pulse_area, system
from rydgate.propagator import (
    basis_state,
    phase_of,
    propagate,
    subspace_consistency,
)

SINGLE = HamiltonianKind.SINGLE_ROTATING
TRIPLE = HamiltonianKind.TRIPLE_ROTATING
FULL = HamiltonianKind.FULL_RWA


def _rotating_diag(s, kind):
    we = s.pulse.omega_e
    if kind is SINGLE:
        return np.array([0.0, s.delta - we])
    if kind is TRIPLE:
        return np.array([0.0, s.delta - we, s.v + 2 * s.delta - 2 * we])
    d = s.delta * np.array([0, 0, 1, 0, 0, 1, 1, 1, 2], dtype=float)
    d[8] += s.v
    return d


class TestPropagate:
    @pytest.mark.parametrize("kind", [SINGLE, TRIPLE])
    def test_zero_drive_is_pure_diagonal_phase(self, kind):
        s = system(omega0=0.0, omega_e=4.0, v=17.0, delta=0.3)
        dim = kind.dim
        psi0 = np.ones(dim, dtype=complex) / math.sqrt(dim)
        out = propagate(s, kind, type(basis_state(kind, 0))(psi0, kind))
        span = 2 * s.pulse.window
        expected = np.exp(-1j * _rotating_diag(s, kind) * span) * psi0
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-10)

    def test_zero_drive_full(self):
        s = system(omega0=0.0, omega_e=4.0, v=17.0, delta=0.3)
        out = propagate(s, FULL, basis_state(FULL, 8))
        span = 2 * s.pulse.window
        assert out.amplitudes[8] == pytest.approx(
            np.exp(-1j * (17.0 + 2 * 0.3) * span), abs=1e-8
        )

    def test_rabi_populations(self):
        # at zero modulation the populations follow the envelope area
        s = system(omega0=1.3, omega_e=0.0)
        area = pulse_area(s.pulse)
        out = propagate(s, SINGLE, basis_state(SINGLE, 0))
        pops = out.populations()
        assert pops[0] == pytest.approx(math.cos(area / 2) ** 2, abs=1e-9)
        assert pops[1] == pytest.approx(math.sin(area / 2) ** 2, abs=1e-9)

    def test_design_point_population_return(self):
        s = system(omega0=16.29, omega_e=10.0, v=53.59)
        out = propagate(s, TRIPLE, basis_state(TRIPLE, 0))
        assert out.populations()[0] >= 0.999

    def test_norm_preservation(self):
        rng = np.random.default_rng(3)
        for tol in (1e-6, 1e-8, 1e-10, 1e-12):
            s = system(
                omega0=rng.uniform(1, 20),
                omega_e=rng.uniform(-15, 15),
                v=rng.uniform(0, 60),
            )
            out = propagate(s, TRIPLE, basis_state(TRIPLE, 0), tol=tol)
            assert abs(out.norm() - 1.0) <= 10 * tol

    def test_tolerance_convergence(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            s = system(
                omega0=rng.uniform(1, 18),
                omega_e=rng.uniform(-12, 12),
                v=rng.uniform(0, 50),
            )
            tol = 10 ** rng.uniform(-10, -7)
            coarse = propagate(s, TRIPLE, basis_state(TRIPLE, 0), tol=tol)
            fine = propagate(s, TRIPLE, basis_state(TRIPLE, 0), tol=tol / 2)
            diff = np.max(np.abs(coarse.amplitudes - fine.amplitudes))
            assert diff < tol

    def test_00_is_stationary(self):
        s = system(omega0=14.0, omega_e=9.0, v=40.0, delta=0.7)
        out = propagate(s, FULL, basis_state(FULL, 0))
        assert abs(out.populations()[0] - 1.0) <= 1e-12

    def test_modulation_sign_conjugates_amplitude(self):
        # with delta = 0 the 2x2 problem maps to its complex conjugate
        # under omega_e -> -omega_e
        for om0, we in ((5.0, 8.0), (16.0, 10.0), (2.0, 3.0)):
            plus = propagate(system(omega0=om0, omega_e=we), SINGLE,
                             basis_state(SINGLE, 0))
            minus = propagate(system(omega0=om0, omega_e=-we), SINGLE,
                              basis_state(SINGLE, 0))
            assert minus.amplitudes[0] == pytest.approx(
                np.conj(plus.amplitudes[0]), abs=1e-9
            )

    def test_rejects_bad_tolerance(self):
        s = system(omega0=1.0)
        with pytest.raises(ValidationError):
            propagate(s, SINGLE, basis_state(SINGLE, 0), tol=1e-3)

    def test_rejects_unnormalized_state(self):
        from rydgate.propagator import StateVector

        s = system(omega0=1.0)
        bad = StateVector(np.array([2.0, 0.0], dtype=complex), SINGLE)
        with pytest.raises(ValidationError):
            propagate(s, SINGLE, bad)

    def test_rejects_mismatched_basis(self):
        s = system(omega0=1.0)
        with pytest.raises(ValidationError):
            propagate(s, TRIPLE, basis_state(SINGLE, 0))

    def test_integration_failure_carries_time(self, monkeypatch):
        import rydgate.propagator as prop

        class FailedSol:
            success = False
            message = "step size underflow"
            t = np.array([-4.5, -1.2])

        monkeypatch.setattr(prop, "solve_ivp", lambda *a, **k: FailedSol())
        with pytest.raises(IntegrationError) as err:
            propagate(system(omega0=1.0), SINGLE, basis_state(SINGLE, 0))
        assert err.value.t == pytest.approx(-1.2)


class TestPhaseOf:
    def test_zero_drive(self):
        res = phase_of(system(omega0=0.0, omega_e=5.0), SINGLE)
        assert res.phase == pytest.approx(0.0, abs=1e-10)
        assert res.return_population == pytest.approx(1.0, abs=1e-10)

    def test_paper_design_alpha(self):
        res = phase_of(system(omega0=16.29, omega_e=10.0), SINGLE)
        assert res.phase == pytest.approx(-2 * math.pi, abs=1e-2)
        assert res.unwrap_reliable

    def test_weak_drive_matches_eliminated_state_limit(self):
        s = system(omega0=1.0, omega_e=20.0)
        res = phase_of(s, SINGLE)
        assert res.phase == pytest.approx(alpha_ae_limit(s), rel=1e-2)
        assert res.phase == pytest.approx(-0.01567, rel=1e-2)

    def test_unwrap_flagged_when_amplitude_pinches(self):
        # full population transfer: the tracked amplitude crosses zero
        om0 = math.pi / (math.sqrt(math.pi) * math.erf(4.5))  # area = pi
        res = phase_of(system(omega0=om0, omega_e=0.0), SINGLE)
        assert not res.unwrap_reliable

    def test_trace_output(self, tmp_path):
        res = phase_of(system(omega0=4.0, omega_e=6.0), SINGLE, keep_trace=True)
        assert res.trace is not None
        assert res.trace.amplitudes.shape[1] == 2
        # continuity: no unwrapped jump above pi/2
        assert np.max(np.abs(np.diff(res.trace.unwrapped_phase))) < math.pi / 2
        path = tmp_path / "trace.csv"
        res.trace.to_csv(path)
        header = path.read_text().splitlines()[0].split(",")
        assert header == ["t", "re_a_1", "im_a_1", "re_a_r", "im_a_r",
                          "pop_1", "pop_r", "unwrapped_phase"]


class TestSubspaceConsistency:
    def test_random_parameter_sets(self):
        rng = np.random.default_rng(21)
        for _ in range(4):
            s = system(
                omega0=rng.uniform(1, 18),
                omega_e=rng.uniform(-14, 14),
                v=rng.uniform(0, 70),
                delta=rng.uniform(-2, 2),
            )
            rep = subspace_consistency(s, tol=1e-10)
            assert rep.max_residual <= 1e-8

    def test_zero_drive(self):
        rep = subspace_consistency(system(omega0=0.0, omega_e=5.0, v=30.0))
        assert rep.max_residual <= 1e-12

    def test_no_blockade_phase_doubling(self):
        s = system(omega0=6.0, omega_e=9.0, v=0.0)
        single = phase_of(s, SINGLE)
        triple = phase_of(s, TRIPLE)
        assert triple.phase == pytest.approx(2 * single.phase, abs=1e-6)
