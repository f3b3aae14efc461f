import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavcool import dynamics
from cavcool.dynamics import (
    IntegrationError,
    IntegratorSettings,
    LindbladContext,
    SteadyStateCriterion,
    density_checks,
    dissipators,
    evolve,
    lindblad_rhs,
    make_context,
    steady_state_reach,
)
from cavcool.experiments import ground_vectors, pure, random_density_matrix
from cavcool.hilbert import build_space
from cavcool.model import SystemParams, bare_energies, h_rotating

WORKING = SystemParams()
SPACE = build_space(1, 1)
# no coupling and no drive: the rotating-frame Hamiltonian vanishes
FREE = SystemParams(J=0.0, g=0.0, omega=(0, 0, 0), kappa=0.1, gamma=0.2)


def reference_rhs(h, channels, rho):
    """Term-by-term master equation with dense matrices."""
    out = -1j * (h @ rho - rho @ h)
    for c in channels:
        L = c.operator
        LdL = L.conj().T @ L
        out += c.rate * (L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL))
    return out


def test_six_channels():
    ch = dissipators(SPACE, WORKING)
    assert len(ch) == 6
    assert sorted(c.rate for c in ch) == [0.1, 0.1, 0.1, 0.1, 0.1, 0.1]


def test_negative_rate_rejected():
    with pytest.raises(ValueError):
        dynamics.CollapseChannel(np.eye(2), -1.0)


def test_atomic_decay_is_exponential():
    ctx = make_context(SPACE, FREE)
    i = SPACE.index("20,00")
    traj = evolve(pure(SPACE.ket("20,00")), 10.0, 1.0, ctx)
    p = traj.states[:, i, i].real
    np.testing.assert_allclose(p, np.exp(-0.2 * traj.times), atol=1e-8)
    # the two branches share the decay equally
    j, k = SPACE.index("00,00"), SPACE.index("10,00")
    assert traj.final[j, j].real == pytest.approx(traj.final[k, k].real, abs=1e-10)


def test_cavity_decay_is_exponential():
    ctx = make_context(SPACE, FREE)
    i = SPACE.index("00,10")
    traj = evolve(pure(SPACE.ket("00,10")), 20.0, 2.0, ctx)
    np.testing.assert_allclose(traj.states[:, i, i].real, np.exp(-0.1 * traj.times), atol=1e-6)


@pytest.mark.parametrize("t", [0.0, 3.3, 101.7])
def test_rhs_matches_reference(t):
    space = build_space(2, 2)
    ctx = make_context(space, WORKING)
    rho = random_density_matrix(space.dim, 7)
    expected = reference_rhs(h_rotating(space, WORKING, t), dissipators(space, WORKING), rho)
    np.testing.assert_allclose(lindblad_rhs(rho, t, ctx), expected, atol=1e-13)


def test_generic_hamiltonian_path():
    ham = lambda t: h_rotating(SPACE, WORKING, t)  # noqa: E731
    generic = LindbladContext(ham, dissipators(SPACE, WORKING))
    fast = make_context(SPACE, WORKING)
    rho = random_density_matrix(SPACE.dim, 1)
    for t in (0.0, 2.5, 40.0):
        np.testing.assert_allclose(generic.rhs(t, rho), fast.rhs(t, rho), atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1000))
def test_rhs_traceless_and_hermitian(seed, t):
    ctx = make_context(SPACE, WORKING)
    out = lindblad_rhs(random_density_matrix(SPACE.dim, seed), t, ctx)
    assert abs(np.trace(out)) < 1e-14
    assert np.max(np.abs(out - out.conj().T)) < 1e-14


def test_vacuum_and_target_are_dark_without_drive():
    p = WORKING.replace(omega=(0, 0, 0))
    ctx = make_context(SPACE, p)
    v = ground_vectors(SPACE)
    for key in ("00", "T"):
        assert np.max(np.abs(lindblad_rhs(pure(v[key]), 1.0, ctx))) == 0


def test_shape_mismatch():
    ctx = make_context(SPACE, WORKING)
    with pytest.raises(ValueError):
        lindblad_rhs(np.eye(4), 0.0, ctx)
    with pytest.raises(ValueError):
        evolve(np.eye(4) / 4, 1.0, 0.5, ctx)
    with pytest.raises(ValueError):
        make_context(SPACE, WORKING, frame="dressed")


def test_sample_grid_includes_end():
    ctx = make_context(SPACE, FREE)
    traj = evolve(pure(SPACE.ket("00,00")), 2.5, 1.0, ctx)
    np.testing.assert_allclose(traj.times, [0, 1, 2, 2.5])


def test_density_checks():
    rho = random_density_matrix(5, 0)
    chk = density_checks(rho)
    assert chk["trace_error"] < 1e-14 and chk["hermiticity_defect"] < 1e-15 and chk["min_eigenvalue"] > 0


def test_lab_and_rotating_frames_agree():
    ctx_rot = make_context(SPACE, WORKING, "rotating")
    ctx_lab = make_context(SPACE, WORKING, "lab")
    rho0 = pure(ground_vectors(SPACE)["00"])
    fine = IntegratorSettings(1e-10, 1e-12)
    t = 5.0
    rot = evolve(rho0, t, t, ctx_rot, fine).final
    lab = evolve(rho0, t, t, ctx_lab, fine).final
    # rho_rot = U^dag rho_lab U with U = exp(-i H_0 t); populations are frame-independent
    u = np.exp(-1j * bare_energies(SPACE, WORKING) * t)
    np.testing.assert_allclose(np.diag(rot).real, np.diag(lab).real, atol=1e-7)
    np.testing.assert_allclose(rot, u.conj()[:, None] * lab * u[None, :], atol=1e-7)


def test_integration_failure(monkeypatch):
    class Failed:
        status = -1
        message = "Required step size is less than spacing between numbers."
        t = np.array([0.0, 12.5])

    monkeypatch.setattr(dynamics, "solve_ivp", lambda *a, **k: Failed())
    with pytest.raises(IntegrationError) as err:
        evolve(pure(SPACE.ket("00,00")), 20.0, 1.0, make_context(SPACE, WORKING))
    assert err.value.time == 12.5


def test_halved_settings():
    s = IntegratorSettings().halved()
    assert (s.rel_tol, s.abs_tol) == (5e-9, 5e-11)


def test_steady_state_immediate():
    ctx = make_context(SPACE, WORKING.replace(omega=(0, 0, 0)))
    v = ground_vectors(SPACE)
    res = steady_state_reach(pure(v["T"]), ctx, list(v.values()))
    assert res.converged and res.time == 0.0 and res.rhs_norm == 0


def test_steady_state_from_decay():
    ctx = make_context(SPACE, FREE)
    v = ground_vectors(SPACE)
    crit = SteadyStateCriterion(eps=1e-6, window=50, t_cap=2000, chunk=50)
    res = steady_state_reach(pure(SPACE.ket("20,00")), ctx, list(v.values()), crit)
    assert res.converged
    assert res.drift <= 1e-6
    # the decay splits evenly between |00,00> and |10,00>
    i, j = SPACE.index("00,00"), SPACE.index("10,00")
    assert res.state[i, i].real == pytest.approx(0.5, abs=1e-5)
    assert res.state[j, j].real == pytest.approx(0.5, abs=1e-5)


def test_steady_state_gives_up():
    ctx = make_context(SPACE, FREE)
    v = ground_vectors(SPACE)
    crit = SteadyStateCriterion(eps=1e-12, window=10, t_cap=30, chunk=10)
    res = steady_state_reach(pure(SPACE.ket("20,00")), ctx, list(v.values()), crit)
    assert not res.converged and res.time == pytest.approx(30)
