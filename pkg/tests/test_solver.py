import math

import numpy as np
import pytest

from bgkfr import kernels, solver
from bgkfr.config import Config
from bgkfr.phase_grid import InvalidArgument, InvalidState
from bgkfr.solver import (
    BGKSolver,
    ConstantTau,
    PowerLawTau,
    SolverError,
    cfl_time_step,
    collision_time_from_knudsen,
    evaluate_collision_time,
    initial_field,
    run,
    setup,
)


def cfg(**kw):
    base = dict(case="pulse", p=3, n_elements=6, t_final=0.05, n_v=12, kn=1e-2)
    base.update(kw)
    return Config(**base)


def uniform_field(disc, state=(1.3, 0.7, 0.9)):
    prims = np.zeros(disc.shape[:2] + (3,))
    prims[...] = state
    return initial_field(disc, prims, 5)


# -- collision time ------------------------------------------------------------

def test_tau_from_knudsen_example():
    tau = collision_time_from_knudsen(1e-2, 3.0, 1.0, math.sqrt(3.0))
    assert tau == pytest.approx(math.sqrt(6 / math.pi) * 1e-2 / math.sqrt(3.0), rel=1e-15)
    assert tau == pytest.approx(7.9788e-3, abs=1e-7)
    assert collision_time_from_knudsen(2e-2, 3.0, 1.0, math.sqrt(3.0)) == pytest.approx(2 * tau)


def test_knudsen_mach_reynolds_relation():
    # Kn = sqrt(gamma pi / 2) M / Re with mu = tau P
    gamma, rho, U, P, L, kn = 1.4, 1.2, 0.8, 0.9, 1.0, 3e-3
    c_s = math.sqrt(gamma * P / rho)
    tau = collision_time_from_knudsen(kn, gamma, L, c_s)
    re = rho * U * L / (tau * P)
    assert math.sqrt(gamma * math.pi / 2) * (U / c_s) / re == pytest.approx(kn, rel=1e-14)


@pytest.mark.parametrize("args", [(0, 1.4, 1, 1), (1e-2, 1.4, -1, 1), (1e-2, 1.4, 1, 0)])
def test_tau_from_knudsen_rejects(args):
    with pytest.raises(InvalidArgument):
        collision_time_from_knudsen(*args)


def test_power_law_examples():
    m = PowerLawTau(0.3, 1.5, 2.0, 0.81)
    assert evaluate_collision_time(m, 1.5, 2.0) == pytest.approx(0.3, rel=1e-15)
    assert evaluate_collision_time(m, 3.0, 4.0) / 0.3 == pytest.approx(0.4383, abs=1e-4)
    m1 = PowerLawTau(0.3, 1.5, 2.0, 1.0)
    np.testing.assert_allclose(evaluate_collision_time(m1, [0.75, 0.75], [1.0, 7.0]), 0.6)


def test_constant_tau_broadcasts():
    np.testing.assert_array_equal(evaluate_collision_time(ConstantTau(0.2), [1.0, 2.0], 1.0),
                                  [0.2, 0.2])


def test_collision_model_validation():
    with pytest.raises(InvalidArgument):
        ConstantTau(0.0)
    with pytest.raises(InvalidArgument):
        PowerLawTau(1.0, 1.0, 1.0, 0.0)
    with pytest.raises(InvalidArgument):
        PowerLawTau(1.0, -1.0, 1.0, 0.5)
    with pytest.raises(InvalidState):
        evaluate_collision_time(ConstantTau(1.0), [1.0, 0.0], 1.0)


def test_cfl_time_step():
    assert cfl_time_step(0.5, 3, 0.01, 10.0) == pytest.approx(7.142857e-5, rel=1e-6)
    assert cfl_time_step(0.5, 3, 0.005, 10.0) == pytest.approx(0.5 * cfl_time_step(0.5, 3, 0.01, 10.0))


def test_time_step_is_min_of_tau_and_cfl():
    prob = setup(cfg(tau=1e-6))
    Q = prob.disc.moments(prob.f0)
    assert prob.solver.time_step(Q) == 1e-6
    prob = setup(cfg(tau=10.0))
    d = prob.disc
    assert prob.solver.time_step(Q) == pytest.approx(
        cfl_time_step(0.5, 3, d.mesh.h_min, d.op.vgrid.r_max + abs(d.op.vgrid.offset[0])))


# -- right-hand side -----------------------------------------------------------

@pytest.mark.parametrize("delta", [0.0, 4.0])
def test_uniform_equilibrium_is_steady(delta):
    # two runtime Newton steps reach round-off only on a resolved grid
    prob = setup(cfg(delta=delta, n_zeta=16 if delta else 1, n_v=32))
    f = uniform_field(prob.disc)
    out = prob.solver.rhs(f)
    assert np.max(np.abs(out)) <= 1e-11 * np.max(np.abs(f))


def test_uniform_equilibrium_holds_for_100_steps():
    prob = setup(cfg(delta=4.0, n_zeta=16, n_v=32))
    d, s = prob.disc, prob.solver
    f = uniform_field(d)
    f0 = f.copy()
    for _ in range(100):
        s.rk4_step(f, s.time_step(d.moments(f)))
    assert np.max(np.abs(f - f0)) <= 1e-12 * np.max(f0)


def test_collisionless_limit_is_pure_transport():
    prob = setup(cfg(tau=1e300))
    d = prob.disc
    f = prob.f0
    out = prob.solver.rhs(f)
    n_e, n_s, n_v, n_z = d.shape
    f3 = f.reshape(n_e, n_s, -1)
    ref = np.empty_like(f3)
    gl, gr = d.bc.ghosts(f3)
    kernels.transport_rhs(f3, d.basis.D, d.basis.gL_deriv, d.basis.gR_deriv, d.rdx, d.u_q,
                          np.ascontiguousarray(gl), np.ascontiguousarray(gr), ref)
    np.testing.assert_allclose(out.reshape(ref.shape), ref, rtol=0, atol=1e-12)


@pytest.mark.parametrize("delta", [0.0, 4.0])
def test_relaxation_source_conserves(delta):
    prob = setup(cfg(delta=delta, n_zeta=8 if delta else 1, n_elements=1, n_v=16))
    d, s = prob.disc, prob.solver
    rng = np.random.default_rng(0)
    f = prob.f0 * rng.uniform(0.5, 1.5, size=prob.f0.shape)
    Q = d.moments(f)
    gu, gz = s.equilibrium_factors(Q)
    src = np.zeros(d.shape)
    n_e, n_s, n_v, n_z = d.shape
    kernels.add_relaxation(f.reshape(n_e, n_s, -1), gu, gz, np.ones(n_e * n_s),
                           src.reshape(n_e, n_s, -1))
    M = d.moments(src)
    assert np.max(np.abs(M)) <= 1e-10 * np.max(np.abs(Q))


def test_standard_mode_is_not_conservative():
    prob = setup(cfg(delta=4.0, n_zeta=8, n_v=8))
    d = prob.disc
    std = BGKSolver(d, prob.solver.model, dvm_enabled=False)
    Q = d.moments(prob.f0)
    gu, gz = std.equilibrium_factors(Q)
    g = (gu[:, :, None] * gz[:, None, :]).reshape(d.shape)
    assert np.max(np.abs(d.moments(g) - Q)) > 1e-8


def test_inadmissible_state_reports_location():
    prob = setup(cfg())
    f = prob.f0.copy()
    f[2] = 0.0
    with pytest.raises(SolverError) as info:
        prob.solver.rhs(f)
    assert info.value.x is not None


def test_zero_field_is_rejected():
    # a vacuum has no temperature, so the collision time is undefined
    prob = setup(cfg())
    with pytest.raises(SolverError):
        prob.solver.rk4_step(np.zeros(prob.disc.shape), 1e-3)


def test_non_finite_field_blows_up():
    prob = setup(cfg())
    f = prob.f0.copy()
    f[0, 0, 0, 0] = np.nan
    with pytest.raises(solver.BlowUpError):
        prob.solver.rhs(f)


def test_rk4_rejects_non_positive_dt():
    prob = setup(cfg())
    with pytest.raises(InvalidArgument):
        prob.solver.rk4_step(prob.f0.copy(), 0.0)


# -- time stepping -----------------------------------------------------------

def test_limiter_runs_before_every_stage():
    prob = setup(cfg())
    s = prob.solver
    f = prob.f0.copy()
    for n in range(1, 4):
        s.rk4_step(f, 1e-3)
        assert s.limiter_calls == 5 * n
        assert s.rhs_calls == 4 * n


def test_rk4_temporal_order():
    # collisionless transport of a smooth profile; the spatial error cancels
    prob = setup(cfg(tau=1e300, p=5, n_elements=8, n_v=16, beta=20.0, dvm=False))
    s = prob.solver
    dt0 = 0.8 * s.time_step(prob.disc.moments(prob.f0))
    t = 16 * dt0

    def advance(dt):
        f = prob.f0.copy()
        for _ in range(int(round(t / dt))):
            s.rk4_step(f, dt)
        return f

    ref = advance(dt0 / 8)
    e1 = np.max(np.abs(advance(dt0) - ref))
    e2 = np.max(np.abs(advance(dt0 / 2) - ref))
    assert math.log2(e1 / e2) == pytest.approx(4.0, abs=0.5)


def test_t_final_zero_gives_one_row():
    res = run(cfg(t_final=0.0))
    assert len(res.rows) == 1 and res.steps == 0
    np.testing.assert_array_equal(res.f, res.problem.f0)


def test_final_step_lands_on_t_final():
    res = run(cfg(t_final=0.0123))
    assert res.t == 0.0123
    assert res.rows[-1][0] == 0.0123


def test_output_interval_rows():
    res = run(cfg(t_final=0.05, output_interval=0.01))
    ts = [r[0] for r in res.rows]
    assert ts[0] == 0.0 and ts[-1] == 0.05
    assert len(ts) == 6


@pytest.mark.parametrize("delta", [0.0, 4.0])
def test_periodic_run_conserves(delta):
    res = run(cfg(delta=delta, n_zeta=16 if delta else 1, n_v=32, t_final=0.1, kn=1e-3))
    first, last = res.rows[0], res.rows[-1]
    assert last[4] <= 1e-10
    assert abs(last[2] - first[2]) <= 1e-10 * abs(first[2])
    assert abs(last[3] - first[3]) <= 1e-10 * abs(first[3])
    assert last[5] >= -1e-13 * np.max(res.f)


def test_steady_tol_stops_early():
    c = cfg(t_final=10.0, steady_tol=1e3)
    res = run(c)
    assert res.stopped_steady and res.t < 10.0 and res.steps == 1


def test_run_is_deterministic():
    a = run(cfg(t_final=0.02))
    b = run(cfg(t_final=0.02))
    assert np.array_equal(a.f, b.f)
    assert a.rows == b.rows


@pytest.mark.skipif("cython" not in kernels.available(), reason="compiled kernels not built")
def test_run_agrees_across_thread_counts():
    a = run(cfg(t_final=0.02, threads=1))
    b = run(cfg(t_final=0.02, threads=3))
    kernels.set_num_threads(0)
    np.testing.assert_allclose(a.f, b.f, rtol=0, atol=1e-12)


def test_backends_agree_on_a_run():
    runs = []
    for name in kernels.available():
        kernels.use_backend(name)
        runs.append(run(cfg(t_final=0.02, delta=4.0, n_zeta=6)).f)
    kernels.use_backend("cython" if "cython" in kernels.available() else "python")
    for f in runs[1:]:
        np.testing.assert_allclose(f, runs[0], rtol=1e-10, atol=1e-13)


def test_specular_wall_with_offset_rejected():
    from bgkfr.fr1d import ConfigurationError

    # the pulse carries a nonzero mean velocity, so the grid is offset
    with pytest.raises(ConfigurationError):
        setup(cfg(bc_left="specular", bc_right="specular"))
