import numpy as np
import pytest

from helpers import KER1, P0, square_grid
from memwave.model import ModalState, TabulatedKernel
from memwave.spectral import modal_generator
from memwave.timedomain import (
    ExponentialPolyHistory,
    HistoryTerm,
    ZeroHistory,
    energy_trace,
    evolve_general_kernel,
    exact_modal_evolve,
    history_mass,
    history_sq_mass,
    marginal_data_amplitudes,
    marginal_initial_data,
    memory_energy_closed_form,
    memory_energy_quadrature,
    single_mode_data,
)

DELTA = KER1.delta


def evolve(k=1, grid=None, v=1.0, u=0.0, p=0.0, q=0.0, history=ZeroHistory(), params=P0):
    grid = grid or square_grid(4)
    return exact_modal_evolve(ModalState(k, v, u, p, q), params, DELTA, grid, history)


def test_zero_initial_data_stays_zero():
    traj = evolve(v=0.0)
    states = traj.state_at(np.linspace(0, 5, 7))
    assert np.max(np.abs(states)) == 0.0


def test_initial_state_reconstruction():
    traj = evolve(v=1.0, u=0.3j, p=-0.2, q=0.75)
    x0 = traj.state_at(0.0)
    assert np.max(np.abs(x0 - traj.x0)) <= 1e-10


def test_trajectory_satisfies_reduced_system():
    traj = evolve(v=1.0, u=0.5)
    gen = modal_generator(1, P0, DELTA, square_grid(4))
    h = 1e-5
    for t in (0.5, 1.7):
        derivative = (traj.state_at(t + h) - traj.state_at(t - h)) / (2 * h)
        rhs = gen @ traj.state_at(t)
        assert np.max(np.abs(derivative - rhs)) <= 1e-6 * max(1.0, np.max(np.abs(rhs)))


def test_superposition_linearity():
    grid = square_grid(4)
    t = np.linspace(0, 3, 11)
    a_part = evolve(v=1.0, q=0.2)
    b_part = evolve(v=0.0, u=1.0j, p=0.5)
    combined = exact_modal_evolve(
        ModalState(1, 2.0 * 1.0, 3.0 * 1.0j, 3.0 * 0.5, 2.0 * 0.2), P0, DELTA, grid
    )
    mix = 2.0 * a_part.state_at(t) + 3.0 * b_part.state_at(t)
    assert np.max(np.abs(combined.state_at(t) - mix)) <= 1e-10 * np.max(np.abs(mix) + 1)


def test_mode_energy_decay_rate_matches_slowest_eigenvalue():
    traj = evolve()
    rate = max(lam.real for lam in traj.eigenvalues)
    times = np.linspace(100.0, 200.0, 400)
    trace = energy_trace([traj], P0, KER1, times)
    slope = np.polyfit(times, np.log(trace.total), 1)[0]
    assert slope == pytest.approx(2.0 * rate, rel=0.01)


def test_memory_energy_initial_value():
    traj = evolve()
    assert memory_energy_closed_form(traj, 0.0, P0) == pytest.approx(1.0, rel=1e-12)


def test_memory_energy_vanishes_eventually():
    traj = evolve()
    assert memory_energy_closed_form(traj, 400.0, P0) <= 1e-8


def test_memory_energy_matches_quadrature():
    traj = evolve(v=1.0, u=-0.3, p=0.2j)
    for t in (0.5, 1.0, 3.0):
        closed = float(memory_energy_closed_form(traj, t, P0))
        quad = memory_energy_quadrature(traj, t, P0, n=200)
        assert closed == pytest.approx(quad, abs=1e-8 * max(1.0, closed))


def test_history_moments_closed_form():
    h = ExponentialPolyHistory((HistoryTerm(1.0, 1, 2.0),))
    assert history_mass(h, 1.0) == pytest.approx(1.0 / 9.0, rel=1e-14)
    assert history_sq_mass(h, 1.0) == pytest.approx(2.0 / 125.0, rel=1e-14)


def test_history_enters_through_initial_convolution():
    h = ExponentialPolyHistory((HistoryTerm(0.8, 0, 1.5),))
    traj = evolve(history=h)
    assert traj.x0[4] == pytest.approx(0.8 / 2.5, rel=1e-14)
    for t in (0.0, 0.7):
        closed = float(memory_energy_closed_form(traj, t, P0))
        quad = memory_energy_quadrature(traj, t, P0, n=300)
        assert closed == pytest.approx(quad, abs=1e-8 * max(1.0, closed))


def test_trace_monotone_and_split_consistent():
    grid = square_grid(6)
    trajs = [
        exact_modal_evolve(st, P0, DELTA, grid)
        for st in (ModalState(1, 1.0, 0.0, 0.0, 0.0), ModalState(3, 0.2, 0.1, 0.0, -0.3))
    ]
    times = np.linspace(0.0, 20.0, 201)
    trace = energy_trace(trajs, P0, KER1, times)
    assert np.all(np.diff(trace.total) <= 1e-9 * trace.total[0])
    recomputed = (
        trace.stiffness + trace.kinetic_v + trace.coupling + trace.kinetic_p + trace.memory
    )
    assert trace.total == pytest.approx(recomputed)


def test_dissipation_residual_zero_state():
    traj = evolve(v=0.0)
    trace = energy_trace([traj], P0, KER1, np.linspace(1.0, 1.01, 5))
    assert np.all(trace.residual[1:-1] == 0.0)


def test_dissipation_identity_residual():
    traj = evolve()
    times = 1.0 + 1e-4 * np.arange(-5, 6)
    trace = energy_trace([traj], P0, KER1, times)
    e0 = energy_trace([traj], P0, KER1, np.array([0.0, 1e-4, 2e-4])).total[0] / 2.0
    assert trace.residual[5] <= 1e-6 * e0


def test_dissipation_residual_second_order_in_step():
    traj = evolve(v=1.0, u=0.4)
    ratios = []
    for dt in (2e-3, 1e-3, 5e-4):
        times = 1.0 + dt * np.arange(-1, 2)
        trace = energy_trace([traj], P0, KER1, times)
        ratios.append(trace.residual[1])
    assert ratios[1] / ratios[0] == pytest.approx(0.25, abs=0.15)
    assert ratios[2] / ratios[1] == pytest.approx(0.25, abs=0.15)


def test_general_kernel_matches_exact_evolution():
    s = np.arange(0.0, 14.0 + 1e-12, 5e-4)
    tab = TabulatedKernel(s=s, g_values=np.exp(-s), k0=1.0, k1=1.0)
    grid = square_grid(3)
    state = single_mode_data(1)
    trace_g = evolve_general_kernel(state, P0, tab, grid, T=10.0, dt=1e-3, sample_every=100)
    traj = exact_modal_evolve(state, P0, DELTA, grid)
    trace_e = energy_trace([traj], P0, KER1, trace_g.times)
    rel = np.abs(trace_g.total - trace_e.total) / trace_e.total
    assert np.max(rel) <= 1e-4
    assert np.all(np.diff(trace_g.total) <= 1e-9 * trace_g.total[0])


def test_general_kernel_beyond_exponential():
    s = np.arange(0.0, 14.0 + 1e-12, 1e-3)
    g = np.exp(-s) * (1.0 + 0.2 * np.exp(-s))
    tab = TabulatedKernel(s=s, g_values=g, k0=1.17, k1=0.999)
    grid = square_grid(3)
    trace = evolve_general_kernel(single_mode_data(1), P0, tab, grid, T=6.0, dt=1e-3, sample_every=50)
    assert np.all(np.diff(trace.total) <= 1e-9 * trace.total[0])
    assert np.nanmax(trace.residual[1:-1]) <= 1e-3 * trace.total[0]


def test_general_kernel_aborts_on_increasing_table():
    s = np.linspace(0.0, 5.0, 500)
    g = np.exp(-s)
    g[100] = g[99] * 1.01
    tab = TabulatedKernel(s=s, g_values=g, k0=2.0, k1=0.1)
    with pytest.raises(Exception):
        evolve_general_kernel(single_mode_data(1), P0, tab, square_grid(2), T=2.0, dt=1e-2)


def test_dense_fallback_matches_expansion():
    import dataclasses

    traj = evolve(v=1.0, u=0.2)
    dense = dataclasses.replace(traj, dense=True, amplitudes=None, eigvecs=None)
    for t in (0.0, 0.9, 2.5):
        assert dense.state_at(t) == pytest.approx(traj.state_at(t), abs=1e-10)


def test_marginal_family_amplitudes():
    grid = square_grid(50)
    amps = marginal_data_amplitudes(grid, 50)
    k = np.arange(1, 51)
    assert amps == pytest.approx(k**-2.51)
    states = marginal_initial_data(grid, 50)
    assert states[0].v == pytest.approx(1.0)
    assert all(st.u == 0.0 and st.p == 0.0 and st.q == 0.0 for st in states)
