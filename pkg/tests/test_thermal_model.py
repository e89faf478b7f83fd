import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermocovert.thermal_model import (ChipTopology, ConfigurationError, PowerModel,
                                        PowerSchedule, StabilityError, ThermalState, power_of,
                                        simulate, stability_bound, states_at, steady_state, step)


def _euler_loop(topo, state, powers, n, dt=1e-3):
    """Reference integrator: the textbook explicit update written out again."""
    c = topo.capacitances()
    g = topo.conductance()
    u = topo.forcing(powers)
    t = state.vector().copy()
    out = [t.copy()]
    for _ in range(n):
        t = t + dt * (u - g @ t) / c
        out.append(t.copy())
    return np.array(out)


def test_conductance_is_symmetric_and_positive_definite(topo):
    g = topo.conductance()
    assert np.allclose(g, g.T)
    assert np.all(np.linalg.eigvalsh(g) > 0)
    # rows of the die block sum to zero apart from the spreader leg
    assert np.allclose(g.sum(axis=1)[:-1], 0.0)
    assert g.sum() == pytest.approx(1.0 / topo.r_spreader_to_ambient)


def test_power_of_idle_and_full(model):
    assert power_of(0.0, 2.9, model) == pytest.approx(model.p_idle)
    assert power_of(1.0, 2.9, model) == pytest.approx(model.p_idle + model.p_active)
    assert power_of(1.0, 2.4, model) < power_of(1.0, 2.9, model)
    with pytest.raises(ConfigurationError):
        power_of(1.0, 3.3, model)
    with pytest.raises(ConfigurationError):
        power_of(1.5, 2.9, model)


def test_step_fixed_point_at_ambient(topo):
    zero_ambient = ChipTopology(ambient_temp=0.0)
    s0 = ThermalState.uniform(zero_ambient, 0.0)
    s1 = step(s0, zero_ambient, np.zeros(8), 1e-3)
    assert np.array_equal(s1.vector(), s0.vector())
    s0 = ThermalState.uniform(topo)
    assert np.allclose(step(s0, topo, np.zeros(8), 1e-3).vector(), s0.vector())


def test_heated_core_rises_first_step(topo):
    s0 = ThermalState.uniform(topo)
    p = np.zeros(8)
    p[3] = 10.0
    s1 = step(s0, topo, p, 1e-3)
    assert s1.die_temps[3] > s0.die_temps[3]
    assert s1.time == pytest.approx(1e-3)


def test_step_rejects_unstable_dt(topo):
    bound = stability_bound(topo)
    with pytest.raises(StabilityError, match="stability bound"):
        step(ThermalState.uniform(topo), topo, np.zeros(8), 1.01 * bound)
    with pytest.raises(StabilityError):
        simulate(topo, PowerSchedule.constant(np.zeros(8)), 1.0, dt=1.01 * bound)


def test_simulate_matches_step_by_step(topo, model):
    p0 = np.full(8, model.p_idle)
    p1 = p0.copy()
    p1[3] = power_of(1.0, 2.9, model)
    sched = PowerSchedule([0.0, 0.05, 0.12], [p1, p0, p1])
    start = steady_state(topo, p0)
    tr = simulate(topo, sched, 0.2, initial=start)
    s, ref = start, [start.vector()]
    for k in range(200):
        s = step(s, topo, sched.power_at(k * 1e-3 + 1e-9), 1e-3)
        ref.append(s.vector())
    assert np.allclose(np.column_stack([tr.die, tr.spreader]), ref, atol=1e-9)
    assert tr.times[-1] == pytest.approx(0.2)


def test_states_at_agrees_with_loop(topo):
    p = np.zeros(8)
    p[2] = 12.0
    s0 = ThermalState.uniform(topo)
    ref = _euler_loop(topo, s0, p, 40)
    got = states_at(topo, s0, p, [0, 7, 40])
    assert np.allclose(got, ref[[0, 7, 40]], atol=1e-9)


def test_zero_power_from_ambient_is_flat():
    topo = ChipTopology()
    tr = simulate(topo, PowerSchedule.constant(np.zeros(8)), 2.0)
    assert np.allclose(tr.die, topo.ambient_temp)
    assert np.allclose(tr.spreader, topo.ambient_temp)


def test_zero_power_steady_state_is_ambient(topo):
    s = steady_state(topo, np.zeros(8))
    assert np.allclose(s.vector(), topo.ambient_temp)


def test_mirror_symmetry_around_heated_core():
    # core 3 of a 7-core chain sits in the middle; with no hotspot offset
    # the network is mirror symmetric about it
    topo = ChipTopology(n_cores=7)
    p = np.zeros(7)
    p[3] = 10.0
    tr = simulate(topo, PowerSchedule.constant(p), 0.5)
    assert np.allclose(tr.core(2), tr.core(4), atol=1e-12)
    assert np.allclose(tr.core(1), tr.core(5), atol=1e-12)


def test_symmetric_neighbours_on_eight_cores(topo):
    # on 8 cores the chain is not symmetric about core 3, but the nearest
    # neighbours only differ through the far ends of the chain
    p = np.zeros(8)
    p[3] = 10.0
    tr = simulate(topo, PowerSchedule.constant(p), 0.5)
    assert np.max(np.abs(tr.core(2) - tr.core(4))) < 0.05


def test_simulate_converges_to_steady_state():
    # small spreader so the horizon is short in simulated time
    topo = ChipTopology(spreader_capacitance=0.5)
    p = np.full(8, 3.0)
    p[5] = 9.0
    tr = simulate(topo, PowerSchedule.constant(p), 30.0)
    assert np.allclose(tr.final_state().vector(), steady_state(topo, p).vector(), atol=1e-6)


def test_steady_state_matches_hand_solution_two_nodes():
    # one core + spreader: T_s = T_a + P R_a, T_c = T_s + P R_d
    topo = ChipTopology(n_cores=1, r_die_to_spreader=0.7, r_spreader_to_ambient=0.3,
                        ambient_temp=20.0)
    s = steady_state(topo, [5.0])
    assert s.spreader_temp == pytest.approx(21.5)
    assert s.die_temps[0] == pytest.approx(25.0)


def test_hotspot_offset_breaks_symmetry():
    topo = ChipTopology(n_cores=7, hotspot_offset=0.3)
    p = np.zeros(7)
    p[3] = 10.0
    s = steady_state(topo, p)
    assert s.die_temps[4] > s.die_temps[2]
    with pytest.raises(ConfigurationError):
        ChipTopology(hotspot_offset=1.0)


@pytest.mark.parametrize("kw", [dict(n_cores=0), dict(core_capacitance=0.0),
                                dict(r_lateral=-1.0)])
def test_topology_validation(kw):
    with pytest.raises(ConfigurationError):
        ChipTopology(**kw)


def test_schedule_validation():
    with pytest.raises(ConfigurationError):
        PowerSchedule([0.5], [np.zeros(8)])
    with pytest.raises(ConfigurationError):
        PowerSchedule([0.0, 0.0], [np.zeros(8), np.zeros(8)])
    with pytest.raises(ConfigurationError):
        PowerSchedule([0.0], [-np.ones(8)])
    with pytest.raises(ConfigurationError):
        PowerModel(p_active=0.0)


def test_calibrated_saturation_near_target(topo, model):
    p = np.full(8, model.p_idle)
    p[3] = power_of(1.0, 2.9, model)
    assert steady_state(topo, p).die_temps[3] == pytest.approx(43.0, abs=1.0)


def test_steady_hop_deltas_decrease(topo, model):
    idle = np.full(8, model.p_idle)
    hot = idle.copy()
    hot[3] = power_of(1.0, 2.9, model)
    d = steady_state(topo, hot).die_temps - steady_state(topo, idle).die_temps
    assert d[2] > d[1] > d[0] > 0


def test_trace_csv(tmp_path, topo):
    tr = simulate(topo, PowerSchedule.constant(np.zeros(8)), 0.01)
    path = tmp_path / "t.csv"
    tr.to_csv(path, cores=[3], every=5)
    lines = path.read_text().splitlines()
    assert lines[0] == "time_s,core_id,temp_c"
    assert lines[1] == "0.000000,3,22.000000"
    assert len(lines) == 1 + 3


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.0, 20.0), min_size=8, max_size=8),
       st.integers(0, 7), st.floats(0.1, 15.0))
def test_more_power_never_cools(base, core, extra):
    """Adding power anywhere cannot lower any node at any time.

    Holds because the Euler map has a non-negative matrix while dt is
    below the monotone bound, which the calibrated network satisfies.
    """
    topo = ChipTopology()
    p0 = np.asarray(base)
    p1 = p0.copy()
    p1[core] += extra
    a = simulate(topo, PowerSchedule.constant(p0), 0.05)
    b = simulate(topo, PowerSchedule.constant(p1), 0.05)
    assert np.all(b.die >= a.die - 1e-9)
    assert np.all(b.spreader >= a.spreader - 1e-9)
