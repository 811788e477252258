import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from epflow.backend import CollisionError
from epflow.dynamics import (
    axisymmetric_reference,
    convergence_experiment,
    evolve,
    fitted_order,
    induced_velocity,
    json_line,
    passive_tracers,
    sample_times,
    step_count,
    tracer_ring,
)
from epflow.kernels import kernel_eval, shape_by_name
from epflow.measures import point_vortices, rankine_patch

TWO_PI = 2 * math.pi
PAIR = point_vortices([(-0.5, 0.0), (0.5, 0.0)], [TWO_PI, TWO_PI])


def test_velocity_examples():
    one = point_vortices([(0, 0)], [TWO_PI])
    np.testing.assert_allclose(induced_velocity(one, [(1, 0)], shape_by_name("exact")), [[0, 1]], atol=1e-15)
    np.testing.assert_allclose(induced_velocity(one, [(1, 0)], shape_by_name("blob", 1.0)), [[0, 0.5]], atol=1e-10)
    u = induced_velocity(PAIR, PAIR.positions, shape_by_name("blob", 0.5), skip_self=True)
    assert np.hypot(*u[1]) == pytest.approx(0.8, rel=1e-9)


def test_velocity_matches_direct_kernel_sum():
    rng = np.random.default_rng(1)
    src = point_vortices(rng.normal(size=(40, 2)), rng.normal(size=40))
    tgt = rng.normal(size=(15, 2))
    shape = shape_by_name("alpha", 0.4)
    ref = sum(g * kernel_eval(shape, tgt - x) for x, g in zip(src.positions, src.circulations))
    np.testing.assert_allclose(induced_velocity(src, tgt, shape), ref, rtol=1e-12, atol=1e-14)


def test_exact_collision_is_an_error():
    s = point_vortices([(0, 0), (0, 0)], [1.0, 1.0])
    with pytest.raises(CollisionError):
        induced_velocity(s, s.positions, shape_by_name("exact"), skip_self=True)
    # regularised kernels are fine at zero separation
    u = induced_velocity(s, s.positions, shape_by_name("blob", 0.1), skip_self=True)
    np.testing.assert_array_equal(u, 0.0)


systems = st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-3, 3)), min_size=2, max_size=25)


@given(systems, st.sampled_from(["blob", "alpha", "exact"]))
def test_impulse_and_angular_impulse_rates_vanish(data, name):
    arr = np.array(data)
    pos, gam = arr[:, :2], arr[:, 2]
    d = np.linalg.norm(pos[:, None] - pos[None], axis=-1) + np.eye(len(gam))
    if name == "exact" and d.min() < 1e-3:
        return
    shape = shape_by_name(name, 0.2)
    u = induced_velocity(point_vortices(pos, gam), pos, shape, skip_self=True)
    kmax = 1.0 / (TWO_PI * max(d.min(), 0.2 * 0.1))
    tol = 1e-12 * max(float(np.sum(gam * gam)) * kmax, 1e-300) * 10
    assert np.all(np.abs(gam @ u) <= tol)
    assert abs(np.sum(gam * np.einsum("ij,ij->i", pos, u))) <= tol * (1 + np.abs(pos).max())


def test_step_count_lands_on_end():
    assert step_count(1.0, 0.3) == (4, 0.25)
    n, h = step_count(math.pi, 1e-3)
    assert n * h == pytest.approx(math.pi, rel=1e-15)
    with pytest.raises(ValueError):
        step_count(1.0, 0.0)
    assert sample_times(1.0, 0.1, 3)[-1] == 1.0


def test_single_vortex_stationary():
    s = point_vortices([(0.3, -0.2)], [5.0])
    tr = evolve(s, shape_by_name("blob", 0.2), 1.0, 0.1)
    np.testing.assert_array_equal(tr.states[-1], s.positions)


@pytest.mark.parametrize("name, eps, period", [("exact", 1.0, math.pi), ("blob", 0.5, 5 * math.pi / 4)])
def test_pair_period(name, eps, period):
    tr = evolve(PAIR, shape_by_name(name, eps), period, 1e-3, sample_every=500)
    assert np.max(np.abs(tr.final - tr.states[0])) <= 1e-6
    assert tr.times[-1] == period
    assert np.all(np.diff(tr.times) > 0)


def test_conservation_along_pair_orbit():
    tr = evolve(PAIR, shape_by_name("blob", 0.5), 5 * math.pi / 4, 1e-3, sample_every=250)
    d0 = tr.diagnostics[0]
    for d in tr.diagnostics:
        assert d.circulation == d0.circulation
        assert abs(d.impulse_x - d0.impulse_x) < 1e-10 and abs(d.impulse_y - d0.impulse_y) < 1e-10
        assert abs(d.angular_impulse - d0.angular_impulse) < 1e-10
    np.testing.assert_array_equal(tr.system.circulations, PAIR.circulations)


def test_hamiltonian_drift_ratio_under_dt_halving():
    shape = shape_by_name("exact")
    drift = []
    for dt in (0.02, 0.01):
        tr = evolve(PAIR, shape, math.pi, dt, sample_every=10**6)
        drift.append(abs(tr.diagnostics[-1].hamiltonian - tr.diagnostics[0].hamiltonian))
    assert 8.0 <= drift[0] / drift[1] <= 32.0


def test_rotationally_symmetric_set_keeps_radii():
    # a centre vortex and a ring rotate rigidly
    ring = tracer_ring(0.5, 12)
    s = point_vortices(np.vstack([[0.0, 0.0], ring]), np.ones(13))
    tr = evolve(s, shape_by_name("blob", 0.1), 1.0, 1e-3, sample_every=100, with_diagnostics=False)
    r0 = np.linalg.norm(s.positions, axis=1)
    assert np.max(np.abs(np.linalg.norm(tr.states, axis=2) - r0)) < 1e-8


def test_tracer_orbit_around_point_vortex():
    one = point_vortices([(0, 0)], [TWO_PI])
    tr = passive_tracers(one, [(2.0, 0.0)], shape_by_name("exact"), 8 * math.pi, 0.01, sample_every=10**6)
    assert np.max(np.abs(tr.final[1] - [2.0, 0.0])) < 1e-6
    np.testing.assert_array_equal(tr.final[0], [0.0, 0.0])
    assert tr.n_sources == 1 and tr.system.circulations[1] == 0.0


def test_tracer_on_symmetry_axis():
    tr = passive_tracers(PAIR, [(0.0, 0.0)], shape_by_name("blob", 0.5), 1.0, 0.01)
    assert np.max(np.abs(tr.states[:, 2, :])) < 1e-12


def test_far_tracer_barely_moves():
    tr = passive_tracers(PAIR, [(1e6, 0.0)], shape_by_name("blob", 0.5), 1.0, 0.1)
    assert np.linalg.norm(tr.final[2] - [1e6, 0.0]) < 1e-5


def test_tracers_do_not_move_sources():
    shape = shape_by_name("blob", 0.5)
    a = evolve(PAIR, shape, 1.0, 0.01, with_diagnostics=False)
    b = passive_tracers(PAIR, [(0.1, 0.2), (3.0, 1.0)], shape, 1.0, 0.01)
    np.testing.assert_array_equal(a.states, b.states[:, :2])


def test_axisymmetric_reference_rotation():
    one = point_vortices([(0, 0)], [TWO_PI])
    ref = axisymmetric_reference(one, [(2.0, 0.0)], [0.0, 4 * math.pi])
    np.testing.assert_allclose(ref[-1, 0], [-2.0, 0.0], atol=1e-12)


def test_fitted_order():
    assert fitted_order([0.4, 0.2, 0.1], [0.16, 0.04, 0.01]) == pytest.approx(2.0)


def test_convergence_small():
    patch = rankine_patch(1.0, 0.25)
    rep = convergence_experiment(patch, shape_by_name("blob"), [0.4, 0.2], 0.5, 0.05, tracer_ring(2.0, 8))
    assert rep.monotone and rep.order > math.exp(-0.5)
    assert all(r.dt_sensitivity < 0.01 for r in rep.rows)
    assert rep.rate_floor == pytest.approx(math.exp(-0.5))
    with pytest.raises(ValueError):
        convergence_experiment(patch, shape_by_name("blob"), [0.1, 0.2], 0.5, 0.05, tracer_ring(2.0, 8))


@pytest.mark.parametrize("reference", ["exact", "richardson"])
def test_convergence_other_references(reference):
    patch = rankine_patch(1.0, 0.25)
    rep = convergence_experiment(patch, shape_by_name("blob"), [0.4, 0.2], 0.5, 0.05, tracer_ring(2.0, 8),
                                 reference=reference, check_dt=False)
    assert rep.monotone and rep.rows[0].error_half_dt is None


def test_convergence_reports_spacing_separately():
    coarse, fine = rankine_patch(1.0, 0.25), rankine_patch(1.0, 0.125)
    rep = convergence_experiment(coarse, shape_by_name("blob"), [0.4, 0.2], 0.5, 0.05, tracer_ring(2.0, 8),
                                 check_dt=False, refined=fine)
    for row in rep.rows:
        assert row.error_half_spacing is not None and row.error_half_spacing > 0
        assert row.spacing_sensitivity == pytest.approx(abs(row.error_half_spacing - row.error) / row.error)
    assert rep.to_dict()["rows"][0]["spacing_sensitivity"] == rep.rows[0].spacing_sensitivity


def test_output_formats():
    tr = evolve(PAIR, shape_by_name("blob", 0.5), 0.01, 0.005)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,particle_id,x,y" and len(lines) == 1 + 3 * 2
    x = float(lines[-1].split(",")[2])
    assert x == tr.final[1, 0]
    rec = tr.diagnostics_jsonl().splitlines()[0]
    assert set(eval(rec.replace("true", "True"))) == {"t", "circulation", "impulse_x", "impulse_y",
                                                      "angular_impulse", "hamiltonian"}
    assert json_line({"a": 0.1}) == '{"a": 0.10000000000000001}'
