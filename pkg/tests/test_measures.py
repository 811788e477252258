import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from epflow.kernels import shape_by_name, stream_eval
from epflow.measures import (
    VortexSystem,
    diagnostics,
    discretize_patch,
    discretize_sheet,
    hamiltonian,
    point_vortices,
    rankine_patch,
    read_system_csv,
    write_system_csv,
)

TWO_PI = 2 * math.pi


def test_point_vortices_passthrough():
    s = point_vortices([(0, 0)], [TWO_PI])
    assert len(s) == 1 and s.total_circulation == TWO_PI
    assert len(point_vortices([], [])) == 0
    pair = point_vortices([(-0.5, 0), (0.5, 0)], [TWO_PI, TWO_PI])
    assert pair.total_circulation == 2 * TWO_PI


def test_point_vortices_validation():
    with pytest.raises(ValueError):
        point_vortices([(0, 0), (1, 1)], [1.0])
    with pytest.raises(ValueError):
        point_vortices([(0, np.nan)], [1.0])


def test_system_is_immutable():
    s = point_vortices([(0, 0)], [1.0])
    with pytest.raises(ValueError):
        s.positions[0, 0] = 1.0
    with pytest.raises(AttributeError):
        s.label = "x"


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30))
def test_total_circulation_is_plain_sum(gam):
    pos = np.zeros((len(gam), 2))
    assert point_vortices(pos, gam).total_circulation == float(np.sum(np.array(gam)))


def test_unit_square_midpoints():
    s = discretize_patch(lambda x, y: np.ones_like(x), (0, 1, 0, 1), 0.5)
    assert len(s) == 4
    np.testing.assert_array_equal(s.circulations, 0.25)
    assert sorted(map(tuple, s.positions)) == [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]


def test_zero_vorticity_gives_empty_system():
    assert len(discretize_patch(lambda x, y: 0 * x, (-1, 1, -1, 1), 0.1)) == 0


def test_patch_errors():
    with pytest.raises(ValueError):
        discretize_patch(lambda x, y: x, (0, 0, 0, 1), 0.1)
    with pytest.raises(ValueError):
        discretize_patch(lambda x, y: x, (0, 1, 0, 1), 0.0)


def test_patch_drops_negligible_cells():
    s = discretize_patch(lambda x, y: np.where(x < 0.5, 1.0, 1e-16), (0, 1, 0, 1), 0.25)
    assert len(s) == 8


@pytest.mark.parametrize("h", [0.2, 0.1, 0.05, 0.025, 0.0125])
def test_rankine_circulation_within_two_spacings(h):
    assert abs(rankine_patch(1.0, h).total_circulation - math.pi) <= 2 * h


def test_rankine_circulation_first_order():
    hs = np.array([0.2, 0.1, 0.05, 0.025, 0.0125])
    err = np.array([abs(rankine_patch(1.0, h).total_circulation - math.pi) for h in hs])
    order = np.polyfit(np.log(hs), np.log(err), 1)[0]
    assert 0.8 <= order <= 1.2, f"measured order {order:.3f}, errors {err}"


def test_flat_sheet():
    s = discretize_sheet(lambda u: (u, 0 * u), lambda u: np.ones_like(u), 4, (-1, 1))
    np.testing.assert_allclose(s.circulations, 0.5)
    np.testing.assert_allclose(s.positions[:, 0], [-0.75, -0.25, 0.25, 0.75])
    assert len(discretize_sheet(lambda u: (u, u), lambda u: u, 2)) == 2


def test_sheet_midpoint_rule_second_order():
    errs = []
    for n in (16, 32, 64):
        s = discretize_sheet(lambda u: (u, 0 * u), lambda u: u * u, n, (0, 1))
        errs.append(abs(s.total_circulation - 1 / 3))
    assert 3.9 < errs[0] / errs[1] < 4.1 and 3.9 < errs[1] / errs[2] < 4.1
    assert errs[-1] < 1 / 64**2


def test_sheet_errors():
    with pytest.raises(ValueError):
        discretize_sheet(lambda u: (0 * u, 0 * u), lambda u: u, 4)
    with pytest.raises(ValueError):
        discretize_sheet(lambda u: (u, u), lambda u: u, 1)


def test_diagnostics_examples():
    blob1 = shape_by_name("blob", 1.0)
    pair = point_vortices([(0, 0), (1, 0)], [TWO_PI, TWO_PI])
    assert diagnostics(pair, blob1).hamiltonian == pytest.approx(-TWO_PI * math.log(math.sqrt(2)), rel=1e-9)
    assert diagnostics(point_vortices([(3, 4)], [2.0]), blob1).hamiltonian == 0.0
    opp = point_vortices([(0.5, 0), (-0.5, 0)], [TWO_PI, -TWO_PI])
    d = diagnostics(opp, blob1)
    assert (d.impulse_x, d.impulse_y) == pytest.approx((TWO_PI, 0.0))
    assert d.circulation == 0.0
    assert d.angular_impulse == pytest.approx(0.0, abs=1e-15)


def test_exact_hamiltonian_matches_log_formula():
    pos = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 3.0]])
    gam = np.array([1.0, -2.0, 0.5])
    ref = 0.0
    for i in range(3):
        for j in range(3):
            if i != j:
                ref += 0.5 * gam[i] * gam[j] * (-math.log(np.linalg.norm(pos[i] - pos[j])) / TWO_PI)
    assert hamiltonian(pos, gam, shape_by_name("exact")) == pytest.approx(ref, rel=1e-14)


points = st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2)), min_size=2, max_size=12)


@given(points, st.floats(-5, 5), st.floats(-5, 5), st.randoms(use_true_random=False))
def test_hamiltonian_relabel_and_translate(data, tx, ty, rnd):
    shape = shape_by_name("blob", 0.3)
    arr = np.array(data)
    pos, gam = arr[:, :2], arr[:, 2]
    h0 = hamiltonian(pos, gam, shape)
    perm = list(range(len(gam)))
    rnd.shuffle(perm)
    scale = max(1.0, float(np.sum(np.abs(gam))) ** 2)
    assert hamiltonian(pos[perm], gam[perm], shape) == pytest.approx(h0, abs=1e-12 * scale)
    assert hamiltonian(pos + [tx, ty], gam, shape) == pytest.approx(h0, abs=1e-9 * scale)


def test_hamiltonian_uses_stream_function():
    shape = shape_by_name("alpha", 0.7)
    pos = np.array([[0.0, 0.0], [0.4, 0.3]])
    gam = np.array([1.5, -0.5])
    ref = gam[0] * gam[1] * stream_eval(shape, np.array([0.5]))[0]
    assert hamiltonian(pos, gam, shape) == pytest.approx(ref, rel=1e-13)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    s = VortexSystem(rng.normal(size=(20, 2)), rng.normal(size=20), "rand")
    path = tmp_path / "p.csv"
    write_system_csv(s, path)
    assert path.read_text().splitlines()[0] == "x,y,gamma"
    back = read_system_csv(path)
    np.testing.assert_array_equal(back.positions, s.positions)
    np.testing.assert_array_equal(back.circulations, s.circulations)
