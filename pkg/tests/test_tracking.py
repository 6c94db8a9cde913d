import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eplab.errors import TrackingError
from eplab.model import ParameterPath, ParameterPoint, hamiltonian_stack, spec_from_arrays
from eplab.spectral import eigendecompose_stack
from eplab.tracking import (
    Crossing,
    assign,
    classify_crossing,
    compose,
    crossing_report,
    cycle_notation,
    power,
    track,
    track_family,
)
from tests.helpers import sqrt_branch


def _loop_family(center, radius, turns=1, steps=200):
    ts = np.arange(steps * turns + 1, dtype=float)

    def matrix_at(t):
        eps2 = center + radius * np.exp(2j * np.pi * t / steps)
        return np.array([[0.0, 0.5], [0.5, eps2]])

    return matrix_at, ts


def test_diagonal_spec_identity_labels():
    spec = spec_from_arrays([0.0, 1.0, 2.0], [[1, 0, 0]], e1=[0.1, -0.2, 0.3])
    path = ParameterPath.linear(ParameterPoint(0, (0j,)), ParameterPoint(1, (0j,)), 21)
    traj = track(spec, path)
    assert (traj.labels == np.arange(3)).all()
    assert traj.ambiguous_steps == ()


def test_loop_around_fixture_matches_branch_oracle():
    matrix_at, ts = _loop_family(1j, 0.2, steps=400)
    traj = track_family(matrix_at, ts, closed=True)
    assert traj.net_permutation() == (1, 0)
    eps2 = 1j + 0.2 * np.exp(2j * np.pi * ts / 400)
    s = sqrt_branch(eps2 ** 2 + 1.0)
    oracle = np.stack([(eps2 + s) / 2, (eps2 - s) / 2])
    # match the oracle branches to the labels at the start, then compare everywhere
    order = np.argsort(np.abs(traj.values[:, 0][:, None] - oracle[:, 0][None, :]), axis=1)[:, 0]
    assert np.abs(traj.values - oracle[order]).max() < 1e-12


@pytest.mark.parametrize("center,loops,parity", [
    (1j + 1.0, 1, 0),  # loop misses the EP
    (1j, 1, 1),
    (1j, 2, 0),
])
def test_monodromy_parity(center, loops, parity):
    matrix_at, ts = _loop_family(center, 0.2, turns=loops)
    perm = track_family(matrix_at, ts, closed=True).net_permutation()
    odd = perm != (0, 1)
    assert odd == bool(parity)


def test_loop_enclosing_both_eps_is_even():
    # eps2 = +-i are both EPs of [[0, 1/2], [1/2, eps2]]; a large loop encloses both
    matrix_at, ts = _loop_family(0.0, 2.0, steps=600)
    assert track_family(matrix_at, ts, closed=True).net_permutation() == (0, 1)


def test_permutation_algebra():
    p = (1, 2, 0)
    assert compose(p, power(p, 2)) == (0, 1, 2)
    assert power((1, 0), 2) == (0, 1)
    assert cycle_notation((1, 0)) == "(1 2)"
    assert cycle_notation((0, 1)) == "()"
    assert cycle_notation((1, 2, 0, 3)) == "(1 2 3)"


def test_assign_ok_and_overlap():
    v0 = np.array([0.0, 1.0])
    V0 = np.eye(2, dtype=complex)
    sigma, status = assign(v0, V0, np.array([1.01, 0.02]), V0[:, ::-1])
    assert status == "ok" and list(sigma) == [1, 0]
    # equal eigenvalue distances: the vectors decide
    sigma, status = assign(np.array([0.0, 1.0]), V0, np.array([0.5, 0.5]), V0[:, ::-1])
    assert status == "overlap" and list(sigma) == [1, 0]


def _through_ep(num=41, record=True):
    xs = np.linspace(-1, 1, num)  # x = 0 hits the EP exactly

    def matrix_at(t):
        x = np.interp(t, np.arange(num), xs)
        return np.array([[0.0, 0.5], [0.5, x + 1j]])

    kw = {"on_coalescence": "record"} if record else {}
    return track_family(matrix_at, np.arange(num, dtype=float), **kw)


def test_path_through_ep_raises_by_default():
    with pytest.raises(TrackingError) as err:
        _through_ep(record=False)
    assert err.value.step in (20, 21)


def test_path_through_ep_recorded_as_coalescence():
    traj = _through_ep()
    assert traj.coalescent_steps
    assert classify_crossing(traj, (0, 1)) is Crossing.FULL_EXCHANGE_EP


def _side_path(gamma, omega=0.5, num=201):
    xs = np.linspace(-1.0, 1.0, num)

    def matrix_at(t):
        return np.array([[0.0, omega], [omega, np.interp(t, np.arange(num), xs) + 1j * gamma]])

    return track_family(matrix_at, np.arange(num, dtype=float))


@pytest.mark.parametrize("gamma,expected", [
    (0.8, Crossing.WIDTH_EXCHANGE),
    (0.9, Crossing.WIDTH_EXCHANGE),
    (1.1, Crossing.ENERGY_EXCHANGE),
    (1.6, Crossing.ENERGY_EXCHANGE),
])
def test_classification_against_closed_form(gamma, expected):
    traj = _side_path(gamma)
    rep = crossing_report(traj, (0, 1))
    xs = np.linspace(-1.0, 1.0, 201)
    s = sqrt_branch((xs + 1j * gamma) ** 2 + 1.0)
    lo, hi = max(0, rep.index - 5), min(200, rep.index + 5)
    assert rep.real_swapped == (s[lo].real * s[hi].real < 0)
    assert rep.imag_swapped == (s[lo].imag * s[hi].imag < 0)
    assert rep.kind is expected


def test_far_apart_pair_is_avoided():
    traj = _side_path(5.0)
    assert classify_crossing(traj, (0, 1), approach_tol=0.1) is Crossing.AVOIDED


def test_closed_path_classification_rejected():
    matrix_at, ts = _loop_family(1j, 0.2)
    traj = track_family(matrix_at, ts, closed=True)
    with pytest.raises(ValueError):
        classify_crossing(traj, (0, 1))


@given(
    st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    st.floats(0.01, 1.0),
)
@settings(max_examples=30, deadline=None)
def test_labels_are_permutations_and_continuous(e0, e1, w):
    spec = spec_from_arrays(e0, [[1, w, 0.5]], e1=e1, gamma0=[0.0, 0.1, 0.2])
    path = ParameterPath.linear(ParameterPoint(-1, (0.3 + 0.2j,)), ParameterPoint(1, (0.3 + 0.2j,)), 60)
    traj = track(spec, path, on_coalescence="record")
    for row in traj.labels:
        assert sorted(row) == [0, 1, 2]
    # labelled values are those of the solver at each point
    a, om = path.arrays()
    wv, _, _ = eigendecompose_stack(hamiltonian_stack(spec, a, om))
    for k in range(len(path)):
        assert np.array_equal(np.sort_complex(traj.values[:, k]), np.sort_complex(wv[k]))


def test_fast_path_matches_stepwise_assignment():
    rng = np.random.default_rng(3)
    spec = spec_from_arrays(rng.normal(size=6), rng.normal(size=(2, 6)), e1=rng.normal(size=6),
                            gamma0=rng.uniform(0, 0.2, 6))
    path = ParameterPath.linear(ParameterPoint(0, (0.2j, 0.1)), ParameterPoint(2, (0.4j, 0.3)), 300)
    traj = track(spec, path)
    v = traj.values
    for k in range(1, v.shape[1]):
        sigma, status = assign(v[:, k - 1], traj.vectors[:, k - 1].T, v[:, k], traj.vectors[:, k].T)
        if status == "ok":
            assert list(sigma) == [0, 1, 2, 3, 4, 5]
