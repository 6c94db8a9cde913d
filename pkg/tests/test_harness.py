import numpy as np
from hypothesis import given, settings, strategies as st

from eplab.harness import compute_sweep, detect_plateau, evaluate_point, find_equilibrium, run_sweep
from eplab.model import ParameterPath, ParameterPoint, build_h0, build_hamiltonian, fixture_spec, spec_from_arrays
from eplab.observables import detect_equilibrium, mixing_coefficients
from eplab.spectral import EigenSystem
from tests.helpers import plateau_scan

TWO_CHANNEL = spec_from_arrays([0.0, 0.0], [[1, 1], [1, -1]], gamma0=[0.0, 0.1])


def two_channel_path(num=101):
    return ParameterPath.linear(ParameterPoint(0, (0.1, 0.1)), ParameterPoint(0, (1.1, 0.1)), num)


def test_decoupled_sweep_rows():
    spec = spec_from_arrays([0.0, 1.0], [[1, 0]], e1=[0.5, -0.5])
    path = ParameterPath.linear(ParameterPoint(0, (0j,)), ParameterPoint(1, (0j,)), 11)
    rows = run_sweep(spec, path)
    assert len(rows) == 11
    for r in rows:
        assert r.defect == 0
        assert r.entropies == (0.0, 0.0)
        assert not r.equilibrium
        assert r.verdict.prob_deviation == 0.5


def test_fixture_neighbourhood_dips():
    spec = fixture_spec()
    # omega passes through i, where the fixture sits at its EP
    path = ParameterPath.linear(ParameterPoint(0, (0.6j,)), ParameterPoint(0, (1.4j,)), 41)
    data = compute_sweep(spec, path)
    k = int(np.argmin(data.min_gap))
    assert k == 20 and data.min_gap[k] < 1e-6
    assert data.rigidity[k].max() < 1e-3
    assert data.rigidity[0].min() > 0.1 and data.rigidity[-1].min() > 0.1
    assert not data.equilibrium.any()


def test_row_flag_equals_detector_on_row_inputs():
    path = two_channel_path(41)
    data = compute_sweep(TWO_CHANNEL, path)
    assert data.equilibrium.any() and not data.equilibrium.all()
    for k, pt in enumerate(path.points):
        V = data.trajectories.vectors[:, k].T
        es = EigenSystem.from_pairs(data.values[k], V, matrix=build_hamiltonian(TWO_CHANNEL, pt).entries)
        rep = mixing_coefficients(es, build_h0(TWO_CHANNEL, pt))
        v = detect_equilibrium(es, rep)
        assert v.passed == data.equilibrium[k]


def test_equilibrium_found_on_two_channel_path():
    res = find_equilibrium(TWO_CHANNEL, two_channel_path())
    assert res.found
    # max|p - 1/2| = gamma / (2 sqrt(gamma^2 + 4 d^2)) drops to 0.05 at d ~ 0.497
    d = res.row.point.omegas[0].real - 0.1
    assert abs(d - 0.5) <= 0.011
    assert res.row.verdict.orthogonality_defect < 1e-12
    assert res.plateau.start_index is not None


def test_no_equilibrium_decoupled_or_pinned():
    spec = spec_from_arrays([0.0, 1.0], [[1, 0]])
    path = ParameterPath.linear(ParameterPoint(0, (0j,)), ParameterPoint(1, (0j,)), 20)
    assert not find_equilibrium(spec, path).found
    pinned = ParameterPath.linear(ParameterPoint(0, (1j,)), ParameterPoint(1, (1j,)), 20)
    res = find_equilibrium(fixture_spec(), pinned)
    assert not res.found
    assert not any(v.conditions["far_from_ep"] for v in res.data.verdicts)


def test_rerun_and_parallel_identical():
    rng = np.random.default_rng(5)
    spec = spec_from_arrays(rng.normal(size=5), rng.normal(size=(2, 5)), e1=rng.normal(size=5),
                            gamma0=rng.uniform(0, 0.2, 5))
    path = ParameterPath.linear(ParameterPoint(0, (0.1j, 0.2)), ParameterPoint(1, (0.3j, 0.5)), 500)
    a = compute_sweep(spec, path)
    b = compute_sweep(spec, path)
    c = compute_sweep(spec, path, parallel=True, workers=2)
    for other in (b, c):
        assert np.array_equal(a.values, other.values)
        assert np.array_equal(a.entropy, other.entropy)
        assert np.array_equal(a.rigidity, other.rigidity)
        assert np.array_equal(a.equilibrium, other.equilibrium)


def test_large_sweep_row_count():
    rng = np.random.default_rng(8)
    spec = spec_from_arrays(np.linspace(-1, 1, 8), rng.normal(size=(2, 8)), e1=rng.normal(size=8),
                            gamma0=rng.uniform(0, 0.1, 8))
    path = ParameterPath.linear(ParameterPoint(0, (0.1j, 0.2j)), ParameterPoint(1, (0.5j, 0.3j)), 10_000)
    data = compute_sweep(spec, path)
    assert data.values.shape == (10_000, 8)
    assert len(data.verdicts) == 10_000


def test_evaluate_point_matches_sweep_row():
    pt = ParameterPoint(0, (0.6, 0.1))
    row = evaluate_point(TWO_CHANNEL, pt)
    data = compute_sweep(TWO_CHANNEL, ParameterPath((pt, pt)))
    assert row.equilibrium == data.equilibrium[0]
    assert sorted(row.entropies) == sorted(data.entropy[0])


def test_plateau_examples():
    assert detect_plateau(np.full(30, 1.5), 5, 0.01).start_index == 0
    assert detect_plateau(0.01 * np.arange(50), 5, 0.01).start_index is None
    k = np.arange(200)
    logistic = 2.0 / (1 + np.exp(-(k - 60) / 6.0))
    rep = detect_plateau(logistic, 10, 0.01)
    assert rep.start_index == plateau_scan(logistic, 10, 0.01)
    assert abs(rep.saturated_value - 2.0) < 0.01


@given(
    st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=60),
    st.integers(2, 12),
    st.floats(0, 1),
)
@settings(max_examples=150, deadline=None)
def test_plateau_matches_direct_scan(series, window, delta):
    if window > len(series):
        window = len(series)
    rep = detect_plateau(series, window, delta)
    assert rep.start_index == plateau_scan(series, window, delta)
    if rep.start_index is not None:
        assert rep.saturated_value == np.mean(series[rep.start_index:])
