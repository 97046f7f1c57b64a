import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from psychkit import irt
from psychkit.simulate import as_matrix, simulate_2pl


@pytest.fixture(scope="module")
def fitted(small_2pl_data):
    m, a, b, _ = small_2pl_data
    return m, irt.fit(m, "2PL"), irt.fit(m, "1PL")


def test_grid_normalised():
    g = irt.QuadratureGrid.normal()
    assert g.nodes.size == 61
    assert g.nodes[0] == -6 and g.nodes[-1] == 6
    assert g.weights.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        irt.QuadratureGrid(np.array([0.0, 0.0]), np.array([1.0, 1.0]))


def test_2pl_recovers_parameters(fitted, small_2pl_data):
    _, a, b, _ = small_2pl_data
    _, m2, _ = fitted
    assert m2.converged
    assert np.sqrt(np.mean((m2.b - b) ** 2)) < 0.15
    assert np.sqrt(np.mean((m2.a - a) ** 2)) < 0.2
    assert m2.n_params == 24


def test_ll_history_monotone(fitted):
    _, m2, m1 = fitted
    for m in (m2, m1):
        h = np.array(m.ll_history)
        assert np.all(np.diff(h) >= -1e-6 * np.abs(h[1:]))


def test_1pl_shared_slope(fitted):
    m, m2, m1 = fitted
    assert np.allclose(m1.a, m1.a[0])
    assert m1.n_params == m.n_items + 1
    assert m1.log_likelihood <= m2.log_likelihood + 1e-6


def test_1pl_symmetric_data_gives_zero_difficulty():
    # a sample and its complement: every item is answered correctly by exactly half
    x, _ = simulate_2pl(np.ones(6), np.linspace(-1, 1, 6), 1000, 4)
    x = np.vstack([x, 1 - x])
    model = irt.fit(x, "1PL", tol=1e-6)
    assert np.abs(model.b).max() < 1e-3


def test_quadrature_refinement_stable(fitted):
    m, m2, _ = fitted
    fine = irt.fit(m, "2PL", irt.QuadratureGrid.normal(121))
    assert np.abs(fine.a - m2.a).max() < 0.01
    assert np.abs(fine.b - m2.b).max() < 0.01


def test_degenerate_item_rejected():
    x = np.random.default_rng(0).integers(0, 2, (50, 4))
    x[:, 2] = 1
    with pytest.raises(ValueError, match="Q3"):
        irt.fit(x)


def test_non_convergence_warns(small_2pl_data):
    m = small_2pl_data[0]
    with pytest.warns(irt.ConvergenceWarning):
        model = irt.fit(m, "2PL", max_iter=2)
    assert not model.converged


def test_model_round_trip(tmp_path, fitted):
    _, m2, _ = fitted
    m2.save(tmp_path / "m.json")
    back = irt.IrtModel.load(tmp_path / "m.json")
    assert np.array_equal(back.a, m2.a) and np.array_equal(back.b, m2.b)
    assert back.kind == "2PL" and back.items == m2.items
    json.loads((tmp_path / "m.json").read_text())


def test_gradient_matches_finite_difference(fitted):
    m, m2, _ = fitted
    x = m.responses.astype(float)
    grid = irt.QuadratureGrid.normal()
    params = np.concatenate([m2.a, m2.b]) + 0.05
    J = m.n_items

    def ll(p):
        return irt._posterior(x, p[:J], -p[:J] * p[J:], grid)[1]

    g = irt._gradient(x, "2PL", params, grid)
    for i in (0, 3, J + 1, J + 7):
        e = np.zeros_like(params)
        e[i] = 1e-5
        assert g[i] == pytest.approx((ll(params + e) - ll(params - e)) / 2e-5, rel=1e-4, abs=1e-4)


def test_covariance_blocks(fitted):
    m, m2, m1 = fitted
    cov = irt.parameter_covariance(m2, m)
    assert np.allclose(cov, cov.T)
    assert np.all(np.linalg.eigvalsh(cov) > 0)
    blocks = irt.item_covariances(m2, m)
    assert len(blocks) == m.n_items and blocks[0].shape == (2, 2)
    se_b = np.sqrt([blk[1, 1] for blk in blocks])
    assert np.all((se_b > 0.02) & (se_b < 0.5))
    b1 = irt.item_covariances(m1, m)
    assert b1[0].shape == (1, 1)


def test_eap_identical_patterns(fitted):
    m, m2, _ = fitted
    x = np.vstack([m.responses[:5], m.responses[:5]])
    est = irt.eap(x, m2)
    assert np.array_equal(est.eap[:5], est.eap[5:])
    assert np.array_equal(est.posterior_sd[:5], est.posterior_sd[5:])


def test_eap_reliability_and_order(fitted, small_2pl_data):
    m, m2, _ = fitted
    theta = small_2pl_data[3]
    est = irt.eap(m, m2)
    v = est.eap.var()
    assert est.eap_reliability == pytest.approx(v / (v + np.mean(est.posterior_sd**2)))
    assert 0.6 < est.eap_reliability < 0.95
    assert np.corrcoef(est.eap, theta)[0, 1] > 0.8
    assert est.student_ids[0] == str(m.student_ids[0])


def test_eap_missing_items_error(fitted):
    m, m2, _ = fitted
    with pytest.raises(ValueError):
        irt.eap(m.drop_items(list(m.items[:3])), m2)


def test_curves_invariants():
    model = irt.IrtModel("2PL", ("A", "B"), np.array([2.0, 0.7]), np.array([0.5, -1.0]), 0.0, 4, True, 1, 10)
    t = irt.curves(model, theta=np.array([0.5, -1.0]))
    assert t.p[0, 0] == pytest.approx(0.5)
    assert t.info[0, 0] == pytest.approx(1.0)
    assert t.info[1, 1] == pytest.approx(0.7**2 / 4)
    assert t.tif == pytest.approx(t.info.sum(axis=1))
    assert t.sem == pytest.approx(1 / np.sqrt(t.tif))
    assert t.reliability == pytest.approx(1 - 1 / t.tif)
    full = irt.curves(model)
    assert full.theta.size == 1201
    assert np.all(np.diff(full.p, axis=0) > 0)
    header, rows = full.to_rows()
    assert header[:3] == ["theta", "P_A", "P_B"] and len(rows[0]) == len(header)


@given(st.floats(0.1, 4), st.floats(-3, 3), st.floats(-6, 6))
@settings(max_examples=60, deadline=None)
def test_information_bounded_by_quarter_a_squared(a, b, theta):
    model = irt.IrtModel("2PL", ("A",), np.array([a]), np.array([b]), 0.0, 2, True, 1, 1)
    t = irt.curves(model, theta=np.array([theta]))
    assert 0 < t.info[0, 0] <= a * a / 4 + 1e-12


def test_compare_arithmetic():
    aic, bic = irt.information_criteria(-9248.23, 48, 711)
    assert aic == pytest.approx(18592.46, abs=0.01)
    assert bic == pytest.approx(18811.66, abs=0.02)
    stat, df, _ = irt.lrt(-5829.31, 25, -5764.18, 48)
    assert stat == pytest.approx(130.26, abs=0.01)
    assert df == 23


def test_compare_models(fitted):
    m, m2, m1 = fitted
    c = irt.compare(m1, m2)
    assert c.df == m2.n_params - m1.n_params
    assert c.lrt == pytest.approx(2 * (m2.log_likelihood - m1.log_likelihood))
    same = irt.compare(m2, m2)
    assert same.lrt == 0 and same.p_value == 1.0
    with pytest.raises(ValueError):
        irt.compare(m2, m1)


def test_fit_deterministic(small_2pl_data):
    m = small_2pl_data[0]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        a = irt.fit(m, "2PL")
        b = irt.fit(m, "2PL")
    assert np.array_equal(a.a, b.a) and a.log_likelihood == b.log_likelihood
