import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sps

from oracles import char_poly_eigenvalues, inverse_3x3, random_correlation_matrix, t_two_sided_quad, varimax_value
from foi.errors import (
    InvalidN,
    KmoUndefined,
    NoConvergence,
    NotSymmetric,
    SingularMatrix,
    TooFewPairs,
    ZeroVariance,
)
from foi.stats import (
    FactorModel,
    MissingPolicy,
    communalities,
    corr_p_value,
    correlation_matrix,
    eig_sym,
    explained_variance,
    extract_principal_factors,
    fit_factor_model,
    kaiser_count,
    kmo_statistic,
    pearson_r,
    regression_factor_scores,
    screen_variables,
    sym_inverse,
    varimax_criterion,
    varimax_rotate,
)
from foi.stats.special import betainc, t_two_sided_p

# -- correlation ------------------------------------------------------------------


def test_pearson_examples():
    assert pearson_r([1, 2, 3], [1, 2, 3]) == 1.0
    assert pearson_r([1, 2, 3], [3, 2, 1]) == -1.0
    assert pearson_r([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-15)


def test_pearson_pairwise_deletion():
    x = [1, 2, np.nan, 3, 4]
    y = [1, 3, 100, 2, np.nan]
    assert pearson_r(x, y) == pytest.approx(pearson_r([1, 2, 3], [1, 3, 2]))


def test_pearson_errors():
    with pytest.raises(TooFewPairs):
        pearson_r([1, 2, np.nan], [1, np.nan, 3])
    with pytest.raises(ZeroVariance):
        pearson_r([1, 1, 1], [1, 2, 3])


def test_pearson_against_numpy():
    rng = np.random.default_rng(11)
    for _ in range(50):
        x, y = rng.standard_normal((2, 20))
        assert pearson_r(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-13)


def test_p_value_examples():
    assert corr_p_value(0.0, 3) == 1.0
    assert corr_p_value(0.0, 57) == 1.0
    assert corr_p_value(1.0, 10) == 0.0
    assert corr_p_value(-1.0, 4) == 0.0
    assert corr_p_value(0.6319, 10) == pytest.approx(0.0500, abs=5e-4)
    with pytest.raises(InvalidN):
        corr_p_value(0.3, 2)


@pytest.mark.parametrize("r,n", [(0.6319, 10), (0.1, 38), (-0.45, 38), (0.9, 5), (0.02, 200), (0.33, 3)])
def test_p_value_matches_t_oracle(r, n):
    t = r * math.sqrt((n - 2) / (1 - r * r))
    assert corr_p_value(r, n) == pytest.approx(t_two_sided_quad(t, n - 2), rel=1e-9, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 500), st.floats(0.05, 500), st.floats(0, 1))
def test_betainc_matches_scipy(a, b, x):
    assert betainc(a, b, x) == pytest.approx(sps.betainc(a, b, x), rel=1e-9, abs=1e-13)


def test_t_two_sided_symmetry():
    assert t_two_sided_p(2.3, 8) == pytest.approx(t_two_sided_p(-2.3, 8), abs=0)
    assert t_two_sided_p(0.0, 8) == 1.0


def test_screen_examples():
    rng = np.random.default_rng(0)
    target = rng.standard_normal(38)
    data = np.column_stack([target, np.full(38, 2.0), rng.standard_normal(38)])
    same, const, noise = screen_variables(data, target, ["same", "const", "noise"])
    assert same.selected and same.p_value == 0.0 and same.r == 1.0
    assert not const.selected and const.reason == "ZeroVariance"
    assert noise.selected == (noise.p_value <= 0.05)
    assert all(s.alpha == 0.05 for s in (same, const, noise))


def test_screen_records_alpha_and_n():
    target = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    data = np.array([[1.0], [2.0], [np.nan], [3.5], [5.0]])
    (res,) = screen_variables(data, target, alpha=0.01)
    assert res.n == 4 and res.alpha == 0.01
    assert res.selected == (res.p_value <= 0.01)


def test_screen_too_few_pairs():
    (res,) = screen_variables(np.array([[1.0], [np.nan], [np.nan], [2.0]]), [1, 2, 3, 4])
    assert not res.selected and res.reason == "TooFewPairs"


def test_correlation_matrix_examples():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(12)
    cm = correlation_matrix(np.column_stack([x, x]))
    assert cm.r[0, 1] == pytest.approx(1.0, abs=1e-15)

    # exactly orthogonal centred residuals
    q, _ = np.linalg.qr(np.column_stack([np.ones(12), rng.standard_normal((12, 3))]))
    cm = correlation_matrix(q[:, 1:])
    off = cm.r[~np.eye(3, dtype=bool)]
    assert np.max(np.abs(off)) < 1e-12


def test_correlation_matrix_listwise_and_pairwise():
    rng = np.random.default_rng(4)
    data = rng.standard_normal((10, 3))
    data[3, 1] = np.nan
    lw = correlation_matrix(data, policy=MissingPolicy.LISTWISE)
    assert np.all(lw.n_used == 9)
    pw = correlation_matrix(data, policy="pairwise")
    assert pw.n_used[0, 2] == 10 and pw.n_used[0, 1] == 9
    assert np.allclose(pw.r, pw.r.T, atol=1e-12) and np.all(np.diag(pw.r) == 1.0)


def test_correlation_matrix_too_few_pairs():
    data = np.array([[1, 2], [2, np.nan], [3, np.nan], [4, 1.0]])
    with pytest.raises(TooFewPairs):
        correlation_matrix(data, policy="pairwise")


# -- eigen --------------------------------------------------------------------------


def test_eig_identity_and_2x2():
    w, _ = eig_sym(np.eye(5))
    np.testing.assert_array_equal(w, np.ones(5))
    w, v = eig_sym([[1, 0.3], [0.3, 1]])
    np.testing.assert_allclose(w, [1.3, 0.7], atol=1e-14)


def test_eig_reconstruction_6x6():
    rng = np.random.default_rng(5)
    for _ in range(50):
        b = rng.standard_normal((6, 6))
        a = (b + b.T) / 2
        w, v = eig_sym(a)
        assert np.all(np.diff(w) <= 0)
        np.testing.assert_allclose(v.T @ v, np.eye(6), atol=1e-12)
        assert np.max(np.abs(a - v @ np.diag(w) @ v.T)) < 1e-8
        assert np.max(np.abs(a @ v - v * w)) < 1e-8


def test_eig_against_characteristic_polynomial():
    rng = np.random.default_rng(8)
    for n in (2, 3, 4):
        b = rng.standard_normal((n, n))
        a = b + b.T
        np.testing.assert_allclose(eig_sym(a)[0], char_poly_eigenvalues(a), atol=1e-8)


def test_eig_correlation_trace():
    r = random_correlation_matrix(np.random.default_rng(1), 7)
    assert eig_sym(r)[0].sum() == pytest.approx(7, abs=1e-8)


def test_eig_errors():
    with pytest.raises(NotSymmetric):
        eig_sym([[1, 2], [0, 1]])
    b = np.random.default_rng(0).standard_normal((6, 6))
    with pytest.raises(NoConvergence):
        eig_sym(b + b.T, max_sweeps=1)


def test_sym_inverse_singular():
    with pytest.raises(SingularMatrix):
        sym_inverse([[1, 1], [1, 1]])
    r = random_correlation_matrix(np.random.default_rng(3), 3)
    np.testing.assert_allclose(sym_inverse(r), inverse_3x3(r), atol=1e-10)


# -- factors -------------------------------------------------------------------------


def test_extraction_identity():
    lam = extract_principal_factors(np.eye(4), 2)
    assert lam.shape == (4, 2)
    assert sorted(np.abs(lam).sum(axis=0)) == [1.0, 1.0]
    assert set(np.round(communalities(lam), 12)) <= {0.0, 1.0}
    assert np.all(lam.max(axis=0) == 1.0)


def test_extraction_two_variables():
    lam = extract_principal_factors([[1, 0.8], [0.8, 1]], 1)
    np.testing.assert_allclose(lam[:, 0], [math.sqrt(0.9), math.sqrt(0.9)], atol=1e-12)
    assert lam[0, 0] == pytest.approx(0.948683, abs=1e-6)


def test_full_extraction_communalities():
    rng = np.random.default_rng(6)
    for p in (2, 5, 9):
        r = random_correlation_matrix(rng, p)
        np.testing.assert_allclose(communalities(extract_principal_factors(r, p)), 1.0, atol=1e-10)


def test_sign_convention():
    r = random_correlation_matrix(np.random.default_rng(7), 6)
    lam = extract_principal_factors(r, 3)
    for j in range(3):
        assert lam[np.argmax(np.abs(lam[:, j])), j] > 0


def test_explained_variance_examples():
    assert explained_variance([1, 1], 2) == 1.0
    assert explained_variance([1.8], 2) == pytest.approx(0.9, abs=1e-15)
    assert explained_variance([5.78, 2.89], 15) == pytest.approx(0.578, abs=1e-12)


def test_kaiser_count():
    assert kaiser_count([2.5, 1.2, 1.0, 0.3]) == 2


def test_varimax_fixed_point():
    lam = np.array([[0.9, 0.0], [0.8, 0.0], [0.0, 0.7], [0.0, 0.6]])
    for kaiser in (True, False):
        rot = varimax_rotate(lam, kaiser_normalize=kaiser)
        assert rot.sweeps == 1
        np.testing.assert_allclose(np.abs(rot.loadings), np.abs(lam), atol=1e-12)


def test_varimax_preserves_communalities_and_improves():
    rng = np.random.default_rng(9)
    for _ in range(20):
        lam = rng.uniform(-1, 1, (15, 2))
        for kaiser in (True, False):
            rot = varimax_rotate(lam, kaiser)
            np.testing.assert_allclose(communalities(rot.loadings), communalities(lam), atol=1e-10)
            np.testing.assert_allclose(rot.matrix.T @ rot.matrix, np.eye(2), atol=1e-10)
            np.testing.assert_allclose(lam @ rot.matrix, rot.loadings, atol=1e-12)
            assert varimax_criterion(rot.loadings, kaiser) >= varimax_criterion(lam, kaiser) - 1e-12


def test_varimax_beats_random_rotations():
    rng = np.random.default_rng(10)
    lam = rng.uniform(-1, 1, (15, 2))
    rot = varimax_rotate(lam, kaiser_normalize=False)
    angles = rng.uniform(0, 2 * np.pi, 2000)
    c, s = np.cos(angles), np.sin(angles)
    ts = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    assert varimax_value(rot.loadings) >= varimax_value(lam @ ts).max() - 1e-12


def test_varimax_needs_two_factors():
    with pytest.raises(ValueError):
        varimax_rotate(np.ones((3, 1)))


def test_varimax_no_convergence():
    lam = np.random.default_rng(1).uniform(-1, 1, (10, 3))
    with pytest.raises(NoConvergence):
        varimax_rotate(lam, tol=0.0, max_sweeps=3)


def test_kmo_examples():
    for r in (0.2, -0.7, 0.99):
        assert kmo_statistic([[1, r], [r, 1]]) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(KmoUndefined):
        kmo_statistic(np.eye(4))
    with pytest.raises(SingularMatrix):
        kmo_statistic(np.ones((3, 3)))


def test_kmo_bounds():
    rng = np.random.default_rng(12)
    for _ in range(50):
        k = kmo_statistic(random_correlation_matrix(rng, int(rng.integers(2, 9))))
        assert 0.0 <= k <= 1.0


def test_scores_identity_case():
    rng = np.random.default_rng(13)
    data = rng.standard_normal((8, 2))
    scores, weights = regression_factor_scores(np.eye(2), np.eye(2), data)
    z = (data - data.mean(0)) / data.std(0, ddof=1)
    np.testing.assert_allclose(weights, np.eye(2))
    np.testing.assert_allclose(scores, z, atol=1e-14)


def test_scores_against_explicit_inverse():
    rng = np.random.default_rng(14)
    data = rng.standard_normal((5, 3)) @ rng.standard_normal((3, 3))
    r = np.corrcoef(data, rowvar=False)
    lam = extract_principal_factors(r, 2)
    scores, _ = regression_factor_scores(lam, r, data)
    z = (data - data.mean(0)) / data.std(0, ddof=1)
    np.testing.assert_allclose(scores, z @ inverse_3x3(r) @ lam, atol=1e-9)
    np.testing.assert_allclose(scores.mean(axis=0), 0.0, atol=1e-10)


def test_scores_missing_rows():
    rng = np.random.default_rng(15)
    data = rng.standard_normal((10, 3))
    data[2, 0] = np.nan
    data[7, 2] = np.nan
    complete = data[~np.isnan(data).any(1)]
    r = np.corrcoef(complete, rowvar=False)
    scores, _ = regression_factor_scores(extract_principal_factors(r, 2), r, data)
    missing = np.isnan(scores)
    assert np.array_equal(missing.any(1), missing.all(1))
    assert np.flatnonzero(missing.any(1)).tolist() == [2, 7]


def _fit(data, **kw):
    p = data.shape[1]
    return fit_factor_model(data, [f"v{j}" for j in range(p)], [f"c{i}" for i in range(len(data))], **kw)


def _two_block_data(rng, n=40):
    f = rng.standard_normal((n, 2))
    load = np.array([[1, 0], [1, 0], [1, 0], [0, 1], [0, 1], [0, 1]], float)
    return f @ load.T + 0.4 * rng.standard_normal((n, 6))


def test_fit_factor_model_kaiser_and_invariants():
    rng = np.random.default_rng(16)
    model = _fit(_two_block_data(rng))
    assert model.m == 2
    np.testing.assert_allclose(communalities(model.loadings_rotated), communalities(model.loadings_unrotated), atol=1e-10)
    assert model.explained_variance_fraction == pytest.approx(model.eigenvalues.sum() / 6, abs=1e-15)
    assert 0 <= model.kmo <= 1
    assert model.rotation_sweeps >= 1


def test_sign_flip_of_input_variable():
    rng = np.random.default_rng(17)
    data = _two_block_data(rng)
    base = _fit(data, m=2)
    flipped_data = data.copy()
    flipped_data[:, 4] *= -1
    flipped = _fit(flipped_data, m=2)
    np.testing.assert_allclose(communalities(flipped.loadings_rotated), communalities(base.loadings_rotated), atol=1e-10)
    assert flipped.kmo == pytest.approx(base.kmo, abs=1e-12)
    assert flipped.explained_variance_fraction == pytest.approx(base.explained_variance_fraction, abs=1e-12)
    # only row 4 changes sign, up to the per-column orientation convention
    col_signs = np.sign(np.sum(flipped.loadings_rotated * base.loadings_rotated, axis=0))
    expected = base.loadings_rotated * col_signs
    expected[4] *= -1
    np.testing.assert_allclose(flipped.loadings_rotated, expected, atol=1e-8)


def test_factor_model_round_trip():
    rng = np.random.default_rng(18)
    data = _two_block_data(rng, 12)
    data[3, 1] = np.nan
    model = _fit(data, m=2)
    back = FactorModel.from_dict(model.to_dict())
    np.testing.assert_array_equal(back.scores, model.scores)
    np.testing.assert_array_equal(back.loadings_rotated, model.loadings_rotated)
    assert back.kmo == model.kmo and back.rotation_sweeps == model.rotation_sweeps
    assert np.isnan(model.scores[3]).all()


def test_flip_factor():
    model = _fit(_two_block_data(np.random.default_rng(19)), m=2)
    before = model.scores.copy()
    model.flip_factor(1)
    np.testing.assert_array_equal(model.scores[:, 1], -before[:, 1])
    np.testing.assert_array_equal(model.scores[:, 0], before[:, 0])


def test_screening_calibration_many_trials():
    # 20 batches of 10,000 noise variables, each batch against its own target
    selected = trials = 0
    for seed in range(26, 46):
        rng = np.random.default_rng(seed)
        target = rng.standard_normal(38)
        results = screen_variables(rng.standard_normal((38, 10_000)), target, alpha=0.05)
        selected += sum(r.selected for r in results)
        trials += len(results)
    se = math.sqrt(0.05 * 0.95 / trials)
    assert abs(selected / trials - 0.05) <= 2 * se
