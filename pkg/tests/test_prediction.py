from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import minimize

from blip4os.estimation import CensoredSample, blue, delta_hat, gls_scalars
from blip4os.exceptions import InvariantViolation, SingularSystemError
from blip4os.moments import ParentModel, compute_moments, slice_moments
from blip4os.prediction import (GAMMA_CACHE, LinearPredictor, MSPEMatrix,
                                _GammaCache, blip, blip_mspe, blup, blup_mspe,
                                combine, dominance_gap, gamma_system,
                                kaminsky_blip, kaminsky_predictor, mspe_matrix,
                                predict, scale_blip, scale_blup,
                                scale_blup_mspe, scale_mspe)

TABLE_BLIP = [3.015, 3.278, 3.575, 3.927, 4.388, 5.151]
TABLE_BLUP = [3.037, 3.321, 3.639, 4.014, 4.503, 5.305]
TABLE_MSPE_BLIP = [0.0287, 0.0637, 0.1084, 0.1703, 0.2698, 0.5037]
TABLE_MSPE_BLUP = [0.0293, 0.0664, 0.1157, 0.1855, 0.3004, 0.5721]
TABLE_RE1 = [0.9795, 0.9593, 0.9369, 0.9181, 0.8981, 0.8804]


def _mspe(a, sl, col, delta):
    """ MSPE of one coefficient row, written out term by term """
    bias = delta * (a.sum() - 1) + a @ sl.alpha_obs - sl.alpha_future[col]
    return (bias ** 2 + a @ sl.sigma_obs @ a - 2 * a @ sl.omega[:, col]
            + sl.omega_ff[col, col])


def test_exponential_markov_rows(exponential5):
    sl = slice_moments(exponential5, 3, [4, 5])
    rows = blup(sl).coeffs
    b = blue(CensoredSample(5, 3, sl.alpha_obs), sl)
    for k, s in enumerate((4, 5)):
        expected = np.eye(3)[2] + (exponential5.alpha[s - 1] - sl.alpha_obs[2]) * b.sigma_weights
        assert np.allclose(rows[k], expected, atol=1e-12)


def test_blup_form(normal15):
    sl = slice_moments(normal15, 9, range(10, 16))
    b = blue(CensoredSample(15, 9, sl.alpha_obs), sl)
    rows = blup(sl).coeffs
    for k in range(6):
        inv_omega = np.linalg.solve(sl.sigma_obs, sl.omega[:, k])
        a = 1 - inv_omega.sum()
        bb = sl.alpha_future[k] - sl.alpha_obs @ inv_omega
        expected = inv_omega + a * b.mu_weights + bb * b.sigma_weights
        assert np.allclose(rows[k], expected, atol=1e-9)


def test_blup_unbiased(normal15):
    sl = slice_moments(normal15, 9, range(10, 16))
    rows = blup(sl).coeffs
    assert np.allclose(rows @ np.ones(9), 1, atol=1e-10)
    assert np.allclose(rows @ sl.alpha_obs, sl.alpha_future, atol=1e-10)
    sample = CensoredSample(15, 9, 2.0 + 0.5 * sl.alpha_obs)
    assert np.allclose(predict(blup(sl), sample).values,
                       2.0 + 0.5 * sl.alpha_future, atol=1e-10)


def test_blup_mspe_matches_general_form(normal15):
    sl = slice_moments(normal15, 9, [10, 12, 15])
    unbiased = blup(sl)
    reference = blup_mspe(sl).w
    for delta in (-3.0, 0.0, 0.7, 5.0):
        w = blip_mspe(unbiased, sl, delta).w
        assert np.allclose(w, reference, atol=1e-10)
    with pytest.raises(ValueError):
        blip_mspe(unbiased, sl)


def test_zero_predictor(normal15):
    sl = slice_moments(normal15, 9, [12])
    w = mspe_matrix(np.zeros((1, 9)), sl, 0.0).w
    assert abs(w[0, 0] - (sl.omega_ff[0, 0] + sl.alpha_future[0] ** 2)) <= 1e-12
    sample = CensoredSample(15, 9, np.linspace(0, 1, 9))
    zero = LinearPredictor("blup", [12], np.zeros((1, 9)))
    assert np.all(predict(zero, sample).values == 0)


def test_identity_predictor(normal15):
    sl = slice_moments(normal15, 9, [10])
    row = np.eye(9)[[8]]
    sample = CensoredSample(15, 9, np.linspace(0, 1, 9))
    assert predict(LinearPredictor("blup", [10], row), sample).values[0] == 1.0
    # unbiased only up to alpha_10 - alpha_9
    w = mspe_matrix(row, sl, 1.0).w[0, 0]
    expected = (sl.alpha_obs[8] - sl.alpha_future[0]) ** 2 + sl.sigma_obs[8, 8] \
        - 2 * sl.omega[8, 0] + sl.omega_ff[0, 0]
    assert abs(w - expected) <= 1e-12


@pytest.mark.parametrize("s", [4, 5])
@pytest.mark.parametrize("delta", [0.5, 1.0, 2.0])
def test_blip_minimizes_mspe(exponential5, s, delta):
    sl = slice_moments(exponential5, 3, [s])
    col = 0
    c = sl.alpha_obs + delta

    def fun(a):
        return _mspe(a, sl, col, delta)

    def jac(a):
        bias = delta * (a.sum() - 1) + a @ sl.alpha_obs - sl.alpha_future[col]
        return 2 * bias * c + 2 * sl.sigma_obs @ a - 2 * sl.omega[:, col]

    def hess(a):
        return 2 * (sl.sigma_obs + np.outer(c, c))

    rng = np.random.default_rng(s)
    best = blip(sl, delta).coeffs[0]
    for __ in range(5):
        res = minimize(fun, rng.uniform(-2, 2, 3), jac=jac, hess=hess,
                       method="trust-exact", options={"gtol": 1e-10})
        assert np.allclose(res.x, best, atol=1e-6)
        assert fun(best) <= res.fun + 1e-12
    assert abs(blip_mspe(blip(sl, delta), sl).w[0, 0] - fun(best)) <= 1e-12


def test_normal_equations(normal15):
    sl = slice_moments(normal15, 9, range(10, 16))
    for delta in (-2.0, 0.3, 1.328, 10.0):
        system = gamma_system(sl, delta)
        rhs = system.delta_vec(sl, list(range(6)))
        rows = blip(sl, delta).coeffs
        residual = system.gamma @ rows.T - rhs
        assert np.max(np.abs(residual)) <= 1e-10 * max(1.0, np.max(np.abs(rhs)))


def test_blip_beats_blup(normal15):
    sl = slice_moments(normal15, 9, range(10, 16))
    reference = blup_mspe(sl).diagonal
    for delta in (-4.0, -0.5, 0.1, 1.328, 8.0):
        w = blip_mspe(blip(sl, delta), sl)
        assert np.all(w.diagonal <= reference + 1e-12)
        assert w.is_psd()


def test_dominance(exponential5):
    sl = slice_moments(exponential5, 3, [4, 5])
    delta = 1.0
    best = blip(sl, delta)
    rng = np.random.default_rng(11)
    weights = rng.normal(size=(20, 2))
    for __ in range(1000):
        rival = rng.uniform(-2, 2, size=(2, 3))
        w = mspe_matrix(rival, sl, delta)
        assert w.is_psd()
        for v in weights:
            assert dominance_gap(best, rival, sl, delta, v) >= -1e-10
    assert abs(dominance_gap(best, best.coeffs, sl, delta, [1.0, 1.0])) <= 1e-12
    assert dominance_gap(best, blup(sl).coeffs, sl, delta, [1.0, 0.0]) >= 0
    with pytest.raises(ValueError):
        dominance_gap(best, best.coeffs, sl, 2.0, [1.0, 0.0])


def test_joint_determinant_is_minimal():
    ms = compute_moments(ParentModel("exponential", "closed"), 8)
    sl = slice_moments(ms, 4, [5, 6, 8])
    delta = 1.0
    best = blip(sl, delta).coeffs
    base = mspe_matrix(best, sl, delta).det()
    assert base > 0
    rng = np.random.default_rng(5)
    for __ in range(100):
        step = np.zeros_like(best)
        step[rng.integers(3)] = rng.normal(size=4)
        step *= rng.choice([-1e-4, 1e-4]) / np.linalg.norm(step)
        assert mspe_matrix(best + step, sl, delta).det() >= base - 1e-15


def test_kaminsky(normal15, lead):
    sl = slice_moments(normal15, 9, range(10, 16))
    g = gls_scalars(sl)
    b = blue(lead, sl)
    predictor = kaminsky_predictor(sl)
    reference = blup_mspe(sl).diagonal
    inv_omega = np.linalg.solve(sl.sigma_obs, sl.omega)
    a = 1 - inv_omega.sum(axis=0)
    bb = sl.alpha_future - sl.alpha_obs @ inv_omega
    c22 = g.v1 / g.big_delta
    c12 = (bb * g.v1 - a * g.v3) / g.big_delta
    expected = reference - c12 ** 2 / (1 + c22)
    for delta in (0.0, 1.328, 5.0):
        w = mspe_matrix(predictor.coeffs, sl, delta).diagonal
        assert np.allclose(w, expected, atol=1e-10)
    assert np.allclose(predictor.coeffs @ np.ones(9), 1, atol=1e-10)
    shrink = c12 / (1 + c22) * b.sigma_star
    assert np.allclose(predict(predictor, lead).values,
                       predict(blup(sl), lead).values - shrink, atol=1e-10)
    for k, s in enumerate(range(10, 16)):
        value, mspe = kaminsky_blip(sl, b, lead, target=s)
        assert abs(value - predict(predictor, lead).values[k]) <= 1e-10
        assert abs(mspe - expected[k]) <= 1e-10
    with pytest.raises(ValueError):
        kaminsky_blip(sl, b, lead)


def test_lead_table(normal15, lead):
    sl = slice_moments(normal15, 9, range(10, 16))
    delta = delta_hat(blue(lead, sl))
    best, unbiased = blip(sl, delta), blup(sl)
    assert np.allclose(predict(best, lead).values, TABLE_BLIP, atol=0.01)
    assert np.allclose(predict(unbiased, lead).values, TABLE_BLUP, atol=0.01)
    mspe_blip = blip_mspe(best, sl).diagonal
    mspe_blup = blup_mspe(sl).diagonal
    assert np.allclose(mspe_blip, TABLE_MSPE_BLIP, atol=0.002)
    assert np.allclose(mspe_blup, TABLE_MSPE_BLUP, atol=0.002)
    assert np.allclose(mspe_blip / mspe_blup, TABLE_RE1, atol=0.002)
    original = predict(best, lead).original
    assert np.allclose(original, np.exp(predict(best, lead).values))


def test_scale_example():
    ms = compute_moments(ParentModel("exponential", "closed"), 2)
    sl = slice_moments(ms, 1, [2])
    best = scale_blip(sl)
    assert abs(best.coeffs[0, 0] - 2.0) <= 1e-12
    assert abs(best.coeffs[0] @ sl.alpha_obs - sl.alpha_future[0] + 0.5) <= 1e-12
    assert abs(scale_mspe(best, sl).w[0, 0] - 1.5) <= 1e-12
    unbiased = scale_blup(sl)
    assert abs(unbiased.coeffs[0, 0] - 3.0) <= 1e-12
    assert abs(scale_blup_mspe(sl).w[0, 0] - 2.0) <= 1e-12


def test_scale_blip_is_blip_at_zero(normal15):
    sl = slice_moments(normal15, 9, [11, 14])
    assert np.allclose(scale_blip(sl).coeffs, blip(sl, 0.0).coeffs, atol=1e-12)
    assert np.all(scale_mspe(scale_blip(sl), sl).diagonal
                  <= scale_blup_mspe(sl).diagonal + 1e-12)
    assert np.allclose(scale_blup(sl).coeffs @ sl.alpha_obs, sl.alpha_future,
                       atol=1e-10)


def test_combine(normal15):
    sl = slice_moments(normal15, 9, [10, 15])
    best = blip(sl, 1.0)
    row = combine(best, [0.5, 2.0])
    assert np.allclose(row, 0.5 * best.coeffs[0] + 2.0 * best.coeffs[1])
    with pytest.raises(ValueError):
        combine(best, [1.0])


def test_target_subsets(normal15):
    sl = slice_moments(normal15, 9, range(10, 16))
    part = blip(sl, 1.0, targets=[11, 14])
    full = blip(sl, 1.0)
    assert part.targets == (11, 14)
    assert np.allclose(part.coeffs, full.coeffs[[1, 4]])
    with pytest.raises(ValueError):
        blip(sl, 1.0, targets=[10, 10])
    with pytest.raises(ValueError):
        blup(sl, targets=[])
    with pytest.raises(ValueError):
        blip(sl, float("nan"))
    with pytest.raises(ValueError):
        predict(full, CensoredSample(15, 8, np.arange(8.0)))


def test_gamma_cache(normal15):
    sl = slice_moments(normal15, 9, [10])
    assert gamma_system(sl, 1.0) is gamma_system(sl, 1.0 + 1e-15)
    assert gamma_system(sl, 1.0) is not gamma_system(sl, 2.0)
    assert len(GAMMA_CACHE) >= 2
    cache = _GammaCache(maxsize=2)
    for key in "abc":
        cache.get(key, lambda: key.upper())
    assert len(cache) == 2
    assert cache.get("a", lambda: "fresh") == "fresh"


def test_containers():
    with pytest.raises(InvariantViolation):
        LinearPredictor("blip", [10, 11], np.zeros((1, 9)))
    with pytest.raises(InvariantViolation):
        LinearPredictor("blip", [10], [[np.inf] * 9])
    with pytest.raises(ValueError):
        LinearPredictor("best", [10], np.zeros((1, 9)))
    with pytest.raises(InvariantViolation):
        MSPEMatrix([[1.0, 0.5], [0.4, 1.0]])
    with pytest.raises(InvariantViolation):
        MSPEMatrix([[0.0, 0.0], [0.0, 1.0]])
    w = MSPEMatrix([[2.0, 0.5], [0.5, 1.0]])
    assert w.trace() == 3.0
    assert abs(w.det() - 1.75) <= 1e-12
    assert w.quadratic([1.0, 1.0]) == 4.0
    data = w.scaled(4.0)
    assert data.units == "data"
    assert data.trace() == 12.0
    with pytest.raises(ValueError):
        w.scaled(0.0)
    record = LinearPredictor("blup", [10], np.ones((1, 2))).to_dict(w)
    assert record["mspe_units"] == "sigma2"


def test_joint_first_order_conditions(normal15):
    sl = slice_moments(normal15, 9, [10, 15])
    for delta in (0.5, 1.328, 4.0):
        system = gamma_system(sl, delta)
        rows = blip(sl, delta).coeffs
        targets = system.delta_vec(sl, [0, 1])
        w = mspe_matrix(rows, sl, delta).w
        grad_a = system.gamma @ rows[0] - targets[:, 0]
        grad_b = system.gamma @ rows[1] - targets[:, 1]
        assert np.max(np.abs(grad_a * w[1, 1] - grad_b * w[0, 1])) <= 1e-9
        assert np.max(np.abs(grad_b * w[0, 0] - grad_a * w[0, 1])) <= 1e-9


@pytest.mark.parametrize("family,method", [("gumbel", "quadrature"),
                                           ("normal", "quadrature"),
                                           ("uniform", "closed")])
def test_single_observation_is_singular(family, method):
    sl = slice_moments(compute_moments(ParentModel(family, method), 5), 1, [5])
    with pytest.raises(SingularSystemError):
        blup(sl)
    with pytest.raises(SingularSystemError):
        blup_mspe(sl)
    with pytest.raises(SingularSystemError):
        kaminsky_predictor(sl)


def test_kaminsky_lead_value(normal15, lead):
    sl = slice_moments(normal15, 9, [10])
    value, mspe = kaminsky_blip(sl, blue(lead, sl), lead)
    assert abs(value - 3.00940) <= 5e-4
    assert abs(mspe - 0.029005) <= 1e-4
    assert blip_mspe(blip(sl, delta_hat(blue(lead, sl))), sl).w[0, 0] < mspe
    assert mspe < blup_mspe(sl).w[0, 0]


def test_kaminsky_without_correction(normal15, lead):
    sl = slice_moments(normal15, 9, [10])
    g = gls_scalars(sl)
    inv_omega = np.linalg.solve(sl.sigma_obs, sl.omega[:, 0])
    a = 1 - inv_omega.sum()
    # choose alpha_s so that B V1 = A V3, which makes c12 vanish
    alpha_s = sl.alpha_obs @ inv_omega + a * g.v3 / g.v1
    sl = replace(sl, alpha_future=np.array([alpha_s]), digest="")
    assert np.allclose(kaminsky_predictor(sl).coeffs, blup(sl).coeffs, atol=1e-10)
    value, mspe = kaminsky_blip(sl, blue(lead, sl), lead)
    assert abs(value - predict(blup(sl), lead).values[0]) <= 1e-10
    assert abs(mspe - blup_mspe(sl).w[0, 0]) <= 1e-12
