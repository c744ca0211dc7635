import numpy as np
import pytest
from scipy import integrate
from scipy.special import expit, gamma as gamma_fn
from scipy.stats import norm

import survrank as sr
from conftest import random_x

D = 4


# --- survival / density point values -----------------------------------------


def test_cox_exponential_median():
    m = sr.CoxPH(beta=np.zeros(3))
    assert m.survival(np.log(2.0), np.zeros(3)) == pytest.approx(0.5, abs=1e-12)


def test_weibull_unit_shape_survival():
    m = sr.WeibullShape(beta=np.zeros(3))  # k(x) = 1 everywhere
    assert m.survival(1.0, np.zeros(3)) == pytest.approx(np.exp(-1.0), abs=1e-12)


def test_aft_survival_is_gaussian_tail():
    m = sr.LogNormalAFT(beta=np.zeros(3), noise_sd=1.0)
    # S(1|x) = P(eps > 0) = 1/2, the Gaussian CDF oracle at zero
    assert m.survival(1.0, np.zeros(3)) == pytest.approx(0.5, abs=1e-12)


def test_cox_density_near_zero_equals_rate():
    m = sr.CoxPH(beta=np.zeros(2), baseline_rate=1.0)
    assert m.density(1e-12, np.zeros(2)) == pytest.approx(1.0, rel=1e-9)


def test_weibull_density_point():
    m = sr.WeibullShape(beta=np.array([np.log(2.0)]))  # k = 2 at x = 1
    x = np.array([1.0])
    assert m.density(1.0, x) == pytest.approx(2.0 * np.exp(-1.0), rel=1e-12)


@pytest.mark.parametrize("name", ["cox", "aft", "afth", "weibull", "exp_rate", "dice"])
def test_density_integrates_to_one(model_zoo, name):
    model = model_zoo[name]
    rng = np.random.default_rng(3)
    x = random_x(model, rng)
    # adaptive quadrature oracle, horizon where the survival tail is < 1e-12
    t_max = 1.0
    while model.survival(t_max, x) > 1e-12:
        t_max *= 2.0
    val, _ = integrate.quad(lambda t: model.density(t, x), 0.0, t_max, limit=400)
    assert val == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("name", ["cox", "aft", "afth", "weibull", "exp_rate", "dice"])
def test_survival_shape_constraints(model_zoo, name):
    model = model_zoo[name]
    rng = np.random.default_rng(5)
    x = random_x(model, rng)
    assert model.survival(0.0, x) == pytest.approx(1.0, abs=1e-12)
    grid = np.linspace(0.0, 30.0, 40)
    vals = [model.survival(t, x) for t in grid]
    assert np.all(np.diff(vals) <= 1e-12)
    assert vals[-1] < 0.05
    with pytest.raises(ValueError):
        model.survival(-0.1, x)
    with pytest.raises(ValueError):
        model.density(0.0, x)


# --- sampling ---------------------------------------------------------------


def test_cox_sample_mean():
    m = sr.CoxPH(beta=np.zeros(2), baseline_rate=1.0)
    rng = np.random.default_rng(11)
    t = m.sample_times(np.zeros((100_000, 2)), rng)
    assert t.mean() == pytest.approx(1.0, abs=0.02)


def test_aft_sample_median():
    m = sr.LogNormalAFT(beta=np.zeros(2), noise_sd=1.0)
    rng = np.random.default_rng(12)
    t = m.sample_times(np.zeros((100_000, 2)), rng)
    assert np.median(t) == pytest.approx(1.0, abs=0.02)


def test_weibull_sample_mean_gamma_oracle():
    m = sr.WeibullShape(beta=np.array([np.log(2.0)]))
    rng = np.random.default_rng(13)
    t = m.sample_times(np.ones((100_000, 1)), rng)
    assert t.mean() == pytest.approx(np.sqrt(np.pi) / 2.0, abs=0.01)


def test_sampling_deterministic_given_seed(model_zoo):
    for model in model_zoo.values():
        X = sr.one_hot([0, 1, 2]) if model.kind == "dice_cycle" else np.zeros((3, D))
        a = model.sample_times(X, np.random.default_rng(42))
        b = model.sample_times(X, np.random.default_rng(42))
        assert np.array_equal(a, b)


# --- pairwise probabilities ---------------------------------------------------


@pytest.mark.parametrize("name", ["cox", "aft", "afth", "weibull", "exp_rate", "dice"])
def test_pairwise_self_is_half(model_zoo, name):
    model = model_zoo[name]
    rng = np.random.default_rng(2)
    x = random_x(model, rng)
    assert model.pairwise_prob(x, x) == pytest.approx(0.5, abs=1e-9)


def test_weibull_equal_shapes_exact_half():
    assert sr.weibull_win_prob(0.0) == pytest.approx(0.5, abs=1e-8)


def test_weibull_win_prob_matches_tail_expansion():
    # integral_0^1 e^{-u^2 - u} du has the closed Gaussian-CDF form
    target = np.sqrt(np.pi) * np.exp(0.25) * (norm.cdf(3 * np.sqrt(2) / 2) - norm.cdf(np.sqrt(2) / 2))
    val, _ = integrate.quad(lambda u: np.exp(-u * u - u), 0.0, 1.0)
    assert val == pytest.approx(target, abs=1e-12)
    assert val == pytest.approx(0.507, abs=1e-3)


@pytest.mark.parametrize("name", ["cox", "aft", "afth", "exp_rate", "dice"])
def test_pairwise_antisymmetry_closed_forms(model_zoo, name):
    model = model_zoo[name]
    rng = np.random.default_rng(21)
    for _ in range(25):
        x1, x2 = random_x(model, rng), random_x(model, rng)
        s = model.pairwise_prob(x1, x2) + model.pairwise_prob(x2, x1)
        assert s == pytest.approx(1.0, abs=1e-9)


def test_pairwise_antisymmetry_quadrature():
    model = sr.WeibullShape(beta=np.array([0.8, -0.4]))
    rng = np.random.default_rng(22)
    for _ in range(25):
        x1, x2 = rng.standard_normal(2), rng.standard_normal(2)
        s = model.pairwise_prob(x1, x2) + model.pairwise_prob(x2, x1)
        assert s == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("name", ["cox", "aft", "afth", "weibull", "exp_rate", "dice"])
def test_pairwise_matrix_and_pairs_match_scalar(model_zoo, name):
    model = model_zoo[name]
    rng = np.random.default_rng(23)
    X1 = np.vstack([random_x(model, rng) for _ in range(5)])
    X2 = np.vstack([random_x(model, rng) for _ in range(5)])
    mat = model.pairwise_prob_matrix(X1, X2)
    pairs = model.pairwise_prob_pairs(X1, X2)
    for i in range(5):
        assert pairs[i] == pytest.approx(model.pairwise_prob(X1[i], X2[i]), abs=1e-7)
        for j in range(5):
            assert mat[i, j] == pytest.approx(model.pairwise_prob(X1[i], X2[j]), abs=1e-7)


def test_monte_carlo_agreement_all_families(model_zoo):
    """Win probabilities vs a million-draw sampling oracle, 50 pairs per family."""
    rng = np.random.default_rng(4)
    n = 1_000_000
    for model in model_zoo.values():
        for _ in range(50):
            x1, x2 = random_x(model, rng), random_x(model, rng)
            p = model.pairwise_prob(x1, x2)
            t1 = model.sample_times(np.tile(x1, (n, 1)), rng)
            t2 = model.sample_times(np.tile(x2, (n, 1)), rng)
            mc = float(np.mean(t1 > t2))
            se = max(np.sqrt(p * (1.0 - p) / n), 1e-12)
            assert abs(mc - p) <= 3.0 * se, (model.kind, p, mc)


# --- risk orderings -----------------------------------------------------------


@pytest.mark.parametrize("name", ["cox", "aft", "afth", "weibull", "exp_rate"])
def test_optimal_score_orders_pairwise_majority(model_zoo, name):
    """Lower optimal score must imply win probability >= 1/2, 100 random pairs."""
    model = model_zoo[name]
    rng = np.random.default_rng(31)
    for _ in range(100):
        x1, x2 = random_x(model, rng), random_x(model, rng)
        if model.optimal_ordering_score(x1) > model.optimal_ordering_score(x2):
            x1, x2 = x2, x1
        assert model.pairwise_prob(x1, x2) >= 0.5 - 1e-9


def test_cox_score_direction_example():
    beta = np.array([1.0, 0.0])
    m = sr.CoxPH(beta=beta)
    x_hi, x_lo = np.array([0.3, 0.0]), np.array([-0.3, 0.0])
    assert m.optimal_ordering_score(x_hi) > m.optimal_ordering_score(x_lo)
    assert m.pairwise_prob(x_hi, x_lo) < 0.5


def test_weibull_score_direction_example():
    m = sr.WeibullShape(beta=np.array([1.0]))
    x2, x1 = np.array([np.log(2.0)]), np.array([0.0])  # shapes 2 and 1
    assert m.optimal_ordering_score(x2) == pytest.approx(-2.0)
    assert m.optimal_ordering_score(x1) == pytest.approx(-1.0)
    p = m.pairwise_prob(x2, x1)
    assert p == pytest.approx(1.0 - sr.weibull_win_prob(np.log(0.5)), abs=1e-8)
    assert p > 0.5


def test_afth_direction_matches_gaussian_oracle():
    m = sr.HeteroscedasticAFT(beta=np.array([1.0]), sigma_fn=None, sigma_floor=0.5)
    # f = 0 with sigma(0), f' = 1 with sigma(1); win prob from the Gaussian CDF
    s0, s1 = m.sigma_fn(0.0), m.sigma_fn(1.0)
    expected = norm.cdf((0.0 - 1.0) / np.hypot(s0, s1))
    assert m.pairwise_prob(np.array([0.0]), np.array([1.0])) == pytest.approx(expected, abs=1e-12)
    assert expected < 0.5
    assert m.optimal_ordering_score(np.array([0.0])) > m.optimal_ordering_score(np.array([1.0]))


@pytest.mark.parametrize("name", ["cox", "aft"])
def test_mean_ordering_is_optimal_for_non_crossing_families(model_zoo, name):
    model = model_zoo[name]
    rng = np.random.default_rng(41)
    X = rng.standard_normal((50, D))
    by_neg_mean = np.argsort(-model.conditional_expectation(X), kind="stable")
    by_score = np.argsort(model.optimal_ordering_score(X), kind="stable")
    assert np.array_equal(by_neg_mean, by_score)


def test_weibull_mean_ordering_disagrees_with_optimal():
    m = sr.WeibullShape(beta=np.array([1.0]))
    x_a = np.array([np.log(1.2)])
    x_b = np.array([np.log(3.0)])
    # Gamma-function oracle for the conditional means
    ce_a, ce_b = gamma_fn(1 + 1 / 1.2), gamma_fn(1 + 1 / 3.0)
    assert m.conditional_expectation(x_a) == pytest.approx(ce_a, rel=1e-12)
    assert ce_a > ce_b  # the mean prefers the SMALLER shape here
    score_a, score_b = m.optimal_ordering_score(x_a), m.optimal_ordering_score(x_b)
    # risk by negative mean calls a safer; the optimal ordering calls a riskier
    assert np.sign(-ce_a - (-ce_b)) != np.sign(score_a - score_b)


def test_weibull_mean_values():
    m = sr.WeibullShape(beta=np.array([1.0]))
    assert m.conditional_expectation(np.array([0.0])) == pytest.approx(1.0, rel=1e-12)
    assert m.conditional_expectation(np.array([np.log(2.0)])) == pytest.approx(
        gamma_fn(1.5), rel=1e-12
    )


def test_cox_mean():
    m = sr.CoxPH(beta=np.zeros(2), baseline_rate=1.0)
    assert m.conditional_expectation(np.zeros(2)) == pytest.approx(1.0, rel=1e-12)


def test_dice_cycle_probabilities_and_no_ordering():
    m = sr.DiscreteJitterCycle()
    pm = m.group_prob_matrix()
    for i, j in ((0, 1), (1, 2), (2, 0)):
        assert pm[i, j] == pytest.approx(5.0 / 9.0, abs=0.01)
    means = [m.conditional_expectation(sr.one_hot([g])[0]) for g in range(3)]
    assert np.allclose(means, 5.0)
    with pytest.raises(sr.NoOptimalOrderingError):
        m.optimal_ordering_score(sr.one_hot([0])[0])


def test_family_tags(model_zoo):
    tags = {name: model.family for name, model in model_zoo.items()}
    assert tags == {
        "cox": "A",
        "aft": "A",
        "afth": "B",
        "weibull": "C",
        "exp_rate": "C",
        "dice": "D",
    }


# --- generic exponential-family machinery --------------------------------------


def rayleigh_family(beta, with_hooks=False):
    """Rayleigh conditionals: mu(t|x) = 2 lam t exp(-lam t^2), lam = exp(-theta)."""
    beta = np.asarray(beta, dtype=float)

    def theta_fn(x):
        return float(np.asarray(x, dtype=float) @ beta)

    hooks = {}
    if with_hooks:
        hooks = dict(
            survival_fn=lambda t, th: np.exp(-np.exp(-th) * t * t),
            mean_fn=lambda th: 0.5 * np.sqrt(np.pi / np.exp(-th)),
            pairwise_fn=lambda th1, th2: expit(th1 - th2),
            sampler_fn=lambda th, rng: np.sqrt(rng.exponential(np.exp(th))),
        )
    return sr.ScalarExpFamily(
        theta_fn=theta_fn,
        eta=lambda v: -np.exp(-v),
        tau=lambda t: t * t,
        log_base=lambda t: np.log(2.0 * t),
        log_partition=lambda v: v,
        label="rayleigh",
        **hooks,
    )


def test_generic_exp_family_matches_closed_forms():
    beta = np.array([0.6, -0.3])
    generic = rayleigh_family(beta, with_hooks=False)
    closed = rayleigh_family(beta, with_hooks=True)
    rng = np.random.default_rng(50)
    for _ in range(4):
        x1, x2 = rng.standard_normal(2), rng.standard_normal(2)
        for t in (0.4, 1.1, 2.5):
            assert generic.survival(t, x1) == pytest.approx(closed.survival(t, x1), abs=1e-7)
            assert generic.density(t, x1) == pytest.approx(closed.density(t, x1), rel=1e-9)
        assert generic.pairwise_prob(x1, x2) == pytest.approx(
            closed.pairwise_prob(x1, x2), abs=1e-5
        )
        assert generic.conditional_expectation(x1) == pytest.approx(
            closed.conditional_expectation(x1), rel=1e-5
        )


def test_generic_exp_family_sampler_inverts_survival():
    beta = np.array([0.4])
    generic = rayleigh_family(beta, with_hooks=False)
    x = np.array([0.5])
    rng = np.random.default_rng(51)
    draws = generic.sample_times(np.tile(x, (3000, 1)), rng)
    lam = np.exp(-0.5 * 0.4)
    # empirical CDF vs the closed Rayleigh survival
    grid = np.linspace(0.2, 2.5, 12)
    for t in grid:
        emp = np.mean(draws > t)
        assert emp == pytest.approx(np.exp(-lam * t * t), abs=0.03)


def test_exp_rate_family_is_exponential():
    beta = np.array([0.5, -0.5])
    m = sr.exp_rate_family(beta)
    x = np.array([1.0, 0.0])
    rate = np.exp(0.5)
    assert m.survival(1.0, x) == pytest.approx(np.exp(-rate), rel=1e-12)
    assert m.conditional_expectation(x) == pytest.approx(1.0 / rate, rel=1e-12)
    # higher beta.x = higher rate = shorter survival = higher risk score
    assert m.optimal_ordering_score(x) == pytest.approx(0.5)


# --- config round trips ---------------------------------------------------------


@pytest.mark.parametrize("name", ["cox", "aft", "afth", "weibull", "exp_rate", "dice"])
def test_config_round_trip(model_zoo, name):
    model = model_zoo[name]
    text = sr.model_to_config(model)
    back = sr.model_from_config(text)
    assert back.kind == model.kind
    rng = np.random.default_rng(60)
    x1, x2 = random_x(model, rng), random_x(model, rng)
    assert back.pairwise_prob(x1, x2) == pytest.approx(model.pairwise_prob(x1, x2), abs=1e-12)
    assert back.survival(0.7, x1) == pytest.approx(model.survival(0.7, x1), abs=1e-12)


def test_custom_sigma_not_serializable():
    m = sr.HeteroscedasticAFT(
        beta=np.ones(2),
        sigma_fn=lambda f: 1.0 + 0.0 * np.asarray(f, dtype=float),
        sigma_floor=1.0,
    )
    with pytest.raises(ValueError, match="softplus"):
        sr.model_to_config(m)


def test_model_config_rejects_unknown_kind():
    with pytest.raises(ValueError, match="unknown model kind"):
        sr.model_from_config("kind = gompertz\nbeta = 1.0\n")


def test_sigma_fn_must_be_monotone():
    with pytest.raises(ValueError, match="non-decreasing"):
        sr.HeteroscedasticAFT(beta=np.ones(2), sigma_fn=lambda f: 1.0 / (1.0 + np.exp(f)) + 0.1)


def test_parameter_validation():
    with pytest.raises(ValueError):
        sr.CoxPH(beta=np.ones(2), baseline_rate=0.0)
    with pytest.raises(ValueError):
        sr.LogNormalAFT(beta=np.ones(2), noise_sd=-1.0)
    with pytest.raises(ValueError):
        sr.DiscreteJitterCycle(jitter_sd=0.0)
