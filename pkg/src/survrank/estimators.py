"""Training losses for linear risk models, with analytic gradients.

Every loss maps a parameter vector theta = [beta_1..beta_d, intercept] to
(value, gradient) so the shared first-order optimizer can drive any of them:

* ``fy_loss_grad``        convex conjugate-pair loss with inverse censoring
                          weights 1/G-hat(u); its population minimizer is a
                          monotone transform of E[T|x] (an anti-risk score:
                          negate it before computing a concordance index).
* ``mle_loss_grad``       censored negative log-likelihood for exponential
                          proportional hazards, Weibull shape, or log-normal
                          AFT conditionals.
* ``cox_partial_loss_grad``  negative mean Cox partial log-likelihood with
                          Breslow handling of tied times; the intercept cancels.
* ``smooth_c_loss_grad``  sigmoid-smoothed weighted concordance (non-convex);
                          as the temperature goes to 0 the magnitude of the
                          loss approaches the weighted concordance itself.
* ``fit_pairwise_model``  weighted logistic regression for pairwise win
                          probabilities on antisymmetric pair features.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._numeric import norm_logcdf, sigmoid, softplus
from .censoring import Dataset, ipcw_weight
from .optim import OptConfig, OptReport, minimize

__all__ = [
    "LinearRiskModel",
    "FenchelRegularizer",
    "squared_regularizer",
    "entropic_regularizer",
    "fy_loss_grad",
    "mle_loss_grad",
    "cox_partial_loss_grad",
    "smooth_c_loss_grad",
    "PairwiseModel",
    "fit_fy",
    "fit_mle",
    "fit_cox",
    "fit_smooth_c",
    "fit_pairwise_model",
    "comparable_pairs",
    "MLE_FAMILIES",
]

MLE_FAMILIES = ("exp_ph", "weibull_shape", "lognormal_aft")

DEFAULT_PAIR_CAP = 200_000


@dataclass
class LinearRiskModel:
    """Linear score f(x) = beta.x + intercept."""

    beta: np.ndarray
    intercept: float = 0.0

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        if not (np.all(np.isfinite(self.beta)) and np.isfinite(self.intercept)):
            raise ValueError("parameters must be finite")

    def score(self, X):
        X = np.asarray(X, dtype=float)
        return X @ self.beta + self.intercept

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.beta, [self.intercept]])

    @classmethod
    def from_vector(cls, theta) -> "LinearRiskModel":
        theta = np.asarray(theta, dtype=float)
        return cls(beta=theta[:-1].copy(), intercept=float(theta[-1]))


def _grad_from_scores(dloss_dscore, X) -> np.ndarray:
    """Chain rule through f = X beta + b: returns [X^T g, sum(g)]."""
    return np.concatenate([X.T @ dloss_dscore, [dloss_dscore.sum()]])


# --- conjugate-pair (Fenchel-Young style) losses ----------------------------


@dataclass(frozen=True)
class FenchelRegularizer:
    """Strongly convex potential and its convex conjugate.

    ``omega`` lives on [domain_lo, domain_hi] (hi may be None for unbounded)
    with omega'' >= strong_convexity_mu there; ``omega_conj_prime`` inverts
    ``omega_prime`` on the interior. The induced per-sample cost is
    omega_conj(v) - v * t, minimized in v at omega_prime(t).
    """

    name: str
    domain_lo: float
    domain_hi: float | None
    omega: object
    omega_prime: object
    omega_conj: object
    omega_conj_prime: object
    strong_convexity_mu: float

    def __post_init__(self):
        if not (self.strong_convexity_mu > 0):
            raise ValueError("strong_convexity_mu must be > 0")

    @property
    def gamma(self) -> float:
        return 1.0 / np.sqrt(self.strong_convexity_mu)


def squared_regularizer() -> FenchelRegularizer:
    """omega(u) = u^2/2 on the whole line; conjugate v^2/2; the least-squares link."""
    return FenchelRegularizer(
        name="squared",
        domain_lo=-np.inf,
        domain_hi=None,
        omega=lambda u: 0.5 * np.square(u),
        omega_prime=lambda u: np.asarray(u, dtype=float),
        omega_conj=lambda v: 0.5 * np.square(v),
        omega_conj_prime=lambda v: np.asarray(v, dtype=float),
        strong_convexity_mu=1.0,
    )


def entropic_regularizer(u_max: float = 50.0) -> FenchelRegularizer:
    """omega(u) = u log u - u on [0, u_max]; conjugate' = exp capped at u_max.

    The cap keeps the curvature bound omega'' = 1/u >= 1/u_max positive, so the
    strong-convexity constant is finite; predictions saturate at u_max, which
    is only visible when the conditional mean exceeds the cap.
    """
    if not (u_max > 0):
        raise ValueError("u_max must be > 0")
    log_cap = np.log(u_max)

    def omega(u):
        u = np.asarray(u, dtype=float)
        return np.where(u > 0, u * np.log(np.maximum(u, 1e-300)) - u, 0.0)

    def omega_prime(u):
        return np.log(np.asarray(u, dtype=float))

    def omega_conj(v):
        v = np.asarray(v, dtype=float)
        inner = np.exp(np.minimum(v, log_cap))
        return np.where(v <= log_cap, inner, u_max * v - omega(u_max))

    def omega_conj_prime(v):
        v = np.asarray(v, dtype=float)
        return np.exp(np.minimum(v, log_cap))

    return FenchelRegularizer(
        name="entropic",
        domain_lo=0.0,
        domain_hi=u_max,
        omega=omega,
        omega_prime=omega_prime,
        omega_conj=omega_conj,
        omega_conj_prime=omega_conj_prime,
        strong_convexity_mu=1.0 / u_max,
    )


def fy_loss_grad(reg: FenchelRegularizer, model: LinearRiskModel, dataset: Dataset, curve):
    """Mean of delta * [omega_conj(f) - f u] / G-hat(u); convex in the parameters."""
    w = np.asarray(ipcw_weight(curve, dataset.u, dataset.delta, power=1), dtype=float)
    f = model.score(dataset.x)
    n = dataset.n
    loss = float(np.sum(w * (reg.omega_conj(f) - f * dataset.u)) / n)
    dl = w * (reg.omega_conj_prime(f) - dataset.u) / n
    grad = _grad_from_scores(dl, dataset.x)
    if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
        raise FloatingPointError("non-finite conjugate-pair loss or gradient")
    return loss, grad


# --- parametric maximum likelihood ------------------------------------------


def mle_loss_grad(family: str, model: LinearRiskModel, dataset: Dataset):
    """Censored negative mean log-likelihood and gradient for a named family.

    exp_ph:         rate e^f;      log mu = f - u e^f,        log S = -u e^f
    weibull_shape:  shape k = e^f; log mu = f + (k-1) log u - u^k, log S = -u^k
    lognormal_aft:  log T ~ N(f, 1); Gaussian log-density / log survival of log u
    """
    if family not in MLE_FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {MLE_FAMILIES}")
    u = dataset.u
    if np.any(u <= 0):
        raise ValueError("observed times must be > 0")
    delta = dataset.delta.astype(float)
    f = model.score(dataset.x)
    n = dataset.n

    if family == "exp_ph":
        ef = np.exp(f)
        loglik = delta * f - u * ef
        dscore = delta - u * ef
    elif family == "weibull_shape":
        logu = np.log(u)
        k = np.exp(f)
        with np.errstate(over="raise"):
            try:
                uk = np.exp(k * logu)
            except FloatingPointError:
                return np.inf, np.full(model.beta.size + 1, np.nan)
        loglik = delta * (f + (k - 1.0) * logu) - uk
        dscore = delta * (1.0 + k * logu) - uk * k * logu
    else:  # lognormal_aft, unit log-scale noise
        z = np.log(u) - f
        log_mu = -np.log(u) - 0.5 * np.log(2.0 * np.pi) - 0.5 * z * z
        log_s = norm_logcdf(-z)
        # d/df log S = pdf/cdf at -z (inverse Mills ratio), stable in logs
        mills = np.exp(-0.5 * z * z - 0.5 * np.log(2.0 * np.pi) - log_s)
        loglik = delta * log_mu + (1.0 - delta) * log_s
        dscore = delta * z + (1.0 - delta) * mills

    loss = float(-loglik.sum() / n)
    grad = _grad_from_scores(-dscore / n, dataset.x)
    return loss, grad


# --- Cox partial likelihood --------------------------------------------------


def cox_partial_loss_grad(model: LinearRiskModel, dataset: Dataset):
    """Negative mean partial log-likelihood, Breslow ties, risk sets {j: u_j >= u_i}.

    The intercept cancels inside the risk-set ratio, so its gradient entry is
    exactly zero.
    """
    if not np.any(dataset.delta == 1):
        raise ValueError("the partial likelihood needs at least one event")
    n = dataset.n
    order = np.argsort(-dataset.u, kind="stable")  # decreasing time
    u_sorted = dataset.u[order]
    X_sorted = dataset.x[order]
    f_sorted = np.asarray(model.score(X_sorted), dtype=float)

    # Suffix-style cumulative sums over the risk set {u_j >= u_i}; subtract the
    # max for a stable log-sum-exp.
    fmax = float(f_sorted.max())
    ef = np.exp(f_sorted - fmax)
    cum_ef = np.cumsum(ef)
    cum_efx = np.cumsum(ef[:, None] * X_sorted, axis=0)

    # With ties, every tied event shares the risk set that includes the whole
    # tie group: map each position to the LAST index of its tie block.
    last_of_tie = np.empty(n, dtype=int)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and u_sorted[j + 1] == u_sorted[i]:
            j += 1
        last_of_tie[i : j + 1] = j
        i = j + 1

    events = np.flatnonzero(dataset.delta[order] == 1)
    take = last_of_tie[events]
    denom = cum_ef[take]
    log_denom = np.log(denom) + fmax
    loss = float(-(f_sorted[events] - log_denom).sum() / n)

    risk_mean = cum_efx[take] / denom[:, None]
    grad_beta = -(X_sorted[events] - risk_mean).sum(axis=0) / n
    grad = np.concatenate([grad_beta, [0.0]])
    if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
        raise FloatingPointError("non-finite partial-likelihood loss or gradient")
    return loss, grad


# --- smoothed concordance -----------------------------------------------------


def comparable_pairs(dataset: Dataset, curve, cap: int | None = None, seed: int = 0):
    """Ordered comparable pairs (j event, u_j < u_i) with weights 1/G-hat(u_j)^2.

    Returns (i_idx, j_idx, w). When ``cap`` is given and fewer pairs are kept,
    a seeded uniform subsample is taken so large cohorts stay tractable.
    """
    u = dataset.u
    wrow = np.asarray(ipcw_weight(curve, u, dataset.delta, power=2), dtype=float)
    i_all = []
    j_all = []
    n = dataset.n
    event_rows = np.flatnonzero(dataset.delta == 1)
    for j in event_rows:
        later = np.flatnonzero(u > u[j])
        if later.size:
            i_all.append(later)
            j_all.append(np.full(later.size, j))
    if not i_all:
        raise ValueError("no comparable pairs in the dataset")
    i_idx = np.concatenate(i_all)
    j_idx = np.concatenate(j_all)
    if cap is not None and i_idx.size > cap:
        rng = np.random.default_rng(seed)
        keep = rng.choice(i_idx.size, size=cap, replace=False)
        keep.sort()
        i_idx = i_idx[keep]
        j_idx = j_idx[keep]
    return i_idx, j_idx, wrow[j_idx]


def _smooth_c_core(model: LinearRiskModel, X, i_idx, j_idx, w, sigma: float):
    f = model.score(X)
    z = (f[j_idx] - f[i_idx]) / sigma
    p = sigmoid(z)
    wsum = w.sum()
    loss = float(-(w * p).sum() / wsum)
    dz = -w * p * (1.0 - p) / (sigma * wsum)
    dscore = np.zeros(f.size)
    np.add.at(dscore, j_idx, dz)
    np.add.at(dscore, i_idx, -dz)
    grad = _grad_from_scores(dscore, X)
    return loss, grad


def smooth_c_loss_grad(model: LinearRiskModel, dataset: Dataset, curve, sigma: float):
    """Negative weighted mean of sigmoid((f_j - f_i)/sigma) over comparable pairs.

    The earlier-event member j should outscore i, so the loss sits in (-1, 0)
    and equals -1/2 exactly at beta = 0. Non-convex; fit with restarts.
    """
    if not (sigma > 0):
        raise ValueError("sigma must be > 0")
    i_idx, j_idx, w = comparable_pairs(dataset, curve)
    return _smooth_c_core(model, dataset.x, i_idx, j_idx, w, sigma)


# --- fitting helpers -----------------------------------------------------------


def _fit(loss_grad_vec, d: int, config: OptConfig | None):
    config = config or OptConfig()
    theta, report = minimize(loss_grad_vec, config, dim=d + 1)
    return LinearRiskModel.from_vector(theta), report


def fit_fy(dataset: Dataset, curve, reg: FenchelRegularizer, config: OptConfig | None = None):
    def lg(theta):
        return fy_loss_grad(reg, LinearRiskModel.from_vector(theta), dataset, curve)

    return _fit(lg, dataset.d, config)


def fit_mle(family: str, dataset: Dataset, config: OptConfig | None = None):
    def lg(theta):
        return mle_loss_grad(family, LinearRiskModel.from_vector(theta), dataset)

    return _fit(lg, dataset.d, config)


def fit_cox(dataset: Dataset, config: OptConfig | None = None):
    def lg(theta):
        return cox_partial_loss_grad(LinearRiskModel.from_vector(theta), dataset)

    return _fit(lg, dataset.d, config)


def fit_smooth_c(
    dataset: Dataset,
    curve,
    sigma: float,
    config: OptConfig | None = None,
    n_starts: int = 5,
    seed: int = 0,
    pair_cap: int | None = DEFAULT_PAIR_CAP,
):
    """Multi-start minimization of the smoothed concordance loss; keeps the best run."""
    if not (sigma > 0):
        raise ValueError("sigma must be > 0")
    i_idx, j_idx, w = comparable_pairs(dataset, curve, cap=pair_cap, seed=seed)
    X = dataset.x

    def lg(theta):
        return _smooth_c_core(LinearRiskModel.from_vector(theta), X, i_idx, j_idx, w, sigma)

    base = config or OptConfig()
    rng = np.random.default_rng(seed)
    inits = [np.zeros(dataset.d + 1)]
    inits += [0.5 * rng.standard_normal(dataset.d + 1) for _ in range(max(n_starts - 1, 0))]
    best = None
    for init in inits:
        cfg = OptConfig(
            max_iters=base.max_iters,
            grad_tol=base.grad_tol,
            init=init,
            backtrack_shrink=base.backtrack_shrink,
            armijo_c=base.armijo_c,
        )
        theta, report = minimize(lg, cfg)
        loss = report.loss_trace[-1]
        if best is None or loss < best[0]:
            best = (loss, theta, report)
    _, theta, report = best
    return LinearRiskModel.from_vector(theta), report


# --- pairwise win-probability model -------------------------------------------


@dataclass
class PairwiseModel:
    """Logistic pairwise win-probability model on antisymmetric features.

    Features of an (x, x') pair: [x - x', (x - x') * ((x + x')/2 - center)]
    (elementwise products), so phi(x', x) = -phi(x, x') and the predicted
    h(x, x') = sigmoid(w . phi) satisfies h(x, x') + h(x', x) = 1 exactly,
    with h(x, x) = 1/2. The prediction collapses to a difference of per-point
    scores psi(x) = w1.x + w2.(x^2/2 - center*x), which makes cohort-level
    evaluation linear in the cohort size.
    """

    weights: np.ndarray
    center: np.ndarray
    fit_report: OptReport | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.center = np.asarray(self.center, dtype=float)
        if self.weights.shape != (2 * self.center.size,):
            raise ValueError("weights must have length 2 * d")

    @property
    def d(self) -> int:
        return self.center.size

    def feature_map(self, x, x2) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        diff = x - x2
        mid = 0.5 * (x + x2) - self.center
        return np.concatenate([diff, diff * mid], axis=-1)

    def point_scores(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        w1 = self.weights[: self.d]
        w2 = self.weights[self.d :]
        return X @ w1 + (0.5 * X * X - self.center * X) @ w2

    def prob(self, x, x2) -> float:
        psi = self.point_scores(np.vstack([x, x2]))
        return float(sigmoid(psi[0] - psi[1]))

    def prob_matrix(self, X, X2=None) -> np.ndarray:
        psi1 = self.point_scores(X)
        psi2 = psi1 if X2 is None else self.point_scores(X2)
        return sigmoid(psi1[:, None] - psi2[None, :])


def _pair_logistic_loss(weights, phi, w, ridge):
    z = phi @ weights
    # all pairs are oriented winner-first, so every label is +1
    loss = float(np.sum(w * np.logaddexp(0.0, -z)) / w.sum() + 0.5 * ridge * weights @ weights)
    grad = -(phi.T @ (w * sigmoid(-z))) / w.sum() + ridge * weights
    return loss, grad


def fit_pairwise_model(
    dataset: Dataset,
    curve,
    config: OptConfig | None = None,
    pair_cap: int | None = DEFAULT_PAIR_CAP,
    seed: int = 0,
    ridge: float = 1e-8,
) -> PairwiseModel:
    """Weighted logistic fit of P(T > T' | x, x') over comparable pairs.

    Each comparable pair (i later, j earlier event) is one training example
    oriented winner-first with weight 1/G-hat(u_j)^2; the antisymmetric
    features make the orientation immaterial. A tiny ridge keeps separable
    cohorts bounded; ``fit_report.converged`` flags degenerate fits.
    """
    i_idx, j_idx, w = comparable_pairs(dataset, curve, cap=pair_cap, seed=seed)
    center = dataset.x.mean(axis=0)
    stub = PairwiseModel(weights=np.zeros(2 * dataset.d), center=center)
    phi = stub.feature_map(dataset.x[i_idx], dataset.x[j_idx])

    def lg(weights):
        return _pair_logistic_loss(weights, phi, w, ridge)

    cfg = config or OptConfig()
    weights, report = minimize(lg, cfg, dim=2 * dataset.d)
    return PairwiseModel(weights=weights, center=center, fit_report=report)
