"""Synthetic market generation.

Joint asset-price models couple truncated log-normal marginals through
a factor-structured t-copula.  A family of such models prices each
instrument (single-asset vanilla calls in closed form, everything else
by Monte Carlo), and the bid/ask quotes of the generated market are the
minimum/maximum prices across the family's models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import cpwa
from .cpwa import CpwaFunction
from .ecp import Box, MarketInstance

MC_SAMPLES_DEFAULT = 100000


@dataclass
class MarginalModel:
    mu: np.ndarray  # lognormal location per asset
    sigma2: np.ndarray  # lognormal scale per asset
    xbar: np.ndarray  # truncation bound per asset

    def __post_init__(self):
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        self.sigma2 = np.atleast_1d(np.asarray(self.sigma2, dtype=float))
        self.xbar = np.atleast_1d(np.asarray(self.xbar, dtype=float))
        d = len(self.mu)
        if self.sigma2.shape != (d,) or self.xbar.shape != (d,):
            raise ValueError("mu, sigma2, xbar must have equal length")
        if np.any(self.sigma2 <= 0) or np.any(self.xbar <= 0):
            raise ValueError("sigma2 and xbar must be positive")

    @property
    def dimension(self):
        return len(self.mu)


@dataclass
class CopulaModel:
    loadings: np.ndarray  # d x k factor loadings
    factor_var: np.ndarray  # k factor variances (diagonal)
    idio_var: np.ndarray  # d idiosyncratic variances (diagonal)
    nu: float  # degrees of freedom

    def __post_init__(self):
        self.loadings = np.atleast_2d(np.asarray(self.loadings,
                                                 dtype=float))
        self.factor_var = np.atleast_1d(np.asarray(self.factor_var,
                                                   dtype=float))
        self.idio_var = np.atleast_1d(np.asarray(self.idio_var,
                                                 dtype=float))
        d, k = self.loadings.shape
        if self.factor_var.shape != (k,) or self.idio_var.shape != (d,):
            raise ValueError("factor/idiosyncratic variance shape "
                             "mismatch")
        if np.any(self.factor_var < 0) or np.any(self.idio_var <= 0):
            raise ValueError("variances must be positive")
        if self.nu <= 2:
            raise ValueError("nu must exceed 2")
        C = self.correlation()
        if np.abs(np.diag(C) - 1.0).max() > 1e-8:
            raise ValueError("correlation matrix must have unit diagonal")
        try:
            np.linalg.cholesky(C)
        except np.linalg.LinAlgError:
            raise ValueError("correlation matrix must be positive "
                             "definite")

    @property
    def dimension(self):
        return self.loadings.shape[0]

    def correlation(self):
        L = self.loadings
        return L @ np.diag(self.factor_var) @ L.T + np.diag(self.idio_var)


@dataclass
class MarketModelFamily:
    models: list  # of (MarginalModel, CopulaModel)
    seed: int = 0
    mc_samples: int = MC_SAMPLES_DEFAULT

    def __post_init__(self):
        if not self.models:
            raise ValueError("family needs at least one model")
        d = self.models[0][0].dimension
        for marg, cop in self.models:
            if marg.dimension != d or cop.dimension != d:
                raise ValueError("all models must share the dimension")

    @property
    def dimension(self):
        return self.models[0][0].dimension


def _trunc_lognorm_ppf(u, mu, sigma, xbar):
    """Quantile of a lognormal(mu, sigma^2) conditioned to [0, xbar]."""
    alpha = stats.norm.cdf((np.log(xbar) - mu) / sigma)
    return np.exp(mu + sigma * stats.norm.ppf(u * alpha))


def trunc_lognorm_cdf(x, mu, sigma, xbar):
    alpha = stats.norm.cdf((np.log(xbar) - mu) / sigma)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = stats.norm.cdf((np.log(x[pos]) - mu) / sigma) / alpha
    return np.clip(out, 0.0, 1.0)


def sample_joint(marginal: MarginalModel, copula: CopulaModel, n,
                 seed=0) -> np.ndarray:
    """n x d samples: multivariate t via the factor structure, mapped
    through the t CDF to uniforms, then through the truncated-lognormal
    quantiles."""
    if marginal.dimension != copula.dimension:
        raise ValueError("marginal/copula dimension mismatch")
    d = marginal.dimension
    k = copula.loadings.shape[1]
    rng = np.random.Generator(np.random.Philox(seed))
    factors = rng.standard_normal((n, k)) * np.sqrt(copula.factor_var)
    idio = rng.standard_normal((n, d)) * np.sqrt(copula.idio_var)
    z = factors @ copula.loadings.T + idio
    w = rng.chisquare(copula.nu, size=n) / copula.nu
    t = z / np.sqrt(w)[:, None]
    u = stats.t.cdf(t, df=copula.nu)
    u = np.clip(u, 1e-15, 1.0 - 1e-15)
    sigma = np.sqrt(marginal.sigma2)
    return _trunc_lognorm_ppf(u, marginal.mu, sigma, marginal.xbar)


def trunc_lognorm_call_price(mu, sigma2, xbar, strike) -> float:
    """E[(X - strike)^+] for X lognormal(mu, sigma2) conditioned to
    [0, xbar]."""
    sigma = np.sqrt(sigma2)
    d_hi = (np.log(xbar) - mu) / sigma
    alpha = stats.norm.cdf(d_hi)
    mean = np.exp(mu + sigma2 / 2.0) * stats.norm.cdf(d_hi - sigma) / alpha
    if strike <= 0:
        return float(mean - strike)
    if strike >= xbar:
        return 0.0
    d_k = (np.log(strike) - mu) / sigma
    num = (np.exp(mu + sigma2 / 2.0) *
           (stats.norm.cdf(sigma - d_k) - stats.norm.cdf(sigma - d_hi)) -
           strike * (stats.norm.cdf(d_hi) - stats.norm.cdf(d_k)))
    return float(num / alpha)


def trunc_lognorm_put_price(mu, sigma2, xbar, strike) -> float:
    """Put via parity with the truncated mean."""
    call = trunc_lognorm_call_price(mu, sigma2, xbar, strike)
    mean = trunc_lognorm_call_price(mu, sigma2, xbar, 0.0)
    return float(call - mean + strike)


def price_payoff(marginal: MarginalModel, copula: CopulaModel,
                 payoff: CpwaFunction, n, seed=0):
    """Monte Carlo price of the payoff under the model, with standard
    error of the sample mean."""
    xs = sample_joint(marginal, copula, n, seed)
    vals = cpwa.evaluate_many(payoff, xs)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n))


def as_vanilla_call(payoff: CpwaFunction):
    """Recognize (x_i - strike)^+ (including the plain asset x_i, a
    zero-strike call on the positive domain): returns (asset, strike)
    or None."""
    if len(payoff.terms) != 1 or payoff.terms[0].sign != 1:
        return None
    pieces = [(np.asarray(a), float(b)) for a, b in
              payoff.terms[0].pieces]
    lin = [(a, b) for a, b in pieces if np.abs(a).max(initial=0.0) > 0]
    zero = [(a, b) for a, b in pieces if np.abs(a).max(initial=0.0) == 0]
    if len(lin) != 1:
        return None
    a, b = lin[0]
    j = int(np.argmax(np.abs(a)))
    e = np.zeros(payoff.dimension)
    e[j] = 1.0
    if not np.allclose(a, e, atol=1e-12):
        return None
    strike = -b
    if zero:
        if len(zero) != 1 or abs(zero[0][1]) > 1e-12 or strike < 0:
            return None
        return j, strike
    if strike != 0.0:
        return None  # x_i + const is not a call
    return j, 0.0


def build_market(family: MarketModelFamily, instruments) -> MarketInstance:
    """Price every instrument under every model; bid = min, ask = max.

    Vanilla calls (and plain assets) are priced in closed form, other
    payoffs by one Monte Carlo batch per model, shared across
    instruments."""
    d = family.dimension
    xbar = family.models[0][0].xbar
    for marg, _ in family.models:
        if not np.allclose(marg.xbar, xbar):
            raise ValueError("models must share the truncation bounds")
    prices = np.zeros((len(family.models), len(instruments)))
    for i, (marg, cop) in enumerate(family.models):
        batch = None
        for j, payoff in enumerate(instruments):
            if payoff.dimension != d:
                raise ValueError("instrument dimension mismatch")
            vc = as_vanilla_call(payoff)
            if vc is not None:
                a, k = vc
                prices[i, j] = trunc_lognorm_call_price(
                    marg.mu[a], marg.sigma2[a], marg.xbar[a], k)
            else:
                if batch is None:
                    batch = sample_joint(marg, cop, family.mc_samples,
                                         seed=family.seed + i)
                prices[i, j] = cpwa.evaluate_many(payoff, batch).mean()
    return MarketInstance(dimension=d, domain=Box(tuple(float(v)
                                                        for v in xbar)),
                          g=list(instruments), bid=prices.min(axis=0),
                          ask=prices.max(axis=0))


# ---------------------------------------------------------------------------
# Experiment presets
# ---------------------------------------------------------------------------

BASKET_WEIGHTS_5 = [
    (0.2, 0.2, 0.2, 0.2, 0.2),
    (0.25, 0.25, 0.25, 0.25, 0.0),
    (0.25, 0.25, 0.25, 0.0, 0.25),
    (0.25, 0.25, 0.0, 0.25, 0.25),
    (0.25, 0.0, 0.25, 0.25, 0.25),
    (0.0, 0.25, 0.25, 0.25, 0.25),
    (1 / 3, 1 / 3, 1 / 3, 0.0, 0.0),
    (0.0, 1 / 3, 1 / 3, 1 / 3, 0.0),
    (0.0, 0.0, 1 / 3, 1 / 3, 1 / 3),
    (0.0, 0.5, 0.5, 0.0, 0.0),
    (0.0, 0.5, 0.0, 0.5, 0.0),
    (0.0, 0.0, 0.5, 0.5, 0.0),
]

SPREAD_PAIRS_5 = [
    (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4),
    (3, 4), (1, 0), (2, 0), (3, 0), (2, 1), (3, 1), (4, 1), (3, 2),
    (4, 2), (4, 3),
]

RAINBOW_GROUPS_5 = [
    (0, 1, 2, 3, 4), (0, 1, 2, 3), (1, 2, 3, 4), (1, 2), (1, 3), (2, 3),
]


def five_asset_instruments(include=("assets", "vanilla", "basket",
                                    "spread", "rainbow")):
    """The 439-instrument five-asset benchmark list: the 5 assets,
    vanilla calls with strikes 1..10, 12 basket calls with strikes
    1..10, 18 spread calls with strikes -5..5, and call-on-max options
    on 6 asset groups with strikes 0..10."""
    d = 5
    out = []
    if "assets" in include:
        out += [cpwa.asset(d, i) for i in range(d)]
    if "vanilla" in include:
        out += [cpwa.vanilla_call(d, i, k)
                for i in range(d) for k in range(1, 11)]
    if "basket" in include:
        out += [cpwa.basket_call(w, k)
                for w in BASKET_WEIGHTS_5 for k in range(1, 11)]
    if "spread" in include:
        out += [cpwa.spread_call(d, i, j, k)
                for i, j in SPREAD_PAIRS_5 for k in range(-5, 6)]
    if "rainbow" in include:
        out += [cpwa.call_on_max(d, grp, k)
                for grp in RAINBOW_GROUPS_5 for k in range(0, 11)]
    return out


# Documented synthetic two-factor structure shared by the preset's two
# copulas (the loadings are not dictated by the pricing method; any
# unit-diagonal positive-definite correlation works).
_PRESET_LOADINGS_5 = np.array([
    [0.70, 0.30],
    [0.60, -0.40],
    [0.55, 0.45],
    [0.65, -0.25],
    [0.50, 0.35],
])


def _complete_copula(loadings, nu):
    loadings = np.asarray(loadings, dtype=float)
    d, k = loadings.shape
    factor_var = np.ones(k)
    idio_var = 1.0 - np.sum(loadings ** 2 * factor_var, axis=1)
    return CopulaModel(loadings=loadings, factor_var=factor_var,
                       idio_var=idio_var, nu=nu)


def five_asset_family(seed=0, mc_samples=MC_SAMPLES_DEFAULT
                      ) -> MarketModelFamily:
    """Two-model five-asset preset on [0, 100]^5: equal means, slightly
    different variances, two-factor t-copulas with nu = 3 and nu = 4."""
    xbar = np.full(5, 100.0)
    mu = np.array([0.5, 1.0, 1.0, 0.5, 0.5])
    marg1 = MarginalModel(mu, np.array([0.2, 0.4, 0.2, 0.4, 0.2]), xbar)
    marg2 = MarginalModel(mu, np.array([0.21, 0.42, 0.21, 0.42, 0.21]),
                          xbar)
    cop1 = _complete_copula(_PRESET_LOADINGS_5, nu=3.0)
    cop2 = _complete_copula(_PRESET_LOADINGS_5, nu=4.0)
    return MarketModelFamily(models=[(marg1, cop1), (marg2, cop2)],
                             seed=seed, mc_samples=mc_samples)


def random_family(d, seed=0, mc_samples=MC_SAMPLES_DEFAULT,
                  n_factors=3) -> MarketModelFamily:
    """Two-model random preset: mu ~ U[-0.3, 0.1], sigma2 ~ U[0.2, 0.8]
    per asset (second model's sigma2 shifted up by U[0, 0.1]),
    three-factor t-copulas with nu = 3 and nu = 20."""
    rng = np.random.Generator(np.random.Philox(seed))
    xbar = np.full(d, 100.0)
    mu = rng.uniform(-0.3, 0.1, size=d)
    sigma2 = rng.uniform(0.2, 0.8, size=d)
    sigma2b = sigma2 + rng.uniform(0.0, 0.1, size=d)
    raw = rng.uniform(-1.0, 1.0, size=(d, n_factors))
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    target = rng.uniform(0.3, 0.9, size=(d, 1))
    loadings = raw / np.maximum(norms, 1e-12) * target
    return MarketModelFamily(
        models=[(MarginalModel(mu, sigma2, xbar),
                 _complete_copula(loadings, nu=3.0)),
                (MarginalModel(mu, sigma2b, xbar),
                 _complete_copula(loadings, nu=20.0))],
        seed=seed, mc_samples=mc_samples)
