import numpy as np
import pytest
from scipy import stats, integrate

from pricebounds import cpwa, market
from conftest import rng_for


def _quad_call(mu, s2, xbar, k):
    sigma = np.sqrt(s2)
    alpha = stats.norm.cdf((np.log(xbar) - mu) / sigma)

    def f(x):
        return (max(x - k, 0.0) *
                stats.lognorm.pdf(x, sigma, scale=np.exp(mu)) / alpha)
    val, _ = integrate.quad(f, 0, xbar, limit=200)
    return val


def test_closed_form_call_vs_quadrature():
    for mu, s2, xbar, k in [(0.5, 0.2, 100.0, 3.0),
                            (1.0, 0.4, 100.0, 0.0),
                            (0.0, 0.5, 20.0, 2.5),
                            (-0.3, 0.8, 100.0, 1.0),
                            (0.5, 0.3, 10.0, 8.0)]:
        cf = market.trunc_lognorm_call_price(mu, s2, xbar, k)
        assert cf == pytest.approx(_quad_call(mu, s2, xbar, k),
                                   abs=1e-7)


def test_put_call_parity():
    for k in (0.5, 1.0, 4.0):
        call = market.trunc_lognorm_call_price(0.5, 0.2, 100.0, k)
        put = market.trunc_lognorm_put_price(0.5, 0.2, 100.0, k)
        mean = market.trunc_lognorm_call_price(0.5, 0.2, 100.0, 0.0)
        assert call - put == pytest.approx(mean - k, abs=1e-10)
        assert put >= 0


def test_strike_beyond_truncation_is_free():
    assert market.trunc_lognorm_call_price(0.5, 0.2, 10.0, 12.0) == 0.0


def _two_asset_model():
    marg = market.MarginalModel([0.5, 1.0], [0.2, 0.4], [100.0, 100.0])
    cop = market.CopulaModel(np.array([[0.6, 0.3], [0.5, -0.4]]),
                             np.ones(2),
                             1.0 - np.array([0.45, 0.41]), nu=4.0)
    return marg, cop


def test_samples_respect_truncation():
    marg, cop = _two_asset_model()
    xs = market.sample_joint(marg, cop, 20000, seed=5)
    assert xs.shape == (20000, 2)
    assert xs.min() >= 0.0
    assert xs.max() <= 100.0


def test_marginals_match_truncated_lognormal():
    marg, cop = _two_asset_model()
    xs = market.sample_joint(marg, cop, 100000, seed=7)
    for j in range(2):
        ks = stats.kstest(
            xs[:, j],
            lambda x: market.trunc_lognorm_cdf(
                x, marg.mu[j], np.sqrt(marg.sigma2[j]), marg.xbar[j]))
        assert ks.statistic < 0.01


def test_independence_limit_kendall_tau():
    marg, _ = _two_asset_model()
    cop = market.CopulaModel(np.zeros((2, 2)), np.ones(2), np.ones(2),
                             nu=200.0)
    xs = market.sample_joint(marg, cop, 100000, seed=3)
    tau = stats.kendalltau(xs[:, 0], xs[:, 1]).statistic
    assert abs(tau) < 0.02


def test_copula_validation():
    with pytest.raises(ValueError):
        market.CopulaModel(np.array([[0.9, 0.9]]), np.ones(2),
                           np.array([0.5]), nu=3.0)  # diag != 1
    with pytest.raises(ValueError):
        market.CopulaModel(np.zeros((1, 1)), np.ones(1), np.ones(1),
                           nu=1.0)  # nu too small


def test_price_payoff_constant():
    marg, cop = _two_asset_model()
    price, se = market.price_payoff(marg, cop,
                                    cpwa.constant_function(2, 3.5),
                                    1000, seed=1)
    assert price == pytest.approx(3.5, abs=1e-12)
    assert se == pytest.approx(0.0, abs=1e-12)


def test_mc_matches_closed_form():
    marg, cop = _two_asset_model()
    for asset_idx, k in [(0, 0.0), (0, 3.0), (1, 2.0)]:
        payoff = (cpwa.asset(2, asset_idx) if k == 0.0
                  else cpwa.vanilla_call(2, asset_idx, k))
        mc, se = market.price_payoff(marg, cop, payoff, 400000, seed=11)
        cf = market.trunc_lognorm_call_price(
            marg.mu[asset_idx], marg.sigma2[asset_idx],
            marg.xbar[asset_idx], k)
        assert abs(mc - cf) < 4 * se


def test_basket_below_sum_of_assets():
    marg, cop = _two_asset_model()
    basket, _ = market.price_payoff(
        marg, cop, cpwa.basket_call([0.5, 0.5], 1.0), 50000, seed=2)
    a0 = market.trunc_lognorm_call_price(0.5, 0.2, 100.0, 0.0)
    a1 = market.trunc_lognorm_call_price(1.0, 0.4, 100.0, 0.0)
    assert basket <= 0.5 * a0 + 0.5 * a1 + 1e-9


def test_instrument_count_is_439():
    instr = market.five_asset_instruments()
    assert len(instr) == 439


def test_instrument_subsets():
    assert len(market.five_asset_instruments(("assets",))) == 5
    assert len(market.five_asset_instruments(("vanilla",))) == 50
    assert len(market.five_asset_instruments(("basket",))) == 120
    assert len(market.five_asset_instruments(("spread",))) == 198
    assert len(market.five_asset_instruments(("rainbow",))) == 66


def test_build_market_single_model_zero_spread():
    fam = market.random_family(2, seed=9, mc_samples=5000)
    fam.models = fam.models[:1]
    instruments = [cpwa.asset(2, 0), cpwa.vanilla_call(2, 0, 2.0),
                   cpwa.basket_call([0.5, 0.5], 1.0)]
    inst = market.build_market(fam, instruments)
    assert np.allclose(inst.bid, inst.ask)


def test_build_market_spread_and_determinism():
    fam = market.five_asset_family(seed=4, mc_samples=8000)
    instruments = market.five_asset_instruments(("assets", "vanilla"))
    inst1 = market.build_market(fam, instruments)
    inst2 = market.build_market(fam, instruments)
    assert np.array_equal(inst1.bid, inst2.bid)
    assert np.array_equal(inst1.ask, inst2.ask)
    assert np.all(inst1.bid <= inst1.ask + 1e-12)
    # OTM vanilla calls carry strictly positive spread (vega > 0 and
    # the two models differ in variance)
    otm = [j for j, g in enumerate(instruments)
           if market.as_vanilla_call(g) and
           market.as_vanilla_call(g)[1] >= 5.0]
    assert all(inst1.ask[j] > inst1.bid[j] for j in otm)


def test_call_prices_decrease_in_strike():
    fam = market.random_family(1, seed=12, mc_samples=5000)
    instruments = [cpwa.vanilla_call(1, 0, float(k))
                   for k in range(1, 11)]
    inst = market.build_market(fam, instruments)
    assert np.all(np.diff(inst.ask) <= 1e-12)
    assert np.all(np.diff(inst.bid) <= 1e-12)


def test_random_family_parameter_ranges():
    fam = market.random_family(4, seed=21)
    (m1, c1), (m2, c2) = fam.models
    assert np.all(m1.mu >= -0.3) and np.all(m1.mu <= 0.1)
    assert np.all(m1.sigma2 >= 0.2) and np.all(m1.sigma2 <= 0.8)
    assert np.all(m2.sigma2 >= m1.sigma2)
    assert np.all(m2.sigma2 <= m1.sigma2 + 0.1)
    assert c1.nu == 3.0 and c2.nu == 20.0
