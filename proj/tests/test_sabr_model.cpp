#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "sabr/errors.hpp"
#include "sabr/normal.hpp"
#include "sabr/sabr_model.hpp"
#include "test_helpers.hpp"

using namespace sabr;
using sabr::testing::Draw;

TEST(BsmPrice, ZeroVolIsIntrinsic) {
  EXPECT_NEAR(bsm_price(1.1, {1.0, 1.0, OptionType::call, 0.0}, 0.0), 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(bsm_price(1.1, {1.0, 1.0, OptionType::put, 0.0}, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(bsm_price(0.9, {1.0, 2.0, OptionType::put, 0.05}, 0.0), 0.1 * std::exp(-0.1));
}

TEST(BsmPrice, TinyStrikeCallIsForward) {
  EXPECT_NEAR(bsm_price(1.3, {1e-12, 1.0, OptionType::call, 0.0}, 0.2), 1.3, 1e-11);
}

TEST(BsmPrice, PutCallParityExample) {
  const double f = 0.9, k = 0.85, sigma = 0.12, t = 0.5, r = 0.01;
  const double call = bsm_price(f, {k, t, OptionType::call, r}, sigma);
  const double put = bsm_price(f, {k, t, OptionType::put, r}, sigma);
  EXPECT_NEAR(call - put, std::exp(-r * t) * (f - k), 1e-15);
}

TEST(BsmPrice, PutCallParityOnRandomInputs) {
  Draw draw(2);
  for (int i = 0; i < 10000; ++i) {
    const double f = draw.uniform(0.3, 3.0);
    const double k = f * draw.log_uniform(0.2, 5.0);
    const double t = draw.uniform(0.01, 5.0);
    const double r = draw.uniform(-0.02, 0.08);
    const double sigma = draw.uniform(0.01, 1.5);
    const double call = bsm_price(f, {k, t, OptionType::call, r}, sigma);
    const double put = bsm_price(f, {k, t, OptionType::put, r}, sigma);
    const double df = std::exp(-r * t);
    ASSERT_LE(std::fabs(call - put - df * (f - k)), 1e-12 * df * std::max(f, k));
  }
}

TEST(BsmPrice, DomesticForeignSymmetry) {
  // V(K, phi) = S K Vhat(1/K, -phi), Vhat priced on 1/F and discounted at the foreign rate.
  Draw draw(3);
  for (int i = 0; i < 10000; ++i) {
    const double s = draw.uniform(0.5, 2.0);
    const RateCurvePoint rates{draw.uniform(-0.01, 0.06), draw.uniform(-0.01, 0.06)};
    const double t = draw.uniform(0.01, 3.0);
    const double f = compute_forward(s, rates, t);
    const double k = f * draw.log_uniform(0.5, 2.0);
    const double sigma = draw.uniform(0.02, 0.8);
    const OptionType type = draw.coin() ? OptionType::call : OptionType::put;
    const OptionType flipped = type == OptionType::call ? OptionType::put : OptionType::call;
    const double v = bsm_price(f, {k, t, type, rates.domestic_rate}, sigma);
    const double v_hat = bsm_price(1.0 / f, {1.0 / k, t, flipped, rates.foreign_rate}, sigma);
    const double notional = std::exp(-rates.domestic_rate * t) * std::max(f, k);
    ASSERT_NEAR(v, s * k * v_hat, 1e-10 * std::max(v, 1e-12 * notional)) << "case " << i;
  }
}

TEST(BsmPrice, BoundsHoldOnRandomInputs) {
  Draw draw(1);
  for (int i = 0; i < 3000; ++i) {
    const double f = draw.uniform(0.5, 2.0);
    const VanillaSpec spec{f * draw.log_uniform(0.3, 3.0), draw.uniform(0.01, 5.0),
                           draw.coin() ? OptionType::call : OptionType::put, draw.uniform(-0.02, 0.08)};
    const double v = bsm_price(f, spec, draw.uniform(0.0, 2.0));
    const double df = std::exp(-spec.discount_rate * spec.expiry);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, df * (spec.type == OptionType::call ? f : spec.strike) * (1.0 + 1e-15));
  }
}

TEST(BsmPrice, RejectsBadInput) {
  EXPECT_THROW(bsm_price(0.0, {1.0, 1.0, OptionType::call, 0.0}, 0.1), InvalidInput);
  EXPECT_THROW(bsm_price(1.0, {0.0, 1.0, OptionType::call, 0.0}, 0.1), InvalidInput);
  EXPECT_THROW(bsm_price(1.0, {1.0, 0.0, OptionType::call, 0.0}, 0.1), InvalidInput);
  EXPECT_THROW(bsm_price(1.0, {1.0, 1.0, OptionType::call, 0.0}, -0.1), InvalidInput);
}

TEST(BsmImpliedVol, RoundTrip) {
  const VanillaSpec spec{1.05, 0.75, OptionType::call, 0.01};
  EXPECT_NEAR(bsm_implied_vol(bsm_price(1.0, spec, 0.2), 1.0, spec), 0.2, 1e-10);
}

TEST(BsmImpliedVol, AtTheForwardClosedForm) {
  const double f = 1.2, sigma = 0.17, t = 0.4, r = 0.03;
  const double price = std::exp(-r * t) * f * (2.0 * norm_cdf(0.5 * sigma * std::sqrt(t)) - 1.0);
  EXPECT_NEAR(bsm_implied_vol(price, f, {f, t, OptionType::call, r}), sigma, 1e-12);
  EXPECT_NEAR(bsm_implied_vol(price, f, {f, t, OptionType::put, r}), sigma, 1e-12);
}

TEST(BsmImpliedVol, PricesOutsideTheBandHaveNoSolution) {
  const VanillaSpec call{0.9, 1.0, OptionType::call, 0.02};
  const double df = std::exp(-0.02);
  EXPECT_THROW(bsm_implied_vol(df * 0.099, 1.0, call), NoSolution);  // below intrinsic
  EXPECT_THROW(bsm_implied_vol(df * 1.0, 1.0, call), NoSolution);  // forward
  EXPECT_THROW(bsm_implied_vol(-0.01, 1.0, call), NoSolution);
  const VanillaSpec put{1.1, 1.0, OptionType::put, 0.0};
  EXPECT_THROW(bsm_implied_vol(1.1, 1.0, put), NoSolution);
}

TEST(BsmImpliedVol, IdentityOverVolRange) {
  Draw draw(2);
  for (int i = 0; i < 5000; ++i) {
    const double sigma = draw.uniform(0.005, 3.0);
    const double t = draw.uniform(0.02, 3.0);
    const double f = draw.uniform(0.5, 2.0);
    const double k = f * std::exp(draw.uniform(-2.5, 2.5) * sigma * std::sqrt(t));
    const VanillaSpec spec{k, t, draw.coin() ? OptionType::call : OptionType::put, draw.uniform(-0.01, 0.05)};
    const double price = bsm_price(f, spec, sigma);
    const double implied = bsm_implied_vol(price, f, spec);
    ASSERT_NEAR(implied, sigma, 1e-10) << "K=" << k << " T=" << t << " F=" << f;
    ASSERT_NEAR(bsm_price(f, spec, implied), price, 1e-12 * price);
  }
}

TEST(SabrImpliedVol, MatchesIndependentReferenceValues) {
  // From a separate implementation of the same expansion.
  EXPECT_NEAR(sabr_implied_vol(1.0, 1.05, 0.25, {0.10, 0.4, 0.5}), 0.105538359760, 1e-11);
  EXPECT_NEAR(sabr_implied_vol(1.0, 0.8, 2.0, {0.15, 1.0, -0.3}), 0.212725789110, 1e-11);
}

TEST(SabrImpliedVol, FrozenVolatilityLimit) {
  for (double k : {0.5, 0.9, 1.0, 1.2, 2.0}) {
    EXPECT_NEAR(sabr_implied_vol(1.0, k, 1.0, {0.12, 1e-9, 0.4}), 0.12, 1e-9);
  }
}

TEST(SabrImpliedVol, ZeroCorrelationIsSymmetricInLogMoneyness) {
  Draw draw(3);
  for (int i = 0; i < 200; ++i) {
    const SabrParams th{draw.uniform(0.03, 0.3), draw.uniform(0.1, 2.0), 0.0};
    const double f = draw.uniform(0.5, 2.0);
    const double k = f * std::exp(draw.uniform(-1.0, 1.0));
    const auto a = sabr_expansion_terms(f, k, th);
    const auto b = sabr_expansion_terms(f, f * f / k, th);
    EXPECT_NEAR(a.sigma0, b.sigma0, 1e-14);
    EXPECT_NEAR(a.sigma1, b.sigma1, 1e-12);
  }
}

TEST(SabrImpliedVol, AtTheMoneyCoefficient) {
  for (double rho : {-0.9, -0.3, 0.0, 0.5, 0.95}) {
    const SabrParams th{0.1, 0.7, rho};
    const auto terms = sabr_expansion_terms(1.3, 1.3, th);
    EXPECT_DOUBLE_EQ(terms.sigma0, 0.1);
    EXPECT_NEAR(terms.sigma1, 0.1 * (rho * 0.7 * 0.1 / 4.0 + (2.0 - 3.0 * rho * rho) * 0.49 / 24.0), 1e-15);
  }
}

TEST(SabrImpliedVol, ContinuousAcrossSeriesSwitches) {
  const SabrParams th{0.08, 0.9, 0.45};
  // z = nu ln(K/F) / alpha crosses 1e-8 and 1e-3 in this range.
  // Second differences stay at round-off level, so neither value nor slope jumps.
  auto vol = [&](int i) { return sabr_implied_vol(1.0, std::exp(-2e-4 + 1e-7 * i), 0.5, th); };
  for (int i = 1; i < 4000; ++i) {
    ASSERT_LT(std::fabs(vol(i + 1) - 2.0 * vol(i) + vol(i - 1)), 1e-10) << "at step " << i;
  }
}

TEST(SabrImpliedVol, ShortExpiryAtTheMoneyTendsToAlpha) {
  const SabrParams th{0.11, 1.2, 0.6};
  EXPECT_NEAR(sabr_implied_vol(1.0, 1.0, 1e-9, th), 0.11, 1e-10);
}

TEST(SabrImpliedVol, ExtremeCorrelationFallsBackToFinitePositive) {
  for (double rho : {-1.0, 1.0}) {
    for (double k : {1e-3, 0.2, 5.0, 1e3}) {
      const double v = sabr_implied_vol(1.0, k, 5.0, {0.1, 3.0, rho});
      EXPECT_TRUE(std::isfinite(v) && v > 0.0) << "rho=" << rho << " K=" << k;
    }
  }
}

TEST(SabrImpliedVol, PluggableSecondOrderTerm) {
  const SabrParams th{0.1, 0.4, 0.5};
  const double base = sabr_implied_vol(1.0, 1.0, 2.0, th);
  const double with = sabr_implied_vol(1.0, 1.0, 2.0, th, [](double, double, double, const SabrParams&) {
    return 0.001;
  });
  EXPECT_NEAR(with - base, 0.004, 1e-15);
  // A correction that drives the vol negative falls back to sigma0.
  const double neg = sabr_implied_vol(1.0, 1.0, 2.0, th, [](double, double, double, const SabrParams&) {
    return -1.0;
  });
  EXPECT_DOUBLE_EQ(neg, 0.1);
}

TEST(SabrImpliedVol, RejectsBadInput) {
  EXPECT_THROW(sabr_implied_vol(1.0, 1.0, 1.0, {0.0, 0.4, 0.5}), InvalidInput);
  EXPECT_THROW(sabr_implied_vol(1.0, 1.0, 1.0, {0.1, 0.0, 0.5}), InvalidInput);
  EXPECT_THROW(sabr_implied_vol(1.0, 1.0, 1.0, {0.1, 0.4, 1.5}), InvalidInput);
  EXPECT_THROW(sabr_implied_vol(1.0, -1.0, 1.0, {0.1, 0.4, 0.5}), InvalidInput);
  EXPECT_THROW(sabr_implied_vol(1.0, 1.0, 0.0, {0.1, 0.4, 0.5}), InvalidInput);
}

namespace {

MarketSlice test_slice() {
  MarketSlice s;
  s.forward = 0.88;
  s.expiry = 0.5;
  s.strikes = {0.80, 0.84, 0.88, 0.92, 0.97};
  s.mid_vols = {0.08, 0.075, 0.07, 0.072, 0.076};
  s.spreads = {0.01, 0.005, 0.003, 0.005, 0.01};
  return s;
}

}  // namespace

TEST(ModelSmile, FrozenVolatilityIsFlat) {
  for (double v : model_smile(test_slice(), {0.09, 1e-10, -0.2})) EXPECT_NEAR(v, 0.09, 1e-9);
}

TEST(ModelSmile, FiniteAndPositiveOverPriorSupport) {
  Draw draw(4);
  const auto slice = test_slice();
  for (int i = 0; i < 20000; ++i) {
    const SabrParams th{draw.log_uniform(1e-3, 2.0), draw.log_uniform(1e-3, 10.0), draw.uniform(-1.0, 1.0)};
    for (double v : model_smile(slice, th)) ASSERT_TRUE(std::isfinite(v) && v > 0.0);
  }
}

TEST(ModelSmile, CorrelationSteepensTheSkew) {
  const auto slice = test_slice();
  double prev = -1.0;
  for (double rho = -0.9; rho <= 0.9; rho += 0.1) {
    const auto s = model_smile(slice, {0.07, 0.8, rho});
    const double skew = s[4] - s[0];
    EXPECT_GT(skew, prev);
    prev = skew;
  }
}

TEST(ModelSmile, ComponentsAreExpansionValues) {
  const auto slice = test_slice();
  const SabrParams th{0.07, 0.8, 0.3};
  const auto s = model_smile(slice, th);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(s[i], sabr_implied_vol(slice.forward, slice.strikes[i], slice.expiry, th));
  }
}

TEST(DefectIndicator, ZeroWithoutPositiveCorrelation) {
  EXPECT_EQ(defect_indicator({0.1, 0.4, 0.0}), 0.0);
  EXPECT_EQ(defect_indicator({0.3, 0.1, -0.5}), 0.0);
  EXPECT_EQ(defect_indicator({0.3, 0.1, -1.0}), 0.0);
}

TEST(DefectIndicator, ClosedFormValue) {
  EXPECT_NEAR(defect_indicator({0.1, 0.4, 0.5}), 0.2211992, 1e-7);
}

TEST(DefectIndicator, MonotoneInEachParameter) {
  Draw draw(5);
  for (int i = 0; i < 2000; ++i) {
    const SabrParams th{draw.uniform(0.01, 0.5), draw.uniform(0.05, 3.0), draw.uniform(0.01, 0.99)};
    const double a = defect_indicator(th);
    ASSERT_GE(a, 0.0);
    ASSERT_LT(a, 1.0);
    ASSERT_LT(a, defect_indicator({th.alpha, th.nu, th.rho + 0.01}));
    ASSERT_LT(a, defect_indicator({th.alpha * 1.05, th.nu, th.rho}));
    ASSERT_GT(a, defect_indicator({th.alpha, th.nu * 1.05, th.rho}));
  }
}
