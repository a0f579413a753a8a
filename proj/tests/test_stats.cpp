#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "aoi/analytic.hpp"
#include "aoi/simulator.hpp"
#include "aoi/stats.hpp"
#include "aoi/validation.hpp"

namespace {

using aoi::Feedback;

std::vector<aoi::EpochRecord> greedy_epochs(std::size_t n, std::uint64_t seed) {
  auto cfg = aoi::make_sim_config(0.0, 1, Feedback::None, 0.0, n, seed);
  return aoi::run_simulation(cfg).epochs;
}

TEST(RenewalEstimate, ConstantEpochs) {
  std::vector<aoi::EpochRecord> v(50, aoi::EpochRecord{0, 2.0, 2.0, 1, 2.0});
  const auto est = aoi::renewal_estimate(v);
  EXPECT_DOUBLE_EQ(est.point, 1.0);
  EXPECT_DOUBLE_EQ(est.ci_half_width, 0.0);
  EXPECT_EQ(est.n_epochs, 50u);
  EXPECT_FALSE(est.small_sample);
}

TEST(RenewalEstimate, EmptyAndSmallSamples) {
  EXPECT_THROW(aoi::renewal_estimate(std::vector<aoi::EpochRecord>{}), aoi::InvalidParameter);
  std::vector<aoi::EpochRecord> v(5, aoi::EpochRecord{0, 1.0, 0.5, 1, 1.0});
  EXPECT_TRUE(aoi::renewal_estimate(v).small_sample);
}

TEST(RenewalEstimate, GreedyErasureFree) {
  const auto est = aoi::renewal_estimate(greedy_epochs(1000000, 3));
  EXPECT_NEAR(est.point, 1.0, 0.01);
  EXPECT_LT(est.ci_half_width, 0.01);
  EXPECT_GT(est.ci_half_width, 0.0);
}

TEST(RenewalEstimate, HalvingInflatesBySqrtTwo) {
  const auto all = greedy_epochs(400000, 5);
  const std::span<const aoi::EpochRecord> full(all);
  const auto a = aoi::renewal_estimate(full);
  const auto b = aoi::renewal_estimate(full.first(all.size() / 2));
  EXPECT_NEAR(b.ci_half_width / a.ci_half_width, std::sqrt(2.0), 0.1);
}

TEST(RenewalEstimate, CoverageNearNominal) {
  // For y ~ exp(1), R = y^2/2 the true ratio is 1.
  std::mt19937_64 rng(99);
  std::exponential_distribution<double> ex(1.0);
  int covered = 0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    std::vector<aoi::EpochRecord> v(2000);
    for (auto& e : v) {
      e.y = ex(rng);
      e.R = 0.5 * e.y * e.y;
    }
    const auto est = aoi::renewal_estimate(v);
    if (std::abs(est.point - 1.0) <= est.ci_half_width) ++covered;
  }
  const double rate = static_cast<double>(covered) / reps;
  EXPECT_GT(rate, 0.90);
  EXPECT_LT(rate, 0.985);
}

TEST(RenewalEstimate, ErrorShrinksWithSampleSize) {
  const double analytic = aoi::aoi_rr_nofb(0.3, 2, 0.5);
  std::vector<double> errors;
  for (std::uint64_t n : {1000u, 10000u, 100000u, 1000000u}) {
    const auto out = aoi::run_simulation(aoi::make_sim_config(0.3, 2, Feedback::None, 0.5, n, 8));
    errors.push_back(std::abs(out.result.mean - analytic));
    EXPECT_LE(errors.back(), 3.0 * out.result.ci + 1e-3 * analytic) << n;
  }
  EXPECT_LT(errors.back(), errors.front());
}

TEST(BatchMeans, AgreesWithDeltaMethod) {
  const auto all = greedy_epochs(200000, 12);
  const double delta = aoi::renewal_estimate(all).ci_half_width;
  const double batch = aoi::batch_means_half_width(all);
  EXPECT_GT(batch, 0.5 * delta);
  EXPECT_LT(batch, 2.0 * delta);
  EXPECT_TRUE(std::isinf(aoi::batch_means_half_width(std::span(all).first(10))));
}

TEST(EpochsOf, FiltersBySource) {
  std::vector<aoi::EpochRecord> v{{0, 1, 0.5, 1, 1}, {1, 2, 2, 1, 2}, {0, 3, 4.5, 1, 3}};
  const auto s0 = aoi::epochs_of(v, 0);
  ASSERT_EQ(s0.size(), 2u);
  EXPECT_DOUBLE_EQ(s0[1].y, 3.0);
}

// ---------------------------------------------------------------------------
// validate

TEST(Validate, RoundRobinTwoSources) {
  const auto v = aoi::validate(0.3, 2, Feedback::None, 0.0, 100000, 1);
  EXPECT_NEAR(v.analytic, 2.357143, 5e-7);
  EXPECT_TRUE(v.pass) << v.sim_mean << " +- " << v.sim_ci;
}

TEST(Validate, MaxAgeFirstTwoSources) {
  const auto v = aoi::validate(0.3, 2, Feedback::Perfect, 0.0, 100000, 2);
  EXPECT_NEAR(v.analytic, 2.142857, 5e-7);
  EXPECT_TRUE(v.pass) << v.sim_mean << " +- " << v.sim_ci;
}

TEST(Validate, SingleSourceWithFeedbackAtOptimum) {
  const auto v = aoi::validate(0.5, 1, Feedback::Perfect, 0.9435, 100000, 3);
  EXPECT_NEAR(v.analytic, 1.9435, 1e-3);
  EXPECT_TRUE(v.pass) << v.sim_mean << " +- " << v.sim_ci;
}

TEST(Validate, ToleranceRule) {
  EXPECT_TRUE(aoi::within_tolerance(1.009, 0.0, 1.0, 0.01));
  EXPECT_FALSE(aoi::within_tolerance(1.011, 0.0, 1.0, 0.01));
  EXPECT_TRUE(aoi::within_tolerance(1.05, 0.02, 1.0, 0.01));
  EXPECT_FALSE(aoi::within_tolerance(1.07, 0.02, 1.0, 0.01));
}

TEST(Validate, DetectsWrongAnalyticValue) {
  // Simulating with one threshold and comparing with a far-off one must FAIL.
  const auto out =
      aoi::run_simulation(aoi::make_sim_config(0.3, 1, Feedback::None, 3.0, 100000, 4)).result;
  const double wrong = aoi::aoi_rr_nofb(0.3, 1, 0.0);
  EXPECT_FALSE(aoi::within_tolerance(out.mean, out.ci, wrong, 0.01));
}

// ---------------------------------------------------------------------------
// grid oracle

TEST(GridOracle, ErasureFreeSingleSource) {
  EXPECT_NEAR(aoi::grid_oracle_gamma(0.0, 1, Feedback::None, 0.001), 0.901, 0.001);
}

TEST(GridOracle, ThreeSourcesGreedy) {
  EXPECT_DOUBLE_EQ(aoi::grid_oracle_gamma(0.3, 3, Feedback::None, 0.001), 0.0);
  // With feedback the closed form is already greedy at three sources and
  // still positive at two.
  EXPECT_DOUBLE_EQ(aoi::grid_oracle_gamma(0.3, 3, Feedback::Perfect, 0.001), 0.0);
  EXPECT_GT(aoi::grid_oracle_gamma(0.3, 2, Feedback::Perfect, 0.001), 0.2);
}

TEST(GridOracle, MatchesOptimizer) {
  for (Feedback fb : {Feedback::None, Feedback::Perfect})
    for (double q : {0.0, 0.1, 0.25, 0.4, 0.6, 0.8})
      for (int M : {1, 2, 3, 5}) {
        const double g = aoi::grid_oracle_gamma(q, M, fb, 0.001);
        EXPECT_LE(std::abs(g - aoi::optimize_gamma(q, M, fb).gamma_star), 0.001 + 1e-12)
            << q << " " << M << " " << aoi::to_string(fb);
      }
}

TEST(GridOracle, GridShape) {
  const auto g = aoi::gamma_grid(0.5);
  ASSERT_EQ(g.size(), 11u);
  EXPECT_DOUBLE_EQ(g.back(), 5.0);
  EXPECT_THROW(aoi::gamma_grid(0.0), aoi::InvalidParameter);
}

TEST(GridOracle, SimulationBandContainsOptimum) {
  const auto s = aoi::grid_oracle_gamma_sim(0.3, 1, Feedback::Perfect, 0.1, 20000, 77, 2.0);
  const double g = aoi::optimize_gamma(0.3, 1, Feedback::Perfect).gamma_star;
  EXPECT_TRUE(s.in_min_band(s.nearest(g)));
  // Far from the optimum the empirical curve is clearly worse.
  EXPECT_FALSE(s.in_min_band(s.nearest(2.0)));
}

}  // namespace
