#include "dspp/errors.hpp"
#include "dspp/synth.hpp"

#include "fixtures.hpp"
#include "stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace dspp;

namespace {

HawkesSpec poisson_spec(double rate, double horizon) {
  HawkesSpec s;
  s.users = 1;
  s.items = 1;
  s.horizon = horizon;
  s.decay = 1.0;
  s.base = Matrix::Constant(1, 1, rate);
  s.excitation = Matrix::Zero(1, 1);
  return s;
}

}  // namespace

TEST(hawkes_intensity, reference_values) {
  HawkesSpec s = poisson_spec(1.0, 10.0);
  s.excitation(0, 0) = 0.5;
  const std::vector<HistoryEntry> one = {{0, 0.0}};
  EXPECT_NEAR(hawkes_intensity(s, one, 0, 0, 1.0), 1.0 + 0.5 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(hawkes_intensity(s, one, 0, 0, 1.0), 1.18394, 1e-5);
  EXPECT_EQ(hawkes_intensity(s, {}, 0, 0, 3.0), 1.0);
  EXPECT_EQ(hawkes_intensity(s, one, 0, 0, 0.0), 1.0);
  s.excitation.setZero();
  const std::vector<HistoryEntry> many = {{0, 0.1}, {0, 0.5}, {0, 0.9}};
  EXPECT_EQ(hawkes_intensity(s, many, 0, 0, 1.0), 1.0);
}

TEST(hawkes_intensity, cross_excitation_uses_item_matrix) {
  HawkesSpec s = default_hawkes_spec();
  const std::vector<HistoryEntry> h = {{2, 1.0}, {1, 2.0}};
  const double expected = s.base(1, 0) + s.excitation(0, 2) * std::exp(-s.decay * 2.0) +
                          s.excitation(0, 1) * std::exp(-s.decay * 1.0);
  EXPECT_NEAR(hawkes_intensity(s, h, 1, 0, 3.0), expected, 1e-15);
}

TEST(hawkes_spec, default_and_validation) {
  HawkesSpec s = default_hawkes_spec();
  EXPECT_EQ(s.users, 2);
  EXPECT_EQ(s.items, 3);
  EXPECT_DOUBLE_EQ(s.base(0, 1), 10.0 * s.base(1, 1));
  EXPECT_LT(branching_ratio(s), 1.0);
  EXPECT_NO_THROW(validate(s));

  HawkesSpec unstable = s;
  unstable.excitation.setConstant(0.6);
  EXPECT_GE(branching_ratio(unstable), 1.0);
  EXPECT_THROW(validate(unstable), ConfigError);
  EXPECT_THROW(simulate(unstable, 1), ConfigError);
  HawkesSpec negative = s;
  negative.base(0, 0) = -0.1;
  EXPECT_THROW(validate(negative), ConfigError);
  HawkesSpec decay = s;
  decay.decay = 0.0;
  EXPECT_THROW(validate(decay), ConfigError);
}

TEST(hawkes_spec, parse) {
  std::istringstream in("users = 3\nitems = 2\nbase_rate = 0.2\nbase_rate.2.1 = 0.9\n"
                        "excitation = 0.1\nexcitation_self = 0.2\nexcitation.0.1 = 0.15\nhorizon = 50\n");
  HawkesSpec s = parse_hawkes_spec(in);
  EXPECT_EQ(s.users, 3);
  EXPECT_EQ(s.items, 2);
  EXPECT_EQ(s.base(0, 0), 0.2);
  EXPECT_EQ(s.base(2, 1), 0.9);
  EXPECT_EQ(s.excitation(1, 1), 0.2);
  EXPECT_EQ(s.excitation(0, 1), 0.15);
  EXPECT_EQ(s.excitation(1, 0), 0.1);
  EXPECT_EQ(s.horizon, 50.0);
  std::istringstream bad("colour = blue\n");
  EXPECT_THROW(parse_hawkes_spec(bad), ConfigError);
  std::istringstream range("base_rate.5.0 = 1\n");
  EXPECT_THROW(parse_hawkes_spec(range), ConfigError);
  EXPECT_THROW(load_hawkes_spec("/nonexistent/spec.txt"), IoError);
}

TEST(simulate, poisson_count_mean) {
  const HawkesSpec s = poisson_spec(5.0, 10.0);
  double total = 0.0;
  const int seeds = 1000;
  for (int seed = 0; seed < seeds; ++seed) total += static_cast<double>(simulate(s, seed).size());
  const double mean = total / seeds;
  EXPECT_NEAR(mean, 50.0, 3.0 * std::sqrt(50.0 / seeds));
}

TEST(simulate, zero_rates_give_no_events) {
  HawkesSpec s = default_hawkes_spec();
  s.base.setZero();
  EXPECT_EQ(simulate(s, 4).size(), 0u);
}

TEST(simulate, thinning_bound_dominates) {
  HawkesSpec s = default_hawkes_spec();
  s.horizon = 300.0;
  std::vector<ThinningStep> trace;
  TemporalNetwork net = simulate(s, 8, &trace);
  std::size_t accepted = 0;
  std::vector<std::vector<HistoryEntry>> histories(2);
  std::size_t next = 0;
  for (const ThinningStep& step : trace) {
    EXPECT_LE(step.intensity, step.bound * (1.0 + 1e-12));
    double truth = 0.0;
    for (Index u = 0; u < 2; ++u) {
      for (Index v = 0; v < 3; ++v) truth += hawkes_intensity(s, histories[static_cast<std::size_t>(u)], u, v, step.time);
    }
    EXPECT_NEAR(step.intensity, truth, 1e-9 * truth);
    if (step.accepted) {
      ++accepted;
      const Interaction& x = net[next++];
      EXPECT_EQ(x.time, step.time);
      histories[static_cast<std::size_t>(x.user)].push_back({x.item, x.time});
    }
  }
  EXPECT_EQ(accepted, net.size());
}

TEST(simulate, time_rescaling_is_unit_exponential) {
  const HawkesSpec s = default_hawkes_spec();
  TemporalNetwork net = simulate(s, 12);
  ASSERT_GE(net.size(), 1000u);
  const double d = testkit::ks_statistic_exp1(testkit::rescaled_gaps(s, net));
  EXPECT_GT(testkit::ks_p_value(d, net.size()), 0.01);
  EXPECT_GT(net.horizon(), net[net.size() - 1].time);
  EXPECT_LT(net[net.size() - 1].time, s.horizon);
}

TEST(simulate, reproducible_per_seed) {
  const HawkesSpec s = default_hawkes_spec();
  TemporalNetwork a = simulate(s, 21);
  TemporalNetwork b = simulate(s, 21);
  TemporalNetwork c = simulate(s, 22);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].time, b[i].time);
    EXPECT_EQ(a[i].user, b[i].user);
    EXPECT_EQ(a[i].item, b[i].item);
  }
  EXPECT_TRUE(a.size() != c.size() || a[0].time != c[0].time);
}
