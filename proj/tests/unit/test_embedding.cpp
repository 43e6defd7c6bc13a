#include "dspp/embedding.hpp"
#include "dspp/ops.hpp"

#include "gradcheck.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace dspp;

TEST(lookup, rows_and_bounds) {
  ParameterStore store;
  Rng rng(5);
  NodeTables t = make_node_tables(store, 3, 4, 6, rng);
  EXPECT_EQ(t.users->rows(), 3);
  EXPECT_EQ(t.items->rows(), 4);
  EXPECT_EQ(t.dim(), 6);

  Graph g;
  Var a = lookup(g, *t.users, 1);
  Var b = lookup(g, *t.users, 1);
  EXPECT_EQ(a.value(), b.value());
  EXPECT_THROW(lookup(g, *t.users, 3), std::out_of_range);
  EXPECT_THROW(lookup(g, *t.users, -1), std::out_of_range);
}

TEST(lookup, gradient_reaches_only_that_row) {
  ParameterStore store;
  Rng rng(5);
  NodeTables t = make_node_tables(store, 3, 4, 6, rng);
  Graph g;
  Var c = g.constant(Matrix::Constant(1, 6, 2.0));
  g.backward(ops::dot(lookup(g, *t.items, 2), c));
  for (Index r = 0; r < 4; ++r) {
    for (Index k = 0; k < 6; ++k) EXPECT_EQ(t.items->grad()(r, k), r == 2 ? 2.0 : 0.0);
  }
  EXPECT_TRUE(t.users->grad().isZero());
}

TEST(node_tables, initial_spread) {
  ParameterStore store;
  Rng rng(9);
  NodeTables t = make_node_tables(store, 200, 100, 32, rng);
  const Matrix& u = t.users->value();
  const double mean = u.mean();
  const double sd = std::sqrt((u.array() - mean).square().mean());
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR(sd, 0.1, 0.005);
  ParameterStore bad;
  EXPECT_THROW(make_node_tables(bad, 2, 2, 0, rng), std::invalid_argument);
}

TEST(time_embedding, reference_values) {
  RowVector omega = RowVector::Constant(6, 0.3);
  RowVector e = time_embedding(0, 2.0, 2.0, omega);
  for (Index c = 0; c < 6; ++c) EXPECT_EQ(e(c), c % 2 == 0 ? 1.0 : 0.0);

  RowVector ones = RowVector::Ones(6);
  RowVector q = time_embedding(0, 1.0, 1.0 + std::numbers::pi / 2, ones);
  for (Index c = 0; c < 6; ++c) EXPECT_NEAR(q(c), c % 2 == 0 ? 0.0 : 1.0, 1e-15);
}

TEST(time_embedding, positional_phase) {
  const Index dim = 4;
  RowVector omega = RowVector::Zero(dim);
  RowVector e = time_embedding(3, 0.0, 0.0, omega);
  EXPECT_NEAR(e(0), std::cos(3.0), 1e-15);
  EXPECT_NEAR(e(1), std::sin(3.0 / std::pow(10000.0, 2.0 / dim)), 1e-15);
  EXPECT_NEAR(e(2), std::cos(3.0 / std::pow(10000.0, 2.0 / dim)), 1e-15);
  EXPECT_NEAR(e(3), std::sin(3.0 / 10000.0), 1e-15);
}

TEST(time_embedding, rejects_bad_arguments) {
  RowVector omega = RowVector::Ones(4);
  EXPECT_THROW(time_embedding(0, 2.0, 1.0, omega), std::invalid_argument);
  EXPECT_THROW(time_embedding(-1, 0.0, 1.0, omega), std::invalid_argument);
}

TEST(time_embedding, bounded_and_translation_invariant) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int c = 0; c < 200; ++c) {
    RowVector omega = RowVector::NullaryExpr(8, [&] { return u(rng) / 100.0; });
    const Index h = static_cast<Index>(rng() % 30);
    const double th = u(rng);
    const double dt = u(rng) / 10.0;
    const double shift = u(rng);
    RowVector a = time_embedding(h, th, th + dt, omega);
    RowVector b = time_embedding(h, th + shift, th + shift + dt, omega);
    EXPECT_LE(a.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(time_embedding, graph_matches_plain) {
  ParameterStore store;
  Parameter& omega = make_time_frequencies(store, 6);
  EXPECT_NEAR(omega.value()(0, 5), 1.0 / 10000.0, 1e-18);
  std::vector<Index> pos = {1, 2, 3};
  std::vector<double> times = {0.5, 1.5, 2.0};
  Graph g;
  Var e = time_embedding(g, g.parameter(omega), pos, times, 4.0);
  for (Index r = 0; r < 3; ++r) {
    RowVector ref = time_embedding(pos[static_cast<std::size_t>(r)],
                                   times[static_cast<std::size_t>(r)], 4.0, omega.value().row(0));
    EXPECT_LT((e.value().row(r) - ref).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(time_embedding, frequency_gradient_matches_finite_differences) {
  ParameterStore store;
  Parameter& omega = make_time_frequencies(store, 8);
  omega.value().setConstant(0.7);
  Matrix weights(3, 8);
  for (Index k = 0; k < weights.size(); ++k) weights.data()[k] = std::sin(static_cast<double>(k + 1));
  std::vector<Index> pos = {1, 2, 3};
  std::vector<double> times = {0.25, 1.0, 2.5};
  auto build = [&](Graph& g) {
    return ops::dot(time_embedding(g, g.parameter(omega), pos, times, 3.0), g.constant(weights));
  };
  auto checks = testkit::check_gradients(
      store,
      [&] {
        Graph g = Graph::inference();
        return build(g).item();
      },
      [&] {
        Graph g;
        g.backward(build(g));
      });
  EXPECT_LT(testkit::worst(checks), 1e-5);
}
