#include "dspp/ops.hpp"
#include "dspp/tfe.hpp"

#include "gradcheck.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace dspp;

namespace {

void set_identity_layer(const TalLayerParams& l, Index dim) {
  for (Parameter* p : {l.user_hat, l.user_attn, l.item_hat, l.item_attn}) p->value() = Matrix::Identity(dim, dim);
  for (Parameter* p : {l.user_out, l.item_out}) {
    p->value().setZero();
    p->value().leftCols(dim) = Matrix::Identity(dim, dim);
  }
}

TemporalNetwork random_network(std::mt19937_64& rng, Index users, Index items, std::size_t n) {
  std::vector<Interaction> xs;
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back({static_cast<Index>(rng() % users), static_cast<Index>(rng() % items),
                  static_cast<double>(i), 0});
  }
  return TemporalNetwork(users, items, std::move(xs), static_cast<double>(n));
}

void shuffle_segments(SegmentIndex& seg, std::mt19937_64& rng) {
  for (Index r = 0; r < seg.segments(); ++r) {
    std::shuffle(seg.targets.begin() + seg.offsets[r], seg.targets.begin() + seg.offsets[r + 1], rng);
  }
}

struct Toy {
  ParameterStore store;
  NodeTables tables;
  TfeParams tfe;

  Toy(Index users, Index items, Index dim, Index layers, std::uint64_t seed) {
    Rng rng(seed);
    tables = make_node_tables(store, users, items, dim, rng);
    // Larger static rows keep ReLU units away from their kinks.
    tables.users->value() *= 10.0;
    tables.items->value() *= 10.0;
    tfe = make_tfe(store, dim, layers, rng);
  }
};

}  // namespace

TEST(tal_layer, two_node_graph_by_hand) {
  const Index dim = 3;
  Toy toy(1, 1, dim, 1, 4);
  set_identity_layer(toy.tfe.layers[0], dim);
  TemporalNetwork net(1, 1, {{0, 0, 0.5, 0}}, 2.0);
  auto snaps = build_snapshots(net, 2, 1.0);
  Matrix u(1, dim);
  u << 0.4, -0.7, 1.2;
  Matrix v(1, dim);
  v << -0.3, 0.8, 0.1;
  Graph g;
  TalOutput out = tal_layer(g, snaps[1], toy.tfe.layers[0], g.constant(u), g.constant(v));
  EXPECT_TRUE(out.users.value().isApprox(u.cwiseMax(0.0), 1e-15));
  EXPECT_TRUE(out.items.value().isApprox(v.cwiseMax(0.0), 1e-15));
  EXPECT_DOUBLE_EQ(out.user_attention.value()(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(out.item_attention.value()(0, 0), 1.0);
}

TEST(tal_layer, isolated_nodes_pass_through) {
  Toy toy(2, 2, 4, 1, 8);
  TemporalNetwork net(2, 2, {{0, 0, 0.5, 0}}, 2.0);
  auto snaps = build_snapshots(net, 2, 1.0);
  Graph g;
  Var u = g.parameter(*toy.tables.users);
  Var v = g.parameter(*toy.tables.items);
  TalOutput empty = tal_layer(g, snaps[0], toy.tfe.layers[0], u, v);
  EXPECT_EQ(empty.users.value(), u.value());
  EXPECT_EQ(empty.items.value(), v.value());
  TalOutput one = tal_layer(g, snaps[1], toy.tfe.layers[0], u, v);
  EXPECT_EQ(one.users.value().row(1), u.value().row(1));
  EXPECT_EQ(one.items.value().row(1), v.value().row(1));
  EXPECT_NE(one.users.value().row(0), u.value().row(0));
}

TEST(tal_layer, rejects_shape_mismatch) {
  Toy toy(2, 2, 4, 1, 8);
  TemporalNetwork net(2, 2, {{0, 0, 0.5, 0}}, 2.0);
  auto snaps = build_snapshots(net, 2, 1.0);
  Graph g;
  EXPECT_THROW(tal_layer(g, snaps[1], toy.tfe.layers[0], g.constant(Matrix::Zero(3, 4)),
                         g.parameter(*toy.tables.items)),
               std::invalid_argument);
  EXPECT_THROW(tal_layer(g, snaps[1], toy.tfe.layers[0], g.constant(Matrix::Zero(2, 5)),
                         g.constant(Matrix::Zero(2, 5))),
               std::invalid_argument);
}

TEST(tal_layer, attention_normalised_and_order_free) {
  std::mt19937_64 rng(77);
  for (int c = 0; c < 100; ++c) {
    const Index users = 1 + static_cast<Index>(rng() % 6);
    const Index items = 1 + static_cast<Index>(rng() % 6);
    Toy toy(users, items, 4, 1, rng());
    auto net = random_network(rng, users, items, 1 + rng() % 20);
    Snapshot s = build_snapshots(net, 2, net.horizon())[1];
    Snapshot shuffled = s;
    shuffle_segments(shuffled.user_items, rng);
    shuffle_segments(shuffled.item_users, rng);

    Graph g;
    Var u = g.parameter(*toy.tables.users);
    Var v = g.parameter(*toy.tables.items);
    TalOutput a = tal_layer(g, s, toy.tfe.layers[0], u, v);
    TalOutput b = tal_layer(g, shuffled, toy.tfe.layers[0], u, v);
    EXPECT_LT((a.users.value() - b.users.value()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((a.items.value() - b.items.value()).cwiseAbs().maxCoeff(), 1e-10);

    for (auto [seg, att] : {std::pair{&s.user_items, a.user_attention}, std::pair{&s.item_users, a.item_attention}}) {
      for (Index r = 0; r < seg->segments(); ++r) {
        if (seg->degree(r) == 0) continue;
        double total = 0.0;
        for (Index e = seg->offsets[r]; e < seg->offsets[r + 1]; ++e) total += att.value()(e, 0);
        EXPECT_NEAR(total, 1.0, 1e-12);
      }
    }
  }
}

TEST(tal_layer, untouched_node_keeps_its_output) {
  Toy toy(3, 3, 4, 1, 12);
  TemporalNetwork net(3, 3, {{0, 0, 0.5, 0}, {1, 0, 0.6, 0}, {2, 2, 1.5, 0}}, 3.0);
  auto snaps = build_snapshots(net, 3, 1.0);
  Graph g;
  Var u = g.parameter(*toy.tables.users);
  Var v = g.parameter(*toy.tables.items);
  TalOutput before = tal_layer(g, snaps[1], toy.tfe.layers[0], u, v);
  TalOutput after = tal_layer(g, snaps[2], toy.tfe.layers[0], u, v);
  EXPECT_LT((before.users.value().topRows(2) - after.users.value().topRows(2)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((before.items.value().row(0) - after.items.value().row(0)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NE(before.users.value().row(2), after.users.value().row(2));

  SteadyState steady = steady_embeddings(snaps, toy.tables, toy.tfe);
  EXPECT_NE(steady.users[1].row(0), steady.users[2].row(0));
}

TEST(steady_embeddings, single_empty_snapshot) {
  Toy toy(2, 3, 4, 2, 3);
  TemporalNetwork net(2, 3, {{0, 0, 0.5, 0}}, 1.0);
  auto snaps = build_snapshots(net, 1);
  SteadyState s = steady_embeddings(snaps, toy.tables, toy.tfe);
  ASSERT_EQ(s.snapshots(), 1);
  EXPECT_EQ(s.users[0].rows(), 2);
  EXPECT_EQ(s.items[0].rows(), 3);

  Graph g = Graph::inference();
  Matrix ref = gru_cell(g, toy.tfe.user_fusion, g.parameter(*toy.tables.users),
                        g.constant(Matrix::Zero(2, 4))).value();
  EXPECT_LT((s.users[0] - ref).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(steady_embeddings({}, toy.tables, toy.tfe), std::invalid_argument);
}

TEST(steady_embeddings, chain_matches_and_truncates) {
  Toy toy(2, 2, 4, 2, 6);
  TemporalNetwork net(2, 2, {{0, 0, 0.5, 0}, {1, 1, 1.5, 0}, {0, 1, 2.5, 0}}, 4.0);
  auto snaps = build_snapshots(net, 4);
  SteadyState s = steady_embeddings(snaps, toy.tables, toy.tfe);
  Graph g;
  SteadyChain full = steady_chain(g, snaps, toy.tables, toy.tfe, 0, 3, nullptr);
  SteadyChain tail = steady_chain(g, snaps, toy.tables, toy.tfe, 2, 3, &s);
  for (Index m = 0; m < 4; ++m) EXPECT_LT((full.user_at(m).value() - s.users[m]).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((tail.item_at(3).value() - s.items[3]).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(tail.last(), 3);
  EXPECT_THROW(steady_chain(g, snaps, toy.tables, toy.tfe, 2, 3, nullptr), std::invalid_argument);
  EXPECT_THROW(steady_chain(g, snaps, toy.tables, toy.tfe, 3, 4, &s), std::invalid_argument);
}

TEST(steady_embeddings, gradient_matches_finite_differences) {
  Toy toy(2, 2, 4, 2, 21);
  TemporalNetwork net(2, 2, {{0, 0, 0.5, 0}, {1, 0, 0.7, 0}, {1, 1, 1.2, 0}, {0, 1, 1.6, 0}}, 2.0);
  auto snaps = build_snapshots(net, 2, 1.0);
  Rng rng(3);
  Matrix cu = normal_matrix(2, 4, 1.0, rng);
  Matrix cv = normal_matrix(2, 4, 1.0, rng);
  auto build = [&](Graph& g) {
    SteadyChain chain = steady_chain(g, snaps, toy.tables, toy.tfe, 0, 1, nullptr);
    return ops::add(ops::dot(chain.user_at(1), g.constant(cu)), ops::dot(chain.item_at(1), g.constant(cv)));
  };
  auto checks = testkit::check_gradients(
      toy.store, [&] { Graph g = Graph::inference(); return build(g).item(); },
      [&] { Graph g; g.backward(build(g)); });
  for (const auto& c : checks) {
    EXPECT_LT(c.rel_error, 1e-5) << c.name;
    if (c.name == "tal1.user_hat") {
      EXPECT_GT(c.analytic_norm, 0.0);
    }
  }
}
