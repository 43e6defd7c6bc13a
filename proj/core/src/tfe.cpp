#include "dspp/tfe.hpp"

#include "dspp/ops.hpp"

#include <stdexcept>
#include <string>

namespace dspp {
namespace {

std::vector<bool> has_neighbors(const SegmentIndex& seg) {
  std::vector<bool> mask(static_cast<std::size_t>(seg.segments()));
  for (Index r = 0; r < seg.segments(); ++r) mask[static_cast<std::size_t>(r)] = seg.degree(r) > 0;
  return mask;
}

struct SideOutput {
  Var out;
  Var attention;
};

// Aggregation for the nodes owning `own` (e.g. users), whose neighbors are
// the other type listed in `own` and whose two-hop peers are listed in `other`.
SideOutput aggregate(Graph& g, Var self, const SegmentIndex& own, const SegmentIndex& other,
                     Parameter& hat, Parameter& attn, Parameter& out) {
  Var hat_rows = ops::relu(ops::linear(ops::neighbor_mean(self, other), g.parameter(hat)));
  Var query = ops::linear(self, g.parameter(attn));
  Var logits = ops::relu(ops::edge_scores(query, hat_rows, own));
  Var alpha = ops::segment_softmax(logits, own);
  Var pooled = ops::relu(ops::segment_weighted_sum(alpha, hat_rows, own));
  Var mixed = ops::linear(ops::concat_cols(pooled, self), g.parameter(out));
  return {ops::select_rows(has_neighbors(own), mixed, self), alpha};
}

}  // namespace

TfeParams make_tfe(ParameterStore& store, Index dim, Index layers, Rng& rng) {
  if (layers < 1) throw std::invalid_argument("need at least one aggregation layer");
  TfeParams p;
  for (Index k = 1; k <= layers; ++k) {
    const std::string prefix = "tal" + std::to_string(k) + ".";
    TalLayerParams l;
    l.user_hat = &store.add(prefix + "user_hat", xavier_uniform(dim, dim, rng));
    l.user_attn = &store.add(prefix + "user_attn", xavier_uniform(dim, dim, rng));
    l.user_out = &store.add(prefix + "user_out", xavier_uniform(dim, 2 * dim, rng));
    l.item_hat = &store.add(prefix + "item_hat", xavier_uniform(dim, dim, rng));
    l.item_attn = &store.add(prefix + "item_attn", xavier_uniform(dim, dim, rng));
    l.item_out = &store.add(prefix + "item_out", xavier_uniform(dim, 2 * dim, rng));
    p.layers.push_back(l);
  }
  p.user_fusion = make_gru(store, "fusion.user", dim, dim, rng);
  p.item_fusion = make_gru(store, "fusion.item", dim, dim, rng);
  return p;
}

TalOutput tal_layer(Graph& g, const Snapshot& snapshot, const TalLayerParams& params, Var users,
                    Var items) {
  if (users.rows() != snapshot.users() || items.rows() != snapshot.items()) {
    throw std::invalid_argument("tal_layer: embedding rows do not match the snapshot's node counts");
  }
  if (users.cols() != params.user_hat->cols() || items.cols() != params.item_hat->cols()) {
    throw std::invalid_argument("tal_layer: embedding width does not match the layer");
  }
  SideOutput u = aggregate(g, users, snapshot.user_items, snapshot.item_users, *params.user_hat,
                           *params.user_attn, *params.user_out);
  SideOutput v = aggregate(g, items, snapshot.item_users, snapshot.user_items, *params.item_hat,
                           *params.item_attn, *params.item_out);
  return {u.out, v.out, u.attention, v.attention};
}

NodePair encode_snapshot(Graph& g, const Snapshot& snapshot, const TfeParams& params, Var users,
                         Var items) {
  for (const TalLayerParams& layer : params.layers) {
    TalOutput out = tal_layer(g, snapshot, layer, users, items);
    users = out.users;
    items = out.items;
  }
  return {users, items};
}

SteadyState steady_embeddings(std::span<const Snapshot> snapshots, const NodeTables& tables,
                              const TfeParams& params) {
  if (snapshots.empty()) throw std::invalid_argument("steady_embeddings: no snapshots");
  SteadyState state;
  const Index dim = tables.dim();
  Matrix user_state = Matrix::Zero(tables.users->rows(), dim);
  Matrix item_state = Matrix::Zero(tables.items->rows(), dim);
  for (const Snapshot& s : snapshots) {
    Graph g = Graph::inference();
    NodePair tal = encode_snapshot(g, s, params, g.parameter(*tables.users), g.parameter(*tables.items));
    user_state = gru_cell(g, params.user_fusion, tal.users, g.constant(user_state)).value();
    item_state = gru_cell(g, params.item_fusion, tal.items, g.constant(item_state)).value();
    state.users.push_back(user_state);
    state.items.push_back(item_state);
  }
  return state;
}

SteadyChain steady_chain(Graph& g, std::span<const Snapshot> snapshots, const NodeTables& tables,
                         const TfeParams& params, Index first, Index last,
                         const SteadyState* cache) {
  if (first < 0 || last < first || last >= static_cast<Index>(snapshots.size())) {
    throw std::invalid_argument("steady_chain: bad snapshot range");
  }
  const Index dim = tables.dim();
  Var user_state;
  Var item_state;
  if (first == 0) {
    user_state = g.constant(Matrix::Zero(tables.users->rows(), dim));
    item_state = g.constant(Matrix::Zero(tables.items->rows(), dim));
  } else {
    if (cache == nullptr || cache->snapshots() < first) {
      throw std::invalid_argument("steady_chain: missing cached state before snapshot " +
                                  std::to_string(first));
    }
    user_state = g.constant(cache->users[static_cast<std::size_t>(first - 1)]);
    item_state = g.constant(cache->items[static_cast<std::size_t>(first - 1)]);
  }
  Var users = g.parameter(*tables.users);
  Var items = g.parameter(*tables.items);
  SteadyChain chain;
  chain.first = first;
  for (Index m = first; m <= last; ++m) {
    NodePair tal = encode_snapshot(g, snapshots[static_cast<std::size_t>(m)], params, users, items);
    user_state = gru_cell(g, params.user_fusion, tal.users, user_state);
    item_state = gru_cell(g, params.item_fusion, tal.items, item_state);
    chain.users.push_back(user_state);
    chain.items.push_back(item_state);
  }
  return chain;
}

}  // namespace dspp
