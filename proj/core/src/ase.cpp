#include "dspp/ase.hpp"

#include "dspp/ops.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace dspp {

AseParams make_ase(ParameterStore& store, Index dim, Index heads, Rng& rng) {
  if (heads < 1 || dim % heads != 0) {
    throw std::invalid_argument("attention heads (" + std::to_string(heads) +
                                ") must divide the embedding dimension (" + std::to_string(dim) + ")");
  }
  AseParams p;
  p.heads = heads;
  p.query = &store.add("ase.query", xavier_uniform(2 * dim, 2 * dim, rng));
  p.key = &store.add("ase.key", xavier_uniform(2 * dim, 2 * dim, rng));
  p.value = &store.add("ase.value", xavier_uniform(dim, dim, rng));
  if (heads > 1) p.output = &store.add("ase.output", xavier_uniform(dim, dim, rng));
  p.user_update = make_gru(store, "ase.user_update", dim, dim, rng);
  p.item_update = make_gru(store, "ase.item_update", dim, dim, rng);
  return p;
}

ShiftParams make_shift(ParameterStore& store, Index users, Index items, Index dim) {
  ShiftParams s;
  s.users = &store.add("shift.users", Matrix::Zero(users, dim));
  s.items = &store.add("shift.items", Matrix::Zero(items, dim));
  return s;
}

AttentionOutput attentive_interaction(Graph& g, const AseParams& params, Var user, Var item,
                                      Var omega, Parameter& item_table, double t,
                                      const InteractionSequence& history) {
  const Index dim = user.cols();
  if (item.cols() != dim || omega.cols() != dim || params.value->cols() != dim) {
    throw std::invalid_argument("attentive_interaction: dimension mismatch");
  }
  AttentionOutput out;
  const Index n = static_cast<Index>(history.entries.size());
  if (n == 0) {
    out.output = g.constant(Matrix::Zero(1, dim));
    return out;
  }
  std::vector<Var> rows;
  std::vector<Index> positions;
  std::vector<double> times;
  rows.reserve(static_cast<std::size_t>(n));
  for (Index h = 0; h < n; ++h) {
    const HistoryEntry& e = history.entries[static_cast<std::size_t>(h)];
    if (e.time >= t) throw std::invalid_argument("attentive_interaction: history entry not before t");
    rows.push_back(lookup(g, item_table, e.item));
    positions.push_back(h + 1);
    times.push_back(e.time);
  }
  Var hist = ops::concat_rows(rows);
  Var hist_time = time_embedding(g, omega, positions, times, t);
  const Index last = n;
  const double last_time = times.back();
  Var query_time = time_embedding(g, omega, std::span<const Index>(&last, 1),
                                  std::span<const double>(&last_time, 1), t);

  Var q = ops::linear(ops::concat_cols(user, ops::add(item, query_time)), g.parameter(*params.query));
  std::vector<Var> user_rows(static_cast<std::size_t>(n), user);
  Var k = ops::linear(ops::concat_cols(ops::concat_rows(user_rows), ops::add(hist, hist_time)),
                      g.parameter(*params.key));
  Var v = ops::linear(hist, g.parameter(*params.value));

  const Index qk_width = 2 * dim / params.heads;
  const Index v_width = dim / params.heads;
  Var mixed;
  for (Index h = 0; h < params.heads; ++h) {
    Var scores = ops::linear(ops::slice_cols(k, h * qk_width, qk_width),
                             ops::slice_cols(q, h * qk_width, qk_width));
    Var alpha = ops::softmax(scores);
    Var head = ops::matmul(ops::transpose(alpha), ops::slice_cols(v, h * v_width, v_width));
    out.weights.push_back(alpha);
    mixed = (h == 0) ? head : ops::concat_cols(mixed, head);
  }
  if (params.output != nullptr) mixed = ops::linear(mixed, g.parameter(*params.output));
  out.output = ops::relu(mixed);
  return out;
}

DynamicPair update_dynamic(Graph& g, const AseParams& params, Var user_state, Var item_state,
                           Var attention) {
  return {gru_cell(g, params.user_update, attention, user_state),
          gru_cell(g, params.item_update, attention, item_state)};
}

Var temporal_shift(Var emb, Var w, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("temporal_shift: negative interval");
  if (delta == 0.0) return emb;
  return ops::mul(emb, ops::affine(w, delta, 1.0));
}

RowVector temporal_shift(const RowVector& emb, const RowVector& w, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("temporal_shift: negative interval");
  if (emb.size() != w.size()) throw std::invalid_argument("temporal_shift: dimension mismatch");
  return emb.cwiseProduct((1.0 + delta * w.array()).matrix());
}

DynamicState::DynamicState(Matrix users, Matrix items)
    : users_(std::move(users)),
      items_(std::move(items)),
      user_time_(static_cast<std::size_t>(users_.rows()), 0.0),
      item_time_(static_cast<std::size_t>(items_.rows()), 0.0) {}

void DynamicState::set_user(Index u, const RowVector& emb, double t) {
  if (t < user_time(u)) throw std::invalid_argument("DynamicState: user update goes back in time");
  users_.row(u) = emb;
  user_time_[static_cast<std::size_t>(u)] = t;
}

void DynamicState::set_item(Index v, const RowVector& emb, double t) {
  if (t < item_time(v)) throw std::invalid_argument("DynamicState: item update goes back in time");
  items_.row(v) = emb;
  item_time_[static_cast<std::size_t>(v)] = t;
}

RowVector DynamicState::user_at(Index u, double t, const RowVector& shift) const {
  return temporal_shift(user(u), shift, std::max(0.0, t - user_time(u)));
}

RowVector DynamicState::item_at(Index v, double t, const RowVector& shift) const {
  return temporal_shift(item(v), shift, std::max(0.0, t - item_time(v)));
}

DynamicState initial_dynamic_state(const NodeTables& tables, const AseParams& params) {
  Graph g = Graph::inference();
  const Index dim = tables.dim();
  Var users = g.parameter(*tables.users);
  Var items = g.parameter(*tables.items);
  Var zero_u = g.constant(Matrix::Zero(users.rows(), dim));
  Var zero_v = g.constant(Matrix::Zero(items.rows(), dim));
  Matrix u = gru_cell(g, params.user_update, zero_u, users).value();
  Matrix v = gru_cell(g, params.item_update, zero_v, items).value();
  return DynamicState(std::move(u), std::move(v));
}

}  // namespace dspp
