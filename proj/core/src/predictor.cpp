#include "dspp/predictor.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dspp {

std::vector<Index> rank_by_score(std::span<const double> scores) {
  std::vector<Index> order(scores.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores[a] > scores[b]; });
  return order;
}

Predictor::Predictor(DsppModel& model, std::span<const Snapshot> snapshots, double snapshot_width,
                     std::size_t history)
    : model_(model),
      steady_(steady_embeddings(snapshots, model.tables, model.tfe)),
      width_(snapshot_width),
      history_(history),
      state_(initial_dynamic_state(model.tables, model.ase)),
      histories_(static_cast<std::size_t>(model.config().users)) {}

void Predictor::check_user(Index user) const {
  if (user < 0 || user >= model_.config().users) {
    throw std::out_of_range("unknown user id " + std::to_string(user));
  }
}

void Predictor::observe(const Interaction& x) {
  check_user(x.user);
  if (x.item < 0 || x.item >= model_.config().items) {
    throw std::out_of_range("unknown item id " + std::to_string(x.item));
  }
  if (x.time < state_.user_time(x.user) || x.time < state_.item_time(x.item)) {
    throw std::invalid_argument("observe: interaction precedes the node's last update");
  }
  auto& past = histories_[static_cast<std::size_t>(x.user)];
  const auto end = std::partition_point(past.begin(), past.end(),
                                        [&](const HistoryEntry& e) { return e.time < x.time; });
  const std::size_t take = std::min(history_, static_cast<std::size_t>(end - past.begin()));
  InteractionSequence seq{x.user, std::vector<HistoryEntry>(end - static_cast<std::ptrdiff_t>(take), end)};

  Graph g = Graph::inference();
  const RowVector us = state_.user(x.user);
  const RowVector vs = state_.item(x.item);
  InteractionUpdate upd = encode_interaction(g, model_, x.user, x.item, x.time, seq,
                                             g.parameter(*model_.omega), &us, &vs);
  state_.set_user(x.user, upd.dynamic.user.value().row(0), x.time);
  state_.set_item(x.item, upd.dynamic.item.value().row(0), x.time);
  past.push_back({x.item, x.time});
}

bool Predictor::seen(Index user) const {
  check_user(user);
  return !histories_[static_cast<std::size_t>(user)].empty();
}

double Predictor::last_time(Index user) const {
  check_user(user);
  return state_.user_time(user);
}

PairSeries Predictor::pair(Index user, Index item, double t_n) const {
  check_user(user);
  const Index m = snapshot_of(t_n, width_, steady_.snapshots());
  const Matrix& su = steady_.users[static_cast<std::size_t>(m)];
  const Matrix& sv = steady_.items[static_cast<std::size_t>(m)];
  return pair_series(su.row(user), sv.row(item), state_.user(user), state_.item(item),
                     model_.shift.users->value().row(user), model_.shift.items->value().row(item),
                     state_.user_time(user), state_.item_time(item));
}

std::vector<double> Predictor::item_intensities(Index user, double t) const {
  check_user(user);
  const double origin = state_.user_time(user);
  std::vector<double> out(static_cast<std::size_t>(model_.config().items));
  for (Index v = 0; v < model_.config().items; ++v) {
    out[static_cast<std::size_t>(v)] = pair(user, v, origin).at(t);
  }
  return out;
}

std::vector<Index> Predictor::rank_items(Index user, double t) const {
  return rank_by_score(item_intensities(user, t));
}

Index Predictor::rank_of(Index user, Index item, double t) const {
  const std::vector<double> scores = item_intensities(user, t);
  const double target = scores.at(static_cast<std::size_t>(item));
  Index rank = 1;
  for (Index v = 0; v < static_cast<Index>(scores.size()); ++v) {
    const double s = scores[static_cast<std::size_t>(v)];
    if (s > target || (s == target && v < item)) ++rank;
  }
  return rank;
}

TimePrediction Predictor::predict_time(Index user, Index item, double t_n,
                                       const QuadratureConfig& quadrature) const {
  const PairSeries series = pair(user, item, t_n);
  return expected_interval([&](double s) { return series.at(s); }, t_n, quadrature);
}

}  // namespace dspp
