#pragma once

// Sequential inference: replays interactions into dynamic state and answers
// item-ranking and next-time queries in between.

#include "dspp/model.hpp"
#include "dspp/snapshot.hpp"
#include "dspp/tpp.hpp"

#include <span>
#include <vector>

namespace dspp {

class Predictor {
 public:
  /// Steady embeddings are computed once from `snapshots` with the model's
  /// current parameters. `history` is the attention window length.
  Predictor(DsppModel& model, std::span<const Snapshot> snapshots, double snapshot_width,
            std::size_t history);

  /// Applies the interaction's dynamic update to both endpoints. Throws
  /// std::invalid_argument if it precedes either endpoint's last update.
  void observe(const Interaction& x);

  bool seen(Index user) const;
  /// Time of the user's last observed interaction (0 if none).
  double last_time(Index user) const;
  const DynamicState& state() const { return state_; }

  /// Intensity of (user, item) at t for every item, with the steady term
  /// taken at the snapshot of the user's last update.
  std::vector<double> item_intensities(Index user, double t) const;
  /// Items by descending intensity, ties by ascending id. Throws
  /// std::out_of_range for an unknown user.
  std::vector<Index> rank_items(Index user, double t) const;
  /// 1-based position of `item` in rank_items(user, t).
  Index rank_of(Index user, Index item, double t) const;

  /// The pair's intensity as a function of time after t_n.
  PairSeries pair(Index user, Index item, double t_n) const;
  /// Expected time from t_n to the pair's next interaction.
  TimePrediction predict_time(Index user, Index item, double t_n,
                              const QuadratureConfig& quadrature) const;

 private:
  void check_user(Index user) const;

  DsppModel& model_;
  SteadyState steady_;
  double width_;
  std::size_t history_;
  DynamicState state_;
  std::vector<std::vector<HistoryEntry>> histories_;
};

/// Positions 1..n ordered by descending score, ties by ascending index.
std::vector<Index> rank_by_score(std::span<const double> scores);

}  // namespace dspp
