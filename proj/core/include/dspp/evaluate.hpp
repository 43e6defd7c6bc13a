#pragma once

#include "dspp/predictor.hpp"

#include <span>
#include <vector>

namespace dspp {

struct EvalReport {
  std::size_t interactions = 0;
  double mrr = 0.0;
  double recall_at_10 = 0.0;
  /// Root mean squared error of next-interval predictions, in hours. NaN
  /// when no interaction had a previous event of the same user.
  double rmse_hours = 0.0;
  std::size_t time_predictions = 0;
  /// Time predictions whose quadrature hit the cap.
  std::size_t truncated = 0;
  std::vector<Index> ranks;
};

/// MRR and Recall@10 from 1-based ranks; RMSE from paired intervals (already
/// in hours). Throws std::invalid_argument on empty ranks, a rank below 1 or
/// mismatched interval lengths.
EvalReport metrics(std::span<const Index> ranks, std::span<const double> predicted,
                   std::span<const double> truth);

struct EvalOptions {
  bool predict_time = true;
  QuadratureConfig quadrature;
  /// Hours per model time unit.
  double hours_per_unit = 1.0;
};

/// Next-interaction protocol over net[begin, end): interactions before
/// `begin` are replayed first; then each interaction is scored (rank of the
/// true item for its user, and the interval since that user's previous
/// interaction) before being observed. Throws std::invalid_argument on an
/// empty range.
EvalReport evaluate(DsppModel& model, const TemporalNetwork& net, std::size_t begin,
                    std::size_t end, std::span<const Snapshot> snapshots, double snapshot_width,
                    std::size_t history, const EvalOptions& options = {});

}  // namespace dspp
