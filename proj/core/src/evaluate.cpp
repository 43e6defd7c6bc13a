#include "dspp/evaluate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dspp {

EvalReport metrics(std::span<const Index> ranks, std::span<const double> predicted,
                   std::span<const double> truth) {
  if (ranks.empty()) throw std::invalid_argument("metrics: no ranks");
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("metrics: predicted and true intervals differ in length");
  }
  EvalReport r;
  r.interactions = ranks.size();
  double reciprocal = 0.0;
  std::size_t hits = 0;
  for (Index rank : ranks) {
    if (rank < 1) throw std::invalid_argument("metrics: ranks are 1-based");
    reciprocal += 1.0 / static_cast<double>(rank);
    if (rank <= 10) ++hits;
  }
  r.mrr = reciprocal / static_cast<double>(ranks.size());
  r.recall_at_10 = static_cast<double>(hits) / static_cast<double>(ranks.size());
  r.ranks.assign(ranks.begin(), ranks.end());
  r.time_predictions = predicted.size();
  if (predicted.empty()) {
    r.rmse_hours = std::numeric_limits<double>::quiet_NaN();
  } else {
    double sq = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      const double e = predicted[i] - truth[i];
      sq += e * e;
    }
    r.rmse_hours = std::sqrt(sq / static_cast<double>(predicted.size()));
  }
  return r;
}

EvalReport evaluate(DsppModel& model, const TemporalNetwork& net, std::size_t begin,
                    std::size_t end, std::span<const Snapshot> snapshots, double snapshot_width,
                    std::size_t history, const EvalOptions& options) {
  if (begin >= end || end > net.size()) throw std::invalid_argument("evaluate: empty range");
  Predictor predictor(model, snapshots, snapshot_width, history);
  for (std::size_t i = 0; i < begin; ++i) predictor.observe(net[i]);
  std::vector<Index> ranks;
  std::vector<double> predicted;
  std::vector<double> truth;
  std::size_t truncated = 0;
  ranks.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const Interaction& x = net[i];
    ranks.push_back(predictor.rank_of(x.user, x.item, x.time));
    if (options.predict_time && predictor.seen(x.user)) {
      const double t_n = predictor.last_time(x.user);
      const TimePrediction p = predictor.predict_time(x.user, x.item, t_n, options.quadrature);
      if (p.truncated) ++truncated;
      predicted.push_back(p.interval * options.hours_per_unit);
      truth.push_back((x.time - t_n) * options.hours_per_unit);
    }
    predictor.observe(x);
  }
  EvalReport report = metrics(ranks, predicted, truth);
  report.truncated = truncated;
  return report;
}

}  // namespace dspp
