#pragma once

// Pairwise intensity, survival, Monte Carlo likelihood integral and
// next-event time expectation.

#include "dspp/graph.hpp"
#include "dspp/random.hpp"

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace dspp {

/// softplus(steady_u . steady_v + dynamic_u . dynamic_v). Throws NumericError
/// on non-finite input.
double intensity(const RowVector& steady_user, const RowVector& steady_item,
                 const RowVector& dynamic_user, const RowVector& dynamic_item);
Var intensity(Var steady_user, Var steady_item, Var dynamic_user, Var dynamic_item);

/// Intensity of one pair as a function of time when both dynamic embeddings
/// drift by the temporal shift from fixed origins. With a = dynamic user,
/// b = dynamic item, p = a * b and shift vectors w_u, w_v:
///   lambda(s) = softplus(c0 + c1 + du c2 + dv c3 + du dv c4),
///   c0 = steady dot, c1 = sum p, c2 = p . w_u, c3 = p . w_v, c4 = (p * w_u) . w_v,
/// where du = max(0, s - user_origin) and dv = max(0, s - item_origin).
struct PairSeries {
  std::array<double, 5> coeffs{};
  double user_origin = 0.0;
  double item_origin = 0.0;

  double at(double s) const;
};

PairSeries pair_series(const RowVector& steady_user, const RowVector& steady_item,
                       const RowVector& dynamic_user, const RowVector& dynamic_item,
                       const RowVector& shift_user, const RowVector& shift_item,
                       double user_origin, double item_origin);

/// Differentiable counterpart: coeffs is a 5 x 1 node.
struct PairSeriesVar {
  Var coeffs;
  double user_origin = 0.0;
  double item_origin = 0.0;
};

PairSeriesVar pair_series(Var steady_user, Var steady_item, Var dynamic_user, Var dynamic_item,
                          Var shift_user, Var shift_item, double user_origin, double item_origin);

/// Intensities at each of `times`, n x 1.
Var series_intensity(const PairSeriesVar& pair, std::span<const double> times);

/// exp(-integral of lambda over [t_n, t_plus]) by the composite trapezoid rule
/// on `grid_points` equal intervals. Throws std::invalid_argument if
/// t_plus < t_n or grid_points < 1.
double survival(const std::function<double(double)>& lambda, double t_n, double t_plus,
                int grid_points = 1000);

/// One uniform draw in each of n equal sub-intervals of [t0, t1], ascending.
std::vector<double> stratified_times(double t0, double t1, int n, Rng& rng);

/// Telescoping weights t_k - t_{k-1} for k = 2..N (N - 1 entries). Throws
/// std::invalid_argument if fewer than two times are given.
std::vector<double> mc_weights(std::span<const double> times);

/// sum_{k=2}^{N} (t_k - t_{k-1}) * lambda_hat(t_k).
double mc_integral(std::span<const double> times, const std::function<double(double)>& lambda_hat);

/// n distinct items other than `positive`, uniform without replacement,
/// ascending. Throws std::invalid_argument if n >= item_count.
std::vector<Index> sample_negatives(Index positive, Index item_count, Index n, Rng& rng);

/// One inter-event interval of a user: the event that ends it and the pairs
/// whose intensities make up the integral estimate over [start, end].
struct IntervalTerm {
  PairSeriesVar observed;
  std::vector<PairSeriesVar> integral_pairs;
  double start = 0.0;
  double end = 0.0;
  /// Factor turning the sampled pair sum into an estimate of the full sum.
  double scale = 1.0;
  /// Identifies the interaction in error messages.
  std::size_t source = 0;
};

/// -log lambda_observed(end) + sum_{k=2}^{N} (t_k - t_{k-1}) * scale *
/// sum_pairs lambda(t_k) with N stratified times in [start, end]. Throws
/// std::invalid_argument if samples < 2 or end <= start, NumericError if the
/// observed intensity is zero or the result is not finite.
Var interval_nll(Graph& g, const IntervalTerm& term, int samples, Rng& rng);

/// Sum of interval_nll over the terms, each drawing from its own stream
/// make_rng(seed, {term.source}). Throws std::invalid_argument on an empty batch.
Var nll(Graph& g, std::span<const IntervalTerm> terms, int samples, std::uint64_t seed);

struct QuadratureConfig {
  /// Typical gap between a user's events; sets grid step and cap.
  double mean_interval = 1.0;
  int points_per_interval = 1024;
  double cap_multiple = 50.0;
  double survival_floor = 1e-6;
};

struct TimePrediction {
  double interval = 0.0;
  /// The cap was hit before survival dropped below the floor.
  bool truncated = false;
  /// Where integration stopped, relative to t_n.
  double span = 0.0;
};

/// Integral of (t - t_n) S(t) lambda(t) over [t_n, t_max] by the trapezoid
/// rule, where t_max is the first grid point with S < survival_floor or the
/// cap t_n + cap_multiple * mean_interval, plus (t_max - t_n) S(t_max).
TimePrediction expected_interval(const std::function<double(double)>& lambda, double t_n,
                                 const QuadratureConfig& config = {});

}  // namespace dspp
