#include "dspp/tpp.hpp"

#include "dspp/errors.hpp"
#include "dspp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace dspp {
namespace {

bool all_finite(const RowVector& v) { return v.allFinite(); }

}  // namespace

double intensity(const RowVector& steady_user, const RowVector& steady_item,
                 const RowVector& dynamic_user, const RowVector& dynamic_item) {
  if (!all_finite(steady_user) || !all_finite(steady_item) || !all_finite(dynamic_user) ||
      !all_finite(dynamic_item)) {
    throw NumericError("intensity: non-finite embedding");
  }
  return softplus(steady_user.dot(steady_item) + dynamic_user.dot(dynamic_item));
}

Var intensity(Var steady_user, Var steady_item, Var dynamic_user, Var dynamic_item) {
  if (!steady_user.value().allFinite() || !steady_item.value().allFinite() ||
      !dynamic_user.value().allFinite() || !dynamic_item.value().allFinite()) {
    throw NumericError("intensity: non-finite embedding");
  }
  return ops::softplus(
      ops::add(ops::dot(steady_user, steady_item), ops::dot(dynamic_user, dynamic_item)));
}

double PairSeries::at(double s) const {
  const double du = std::max(0.0, s - user_origin);
  const double dv = std::max(0.0, s - item_origin);
  return softplus(coeffs[0] + coeffs[1] + du * coeffs[2] + dv * coeffs[3] + du * dv * coeffs[4]);
}

PairSeries pair_series(const RowVector& steady_user, const RowVector& steady_item,
                       const RowVector& dynamic_user, const RowVector& dynamic_item,
                       const RowVector& shift_user, const RowVector& shift_item,
                       double user_origin, double item_origin) {
  const RowVector p = dynamic_user.cwiseProduct(dynamic_item);
  PairSeries s;
  s.coeffs = {steady_user.dot(steady_item), p.sum(), p.dot(shift_user), p.dot(shift_item),
              p.cwiseProduct(shift_user).dot(shift_item)};
  for (double c : s.coeffs) {
    if (!std::isfinite(c)) throw NumericError("pair_series: non-finite embedding");
  }
  s.user_origin = user_origin;
  s.item_origin = item_origin;
  return s;
}

PairSeriesVar pair_series(Var steady_user, Var steady_item, Var dynamic_user, Var dynamic_item,
                          Var shift_user, Var shift_item, double user_origin, double item_origin) {
  Var p = ops::mul(dynamic_user, dynamic_item);
  const Var parts[] = {ops::dot(steady_user, steady_item), ops::sum(p), ops::dot(p, shift_user),
                       ops::dot(p, shift_item), ops::dot(ops::mul(p, shift_user), shift_item)};
  return {ops::concat_rows(parts), user_origin, item_origin};
}

Var series_intensity(const PairSeriesVar& pair, std::span<const double> times) {
  Graph& g = *pair.coeffs.graph();
  Matrix design(static_cast<Index>(times.size()), 5);
  for (Index k = 0; k < design.rows(); ++k) {
    const double du = std::max(0.0, times[k] - pair.user_origin);
    const double dv = std::max(0.0, times[k] - pair.item_origin);
    design.row(k) << 1.0, 1.0, du, dv, du * dv;
  }
  return ops::softplus(ops::matmul(g.constant(std::move(design)), pair.coeffs));
}

double survival(const std::function<double(double)>& lambda, double t_n, double t_plus,
                int grid_points) {
  if (t_plus < t_n) throw std::invalid_argument("survival: t_plus precedes t_n");
  if (grid_points < 1) throw std::invalid_argument("survival: need at least one grid interval");
  if (t_plus == t_n) return 1.0;
  const double h = (t_plus - t_n) / grid_points;
  double integral = 0.5 * (lambda(t_n) + lambda(t_plus));
  for (int k = 1; k < grid_points; ++k) integral += lambda(t_n + k * h);
  return std::exp(-integral * h);
}

std::vector<double> stratified_times(double t0, double t1, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("stratified_times: need at least one sample");
  if (t1 < t0) throw std::invalid_argument("stratified_times: empty interval");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double width = (t1 - t0) / n;
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = t0 + (k + unit(rng)) * width;
  return out;
}

std::vector<double> mc_weights(std::span<const double> times) {
  if (times.size() < 2) throw std::invalid_argument("mc_weights: need at least two samples");
  std::vector<double> w(times.size() - 1);
  for (std::size_t k = 1; k < times.size(); ++k) w[k - 1] = times[k] - times[k - 1];
  return w;
}

double mc_integral(std::span<const double> times, const std::function<double(double)>& lambda_hat) {
  const std::vector<double> w = mc_weights(times);
  double total = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) total += w[k - 1] * lambda_hat(times[k]);
  return total;
}

std::vector<Index> sample_negatives(Index positive, Index item_count, Index n, Rng& rng) {
  if (n < 0 || n >= item_count) {
    throw std::invalid_argument("sample_negatives: cannot draw " + std::to_string(n) +
                                " negatives from " + std::to_string(item_count) + " items");
  }
  // Floyd's algorithm over the item_count - 1 candidates, skipping `positive`.
  const Index pool = item_count - 1;
  std::unordered_set<Index> chosen;
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Index j = pool - n; j < pool; ++j) {
    const Index r = std::uniform_int_distribution<Index>(0, j)(rng);
    const Index pick = chosen.count(r) != 0 ? j : r;
    chosen.insert(pick);
    out.push_back(pick >= positive ? pick + 1 : pick);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Var interval_nll(Graph& g, const IntervalTerm& term, int samples, Rng& rng) {
  if (samples < 2) throw std::invalid_argument("interval_nll: need at least two samples");
  if (!(term.end > term.start)) {
    throw std::invalid_argument("interval_nll: empty interval for interaction " +
                                std::to_string(term.source));
  }
  const double end = term.end;
  Var observed = series_intensity(term.observed, std::span<const double>(&end, 1));
  if (!(observed.item() > 0.0)) {
    throw NumericError("zero intensity for interaction " + std::to_string(term.source));
  }
  Var loss = ops::scale(ops::log(observed), -1.0);
  if (!term.integral_pairs.empty()) {
    const std::vector<double> times = stratified_times(term.start, term.end, samples, rng);
    const std::vector<double> w = mc_weights(times);
    const std::span<const double> tail(times.data() + 1, times.size() - 1);
    Matrix weights(static_cast<Index>(w.size()), 1);
    for (std::size_t k = 0; k < w.size(); ++k) weights(static_cast<Index>(k), 0) = w[k] * term.scale;
    Var wv = g.constant(std::move(weights));
    for (const PairSeriesVar& pair : term.integral_pairs) {
      loss = ops::add(loss, ops::dot(wv, series_intensity(pair, tail)));
    }
  }
  if (!std::isfinite(loss.item())) {
    throw NumericError("non-finite loss for interaction " + std::to_string(term.source));
  }
  return loss;
}

Var nll(Graph& g, std::span<const IntervalTerm> terms, int samples, std::uint64_t seed) {
  if (terms.empty()) throw std::invalid_argument("nll: empty batch");
  Var total;
  for (const IntervalTerm& term : terms) {
    Rng rng = make_rng(seed, {term.source});
    Var part = interval_nll(g, term, samples, rng);
    total = total.valid() ? ops::add(total, part) : part;
  }
  return total;
}

TimePrediction expected_interval(const std::function<double(double)>& lambda, double t_n,
                                 const QuadratureConfig& config) {
  if (!(config.mean_interval > 0.0) || config.points_per_interval < 1 || !(config.cap_multiple > 0.0)) {
    throw std::invalid_argument("expected_interval: bad quadrature configuration");
  }
  const double h = config.mean_interval / config.points_per_interval;
  const long max_steps =
      static_cast<long>(std::ceil(config.cap_multiple * config.points_per_interval));
  double cumulative = 0.0;  // integral of lambda so far
  double prev_lambda = lambda(t_n);
  double prev_density = 0.0;  // (t - t_n) S lambda at t_n is zero
  double expectation = 0.0;
  double s = 1.0;
  long k = 0;
  while (k < max_steps) {
    ++k;
    const double x = k * h;
    const double lam = lambda(t_n + x);
    if (!std::isfinite(lam) || lam < 0.0) throw NumericError("expected_interval: invalid intensity");
    cumulative += 0.5 * h * (prev_lambda + lam);
    s = std::exp(-cumulative);
    const double density = x * s * lam;
    expectation += 0.5 * h * (prev_density + density);
    prev_lambda = lam;
    prev_density = density;
    if (s < config.survival_floor) break;
  }
  TimePrediction out;
  out.span = k * h;
  out.truncated = s >= config.survival_floor;
  out.interval = expectation + out.span * s;
  return out;
}

}  // namespace dspp
