#include "dspp/embedding.hpp"

#include "dspp/gru.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dspp {
namespace {

double phase(Index position, Index c, Index dim) {
  // c is the 0-based column; odd 1-based columns use (j-1)/D, even ones j/D.
  const Index exponent = (c % 2 == 0) ? c : c + 1;
  return static_cast<double>(position) /
         std::pow(10000.0, static_cast<double>(exponent) / static_cast<double>(dim));
}

void check_times(Index position, double t_h, double t_plus) {
  if (position < 0) throw std::invalid_argument("time_embedding: negative position");
  if (t_plus < t_h) {
    throw std::invalid_argument("time_embedding: query time " + std::to_string(t_plus) +
                                " precedes event time " + std::to_string(t_h));
  }
}

}  // namespace

NodeTables make_node_tables(ParameterStore& store, Index users, Index items, Index dim, Rng& rng) {
  if (dim <= 0) throw std::invalid_argument("embedding dimension must be positive");
  NodeTables t;
  t.users = &store.add("node.users", normal_matrix(users, dim, 0.1, rng));
  t.items = &store.add("node.items", normal_matrix(items, dim, 0.1, rng));
  return t;
}

Var lookup(Graph& g, Parameter& table, Index id) { return g.parameter_row(table, id); }

Parameter& make_time_frequencies(ParameterStore& store, Index dim) {
  Matrix omega(1, dim);
  for (Index c = 0; c < dim; ++c) {
    omega(0, c) = 1.0 / std::pow(10000.0, static_cast<double>(c + 1) / static_cast<double>(dim));
  }
  return store.add("time.omega", std::move(omega));
}

RowVector time_embedding(Index position, double t_h, double t_plus, const RowVector& omega) {
  check_times(position, t_h, t_plus);
  const Index dim = omega.size();
  const double dt = t_plus - t_h;
  RowVector out(dim);
  for (Index c = 0; c < dim; ++c) {
    const double arg = omega(c) * dt + phase(position, c, dim);
    out(c) = (c % 2 == 0) ? std::cos(arg) : std::sin(arg);
  }
  return out;
}

Var time_embedding(Graph& g, Var omega, std::span<const Index> positions,
                   std::span<const double> times, double t_plus) {
  if (positions.size() != times.size()) {
    throw std::invalid_argument("time_embedding: positions and times differ in length");
  }
  if (omega.rows() != 1) throw std::invalid_argument("time_embedding: omega must be a row");
  const Index n = static_cast<Index>(positions.size());
  const Index dim = omega.cols();
  const RowVector w = omega.value().row(0);
  Matrix out(n, dim);
  Matrix slope(n, dim);  // d out / d omega
  for (Index r = 0; r < n; ++r) {
    check_times(positions[r], times[r], t_plus);
    const double dt = t_plus - times[r];
    for (Index c = 0; c < dim; ++c) {
      const double arg = w(c) * dt + phase(positions[r], c, dim);
      if (c % 2 == 0) {
        out(r, c) = std::cos(arg);
        slope(r, c) = -std::sin(arg) * dt;
      } else {
        out(r, c) = std::sin(arg);
        slope(r, c) = std::cos(arg) * dt;
      }
    }
  }
  return g.record(std::move(out), {omega}, [omega, slope](Graph& g, const Matrix& d) {
    g.accumulate(omega, d.cwiseProduct(slope).colwise().sum());
  });
}

}  // namespace dspp
