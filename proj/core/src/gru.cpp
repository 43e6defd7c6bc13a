#include "dspp/gru.hpp"

#include "dspp/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace dspp {

Matrix xavier_uniform(Index rows, Index cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  }
  return m;
}

Matrix normal_matrix(Index rows, Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  }
  return m;
}

GruParams make_gru(ParameterStore& store, const std::string& prefix, Index input_dim,
                   Index hidden_dim, Rng& rng) {
  if (input_dim <= 0 || hidden_dim <= 0) throw std::invalid_argument("make_gru: non-positive size");
  GruParams p;
  p.input_weight = &store.add(prefix + ".w_input", xavier_uniform(3 * hidden_dim, input_dim, rng));
  p.hidden_weight = &store.add(prefix + ".w_hidden", xavier_uniform(3 * hidden_dim, hidden_dim, rng));
  p.input_bias = &store.add(prefix + ".b_input", Matrix::Zero(1, 3 * hidden_dim));
  p.hidden_bias = &store.add(prefix + ".b_hidden", Matrix::Zero(1, 3 * hidden_dim));
  return p;
}

Var gru_cell(Graph& g, const GruParams& params, Var x, Var h) {
  const Index hd = params.hidden_dim();
  if (x.cols() != params.input_dim() || h.cols() != hd || x.rows() != h.rows()) {
    throw std::invalid_argument("gru_cell: dimension mismatch (x " + std::to_string(x.rows()) + "x" +
                                std::to_string(x.cols()) + ", h " + std::to_string(h.rows()) + "x" +
                                std::to_string(h.cols()) + ")");
  }
  Var gi = ops::linear(x, g.parameter(*params.input_weight), g.parameter(*params.input_bias));
  Var gh = ops::linear(h, g.parameter(*params.hidden_weight), g.parameter(*params.hidden_bias));
  Var r = ops::sigmoid(ops::add(ops::slice_cols(gi, 0, hd), ops::slice_cols(gh, 0, hd)));
  Var z = ops::sigmoid(ops::add(ops::slice_cols(gi, hd, hd), ops::slice_cols(gh, hd, hd)));
  Var c = ops::tanh(ops::add(ops::slice_cols(gi, 2 * hd, hd), ops::mul(r, ops::slice_cols(gh, 2 * hd, hd))));
  return ops::add(c, ops::mul(z, ops::sub(h, c)));
}

}  // namespace dspp
