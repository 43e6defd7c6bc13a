#pragma once

#include "dspp/graph.hpp"
#include "dspp/random.hpp"

#include <string>

namespace dspp {

/// Dense weight drawn uniformly from +-sqrt(6 / (fan_in + fan_out)).
Matrix xavier_uniform(Index rows, Index cols, Rng& rng);
Matrix normal_matrix(Index rows, Index cols, double stddev, Rng& rng);

/// Single-layer GRU. Gate blocks are stacked [reset; update; candidate] in the
/// 3H rows of both weight matrices.
struct GruParams {
  Parameter* input_weight = nullptr;   // 3H x In
  Parameter* hidden_weight = nullptr;  // 3H x H
  Parameter* input_bias = nullptr;     // 1 x 3H
  Parameter* hidden_bias = nullptr;    // 1 x 3H

  Index input_dim() const { return input_weight->cols(); }
  Index hidden_dim() const { return hidden_weight->cols(); }
};

/// Registers `<prefix>.w_input` etc.; weights Xavier-uniform, biases zero.
GruParams make_gru(ParameterStore& store, const std::string& prefix, Index input_dim,
                   Index hidden_dim, Rng& rng);

/// Row-batched GRU step: x is n x In, h is n x H, result n x H.
///   r = sigma(x Wir + h Whr + b), z = sigma(x Wiz + h Whz + b),
///   c = tanh(x Wic + b + r * (h Whc + b)),  h' = c + z * (h - c).
Var gru_cell(Graph& g, const GruParams& params, Var x, Var h);

}  // namespace dspp
