#pragma once

// Static node tables and the positional + continuous-time embedding.

#include "dspp/graph.hpp"
#include "dspp/random.hpp"

#include <span>

namespace dspp {

struct NodeTables {
  Parameter* users = nullptr;  // |U| x D
  Parameter* items = nullptr;  // |V| x D

  Index dim() const { return users->cols(); }
};

/// Registers `node.users` and `node.items`, entries drawn from N(0, 0.1^2).
NodeTables make_node_tables(ParameterStore& store, Index users, Index items, Index dim, Rng& rng);

/// Differentiable 1 x D row of a table. Throws std::out_of_range on a bad id.
Var lookup(Graph& g, Parameter& table, Index id);

/// Learnable frequencies omega (1 x D), initialised to 1 / 10000^(j/D).
Parameter& make_time_frequencies(ParameterStore& store, Index dim);

/// Entry j (1-based) is cos(w_j * (t_plus - t_h) + h / 10000^((j-1)/D)) for
/// odd j and sin(w_j * (t_plus - t_h) + h / 10000^(j/D)) for even j. Throws
/// std::invalid_argument if t_plus < t_h or h < 0.
RowVector time_embedding(Index position, double t_h, double t_plus, const RowVector& omega);

/// Row r is the embedding for (positions[r], times[r]) at query time t_plus,
/// differentiable with respect to omega (a 1 x D node).
Var time_embedding(Graph& g, Var omega, std::span<const Index> positions,
                   std::span<const double> times, double t_plus);

}  // namespace dspp
