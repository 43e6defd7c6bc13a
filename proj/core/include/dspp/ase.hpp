#pragma once

// Dynamic embeddings: attention of a new interaction over the user's recent
// history, GRU updates of both endpoints and the temporal shift between events.

#include "dspp/data.hpp"
#include "dspp/embedding.hpp"
#include "dspp/gru.hpp"

#include <vector>

namespace dspp {

/// `query` and `key` are 2D x 2D, `value` is D x D. With more than one head
/// the heads split the projected widths evenly and `output` (D x D) mixes the
/// concatenated head outputs; with one head `output` is null.
struct AseParams {
  Parameter* query = nullptr;
  Parameter* key = nullptr;
  Parameter* value = nullptr;
  Parameter* output = nullptr;
  Index heads = 1;
  GruParams user_update;
  GruParams item_update;
};

/// Registers `ase.*`. Throws std::invalid_argument unless heads divides dim.
AseParams make_ase(ParameterStore& store, Index dim, Index heads, Rng& rng);

/// Per-node shift vectors, registered as `shift.users` / `shift.items` and
/// initialised to zero (no drift).
struct ShiftParams {
  Parameter* users = nullptr;
  Parameter* items = nullptr;
};

ShiftParams make_shift(ParameterStore& store, Index users, Index items, Index dim);

struct AttentionOutput {
  Var output;                // 1 x D
  std::vector<Var> weights;  // per head, |H| x 1; empty for a cold start
};

/// Attention of (user, item) at time t over the history. History items use
/// positions 1..|H|; the query uses the last entry's position and timestamp.
/// An empty history yields a zero output.
AttentionOutput attentive_interaction(Graph& g, const AseParams& params, Var user, Var item,
                                      Var omega, Parameter& item_table, double t,
                                      const InteractionSequence& history);

struct DynamicPair {
  Var user;
  Var item;
};

/// GRU updates with the attention output as input and the given states.
DynamicPair update_dynamic(Graph& g, const AseParams& params, Var user_state, Var item_state,
                           Var attention);

/// emb * (1 + delta * w) element-wise. Throws std::invalid_argument if delta < 0.
Var temporal_shift(Var emb, Var w, double delta);
RowVector temporal_shift(const RowVector& emb, const RowVector& w, double delta);

/// Latest dynamic embedding of every node with the time it was produced.
/// Embeddings at a later time are always obtained by shifting from that
/// origin (see at_user / at_item); there is no way to store a shifted value.
class DynamicState {
 public:
  DynamicState() = default;
  DynamicState(Matrix users, Matrix items);

  Index users() const { return users_.rows(); }
  Index items() const { return items_.rows(); }
  RowVector user(Index u) const { return users_.row(u); }
  RowVector item(Index v) const { return items_.row(v); }
  double user_time(Index u) const { return user_time_.at(static_cast<std::size_t>(u)); }
  double item_time(Index v) const { return item_time_.at(static_cast<std::size_t>(v)); }

  /// Throws std::invalid_argument if t precedes the node's last update.
  void set_user(Index u, const RowVector& emb, double t);
  void set_item(Index v, const RowVector& emb, double t);

  /// Shifted from the last update to t (no shift when t is earlier).
  RowVector user_at(Index u, double t, const RowVector& shift) const;
  RowVector item_at(Index v, double t, const RowVector& shift) const;

 private:
  Matrix users_;
  Matrix items_;
  std::vector<double> user_time_;
  std::vector<double> item_time_;
};

/// Cold-start state at time 0: the update GRUs applied to the static rows with
/// a zero attention input.
DynamicState initial_dynamic_state(const NodeTables& tables, const AseParams& params);

}  // namespace dspp
