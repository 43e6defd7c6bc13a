#pragma once

// Steady embeddings: stacked topological aggregation layers on every snapshot,
// fused across snapshots by one GRU per node type.

#include "dspp/embedding.hpp"
#include "dspp/gru.hpp"
#include "dspp/snapshot.hpp"

#include <span>
#include <vector>

namespace dspp {

/// One aggregation layer. For the user side: `user_hat` projects the mean of
/// a neighboring item's users, `user_attn` projects the user for attention
/// and `user_out` (D x 2D) maps [aggregate | input] to the output. The item
/// side mirrors it with its own matrices.
struct TalLayerParams {
  Parameter* user_hat = nullptr;
  Parameter* user_attn = nullptr;
  Parameter* user_out = nullptr;
  Parameter* item_hat = nullptr;
  Parameter* item_attn = nullptr;
  Parameter* item_out = nullptr;
};

struct TfeParams {
  std::vector<TalLayerParams> layers;
  GruParams user_fusion;
  GruParams item_fusion;
};

/// Registers `tal<k>.*` for k = 1..layers and `fusion.user` / `fusion.item`.
TfeParams make_tfe(ParameterStore& store, Index dim, Index layers, Rng& rng);

struct TalOutput {
  Var users;
  Var items;
  /// One weight per edge of snapshot.user_items (resp. item_users).
  Var user_attention;
  Var item_attention;
};

/// Nodes without neighbors pass their input through unchanged.
TalOutput tal_layer(Graph& g, const Snapshot& snapshot, const TalLayerParams& params, Var users,
                    Var items);

struct NodePair {
  Var users;
  Var items;
};

/// All layers on one snapshot starting from the given embeddings.
NodePair encode_snapshot(Graph& g, const Snapshot& snapshot, const TfeParams& params, Var users,
                         Var items);

/// Fused steady embeddings for every snapshot.
struct SteadyState {
  std::vector<Matrix> users;  // per snapshot, |U| x D
  std::vector<Matrix> items;  // per snapshot, |V| x D

  Index snapshots() const { return static_cast<Index>(users.size()); }
};

/// Runs the encoder and the fusion recurrence over all snapshots without
/// recording gradients. The recurrence starts from a zero state. Throws
/// std::invalid_argument on an empty snapshot list.
SteadyState steady_embeddings(std::span<const Snapshot> snapshots, const NodeTables& tables,
                              const TfeParams& params);

/// Differentiable fused embeddings for snapshots first..last.
struct SteadyChain {
  Index first = 0;
  std::vector<Var> users;
  std::vector<Var> items;

  Index last() const { return first + static_cast<Index>(users.size()) - 1; }
  Var user_at(Index m) const { return users.at(static_cast<std::size_t>(m - first)); }
  Var item_at(Index m) const { return items.at(static_cast<std::size_t>(m - first)); }
};

/// Records the recurrence from `first` to `last`. The state entering `first`
/// is taken from `cache` at first - 1 as a constant (zero when first is 0),
/// which truncates backpropagation at `first`.
SteadyChain steady_chain(Graph& g, std::span<const Snapshot> snapshots, const NodeTables& tables,
                         const TfeParams& params, Index first, Index last,
                         const SteadyState* cache);

}  // namespace dspp
