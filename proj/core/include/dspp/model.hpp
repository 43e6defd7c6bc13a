#pragma once

#include "dspp/ase.hpp"
#include "dspp/embedding.hpp"
#include "dspp/tfe.hpp"

#include <cstdint>

namespace dspp {

struct ModelConfig {
  Index users = 0;
  Index items = 0;
  Index dim = 128;
  Index tal_layers = 2;
  Index heads = 8;
  /// Keep the previous dynamic embedding as the update GRU's state instead
  /// of resetting it to the static row at every interaction.
  bool carry_dynamic_state = false;
};

/// All learnable tensors, registered in a fixed order so that one seed gives
/// one initialisation.
class DsppModel {
 public:
  DsppModel(const ModelConfig& config, std::uint64_t seed);
  DsppModel(const DsppModel&) = delete;
  DsppModel& operator=(const DsppModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  NodeTables tables;
  Parameter* omega = nullptr;
  TfeParams tfe;
  AseParams ase;
  ShiftParams shift;

 private:
  ModelConfig config_;
  ParameterStore params_;
};

/// Dynamic embeddings produced by one interaction.
struct InteractionUpdate {
  AttentionOutput attention;
  DynamicPair dynamic;
};

/// Attention plus update GRUs for (user, item) at time t. The GRU states are
/// the static rows unless the model carries state, in which case
/// `user_state` / `item_state` (previous dynamic embeddings) are used.
InteractionUpdate encode_interaction(Graph& g, DsppModel& model, Index user, Index item, double t,
                                     const InteractionSequence& history, Var omega,
                                     const RowVector* user_state = nullptr,
                                     const RowVector* item_state = nullptr);

}  // namespace dspp
