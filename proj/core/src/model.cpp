#include "dspp/model.hpp"

#include <stdexcept>

namespace dspp {

DsppModel::DsppModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  if (config.users < 1 || config.items < 1) {
    throw std::invalid_argument("model needs at least one user and one item");
  }
  if (config.dim < 1) throw std::invalid_argument("embedding dimension must be positive");
  Rng rng = make_rng(seed, {0});
  tables = make_node_tables(params_, config.users, config.items, config.dim, rng);
  omega = &make_time_frequencies(params_, config.dim);
  tfe = make_tfe(params_, config.dim, config.tal_layers, rng);
  ase = make_ase(params_, config.dim, config.heads, rng);
  shift = make_shift(params_, config.users, config.items, config.dim);
}

InteractionUpdate encode_interaction(Graph& g, DsppModel& model, Index user, Index item, double t,
                                     const InteractionSequence& history, Var omega,
                                     const RowVector* user_state, const RowVector* item_state) {
  Var u = lookup(g, *model.tables.users, user);
  Var v = lookup(g, *model.tables.items, item);
  InteractionUpdate out;
  out.attention = attentive_interaction(g, model.ase, u, v, omega, *model.tables.items, t, history);
  Var us = u;
  Var vs = v;
  if (model.config().carry_dynamic_state) {
    if (user_state != nullptr) us = g.constant(*user_state);
    if (item_state != nullptr) vs = g.constant(*item_state);
  }
  out.dynamic = update_dynamic(g, model.ase, us, vs, out.attention.output);
  return out;
}

}  // namespace dspp
