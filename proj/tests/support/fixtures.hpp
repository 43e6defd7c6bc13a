#pragma once

// Small shared instances for unit and acceptance tests.

#include "dspp/synth.hpp"
#include "dspp/train.hpp"

#include <memory>

namespace dspp::testkit {

/// 2 users x 3 items, 12 interactions over [1, 9.1] seconds.
TemporalNetwork tiny_network();

/// D = 8, H = 4, N = 8, M = 2, the whole network as training data, one block.
TrainConfig tiny_config();

/// One training block over a prepared dataset with frozen dynamic state and
/// steady cache, so its loss is a pure function of the parameters.
/// Compensator of the total generating intensity between consecutive events
/// (from 0 to the first event, then event to event), in closed form.
std::vector<double> rescaled_gaps(const HawkesSpec& spec, const TemporalNetwork& net);

struct BlockHarness {
  BlockHarness(const TemporalNetwork& net, const TrainConfig& config);

  /// Mean interval loss of the block; leaves gradients in the parameters.
  double run();

  TrainConfig config;
  Dataset data;
  TrainData train_data;
  std::unique_ptr<DsppModel> model;
  DynamicState state;
  SteadyState cache;
};

}  // namespace dspp::testkit
