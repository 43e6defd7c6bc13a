#pragma once

#include "dspp/graph.hpp"

#include <vector>

namespace dspp {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Decoupled: applied to the weights directly, not through the moments.
  double weight_decay = 1e-5;
};

/// Adam with bias correction and decoupled weight decay. Moment buffers are
/// bound to the store's registration order on the first step.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Applies one update from every parameter's grad(). Throws NumericError
  /// naming the parameter if any gradient entry is non-finite; in that case no
  /// parameter is modified.
  void step(ParameterStore& params);

  long steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct Moments {
    Matrix first;
    Matrix second;
  };
  AdamConfig config_;
  long steps_ = 0;
  std::vector<Moments> moments_;
};

}  // namespace dspp
