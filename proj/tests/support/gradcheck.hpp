#pragma once

// Central finite differences over the entries of registered parameters.

#include "dspp/graph.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dspp::testkit {

struct TensorCheck {
  std::string name;
  /// |analytic - numeric| / max(|analytic|, |numeric|, floor) over the
  /// checked entries (Euclidean norms).
  double rel_error = 0.0;
  double analytic_norm = 0.0;
  std::size_t entries = 0;
};

struct GradCheckOptions {
  double step = 1e-6;
  /// Norm below which a tensor's gradient is compared in absolute terms.
  double floor = 1e-6;
  /// Entries probed per tensor; larger tensors are sampled deterministically.
  std::size_t max_entries = 0;  // 0 = all
  unsigned seed = 1;
};

/// `analytic` must leave d loss / d p in every parameter's grad() (starting
/// from zeroed gradients); `loss` must be a pure function of the values.
std::vector<TensorCheck> check_gradients(ParameterStore& params, const std::function<double()>& loss,
                                         const std::function<void()>& analytic,
                                         const GradCheckOptions& options = {});

/// Largest rel_error of the checks.
double worst(const std::vector<TensorCheck>& checks);

}  // namespace dspp::testkit
