#include "dspp/optimizer.hpp"

#include "dspp/errors.hpp"

#include <cmath>

namespace dspp {

void Adam::step(ParameterStore& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].grad().allFinite()) {
      throw NumericError("non-finite gradient in parameter '" + params[i].name() + "'");
    }
  }
  if (moments_.size() != params.size()) {
    moments_.clear();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Parameter& p = params[i];
      moments_.push_back({Matrix::Zero(p.rows(), p.cols()), Matrix::Zero(p.rows(), p.cols())});
    }
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  const double lr = config_.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    Moments& m = moments_[i];
    m.first = config_.beta1 * m.first + (1.0 - config_.beta1) * p.grad();
    m.second = config_.beta2 * m.second + (1.0 - config_.beta2) * p.grad().cwiseAbs2();
    const Matrix m_hat = m.first / c1;
    const Matrix v_hat = m.second / c2;
    p.value() -= lr * config_.weight_decay * p.value();
    p.value().array() -= lr * m_hat.array() / (v_hat.array().sqrt() + config_.epsilon);
  }
}

}  // namespace dspp
