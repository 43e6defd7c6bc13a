#include "fixtures.hpp"

#include <cmath>

namespace dspp::testkit {

TemporalNetwork tiny_network() {
  std::vector<Interaction> xs = {
      {0, 0, 1.0, 0}, {0, 1, 2.0, 0}, {1, 2, 2.5, 0}, {0, 1, 3.2, 0},
      {1, 0, 4.1, 0}, {0, 2, 5.0, 0}, {1, 2, 5.5, 0}, {0, 1, 6.3, 0},
      {1, 1, 7.0, 0}, {0, 0, 7.7, 0}, {1, 2, 8.4, 0}, {0, 1, 9.1, 0},
  };
  return TemporalNetwork(2, 3, std::move(xs), horizon_after(9.1));
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.dim = 8;
  c.history = 4;
  c.mc_samples = 8;
  c.snapshots = 2;
  c.batch_size = 64;
  c.train_ratio = 1.0;
  c.valid_ratio = 0.0;
  c.seed = 17;
  return c;
}

std::vector<double> rescaled_gaps(const HawkesSpec& spec, const TemporalNetwork& net) {
  std::vector<double> gaps;
  gaps.reserve(net.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < net.size(); ++k) {
    const double t = net[k].time;
    double integral = spec.base.sum() * (t - prev);
    for (std::size_t j = 0; j < k; ++j) {
      const Interaction& e = net[j];
      double alpha = 0.0;
      for (Index v = 0; v < spec.items; ++v) alpha += spec.excitation(v, e.item);
      integral += alpha / spec.decay *
                  (std::exp(-spec.decay * (prev - e.time)) - std::exp(-spec.decay * (t - e.time)));
    }
    gaps.push_back(integral);
    prev = t;
  }
  return gaps;
}

BlockHarness::BlockHarness(const TemporalNetwork& net, const TrainConfig& c)
    : config(c), data(prepare_dataset(net, c)), train_data(make_train_data(data)) {
  model = std::make_unique<DsppModel>(config.model(net.users(), net.items()), config.seed);
  state = initial_dynamic_state(model->tables, model->ase);
  cache = steady_embeddings(train_data.snapshots, model->tables, model->tfe);
}

double BlockHarness::run() {
  return run_block(*model, train_data, state, cache, 0, data.train.size(), config, 1).loss;
}

}  // namespace dspp::testkit
