#include "dspp/errors.hpp"
#include "dspp/synth.hpp"
#include "dspp/train.hpp"

#include "fixtures.hpp"
#include "gradcheck.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace dspp;

TEST(train_config, defaults_and_parsing) {
  TrainConfig d;
  EXPECT_EQ(d.dim, 128);
  EXPECT_EQ(d.batch_size, 128);
  EXPECT_EQ(d.mc_samples, 64);
  EXPECT_EQ(d.negatives, 10);
  EXPECT_EQ(d.tal_layers, 2);
  EXPECT_EQ(d.heads, 8);

  std::istringstream in("# small run\ndim = 16\n\nheads=2  # inline\nlearning_rate = 0.005\ncarry_dynamic_state = true\n");
  TrainConfig c = parse_config(in);
  EXPECT_EQ(c.dim, 16);
  EXPECT_EQ(c.heads, 2);
  EXPECT_DOUBLE_EQ(c.learning_rate, 0.005);
  EXPECT_TRUE(c.carry_dynamic_state);
  EXPECT_EQ(c.batch_size, 128);
}

TEST(train_config, errors_name_the_line) {
  std::istringstream unknown("dim = 16\nlearnig_rate = 1\n");
  try {
    parse_config(unknown);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream bad("dim = sixteen\n");
  EXPECT_THROW(parse_config(bad), ConfigError);
  std::istringstream no_eq("dim 16\n");
  EXPECT_THROW(parse_config(no_eq), ConfigError);
  TrainConfig c;
  EXPECT_THROW(set_config_value(c, "dim", "four"), ConfigError);
  c.dim = -4;
  EXPECT_THROW(validate(c), ConfigError);
  c.dim = 16;
  c.heads = 3;
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.txt"), IoError);
}

TEST(train_config, format_round_trip) {
  TrainConfig c;
  c.dim = 24;
  c.heads = 4;
  c.learning_rate = 0.1 + 0.2;
  c.seed = 123456789012345ULL;
  c.train_ratio = 0.7;
  c.valid_ratio = 0.2;
  std::istringstream in(format_config(c));
  TrainConfig back = parse_config(in);
  EXPECT_EQ(format_config(back), format_config(c));
  EXPECT_EQ(back.learning_rate, c.learning_rate);
  EXPECT_EQ(back.seed, c.seed);
  for (const auto& key : config_keys()) EXPECT_EQ(get_config_value(back, key), get_config_value(c, key));
}

TEST(prepare_dataset, rescales_by_training_gaps) {
  TemporalNetwork raw(2, 2,
                      {{0, 0, 0, 0}, {1, 1, 10, 0}, {0, 1, 20, 0}, {1, 0, 30, 0}, {0, 0, 40, 0},
                       {1, 1, 50, 0}, {0, 1, 60, 0}, {1, 0, 70, 0}, {0, 0, 80, 0}, {1, 1, 1000, 0}},
                      horizon_after(1000));
  TrainConfig c;
  c.snapshots = 4;
  Dataset d = prepare_dataset(raw, c);
  EXPECT_DOUBLE_EQ(d.frame.time_scale, 10.0);
  EXPECT_EQ(d.train_end, 8u);
  EXPECT_EQ(d.valid_end, 9u);
  EXPECT_DOUBLE_EQ(d.net[9].time, 100.0);
  EXPECT_DOUBLE_EQ(d.frame.mean_interval, 2.0);
  EXPECT_EQ(d.train.size(), 8u);
  EXPECT_EQ(static_cast<Index>(d.train_snapshots.size()), 4);
  EXPECT_EQ(d.test_snapshots.back().edge_count(), 4);

  TrainData td = make_train_data(d);
  EXPECT_EQ(td.next[0], 2u);
  EXPECT_EQ(td.next[7], static_cast<std::size_t>(-1));
}

TEST(run_block, gradient_matches_finite_differences) {
  testkit::BlockHarness h(testkit::tiny_network(), testkit::tiny_config());
  testkit::GradCheckOptions options;
  options.max_entries = 24;
  // Several tensors have gradients near 1e-7; a smaller step drowns them in
  // round-off of the O(10) loss.
  options.step = 1e-4;
  auto checks = testkit::check_gradients(
      h.model->params(),
      [&] { return h.run(); },
      [&] { h.run(); }, options);
  for (const auto& c : checks) {
    EXPECT_LT(c.rel_error, 1e-4) << c.name << " norm " << c.analytic_norm;
  }
}

TEST(train, zero_epochs_keeps_initialisation) {
  TemporalNetwork net = testkit::tiny_network();
  TrainConfig c = testkit::tiny_config();
  c.epochs = 0;
  Dataset d = prepare_dataset(net, c);
  DsppModel trained(c.model(net.users(), net.items()), c.seed);
  DsppModel fresh(c.model(net.users(), net.items()), c.seed);
  TrainResult r = train(trained, d, c);
  EXPECT_TRUE(r.epochs.empty());
  EXPECT_EQ(r.best_epoch, 0);
  for (std::size_t i = 0; i < fresh.params().size(); ++i) {
    EXPECT_EQ(trained.params()[i].value(), fresh.params()[i].value()) << fresh.params()[i].name();
  }
}

TEST(train, identical_runs_are_bit_identical) {
  HawkesSpec spec = default_hawkes_spec();
  spec.horizon = 200.0;
  TemporalNetwork net = simulate(spec, 3);
  TrainConfig c = testkit::tiny_config();
  c.train_ratio = 0.8;
  c.valid_ratio = 0.1;
  c.batch_size = 16;
  c.epochs = 2;
  c.patience = 0;
  for (int workers : {1, 2}) {
    c.workers = workers;
    std::vector<double> losses[2];
    std::vector<double> mrr[2];
    for (int run = 0; run < 2; ++run) {
      Dataset d = prepare_dataset(net, c);
      DsppModel model(c.model(net.users(), net.items()), c.seed);
      TrainResult r = train(model, d, c);
      for (const auto& e : r.epochs) {
        losses[run].push_back(e.loss);
        mrr[run].push_back(e.valid_mrr);
      }
    }
    EXPECT_EQ(losses[0], losses[1]);
    EXPECT_EQ(mrr[0], mrr[1]);
    EXPECT_EQ(losses[0].size(), 2u);
  }
}

TEST(train, loss_decreases_on_synthetic_data) {
  HawkesSpec spec = default_hawkes_spec();
  spec.horizon = 400.0;
  TemporalNetwork net = simulate(spec, 5);
  TrainConfig c = testkit::tiny_config();
  c.train_ratio = 0.8;
  c.valid_ratio = 0.1;
  c.batch_size = 32;
  c.epochs = 6;
  c.patience = 0;
  c.learning_rate = 5e-3;
  Dataset d = prepare_dataset(net, c);
  DsppModel model(c.model(net.users(), net.items()), c.seed);
  std::vector<double> seen;
  TrainResult r = train(model, d, c, [&](const EpochRecord& e) { seen.push_back(e.loss); });
  ASSERT_EQ(r.epochs.size(), 6u);
  EXPECT_EQ(seen.size(), 6u);
  EXPECT_LT(r.epochs.back().loss, r.epochs.front().loss);
  EXPECT_FALSE(r.diverged);
  EXPECT_GE(r.best_epoch, 1);
}

TEST(train, non_finite_parameters_are_reported) {
  TemporalNetwork net = testkit::tiny_network();
  TrainConfig c = testkit::tiny_config();
  c.epochs = 3;
  Dataset d = prepare_dataset(net, c);
  DsppModel model(c.model(net.users(), net.items()), c.seed);
  model.tables.users->value()(0, 0) = std::nan("");
  TrainResult r = train(model, d, c);
  EXPECT_TRUE(r.diverged);
  EXPECT_FALSE(r.divergence.empty());
  EXPECT_TRUE(r.epochs.empty());
}
