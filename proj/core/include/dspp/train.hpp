#pragma once

// Maximum-likelihood training over consecutive blocks of the training split.

#include "dspp/ase.hpp"
#include "dspp/evaluate.hpp"
#include "dspp/model.hpp"
#include "dspp/snapshot.hpp"
#include "dspp/tfe.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace dspp {

struct TrainConfig {
  Index dim = 128;
  Index batch_size = 128;
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  int mc_samples = 64;
  Index negatives = 10;
  Index tal_layers = 2;
  Index heads = 8;
  Index snapshots = 128;
  Index history = 20;
  int epochs = 50;
  std::uint64_t seed = 0;
  /// Epochs without a validation MRR improvement before stopping; 0 disables.
  int patience = 5;
  int workers = 1;
  /// Snapshots of the fusion recurrence a block backpropagates through.
  Index bptt_depth = 8;
  bool carry_dynamic_state = false;
  double train_ratio = 0.8;
  double valid_ratio = 0.1;

  ModelConfig model(Index users, Index items) const;
  SplitRatios ratios() const;
};

/// Keys accepted by set_config_value, in canonical order.
const std::vector<std::string>& config_keys();
/// Throws ConfigError on an unknown key or a malformed / out-of-range value.
void set_config_value(TrainConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const TrainConfig& config, const std::string& key);
/// Throws ConfigError if a value is out of range.
void validate(const TrainConfig& config);

/// Flat `key = value` lines; `#` starts a comment. Throws ConfigError with the
/// line number on malformed lines or unknown keys.
TrainConfig parse_config(std::istream& in, TrainConfig base = {});
/// Throws IoError if the file cannot be read.
TrainConfig load_config(const std::string& path, TrainConfig base = {});
/// Every key, one `key = value` per line, in config_keys() order.
std::string format_config(const TrainConfig& config);

/// Time units shared by training and inference.
struct TimeFrame {
  /// Seconds per model time unit (interactions are divided by it).
  double time_scale = 1.0;
  double snapshot_width = 1.0;
  /// Pooled mean gap between a user's consecutive training interactions, in
  /// model units; drives the time-prediction quadrature.
  double mean_interval = 1.0;
};

/// A network in model time, its chronological split and the snapshot
/// sequences visible at each split boundary.
struct Dataset {
  TemporalNetwork net;
  TimeFrame frame;
  std::size_t train_end = 0;
  std::size_t valid_end = 0;
  TemporalNetwork train;
  /// Built from the training split; used for training and validation.
  std::vector<Snapshot> train_snapshots;
  /// Built from training + validation; used for the test split.
  std::vector<Snapshot> test_snapshots;
};

/// Derives the time frame from the training split: time_scale makes the mean
/// gap between consecutive training interactions 1. Throws DataError if the
/// training split is empty.
Dataset prepare_dataset(const TemporalNetwork& raw, const TrainConfig& config);
/// Uses a stored time frame (e.g. from a checkpoint).
Dataset prepare_dataset(const TemporalNetwork& raw, const TrainConfig& config,
                        const TimeFrame& frame);

/// Everything a training block reads besides the parameters.
struct TrainData {
  const TemporalNetwork* train = nullptr;
  std::span<const Snapshot> snapshots;
  double snapshot_width = 1.0;
  /// Position of the same user's next training interaction, or npos.
  std::vector<std::size_t> next;
};

TrainData make_train_data(const Dataset& data);

struct BlockResult {
  /// Mean interval loss over the block's terms (0 when there are none).
  double loss = 0.0;
  std::size_t terms = 0;
  /// New dynamic embeddings per interaction of the block, in order.
  std::vector<RowVector> user_updates;
  std::vector<RowVector> item_updates;
};

/// Loss of interactions [begin, end) given the dynamic state and the cached
/// steady states at the start of the block, with gradients added to the
/// parameters' grad(). Each interaction with a later training interaction of
/// the same user contributes the interval term from its time to that next
/// interaction. Randomness comes from make_rng(config.seed, {epoch, i}).
/// Throws NumericError if a term is not finite.
BlockResult run_block(DsppModel& model, const TrainData& data, const DynamicState& state,
                      const SteadyState& cache, std::size_t begin, std::size_t end,
                      const TrainConfig& config, int epoch);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  std::size_t terms = 0;
  /// NaN without a validation split.
  double valid_mrr = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  /// Epoch whose parameters were kept (0 = initialisation).
  int best_epoch = 0;
  bool diverged = false;
  std::string divergence;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains in place. Parameters end at the best validation epoch (or the last
/// epoch without validation data). On a non-finite loss or gradient the last
/// good parameters are restored and `diverged` is set.
TrainResult train(DsppModel& model, const Dataset& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace dspp
