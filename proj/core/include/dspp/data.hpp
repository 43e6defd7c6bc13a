#pragma once

// Interaction logs: ingestion, chronological splits, per-user histories and
// t-batch scheduling. Everything here is immutable once built.

#include "dspp/graph.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dspp {

struct Interaction {
  Index user = 0;
  Index item = 0;
  double time = 0.0;
  /// state_label column of the JODIE layout; not used by the model.
  int label = 0;
};

struct ParseOptions {
  /// Keep the trailing feature columns (row-major, one row per interaction).
  bool keep_features = false;
};

/// Chronologically ordered user-item interactions with dense 0-based ids.
///
/// `user_ids` / `item_ids` map dense ids back to the raw ids of the source
/// file. Chronological splits share the parent's id tables and horizon, so
/// their counts describe the embedding tables rather than the ids present.
class TemporalNetwork {
 public:
  TemporalNetwork() = default;
  /// Throws std::invalid_argument if ids are out of range, timestamps are
  /// negative or non-finite, or interactions are not sorted by time.
  TemporalNetwork(Index users, Index items, std::vector<Interaction> interactions, double horizon,
                  std::vector<std::string> user_ids = {}, std::vector<std::string> item_ids = {});

  Index users() const { return users_; }
  Index items() const { return items_; }
  std::size_t size() const { return interactions_.size(); }
  bool empty() const { return interactions_.empty(); }
  double horizon() const { return horizon_; }
  const std::vector<Interaction>& interactions() const { return interactions_; }
  const Interaction& operator[](std::size_t i) const { return interactions_[i]; }
  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }

  /// Indices (into interactions()) of one user's interactions, chronological.
  const std::vector<std::size_t>& user_interactions(Index user) const;

  /// Interactions [begin, end) with the same id tables and horizon.
  TemporalNetwork slice(std::size_t begin, std::size_t end) const;
  /// Copy with every timestamp and the horizon divided by `factor`.
  TemporalNetwork rescaled(double factor) const;

  /// Feature rows when parsed with keep_features; otherwise empty.
  const std::vector<std::vector<float>>& features() const { return features_; }
  void set_features(std::vector<std::vector<float>> features) { features_ = std::move(features); }

 private:
  Index users_ = 0;
  Index items_ = 0;
  std::vector<Interaction> interactions_;
  double horizon_ = 0.0;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
  std::vector<std::vector<std::size_t>> by_user_;
  std::vector<std::vector<float>> features_;
};

/// Horizon used for a network whose last event is at `max_time`: slightly past
/// it so the last interaction falls inside the final snapshot window.
double horizon_after(double max_time);

/// Reads the JODIE CSV layout (`user_id,item_id,timestamp,state_label,f1..fk`)
/// or the 3-column variant. A first line whose timestamp field is not numeric
/// is treated as a header. Raw ids are mapped to dense indices in ascending
/// order (numeric order when every raw id is an integer). Interactions are
/// stably sorted by timestamp. Throws DataError with the line number on a
/// malformed row or a negative timestamp.
TemporalNetwork parse_interactions(std::istream& in, const ParseOptions& options = {});
TemporalNetwork load_interactions(const std::string& path, const ParseOptions& options = {});

/// Writes the network back with raw ids: header plus
/// `user_id,item_id,timestamp,state_label[,features]`, timestamps printed
/// with round-trip precision.
void write_interactions(std::ostream& out, const TemporalNetwork& net);

/// Re-expresses `net` with the dense ids of the given raw id tables. Throws
/// CheckpointError if `net` contains an id missing from the tables.
TemporalNetwork remap_ids(const TemporalNetwork& net, const std::vector<std::string>& user_ids,
                          const std::vector<std::string>& item_ids);

/// Mean gap between consecutive interactions of the whole stream (1 if fewer
/// than two interactions or zero span).
double mean_inter_event_interval(const TemporalNetwork& net);
/// Mean gap between consecutive interactions of the same user, pooled.
double mean_user_interval(const TemporalNetwork& net);

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
};

/// floor(ratio * n) for train and valid, remainder to test.
SplitSizes split_sizes(std::size_t n, const SplitRatios& ratios);

struct ChronoSplit {
  TemporalNetwork train;
  TemporalNetwork valid;
  TemporalNetwork test;
};

/// Contiguous chronological segments. Throws std::invalid_argument on an
/// empty network or ratios that do not sum to 1.
ChronoSplit chrono_split(const TemporalNetwork& net, const SplitRatios& ratios = {});

struct HistoryEntry {
  Index item = 0;
  double time = 0.0;
};

/// A user's most recent interactions strictly before a query time.
struct InteractionSequence {
  Index user = 0;
  std::vector<HistoryEntry> entries;  // chronological
};

/// At most `max_length` most recent interactions of `user` with time < t.
/// Throws std::out_of_range for an unknown user.
InteractionSequence history(const TemporalNetwork& net, Index user, double t,
                            std::size_t max_length);

/// Batches of positions into the input list; see t_batch().
struct TBatch {
  std::vector<std::vector<std::size_t>> batches;
};

/// Assigns each interaction to batch 1 + max(batch of the user's previous
/// interaction, batch of the item's previous interaction) (0 when absent).
/// Within a batch no user or item repeats and positions are ascending.
/// Throws std::invalid_argument if the input is not sorted by time.
TBatch t_batch(std::span<const Interaction> interactions);

}  // namespace dspp
