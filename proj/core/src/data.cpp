#include "dspp/data.hpp"

#include "dspp/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

namespace dspp {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_integer(std::string_view s, long long& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

/// Dense ids in ascending raw order; numeric when every raw id is an integer.
std::vector<std::string> ordered_ids(std::vector<std::string> raw) {
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  std::vector<long long> numeric(raw.size());
  bool all_numeric = true;
  for (std::size_t i = 0; i < raw.size() && all_numeric; ++i) {
    all_numeric = parse_integer(raw[i], numeric[i]);
  }
  if (all_numeric) {
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return numeric[a] < numeric[b]; });
    std::vector<std::string> out;
    out.reserve(raw.size());
    for (std::size_t i : order) out.push_back(raw[i]);
    return out;
  }
  return raw;
}

std::unordered_map<std::string, Index> index_of(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, Index> m;
  m.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) m.emplace(ids[i], static_cast<Index>(i));
  return m;
}

}  // namespace

TemporalNetwork::TemporalNetwork(Index users, Index items, std::vector<Interaction> interactions,
                                 double horizon, std::vector<std::string> user_ids,
                                 std::vector<std::string> item_ids)
    : users_(users),
      items_(items),
      interactions_(std::move(interactions)),
      horizon_(horizon),
      user_ids_(std::move(user_ids)),
      item_ids_(std::move(item_ids)) {
  if (users_ < 0 || items_ < 0) throw std::invalid_argument("TemporalNetwork: negative node count");
  if (user_ids_.empty()) {
    for (Index u = 0; u < users_; ++u) user_ids_.push_back(std::to_string(u));
  }
  if (item_ids_.empty()) {
    for (Index v = 0; v < items_; ++v) item_ids_.push_back(std::to_string(v));
  }
  if (static_cast<Index>(user_ids_.size()) != users_ || static_cast<Index>(item_ids_.size()) != items_) {
    throw std::invalid_argument("TemporalNetwork: id table size does not match node count");
  }
  by_user_.assign(static_cast<std::size_t>(users_), {});
  double prev = 0.0;
  for (std::size_t i = 0; i < interactions_.size(); ++i) {
    const Interaction& x = interactions_[i];
    if (x.user < 0 || x.user >= users_ || x.item < 0 || x.item >= items_) {
      throw std::invalid_argument("TemporalNetwork: interaction " + std::to_string(i) +
                                  " has an id out of range");
    }
    if (!std::isfinite(x.time) || x.time < 0.0) {
      throw std::invalid_argument("TemporalNetwork: interaction " + std::to_string(i) +
                                  " has an invalid timestamp");
    }
    if (i > 0 && x.time < prev) {
      throw std::invalid_argument("TemporalNetwork: interactions not sorted by time at " +
                                  std::to_string(i));
    }
    prev = x.time;
    by_user_[static_cast<std::size_t>(x.user)].push_back(i);
  }
  if (!interactions_.empty() && horizon_ <= interactions_.back().time) {
    throw std::invalid_argument("TemporalNetwork: horizon must exceed the last timestamp");
  }
}

const std::vector<std::size_t>& TemporalNetwork::user_interactions(Index user) const {
  if (user < 0 || user >= users_) {
    throw std::out_of_range("unknown user id " + std::to_string(user));
  }
  return by_user_[static_cast<std::size_t>(user)];
}

TemporalNetwork TemporalNetwork::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > interactions_.size()) throw std::out_of_range("slice: bad range");
  std::vector<Interaction> part(interactions_.begin() + static_cast<std::ptrdiff_t>(begin),
                                interactions_.begin() + static_cast<std::ptrdiff_t>(end));
  TemporalNetwork out(users_, items_, std::move(part), horizon_, user_ids_, item_ids_);
  if (!features_.empty()) {
    out.features_.assign(features_.begin() + static_cast<std::ptrdiff_t>(begin),
                         features_.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

TemporalNetwork TemporalNetwork::rescaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw std::invalid_argument("rescaled: bad factor");
  std::vector<Interaction> scaled = interactions_;
  for (Interaction& x : scaled) x.time /= factor;
  TemporalNetwork out(users_, items_, std::move(scaled), horizon_ / factor, user_ids_, item_ids_);
  out.features_ = features_;
  return out;
}

double horizon_after(double max_time) {
  return max_time + 1e-6 * std::max(1.0, std::abs(max_time));
}

TemporalNetwork parse_interactions(std::istream& in, const ParseOptions& options) {
  struct RawRow {
    std::string user;
    std::string item;
    double time;
    int label;
    std::vector<float> features;
  };
  std::vector<RawRow> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t feature_count = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view);
    if (first) {
      first = false;
      double probe = 0.0;
      if (fields.size() >= 3 && !parse_double(fields[2], probe)) continue;  // header
    }
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() < 3) throw DataError(where + "expected at least 3 comma-separated fields");
    if (fields[0].empty() || fields[1].empty()) throw DataError(where + "empty user or item id");
    RawRow row{std::string(fields[0]), std::string(fields[1]), 0.0, 0, {}};
    if (!parse_double(fields[2], row.time) || !std::isfinite(row.time)) {
      throw DataError(where + "timestamp '" + std::string(fields[2]) + "' is not a number");
    }
    if (row.time < 0.0) throw DataError(where + "negative timestamp");
    if (fields.size() >= 4) {
      double label = 0.0;
      if (!parse_double(fields[3], label)) {
        throw DataError(where + "state label '" + std::string(fields[3]) + "' is not a number");
      }
      row.label = static_cast<int>(label);
    }
    if (fields.size() > 4) {
      const std::size_t k = fields.size() - 4;
      if (feature_count == 0) feature_count = k;
      if (k != feature_count) {
        throw DataError(where + "expected " + std::to_string(feature_count) + " feature columns, got " +
                        std::to_string(k));
      }
      if (options.keep_features) row.features.reserve(k);
      for (std::size_t f = 4; f < fields.size(); ++f) {
        double value = 0.0;
        if (!parse_double(fields[f], value)) {
          throw DataError(where + "feature column " + std::to_string(f - 3) + " is not a number");
        }
        if (options.keep_features) row.features.push_back(static_cast<float>(value));
      }
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::string> raw_users;
  std::vector<std::string> raw_items;
  raw_users.reserve(rows.size());
  raw_items.reserve(rows.size());
  for (const RawRow& r : rows) {
    raw_users.push_back(r.user);
    raw_items.push_back(r.item);
  }
  std::vector<std::string> user_ids = ordered_ids(std::move(raw_users));
  std::vector<std::string> item_ids = ordered_ids(std::move(raw_items));
  const auto user_index = index_of(user_ids);
  const auto item_index = index_of(item_ids);

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a].time < rows[b].time; });

  std::vector<Interaction> interactions;
  interactions.reserve(rows.size());
  std::vector<std::vector<float>> features;
  double max_time = 0.0;
  for (std::size_t i : order) {
    const RawRow& r = rows[i];
    interactions.push_back({user_index.at(r.user), item_index.at(r.item), r.time, r.label});
    max_time = std::max(max_time, r.time);
    if (options.keep_features) features.push_back(r.features);
  }
  const Index users = static_cast<Index>(user_ids.size());
  const Index items = static_cast<Index>(item_ids.size());
  TemporalNetwork net(users, items, std::move(interactions), horizon_after(max_time),
                      std::move(user_ids), std::move(item_ids));
  if (options.keep_features) net.set_features(std::move(features));
  return net;
}

TemporalNetwork load_interactions(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open interaction file '" + path + "'");
  try {
    return parse_interactions(in, options);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_interactions(std::ostream& out, const TemporalNetwork& net) {
  out << "user_id,item_id,timestamp,state_label";
  const auto& features = net.features();
  const std::size_t k = features.empty() ? 0 : features.front().size();
  for (std::size_t f = 0; f < k; ++f) out << ",feature_" << (f + 1);
  out << '\n';
  std::ostringstream buf;
  buf << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < net.size(); ++i) {
    const Interaction& x = net[i];
    buf.str("");
    buf << x.time;
    out << net.user_ids()[static_cast<std::size_t>(x.user)] << ','
        << net.item_ids()[static_cast<std::size_t>(x.item)] << ',' << buf.str() << ',' << x.label;
    if (!features.empty()) {
      for (float f : features[i]) {
        buf.str("");
        buf << f;
        out << ',' << buf.str();
      }
    }
    out << '\n';
  }
}

TemporalNetwork remap_ids(const TemporalNetwork& net, const std::vector<std::string>& user_ids,
                          const std::vector<std::string>& item_ids) {
  if (net.user_ids() == user_ids && net.item_ids() == item_ids) return net;
  const auto user_index = index_of(user_ids);
  const auto item_index = index_of(item_ids);
  std::vector<Interaction> mapped = net.interactions();
  for (Interaction& x : mapped) {
    const std::string& ru = net.user_ids()[static_cast<std::size_t>(x.user)];
    const std::string& ri = net.item_ids()[static_cast<std::size_t>(x.item)];
    auto u = user_index.find(ru);
    auto v = item_index.find(ri);
    if (u == user_index.end()) throw CheckpointError("user id '" + ru + "' is unknown to the model");
    if (v == item_index.end()) throw CheckpointError("item id '" + ri + "' is unknown to the model");
    x.user = u->second;
    x.item = v->second;
  }
  TemporalNetwork out(static_cast<Index>(user_ids.size()), static_cast<Index>(item_ids.size()),
                      std::move(mapped), net.horizon(), user_ids, item_ids);
  out.set_features(net.features());
  return out;
}

double mean_inter_event_interval(const TemporalNetwork& net) {
  if (net.size() < 2) return 1.0;
  const double span = net.interactions().back().time - net.interactions().front().time;
  if (!(span > 0.0)) return 1.0;
  return span / static_cast<double>(net.size() - 1);
}

double mean_user_interval(const TemporalNetwork& net) {
  double total = 0.0;
  std::size_t gaps = 0;
  for (Index u = 0; u < net.users(); ++u) {
    const auto& idx = net.user_interactions(u);
    for (std::size_t k = 1; k < idx.size(); ++k) {
      total += net[idx[k]].time - net[idx[k - 1]].time;
      ++gaps;
    }
  }
  if (gaps == 0 || !(total > 0.0)) return 1.0;
  return total / static_cast<double>(gaps);
}

SplitSizes split_sizes(std::size_t n, const SplitRatios& ratios) {
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");
  }
  // The small slack keeps products such as 0.1 * 70 from flooring to 6.
  const auto part = [n](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
  };
  SplitSizes s;
  s.train = std::min(n, part(ratios.train));
  s.valid = std::min(n - s.train, part(ratios.valid));
  s.test = n - s.train - s.valid;
  return s;
}

ChronoSplit chrono_split(const TemporalNetwork& net, const SplitRatios& ratios) {
  if (net.empty()) throw std::invalid_argument("chrono_split: empty network");
  const SplitSizes s = split_sizes(net.size(), ratios);
  return {net.slice(0, s.train), net.slice(s.train, s.train + s.valid),
          net.slice(s.train + s.valid, net.size())};
}

InteractionSequence history(const TemporalNetwork& net, Index user, double t,
                            std::size_t max_length) {
  const auto& idx = net.user_interactions(user);
  // First position whose time is >= t.
  const auto end = std::partition_point(idx.begin(), idx.end(),
                                        [&](std::size_t i) { return net[i].time < t; });
  const std::size_t available = static_cast<std::size_t>(end - idx.begin());
  const std::size_t take = std::min(available, max_length);
  InteractionSequence seq;
  seq.user = user;
  seq.entries.reserve(take);
  for (auto it = end - static_cast<std::ptrdiff_t>(take); it != end; ++it) {
    seq.entries.push_back({net[*it].item, net[*it].time});
  }
  return seq;
}

TBatch t_batch(std::span<const Interaction> interactions) {
  TBatch out;
  std::unordered_map<Index, std::size_t> user_batch;
  std::unordered_map<Index, std::size_t> item_batch;
  for (std::size_t i = 0; i < interactions.size(); ++i) {
    const Interaction& x = interactions[i];
    if (i > 0 && x.time < interactions[i - 1].time) {
      throw std::invalid_argument("t_batch: input is not sorted by time at position " +
                                  std::to_string(i));
    }
    std::size_t b = 0;
    if (auto it = user_batch.find(x.user); it != user_batch.end()) b = std::max(b, it->second);
    if (auto it = item_batch.find(x.item); it != item_batch.end()) b = std::max(b, it->second);
    // b is the 1-based batch index of the latest predecessor; this one goes in b + 1.
    if (out.batches.size() <= b) out.batches.resize(b + 1);
    out.batches[b].push_back(i);
    user_batch[x.user] = b + 1;
    item_batch[x.item] = b + 1;
  }
  return out;
}

}  // namespace dspp
