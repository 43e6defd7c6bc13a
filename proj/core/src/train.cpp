#include "dspp/train.hpp"

#include "dspp/errors.hpp"
#include "dspp/optimizer.hpp"
#include "dspp/tpp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

namespace dspp {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  if (!value.empty() && value.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (value.empty() || ec != std::errc() || ptr != last) {
    throw ConfigError("invalid value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("invalid boolean '" + value + "' for " + key);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct KeyBinding {
  std::function<void(TrainConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename T>
KeyBinding bind(T TrainConfig::*member) {
  KeyBinding b;
  b.set = [member](TrainConfig& c, const std::string& key, const std::string& value) {
    if constexpr (std::is_same_v<T, bool>) {
      c.*member = parse_bool(key, value);
    } else {
      c.*member = parse_number<T>(key, value);
    }
  };
  b.get = [member](const TrainConfig& c) -> std::string {
    if constexpr (std::is_same_v<T, bool>) {
      return c.*member ? "true" : "false";
    } else if constexpr (std::is_floating_point_v<T>) {
      return format_double(c.*member);
    } else {
      return std::to_string(c.*member);
    }
  };
  return b;
}

const std::map<std::string, KeyBinding>& bindings() {
  static const std::map<std::string, KeyBinding> table = {
      {"dim", bind(&TrainConfig::dim)},
      {"batch_size", bind(&TrainConfig::batch_size)},
      {"learning_rate", bind(&TrainConfig::learning_rate)},
      {"weight_decay", bind(&TrainConfig::weight_decay)},
      {"mc_samples", bind(&TrainConfig::mc_samples)},
      {"negatives", bind(&TrainConfig::negatives)},
      {"tal_layers", bind(&TrainConfig::tal_layers)},
      {"heads", bind(&TrainConfig::heads)},
      {"snapshots", bind(&TrainConfig::snapshots)},
      {"history", bind(&TrainConfig::history)},
      {"epochs", bind(&TrainConfig::epochs)},
      {"seed", bind(&TrainConfig::seed)},
      {"patience", bind(&TrainConfig::patience)},
      {"workers", bind(&TrainConfig::workers)},
      {"bptt_depth", bind(&TrainConfig::bptt_depth)},
      {"carry_dynamic_state", bind(&TrainConfig::carry_dynamic_state)},
      {"train_ratio", bind(&TrainConfig::train_ratio)},
      {"valid_ratio", bind(&TrainConfig::valid_ratio)},
  };
  return table;
}

}  // namespace

ModelConfig TrainConfig::model(Index users, Index items) const {
  ModelConfig m;
  m.users = users;
  m.items = items;
  m.dim = dim;
  m.tal_layers = tal_layers;
  m.heads = heads;
  m.carry_dynamic_state = carry_dynamic_state;
  return m;
}

SplitRatios TrainConfig::ratios() const {
  return {train_ratio, valid_ratio, 1.0 - train_ratio - valid_ratio};
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "dim",       "batch_size", "learning_rate", "weight_decay", "mc_samples", "negatives",
      "tal_layers", "heads",     "snapshots",     "history",      "epochs",     "seed",
      "patience",  "workers",    "bptt_depth",    "carry_dynamic_state", "train_ratio",
      "valid_ratio"};
  return keys;
}

void set_config_value(TrainConfig& config, const std::string& key, const std::string& value) {
  auto it = bindings().find(key);
  if (it == bindings().end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second.set(config, key, trim(value));
}

std::string get_config_value(const TrainConfig& config, const std::string& key) {
  auto it = bindings().find(key);
  if (it == bindings().end()) throw ConfigError("unknown configuration key '" + key + "'");
  return it->second.get(config);
}

void validate(const TrainConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.dim >= 1, "dim must be positive");
  require(c.batch_size >= 1, "batch_size must be positive");
  require(c.learning_rate >= 0.0 && std::isfinite(c.learning_rate), "learning_rate must be >= 0");
  require(c.weight_decay >= 0.0 && std::isfinite(c.weight_decay), "weight_decay must be >= 0");
  require(c.mc_samples >= 2, "mc_samples must be at least 2");
  require(c.negatives >= 0, "negatives must be >= 0");
  require(c.tal_layers >= 1, "tal_layers must be positive");
  require(c.heads >= 1 && c.dim % c.heads == 0, "heads must be positive and divide dim");
  require(c.snapshots >= 1, "snapshots must be positive");
  require(c.history >= 1, "history must be positive");
  require(c.epochs >= 0, "epochs must be >= 0");
  require(c.patience >= 0, "patience must be >= 0");
  require(c.workers >= 1, "workers must be positive");
  require(c.bptt_depth >= 1, "bptt_depth must be positive");
  require(c.train_ratio > 0.0 && c.valid_ratio >= 0.0 && c.train_ratio + c.valid_ratio <= 1.0 + 1e-12,
          "train_ratio must be positive, valid_ratio non-negative, and their sum at most 1");
}

TrainConfig parse_config(std::istream& in, TrainConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    try {
      set_config_value(base, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  return parse_config(in, base);
}

std::string format_config(const TrainConfig& config) {
  std::string out;
  for (const std::string& key : config_keys()) out += key + " = " + get_config_value(config, key) + "\n";
  return out;
}

Dataset prepare_dataset(const TemporalNetwork& raw, const TrainConfig& config) {
  const SplitSizes sizes = split_sizes(raw.size(), config.ratios());
  if (sizes.train == 0) throw DataError("training split is empty");
  TimeFrame frame;
  frame.time_scale = mean_inter_event_interval(raw.slice(0, sizes.train));
  const TemporalNetwork scaled = raw.rescaled(frame.time_scale);
  frame.snapshot_width = snapshot_width(scaled.horizon(), config.snapshots);
  frame.mean_interval = mean_user_interval(scaled.slice(0, sizes.train));
  return prepare_dataset(raw, config, frame);
}

Dataset prepare_dataset(const TemporalNetwork& raw, const TrainConfig& config,
                        const TimeFrame& frame) {
  const SplitSizes sizes = split_sizes(raw.size(), config.ratios());
  if (sizes.train == 0) throw DataError("training split is empty");
  Dataset d;
  d.frame = frame;
  d.net = raw.rescaled(frame.time_scale);
  d.train_end = sizes.train;
  d.valid_end = sizes.train + sizes.valid;
  d.train = d.net.slice(0, d.train_end);
  d.train_snapshots = build_snapshots(d.train, config.snapshots, frame.snapshot_width);
  d.test_snapshots = build_snapshots(d.net.slice(0, d.valid_end), config.snapshots, frame.snapshot_width);
  return d;
}

TrainData make_train_data(const Dataset& data) {
  TrainData td;
  td.train = &data.train;
  td.snapshots = data.train_snapshots;
  td.snapshot_width = data.frame.snapshot_width;
  td.next.assign(data.train.size(), kNone);
  for (Index u = 0; u < data.train.users(); ++u) {
    const auto& idx = data.train.user_interactions(u);
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) td.next[idx[k]] = idx[k + 1];
  }
  return td;
}

namespace {

struct WorkerOutput {
  GradientBuffer grads;
  std::map<std::pair<Index, Index>, RowVector> user_seeds;
  std::map<std::pair<Index, Index>, RowVector> item_seeds;
  double loss = 0.0;
  std::exception_ptr error;
};

void add_seed(std::map<std::pair<Index, Index>, RowVector>& seeds, Index m, Index row,
              const RowVector& g) {
  auto [it, inserted] = seeds.try_emplace({m, row}, g);
  if (!inserted) it->second += g;
}

}  // namespace

BlockResult run_block(DsppModel& model, const TrainData& data, const DynamicState& state,
                      const SteadyState& cache, std::size_t begin, std::size_t end,
                      const TrainConfig& config, int epoch) {
  const TemporalNetwork& net = *data.train;
  if (begin >= end || end > net.size()) throw std::invalid_argument("run_block: empty block");
  const Index snapshot_count = static_cast<Index>(data.snapshots.size());
  const Index users = model.config().users;
  const Index items = model.config().items;
  const std::size_t n = end - begin;

  BlockResult result;
  result.user_updates.resize(n);
  result.item_updates.resize(n);

  std::vector<bool> has_term(n, false);
  Index m_lo = snapshot_count;
  Index m_hi = -1;
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t j = data.next[i];
    if (j == kNone || !(net[j].time > net[i].time)) continue;
    has_term[i - begin] = true;
    ++result.terms;
    const Index m = snapshot_of(net[i].time, data.snapshot_width, snapshot_count);
    m_lo = std::min(m_lo, m);
    m_hi = std::max(m_hi, m);
  }

  Graph chain_graph;
  SteadyChain chain;
  if (result.terms > 0) {
    const Index first = std::max<Index>(0, m_lo - (config.bptt_depth - 1));
    chain = steady_chain(chain_graph, data.snapshots, model.tables, model.tfe, first, m_hi, &cache);
  }

  std::vector<std::size_t> order;
  order.reserve(n);
  const TBatch batches = t_batch(std::span<const Interaction>(net.interactions()).subspan(begin, n));
  for (const auto& batch : batches.batches) {
    for (std::size_t pos : batch) order.push_back(begin + pos);
  }

  const double term_weight = result.terms > 0 ? 1.0 / static_cast<double>(result.terms) : 0.0;
  const Index negatives = std::min<Index>(config.negatives, items - 1);
  const double scale = static_cast<double>(users) * static_cast<double>(items) /
                       static_cast<double>(1 + negatives);

  auto process = [&](std::size_t i, WorkerOutput& out) {
    const Interaction& x = net[i];
    Graph g(&out.grads);
    Var omega = g.parameter(*model.omega);
    const InteractionSequence hist =
        history(net, x.user, x.time, static_cast<std::size_t>(config.history));
    const RowVector us = state.user(x.user);
    const RowVector vs = state.item(x.item);
    InteractionUpdate upd = encode_interaction(g, model, x.user, x.item, x.time, hist, omega, &us, &vs);
    result.user_updates[i - begin] = upd.dynamic.user.value().row(0);
    result.item_updates[i - begin] = upd.dynamic.item.value().row(0);
    if (!has_term[i - begin]) return;

    const Interaction& next = net[data.next[i]];
    const Index m = snapshot_of(x.time, data.snapshot_width, snapshot_count);
    const Matrix& steady_users = chain.user_at(m).value();
    const Matrix& steady_items = chain.item_at(m).value();
    Var su = g.input(steady_users.row(x.user));
    Var wu = g.parameter_row(*model.shift.users, x.user);
    std::vector<std::pair<Index, Var>> steady_inputs;
    auto item_pair = [&](Index item) {
      Var sx = g.input(steady_items.row(item));
      steady_inputs.emplace_back(item, sx);
      Var wx = g.parameter_row(*model.shift.items, item);
      if (item == x.item) {
        return pair_series(su, sx, upd.dynamic.user, upd.dynamic.item, wu, wx, x.time, x.time);
      }
      return pair_series(su, sx, upd.dynamic.user, g.constant(state.item(item)), wu, wx, x.time,
                         state.item_time(item));
    };

    Rng rng = make_rng(config.seed, {static_cast<std::uint64_t>(epoch), i});
    IntervalTerm term;
    term.observed = item_pair(next.item);
    term.integral_pairs.push_back(term.observed);
    for (Index neg : sample_negatives(next.item, items, negatives, rng)) {
      term.integral_pairs.push_back(item_pair(neg));
    }
    term.start = x.time;
    term.end = next.time;
    term.scale = scale;
    term.source = i;
    Var loss = interval_nll(g, term, config.mc_samples, rng);
    out.loss += loss.item();
    const Graph::Seed seed{loss, Matrix::Constant(1, 1, term_weight)};
    g.backward(std::span<const Graph::Seed>(&seed, 1));
    add_seed(out.user_seeds, m, x.user, su.grad().row(0));
    for (const auto& [item, sx] : steady_inputs) add_seed(out.item_seeds, m, item, sx.grad().row(0));
  };

  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(config.workers), n));
  std::vector<WorkerOutput> outputs(workers);
  auto work = [&](std::size_t w) {
    try {
      for (std::size_t k = w; k < order.size(); k += workers) process(order[k], outputs[w]);
    } catch (...) {
      outputs[w].error = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (const WorkerOutput& out : outputs) {
    if (out.error) std::rethrow_exception(out.error);
  }

  double total = 0.0;
  for (const WorkerOutput& out : outputs) {
    out.grads.apply();
    total += out.loss;
  }
  if (result.terms > 0) {
    result.loss = total / static_cast<double>(result.terms);
    const Index dim = model.config().dim;
    std::map<Index, std::pair<Matrix, Matrix>> seeds;
    auto slot = [&](Index m) -> std::pair<Matrix, Matrix>& {
      auto it = seeds.find(m);
      if (it == seeds.end()) {
        it = seeds.emplace(m, std::make_pair(Matrix::Zero(users, dim), Matrix::Zero(items, dim))).first;
      }
      return it->second;
    };
    for (const WorkerOutput& out : outputs) {
      for (const auto& [key, g] : out.user_seeds) slot(key.first).first.row(key.second) += g;
      for (const auto& [key, g] : out.item_seeds) slot(key.first).second.row(key.second) += g;
    }
    std::vector<Graph::Seed> list;
    for (auto& [m, pair] : seeds) {
      list.push_back({chain.user_at(m), std::move(pair.first)});
      list.push_back({chain.item_at(m), std::move(pair.second)});
    }
    chain_graph.backward(list);
  }
  return result;
}

TrainResult train(DsppModel& model, const Dataset& data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  validate(config);
  const TrainData td = make_train_data(data);
  AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;
  adam_config.weight_decay = config.weight_decay;
  Adam adam(adam_config);
  ParameterStore& params = model.params();

  TrainResult result;
  const bool has_valid = data.valid_end > data.train_end;
  std::vector<Matrix> best = params.values();
  std::vector<Matrix> last_good = best;
  double best_mrr = -std::numeric_limits<double>::infinity();
  int stale = 0;
  const std::size_t block = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    try {
      DynamicState state = initial_dynamic_state(model.tables, model.ase);
      const SteadyState cache = steady_embeddings(td.snapshots, model.tables, model.tfe);
      double total = 0.0;
      for (std::size_t begin = 0; begin < data.train.size(); begin += block) {
        const std::size_t end = std::min(begin + block, data.train.size());
        params.zero_grad();
        const BlockResult r = run_block(model, td, state, cache, begin, end, config, epoch);
        if (r.terms > 0) adam.step(params);
        for (std::size_t i = begin; i < end; ++i) {
          const Interaction& x = data.train[i];
          state.set_user(x.user, r.user_updates[i - begin], x.time);
          state.set_item(x.item, r.item_updates[i - begin], x.time);
        }
        total += r.loss * static_cast<double>(r.terms);
        record.terms += r.terms;
      }
      record.loss = record.terms > 0 ? total / static_cast<double>(record.terms) : 0.0;
      if (!std::isfinite(record.loss)) throw NumericError("non-finite epoch loss");
      for (std::size_t p = 0; p < params.size(); ++p) {
        if (!params[p].value().allFinite()) throw NumericError("parameter " + params[p].name() + " is not finite");
      }
    } catch (const NumericError& e) {
      params.set_values(last_good);
      result.diverged = true;
      result.divergence = "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }
    last_good = params.values();
    if (has_valid) {
      EvalOptions options;
      options.predict_time = false;
      record.valid_mrr =
          evaluate(model, data.net, data.train_end, data.valid_end, data.train_snapshots,
                   data.frame.snapshot_width, static_cast<std::size_t>(config.history), options)
              .mrr;
      if (record.valid_mrr > best_mrr) {
        best_mrr = record.valid_mrr;
        best = last_good;
        result.best_epoch = epoch;
        stale = 0;
      } else {
        ++stale;
      }
    } else {
      record.valid_mrr = std::numeric_limits<double>::quiet_NaN();
      best = last_good;
      result.best_epoch = epoch;
    }
    result.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
    if (has_valid && config.patience > 0 && stale >= config.patience) break;
  }
  params.set_values(result.diverged && !has_valid ? last_good : best);
  return result;
}

}  // namespace dspp
