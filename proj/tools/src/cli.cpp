#include "dspp/cli.hpp"

#include "dspp/checkpoint.hpp"
#include "dspp/errors.hpp"
#include "dspp/evaluate.hpp"
#include "dspp/synth.hpp"
#include "dspp/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace dspp::cli {
namespace {

using nlohmann::json;

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : f.substr(b, e - b + 1));
  }
  return fields;
}

double parse_time(const std::string& field, std::size_t line_no) {
  double t = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), t);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !(t >= 0.0)) {
    throw DataError("query line " + std::to_string(line_no) + ": bad timestamp '" + field + "'");
  }
  return t;
}

/// Query rows; a first row whose timestamp column is not numeric is a header.
std::vector<std::pair<std::size_t, std::vector<std::string>>> read_queries(const std::string& path,
                                                                           std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open query file '" + path + "'");
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_csv(line);
    if (fields.size() < columns) {
      throw DataError("query line " + std::to_string(line_no) + ": expected " +
                      std::to_string(columns) + " columns");
    }
    if (rows.empty() && line_no == 1) {
      double probe = 0.0;
      const std::string& t = fields[columns - 1];
      const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), probe);
      if (ec != std::errc() || ptr != t.data() + t.size()) continue;
    }
    rows.emplace_back(line_no, std::move(fields));
  }
  return rows;
}

Index find_id(const std::vector<std::string>& ids, const std::string& raw, const char* kind,
              std::size_t line_no) {
  const auto it = std::find(ids.begin(), ids.end(), raw);
  if (it == ids.end()) {
    throw DataError("query line " + std::to_string(line_no) + ": unknown " + kind + " id '" + raw + "'");
  }
  return static_cast<Index>(it - ids.begin());
}

void log_config(std::ostream& err, const TrainConfig& config) {
  err << "resolved configuration:\n";
  std::istringstream lines(format_config(config));
  std::string line;
  while (std::getline(lines, line)) err << "  " << line << '\n';
}

/// Model plus the caller's data expressed in the model's ids and time units.
struct Session {
  LoadedModel loaded;
  Dataset data;
};

Session open_session(const std::string& model_path, const std::string& data_path) {
  Session s;
  s.loaded = load_checkpoint(model_path);
  const TemporalNetwork raw =
      remap_ids(load_interactions(data_path), s.loaded.user_ids, s.loaded.item_ids);
  if (raw.empty()) throw DataError("'" + data_path + "' holds no interactions");
  s.data = prepare_dataset(raw, s.loaded.config, s.loaded.frame);
  return s;
}

struct Options {
  std::string data;
  std::string config_file;
  std::string model;
  std::string out;
  std::string spec;
  std::string queries;
  std::string split = "test";
  std::uint64_t seed = 0;
  bool no_time = false;
  int top = 10;
  std::map<std::string, std::string> overrides;
};

int do_generate(const Options& o, std::ostream& out, std::ostream& err) {
  const HawkesSpec spec = o.spec.empty() ? default_hawkes_spec() : load_hawkes_spec(o.spec);
  validate(spec);
  const TemporalNetwork net = simulate(spec, o.seed);
  if (o.out.empty()) {
    write_interactions(out, net);
  } else {
    std::ofstream file(o.out);
    if (!file) throw IoError("cannot write '" + o.out + "'");
    write_interactions(file, net);
  }
  err << "generated " << net.size() << " interactions (" << spec.users << " users, "
      << spec.items << " items, seed " << o.seed << ")\n";
  return kOk;
}

int do_train(const Options& o, std::ostream& out, std::ostream& err) {
  TrainConfig config;
  if (!o.config_file.empty()) config = load_config(o.config_file);
  for (const auto& [key, value] : o.overrides) set_config_value(config, key, value);
  validate(config);
  log_config(err, config);

  const TemporalNetwork raw = load_interactions(o.data);
  if (raw.empty()) throw DataError("'" + o.data + "' holds no interactions");
  const Dataset data = prepare_dataset(raw, config);
  DsppModel model(config.model(raw.users(), raw.items()), config.seed);
  err << "data: " << raw.users() << " users, " << raw.items() << " items, " << raw.size()
      << " interactions (" << data.train_end << " train, " << data.valid_end - data.train_end
      << " valid, " << raw.size() - data.valid_end << " test)\n";

  const TrainResult result = train(model, data, config, [&](const EpochRecord& r) {
    out << json{{"event", "epoch"},
                {"epoch", r.epoch},
                {"loss", r.loss},
                {"terms", r.terms},
                {"valid_mrr", r.valid_mrr}}
               .dump()
        << '\n';
    out.flush();
  });
  const std::string path = o.out.empty() ? "model.ckpt" : o.out;
  save_checkpoint(path, model, config, data.frame, raw.user_ids(), raw.item_ids());
  out << json{{"event", "trained"},
              {"epochs", result.epochs.size()},
              {"best_epoch", result.best_epoch},
              {"diverged", result.diverged},
              {"checkpoint", path}}
             .dump()
      << '\n';
  if (result.diverged) {
    err << "training diverged (" << result.divergence << "); kept the last good parameters\n";
    return kDiverged;
  }
  return kOk;
}

int do_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  Session s = open_session(o.model, o.data);
  log_config(err, s.loaded.config);
  const Dataset& d = s.data;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::span<const Snapshot> snapshots = d.train_snapshots;
  if (o.split == "train") {
    end = d.train_end;
  } else if (o.split == "valid") {
    begin = d.train_end;
    end = d.valid_end;
  } else if (o.split == "test") {
    begin = d.valid_end;
    end = d.net.size();
    snapshots = d.test_snapshots;
  } else {
    throw ConfigError("unknown split '" + o.split + "' (expected train, valid or test)");
  }
  if (begin >= end) throw DataError("the " + o.split + " split is empty");
  EvalOptions options;
  options.predict_time = !o.no_time;
  options.quadrature.mean_interval = d.frame.mean_interval;
  options.hours_per_unit = d.frame.time_scale / 3600.0;
  const EvalReport r = evaluate(*s.loaded.model, d.net, begin, end, snapshots,
                                d.frame.snapshot_width,
                                static_cast<std::size_t>(s.loaded.config.history), options);
  out << json{{"event", "evaluate"},
              {"split", o.split},
              {"interactions", r.interactions},
              {"mrr", r.mrr},
              {"recall_at_10", r.recall_at_10},
              {"rmse_hours", r.rmse_hours},
              {"rmse_scope", "interactions whose user has an earlier interaction"},
              {"time_predictions", r.time_predictions},
              {"truncated", r.truncated}}
             .dump()
      << '\n';
  return kOk;
}

/// Replays the whole data file so queries see the final state.
Predictor replay(Session& s) {
  const Dataset& d = s.data;
  Predictor p(*s.loaded.model, d.test_snapshots, d.frame.snapshot_width,
              static_cast<std::size_t>(s.loaded.config.history));
  for (const Interaction& x : d.net.interactions()) p.observe(x);
  return p;
}

int do_predict_item(const Options& o, std::ostream& out, std::ostream&) {
  Session s = open_session(o.model, o.data);
  const auto queries = read_queries(o.queries, 2);
  if (o.top < 1) throw ConfigError("--top must be positive");
  const Predictor p = replay(s);
  const double scale = s.data.frame.time_scale;
  for (const auto& [line_no, q] : queries) {
    const Index user = find_id(s.loaded.user_ids, q[0], "user", line_no);
    const double t = parse_time(q[1], line_no);
    const std::vector<Index> ranked = p.rank_items(user, t / scale);
    json items = json::array();
    for (std::size_t k = 0; k < ranked.size() && k < static_cast<std::size_t>(o.top); ++k) {
      items.push_back(s.loaded.item_ids[static_cast<std::size_t>(ranked[k])]);
    }
    out << json{{"user", q[0]}, {"timestamp", t}, {"items", items}}.dump() << '\n';
  }
  return kOk;
}

int do_predict_time(const Options& o, std::ostream& out, std::ostream&) {
  Session s = open_session(o.model, o.data);
  const auto queries = read_queries(o.queries, 3);
  const Predictor p = replay(s);
  const double scale = s.data.frame.time_scale;
  QuadratureConfig quadrature;
  quadrature.mean_interval = s.data.frame.mean_interval;
  for (const auto& [line_no, q] : queries) {
    const Index user = find_id(s.loaded.user_ids, q[0], "user", line_no);
    const Index item = find_id(s.loaded.item_ids, q[1], "item", line_no);
    const double t = parse_time(q[2], line_no);
    const TimePrediction r = p.predict_time(user, item, t / scale, quadrature);
    out << json{{"user", q[0]},
                {"item", q[1]},
                {"timestamp", t},
                {"expected_interval_seconds", r.interval * scale},
                {"predicted_time", t + r.interval * scale},
                {"truncated", r.truncated}}
               .dump()
        << '\n';
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structural temporal point process model for user-item interaction streams", "dspp"};
  app.require_subcommand(1, 1);
  Options o;

  auto* generate = app.add_subcommand("generate", "Simulate a synthetic Hawkes interaction log");
  generate->add_option("--spec", o.spec, "Hawkes spec file (key = value); default 2x3 spec if omitted")
      ->check(CLI::ExistingFile);
  generate->add_option("--seed", o.seed, "Random seed");
  generate->add_option("--out", o.out, "Output CSV (standard output if omitted)");

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--data", o.data, "Interaction CSV")->required();
  train_cmd->add_option("--config", o.config_file, "Config file (key = value)");
  train_cmd->add_option("--out", o.out, "Checkpoint path (default model.ckpt)");
  for (const std::string& key : config_keys()) {
    train_cmd->add_option_function<std::string>(
        "--" + dashed(key), [&o, key](const std::string& v) { o.overrides[key] = v; },
        "Override config key " + key);
  }

  auto* eval_cmd = app.add_subcommand("evaluate", "Rank and time-prediction metrics on a split");
  eval_cmd->add_option("--model", o.model, "Checkpoint")->required();
  eval_cmd->add_option("--data", o.data, "Interaction CSV")->required();
  eval_cmd->add_option("--split", o.split, "train, valid or test (default test)");
  eval_cmd->add_flag("--no-time", o.no_time, "Skip time prediction");

  auto* item_cmd = app.add_subcommand("predict-item", "Top items per (user_id,timestamp) query");
  item_cmd->add_option("--model", o.model, "Checkpoint")->required();
  item_cmd->add_option("--data", o.data, "Interaction history CSV")->required();
  item_cmd->add_option("--queries", o.queries, "CSV of user_id,timestamp")->required();
  item_cmd->add_option("--top", o.top, "Number of items per query (default 10)");

  auto* time_cmd = app.add_subcommand("predict-time", "Expected next time per (user_id,item_id,timestamp)");
  time_cmd->add_option("--model", o.model, "Checkpoint")->required();
  time_cmd->add_option("--data", o.data, "Interaction history CSV")->required();
  time_cmd->add_option("--queries", o.queries, "CSV of user_id,item_id,timestamp")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kUsage;
  }
  try {
    if (generate->parsed()) return do_generate(o, out, err);
    if (train_cmd->parsed()) return do_train(o, out, err);
    if (eval_cmd->parsed()) return do_evaluate(o, out, err);
    if (item_cmd->parsed()) return do_predict_item(o, out, err);
    if (time_cmd->parsed()) return do_predict_time(o, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kMissingFile;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << '\n';
    return kBadCheckpoint;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kBadData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace dspp::cli
