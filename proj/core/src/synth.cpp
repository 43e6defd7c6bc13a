#include "dspp/synth.hpp"

#include "dspp/errors.hpp"
#include "dspp/random.hpp"

#include <Eigen/Eigenvalues>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <random>

namespace dspp {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("invalid value '" + v + "' for " + key);
  }
  return out;
}

Index to_index(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("invalid integer '" + v + "' in " + key);
  }
  return static_cast<Index>(out);
}

/// "<prefix>.<a>.<b>" -> (a, b), or false if the key has another form.
bool pair_key(const std::string& key, const std::string& prefix, Index& a, Index& b) {
  if (key.rfind(prefix + ".", 0) != 0) return false;
  const std::string rest = key.substr(prefix.size() + 1);
  const auto dot = rest.find('.');
  if (dot == std::string::npos) throw ConfigError("expected " + prefix + ".<i>.<j>, got " + key);
  a = to_index(key, rest.substr(0, dot));
  b = to_index(key, rest.substr(dot + 1));
  return true;
}

Matrix uniform_excitation(Index items, double self, double other) {
  Matrix m = Matrix::Constant(items, items, other);
  m.diagonal().setConstant(self);
  return m;
}

}  // namespace

HawkesSpec default_hawkes_spec() {
  HawkesSpec s;
  s.users = 2;
  s.items = 3;
  s.horizon = 1600.0;
  s.decay = 1.0;
  s.base = Matrix::Constant(2, 3, 0.05);
  s.base(0, 1) = 0.5;
  s.excitation = uniform_excitation(3, 0.3, 0.05);
  return s;
}

double branching_ratio(const HawkesSpec& spec) {
  if (spec.excitation.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> solver(spec.excitation / spec.decay, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void validate(const HawkesSpec& spec) {
  if (spec.users < 1 || spec.items < 1) throw ConfigError("Hawkes spec needs users and items");
  if (spec.base.rows() != spec.users || spec.base.cols() != spec.items) {
    throw ConfigError("base rate matrix must be users x items");
  }
  if (spec.excitation.rows() != spec.items || spec.excitation.cols() != spec.items) {
    throw ConfigError("excitation matrix must be items x items");
  }
  if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon)) throw ConfigError("horizon must be positive");
  if (!(spec.decay > 0.0) || !std::isfinite(spec.decay)) throw ConfigError("decay must be positive");
  if (!spec.base.allFinite() || spec.base.minCoeff() < 0.0) throw ConfigError("base rates must be >= 0");
  if (!spec.excitation.allFinite() || spec.excitation.minCoeff() < 0.0) {
    throw ConfigError("excitation must be >= 0");
  }
  const double rho = branching_ratio(spec);
  if (rho >= 1.0) {
    throw ConfigError("unstable Hawkes spec: branching ratio " + std::to_string(rho) + " >= 1");
  }
}

HawkesSpec parse_hawkes_spec(std::istream& in) {
  std::map<std::string, std::string> kv;
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
      throw ConfigError("spec line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  HawkesSpec s = default_hawkes_spec();
  bool reshaped = false;
  if (auto it = kv.find("users"); it != kv.end()) {
    s.users = to_index("users", it->second);
    reshaped = true;
  }
  if (auto it = kv.find("items"); it != kv.end()) {
    s.items = to_index("items", it->second);
    reshaped = true;
  }
  if (s.users < 1 || s.items < 1) throw ConfigError("users and items must be positive");
  double base_rate = 0.05;
  double off = 0.05;
  double self = 0.3;
  if (auto it = kv.find("horizon"); it != kv.end()) s.horizon = to_double("horizon", it->second);
  if (auto it = kv.find("decay"); it != kv.end()) s.decay = to_double("decay", it->second);
  const bool uniform_base = kv.count("base_rate") != 0;
  const bool uniform_exc = kv.count("excitation") != 0 || kv.count("excitation_self") != 0;
  if (uniform_base) base_rate = to_double("base_rate", kv["base_rate"]);
  if (kv.count("excitation")) off = to_double("excitation", kv["excitation"]);
  if (kv.count("excitation_self")) self = to_double("excitation_self", kv["excitation_self"]);
  if (reshaped || uniform_base) s.base = Matrix::Constant(s.users, s.items, base_rate);
  if (reshaped || uniform_exc) s.excitation = uniform_excitation(s.items, self, off);

  for (const auto& [key, value] : kv) {
    if (key == "users" || key == "items" || key == "horizon" || key == "decay" ||
        key == "base_rate" || key == "excitation" || key == "excitation_self") {
      continue;
    }
    Index a = 0;
    Index b = 0;
    if (pair_key(key, "base_rate", a, b)) {
      if (a < 0 || a >= s.users || b < 0 || b >= s.items) throw ConfigError(key + " is out of range");
      s.base(a, b) = to_double(key, value);
    } else if (pair_key(key, "excitation", a, b)) {
      if (a < 0 || a >= s.items || b < 0 || b >= s.items) throw ConfigError(key + " is out of range");
      s.excitation(a, b) = to_double(key, value);
    } else {
      throw ConfigError("unknown spec key '" + key + "'");
    }
  }
  validate(s);
  return s;
}

HawkesSpec load_hawkes_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec file '" + path + "'");
  return parse_hawkes_spec(in);
}

double hawkes_intensity(const HawkesSpec& spec, std::span<const HistoryEntry> user_history,
                        Index user, Index item, double t) {
  double lambda = spec.base(user, item);
  for (const HistoryEntry& e : user_history) {
    if (e.time >= t) continue;
    lambda += spec.excitation(item, e.item) * std::exp(-spec.decay * (t - e.time));
  }
  return lambda;
}

TemporalNetwork simulate(const HawkesSpec& spec, std::uint64_t seed,
                         std::vector<ThinningStep>* trace) {
  validate(spec);
  Rng rng = make_rng(seed, {});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double base_total = spec.base.sum();
  // Excitation part of each pair's intensity at the current time.
  Matrix excited = Matrix::Zero(spec.users, spec.items);
  std::vector<Interaction> events;
  double t = 0.0;
  double excited_total = 0.0;
  while (true) {
    const double bound = base_total + excited_total;
    if (!(bound > 0.0)) break;
    const double wait = -std::log1p(-unit(rng)) / bound;
    const double proposal = t + wait;
    if (proposal >= spec.horizon) break;
    const double factor = std::exp(-spec.decay * wait);
    excited *= factor;
    excited_total = excited.sum();
    const double lambda = base_total + excited_total;
    const bool accepted = unit(rng) * bound <= lambda;
    if (trace != nullptr) trace->push_back({proposal, bound, lambda, accepted});
    t = proposal;
    if (!accepted) continue;
    double pick = unit(rng) * lambda;
    Index user = spec.users - 1;
    Index item = spec.items - 1;
    bool found = false;
    for (Index u = 0; u < spec.users && !found; ++u) {
      for (Index v = 0; v < spec.items; ++v) {
        pick -= spec.base(u, v) + excited(u, v);
        if (pick < 0.0) {
          user = u;
          item = v;
          found = true;
          break;
        }
      }
    }
    events.push_back({user, item, t, 0});
    excited.row(user) += spec.excitation.col(item).transpose();
    excited_total = excited.sum();
  }
  return TemporalNetwork(spec.users, spec.items, std::move(events), spec.horizon);
}

}  // namespace dspp
