#include "dspp/checkpoint.hpp"

#include "dspp/errors.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace dspp {
namespace {

constexpr char kMagic[8] = {'D', 'S', 'P', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kMaxLength = std::uint64_t{1} << 40;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw CheckpointError("checkpoint is truncated");
  return v;
}

std::uint64_t get_length(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > kMaxLength) throw CheckpointError("checkpoint is corrupt (implausible length)");
  return n;
}

std::string get_string(std::istream& in) {
  std::string s(get_length(in), '\0');
  in.read(s.data(), static_cast<std::streamsize>(s.size()));
  if (!in) throw CheckpointError("checkpoint is truncated");
  return s;
}

void put_ids(std::ostream& out, const std::vector<std::string>& ids) {
  put<std::uint64_t>(out, ids.size());
  for (const auto& id : ids) put_string(out, id);
}

std::vector<std::string> get_ids(std::istream& in) {
  std::vector<std::string> ids(get_length(in));
  for (auto& id : ids) id = get_string(in);
  return ids;
}

}  // namespace

void write_checkpoint(std::ostream& out, const DsppModel& model, const TrainConfig& config,
                      const TimeFrame& frame, const std::vector<std::string>& user_ids,
                      const std::vector<std::string>& item_ids) {
  if (static_cast<Index>(user_ids.size()) != model.config().users ||
      static_cast<Index>(item_ids.size()) != model.config().items) {
    throw std::invalid_argument("write_checkpoint: id tables do not match the model");
  }
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put_string(out, format_config(config));
  put<double>(out, frame.time_scale);
  put<double>(out, frame.snapshot_width);
  put<double>(out, frame.mean_interval);
  put_ids(out, user_ids);
  put_ids(out, item_ids);
  const ParameterStore& params = model.params();
  put<std::uint64_t>(out, params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params[i];
    put_string(out, p.name());
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.cols()));
    // Column-major, as Eigen stores it.
    out.write(reinterpret_cast<const char*>(p.value().data()),
              static_cast<std::streamsize>(sizeof(double) * p.value().size()));
  }
}

void save_checkpoint(const std::string& path, const DsppModel& model, const TrainConfig& config,
                     const TimeFrame& frame, const std::vector<std::string>& user_ids,
                     const std::vector<std::string>& item_ids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  write_checkpoint(out, model, config, frame, user_ids, item_ids);
  out.flush();
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

LoadedModel read_checkpoint(std::istream& in) {
  char magic[sizeof(kMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a model checkpoint (bad magic number)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  LoadedModel out;
  std::istringstream config_text(get_string(in));
  try {
    out.config = parse_config(config_text);
    validate(out.config);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint configuration is invalid: ") + e.what());
  }
  out.frame.time_scale = get<double>(in);
  out.frame.snapshot_width = get<double>(in);
  out.frame.mean_interval = get<double>(in);
  out.user_ids = get_ids(in);
  out.item_ids = get_ids(in);
  if (out.user_ids.empty() || out.item_ids.empty()) throw CheckpointError("checkpoint has no nodes");
  out.model = std::make_unique<DsppModel>(
      out.config.model(static_cast<Index>(out.user_ids.size()), static_cast<Index>(out.item_ids.size())),
      out.config.seed);
  ParameterStore& params = out.model->params();
  const auto count = get_length(in);
  if (count != params.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(count) + " parameters, model expects " +
                          std::to_string(params.size()));
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = get_string(in);
    const auto rows = get_length(in);
    const auto cols = get_length(in);
    if (!params.contains(name)) throw CheckpointError("unexpected parameter '" + name + "'");
    Parameter& p = params.at(name);
    if (static_cast<Index>(rows) != p.rows() || static_cast<Index>(cols) != p.cols()) {
      throw CheckpointError("parameter '" + name + "' has shape " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", model expects " + std::to_string(p.rows()) +
                            "x" + std::to_string(p.cols()));
    }
    in.read(reinterpret_cast<char*>(p.value().data()),
            static_cast<std::streamsize>(sizeof(double) * p.value().size()));
    if (!in) throw CheckpointError("checkpoint is truncated");
  }
  return out;
}

LoadedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  try {
    return read_checkpoint(in);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path + ": " + e.what());
  }
}

}  // namespace dspp
