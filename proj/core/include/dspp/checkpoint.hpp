#pragma once

// Versioned binary model container: configuration, time frame, raw id tables
// and named parameter blobs.

#include "dspp/model.hpp"
#include "dspp/train.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace dspp {

struct LoadedModel {
  TrainConfig config;
  TimeFrame frame;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::unique_ptr<DsppModel> model;
};

void write_checkpoint(std::ostream& out, const DsppModel& model, const TrainConfig& config,
                      const TimeFrame& frame, const std::vector<std::string>& user_ids,
                      const std::vector<std::string>& item_ids);
/// Throws IoError if the file cannot be written.
void save_checkpoint(const std::string& path, const DsppModel& model, const TrainConfig& config,
                     const TimeFrame& frame, const std::vector<std::string>& user_ids,
                     const std::vector<std::string>& item_ids);

/// Throws CheckpointError on a bad magic number, an unsupported version,
/// truncated data, or parameters that do not match the stored configuration.
LoadedModel read_checkpoint(std::istream& in);
/// Throws IoError if the file cannot be opened.
LoadedModel load_checkpoint(const std::string& path);

}  // namespace dspp
