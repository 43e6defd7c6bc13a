#include "dspp/checkpoint.hpp"
#include "dspp/errors.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace dspp;

namespace {

std::string saved_model(TrainConfig& config, DsppModel*& out_model) {
  static std::unique_ptr<DsppModel> keep;
  config = testkit::tiny_config();
  config.heads = 2;
  keep = std::make_unique<DsppModel>(config.model(2, 3), 31);
  keep->shift.users->value().setConstant(0.25);
  out_model = keep.get();
  std::ostringstream out;
  write_checkpoint(out, *keep, config, TimeFrame{3600.0, 0.75, 1.5}, {"a", "b"}, {"x", "y", "z"});
  return out.str();
}

}  // namespace

TEST(checkpoint, round_trip) {
  TrainConfig config;
  DsppModel* model = nullptr;
  const std::string bytes = saved_model(config, model);
  std::istringstream in(bytes);
  LoadedModel loaded = read_checkpoint(in);
  EXPECT_EQ(format_config(loaded.config), format_config(config));
  EXPECT_EQ(loaded.frame.time_scale, 3600.0);
  EXPECT_EQ(loaded.frame.snapshot_width, 0.75);
  EXPECT_EQ(loaded.frame.mean_interval, 1.5);
  EXPECT_EQ(loaded.user_ids, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(loaded.item_ids, (std::vector<std::string>{"x", "y", "z"}));
  ASSERT_EQ(loaded.model->params().size(), model->params().size());
  for (std::size_t i = 0; i < model->params().size(); ++i) {
    EXPECT_EQ(loaded.model->params()[i].name(), model->params()[i].name());
    EXPECT_EQ(loaded.model->params()[i].value(), model->params()[i].value());
  }
  std::ostringstream again;
  write_checkpoint(again, *loaded.model, loaded.config, loaded.frame, loaded.user_ids, loaded.item_ids);
  EXPECT_EQ(again.str(), bytes);
}

TEST(checkpoint, rejects_corruption) {
  TrainConfig config;
  DsppModel* model = nullptr;
  const std::string bytes = saved_model(config, model);

  std::string magic = bytes;
  magic[0] = 'X';
  std::istringstream a(magic);
  EXPECT_THROW(read_checkpoint(a), CheckpointError);

  std::string version = bytes;
  version[8] = static_cast<char>(99);
  std::istringstream b(version);
  EXPECT_THROW(read_checkpoint(b), CheckpointError);

  for (std::size_t cut : {std::size_t{4}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    std::istringstream c(bytes.substr(0, cut));
    EXPECT_THROW(read_checkpoint(c), CheckpointError) << cut;
  }
  std::istringstream empty("");
  EXPECT_THROW(read_checkpoint(empty), CheckpointError);
  EXPECT_THROW(load_checkpoint("/nonexistent/model.ckpt"), IoError);
}
