#include "dspp/snapshot.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace dspp {
namespace {

SegmentIndex to_segments(const std::vector<std::set<Index>>& lists) {
  SegmentIndex seg;
  seg.offsets.reserve(lists.size() + 1);
  for (const auto& l : lists) {
    seg.targets.insert(seg.targets.end(), l.begin(), l.end());
    seg.offsets.push_back(static_cast<Index>(seg.targets.size()));
  }
  return seg;
}

}  // namespace

bool Snapshot::has_edge(Index user, Index item) const {
  if (user < 0 || user >= users()) return false;
  const auto begin = user_items.targets.begin() + user_items.offsets[user];
  const auto end = user_items.targets.begin() + user_items.offsets[user + 1];
  return std::binary_search(begin, end, item);
}

double snapshot_width(double horizon, Index count) {
  if (count < 1) throw std::invalid_argument("snapshot count must be at least 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("snapshot horizon must be positive");
  return horizon / static_cast<double>(count);
}

Index snapshot_of(double t, double width, Index count) {
  if (!(t > 0.0)) return 0;
  const double m = std::floor(t / width);
  if (m >= static_cast<double>(count - 1)) return count - 1;
  return static_cast<Index>(m);
}

std::vector<Snapshot> build_snapshots(const TemporalNetwork& net, Index count, double width) {
  if (count < 1) throw std::invalid_argument("build_snapshots: need at least one snapshot");
  if (!(width > 0.0)) throw std::invalid_argument("build_snapshots: width must be positive");
  std::vector<std::set<Index>> user_items(static_cast<std::size_t>(net.users()));
  std::vector<std::set<Index>> item_users(static_cast<std::size_t>(net.items()));
  std::vector<Snapshot> out;
  out.reserve(static_cast<std::size_t>(count));
  std::size_t next = 0;
  for (Index m = 0; m < count; ++m) {
    const double end = width * static_cast<double>(m);
    while (next < net.size() && net[next].time < end) {
      user_items[static_cast<std::size_t>(net[next].user)].insert(net[next].item);
      item_users[static_cast<std::size_t>(net[next].item)].insert(net[next].user);
      ++next;
    }
    out.push_back(Snapshot{m, end, to_segments(user_items), to_segments(item_users)});
  }
  return out;
}

std::vector<Snapshot> build_snapshots(const TemporalNetwork& net, Index count) {
  return build_snapshots(net, count, snapshot_width(net.horizon(), count));
}

}  // namespace dspp
