#pragma once

// Frozen bipartite adjacency of the network at evenly spaced cut-off times.

#include "dspp/data.hpp"
#include "dspp/ops.hpp"

#include <vector>

namespace dspp {

/// G^m: the set of (user, item) edges of all interactions with time < window_end.
/// Neighbor lists are sorted ascending and hold each neighbor once.
struct Snapshot {
  Index index = 0;
  double window_end = 0.0;
  SegmentIndex user_items;  // segment per user
  SegmentIndex item_users;  // segment per item

  Index users() const { return user_items.segments(); }
  Index items() const { return item_users.segments(); }
  Index edge_count() const { return user_items.size(); }
  bool has_edge(Index user, Index item) const;
};

/// Width d of one snapshot window: horizon / count.
double snapshot_width(double horizon, Index count);

/// floor(t / width), clamped to [0, count - 1].
Index snapshot_of(double t, double width, Index count);

/// Snapshots m = 0 .. count-1 of `net` with window ends width * m. Throws
/// std::invalid_argument if count < 1 or width <= 0.
std::vector<Snapshot> build_snapshots(const TemporalNetwork& net, Index count, double width);
/// Same with width = snapshot_width(net.horizon(), count).
std::vector<Snapshot> build_snapshots(const TemporalNetwork& net, Index count);

}  // namespace dspp
