#pragma once

// Ground-truth multivariate Hawkes process over user-item pairs with an
// exponential kernel, simulated by Ogata thinning.

#include "dspp/data.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dspp {

/// Pair intensity lambda_{u,v}(t) = base(u, v) + sum over u's past events
/// (item h, time s) of excitation(v, h) * exp(-decay * (t - s)).
struct HawkesSpec {
  Index users = 0;
  Index items = 0;
  double horizon = 0.0;
  double decay = 1.0;
  Matrix base;        // users x items
  Matrix excitation;  // items x items, row = excited item, column = past item
};

/// 2 users x 3 items, base 0.05 except (user 0, item 1) at 0.5, excitation
/// 0.3 on the diagonal and 0.05 elsewhere, decay 1, horizon 1600 (about
/// 2,000 events).
HawkesSpec default_hawkes_spec();

/// Largest |eigenvalue| of excitation / decay; the process is stable below 1.
double branching_ratio(const HawkesSpec& spec);

/// Throws ConfigError on negative rates, non-positive decay or horizon,
/// shape mismatches, or a branching ratio >= 1.
void validate(const HawkesSpec& spec);

/// `key = value` lines starting from default_hawkes_spec(): users, items,
/// horizon, decay, base_rate (all pairs), base_rate.<u>.<v>, excitation
/// (off-diagonal), excitation_self (diagonal), excitation.<v>.<h>. Changing
/// users or items resets the matrices to the uniform values given. Throws
/// ConfigError on unknown keys or bad values.
HawkesSpec parse_hawkes_spec(std::istream& in);
/// Throws IoError if the file cannot be read.
HawkesSpec load_hawkes_spec(const std::string& path);

/// Exact intensity of (user, item) at t given that user's past events;
/// entries at or after t are ignored.
double hawkes_intensity(const HawkesSpec& spec, std::span<const HistoryEntry> user_history,
                        Index user, Index item, double t);

struct ThinningStep {
  double time = 0.0;
  /// Dominating rate used for the proposal.
  double bound = 0.0;
  /// True total intensity at the proposal time.
  double intensity = 0.0;
  bool accepted = false;
};

/// Events on [0, horizon). Deterministic in `seed`. Validates the spec first.
/// When `trace` is given every proposal is recorded.
TemporalNetwork simulate(const HawkesSpec& spec, std::uint64_t seed,
                         std::vector<ThinningStep>* trace = nullptr);

}  // namespace dspp
