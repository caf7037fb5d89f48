#pragma once

#include <cstddef>
#include <cstdint>

namespace rollout_lab {

/// Guards for the exponential parts of the toolkit. Exceeding a cap raises
/// EnumerationCapExceeded unless `force` is set.
struct Limits {
  std::size_t cycle_cap = 100'000;
  /// Maximum number of free (non-self-loop) edges for exhaustive pattern
  /// enumeration, i.e. 2^24 candidates by default.
  unsigned max_free_edges = 24;
  bool force = false;
  /// Worker threads used for candidate checking; results never depend on it.
  unsigned threads = 1;
};

} // namespace rollout_lab
