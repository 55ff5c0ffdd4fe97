#pragma once

#include <cstdint>

#include "iotchain/ids/dataset.hpp"

namespace iotchain::ids {

// Generator knobs for the bundled stand-in corpus: per-class row counts are
// the published corpus counts divided by rows_divisor (floored at
// min_rows_per_class), and each class is a unit Gaussian shifted by
// class_mean_shift along its own indicator dimension.
struct SyntheticConfig {
  std::uint64_t seed = 1;
  std::uint64_t rows_divisor = 1000;
  std::uint64_t min_rows_per_class = 4;
  double class_mean_shift = 8.0;
};

// Seeded corpus with the real class imbalance at desk scale, flow-flavored
// column names, and deliberate flaws for the selection path to find: a
// constant column, an exact duplicate column, and columns named after the
// built-in weak-feature list.
Dataset synthetic_corpus(const SyntheticConfig& config = {});

}  // namespace iotchain::ids
