#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iotchain/ids/dataset.hpp"

namespace iotchain::ids {

// Pearson coefficients over a record sample, row-major. Entries touching a
// constant feature are undefined and stored as NaN; the constant flags say
// which ones.
struct CorrelationMatrix {
  std::size_t features = 0;
  std::vector<double> values;
  std::vector<bool> constant;

  double at(std::size_t i, std::size_t j) const { return values[i * features + j]; }
};

// Two-pass computation (means first, then centered products) so the large
// magnitude spread of flow features does not eat the low bits.
CorrelationMatrix correlation_matrix(std::span<const FlowRecord> records,
                                     const FeatureSchema& schema);

// Lowercases and collapses every non-alphanumeric run (including multi-byte
// punctuation) to a single space, so encoding variants of the same label or
// column name compare equal.
std::string normalized_name(std::string_view name);

// Name predicates shared by ingest and selection. Matching is on normalized
// names, and the weak list matches as substrings because raw column names
// carry direction and aggregation prefixes around the phrases.
bool is_weak_named_feature(std::string_view name);
bool is_identifier_column(std::string_view name);

struct SelectionPolicy {
  double correlation_threshold = 0.95;
};

// Drop order: weak-named and identifier columns first, then zero-variance
// columns, then for every pair with |r| above the threshold the later column
// in schema order. Survivors keep their relative order.
FeatureSchema select_features(std::span<const FlowRecord> records, const FeatureSchema& schema,
                              const SelectionPolicy& policy = {});

}  // namespace iotchain::ids
