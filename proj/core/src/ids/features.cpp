#include "iotchain/ids/features.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>
#include <limits>

namespace iotchain::ids {
namespace {

constexpr std::string_view kWeakPhrases[] = {
    "psh flags",
    "urg flags",
    "bulk rate",
};

constexpr std::string_view kIdentifierPhrases[] = {
    "flow id",
    "source ip",
    "src ip",
    "destination ip",
    "dst ip",
    "source port",
    "src port",
    "destination port",
    "dst port",
    "protocol",
    "timestamp",
};

bool contains_any(std::string_view normalized, std::span<const std::string_view> phrases) {
  for (std::string_view phrase : phrases) {
    if (normalized.find(phrase) != std::string_view::npos) return true;
  }
  return false;
}

}  // namespace

std::string normalized_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  bool pending_space = false;
  for (unsigned char c : name) {
    if (std::isalnum(c)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

bool is_weak_named_feature(std::string_view name) {
  return contains_any(normalized_name(name), kWeakPhrases);
}

bool is_identifier_column(std::string_view name) {
  return contains_any(normalized_name(name), kIdentifierPhrases);
}

CorrelationMatrix correlation_matrix(std::span<const FlowRecord> records,
                                     const FeatureSchema& schema) {
  const std::size_t features = schema.names.size();
  const std::size_t rows = records.size();
  assert(rows >= 2);

  CorrelationMatrix matrix;
  matrix.features = features;
  matrix.values.assign(features * features, std::numeric_limits<double>::quiet_NaN());
  matrix.constant.assign(features, false);
  if (features == 0) return matrix;

  std::vector<double> mean(features, 0.0);
  std::vector<double> lowest(features, std::numeric_limits<double>::infinity());
  std::vector<double> highest(features, -std::numeric_limits<double>::infinity());
  for (const FlowRecord& record : records) {
    assert(record.features.size() == features);
    for (std::size_t i = 0; i < features; ++i) {
      double value = record.features[i];
      mean[i] += value;
      lowest[i] = std::min(lowest[i], value);
      highest[i] = std::max(highest[i], value);
    }
  }
  for (std::size_t i = 0; i < features; ++i) {
    mean[i] /= double(rows);
    matrix.constant[i] = lowest[i] == highest[i];
  }

  // Centered cross-products, upper triangle only; cov[i*features+j] for
  // i <= j. The diagonal doubles as the variance sum.
  std::vector<double> cov(features * features, 0.0);
  std::vector<double> centered(features, 0.0);
  for (const FlowRecord& record : records) {
    for (std::size_t i = 0; i < features; ++i) centered[i] = record.features[i] - mean[i];
    for (std::size_t i = 0; i < features; ++i) {
      if (matrix.constant[i]) continue;
      double* row = cov.data() + i * features;
      const double ci = centered[i];
      for (std::size_t j = i; j < features; ++j) row[j] += ci * centered[j];
    }
  }

  for (std::size_t i = 0; i < features; ++i) {
    if (matrix.constant[i]) continue;
    matrix.values[i * features + i] = 1.0;
    for (std::size_t j = i + 1; j < features; ++j) {
      if (matrix.constant[j]) continue;
      double denom = std::sqrt(cov[i * features + i] * cov[j * features + j]);
      double r = denom == 0.0 ? 0.0 : cov[i * features + j] / denom;
      r = std::clamp(r, -1.0, 1.0);
      matrix.values[i * features + j] = r;
      matrix.values[j * features + i] = r;
    }
  }
  return matrix;
}

FeatureSchema select_features(std::span<const FlowRecord> records, const FeatureSchema& schema,
                              const SelectionPolicy& policy) {
  FeatureSchema out;
  out.dropped = schema.dropped;

  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < schema.names.size(); ++i) {
    const std::string& name = schema.names[i];
    if (is_identifier_column(name)) {
      out.dropped.push_back({name, DropReason::Identifier});
    } else if (is_weak_named_feature(name)) {
      out.dropped.push_back({name, DropReason::NamedWeak});
    } else {
      survivors.push_back(i);
    }
  }

  CorrelationMatrix matrix = correlation_matrix(records, schema);
  std::vector<std::size_t> varying;
  for (std::size_t column : survivors) {
    if (matrix.constant[column]) {
      out.dropped.push_back({schema.names[column], DropReason::ZeroVariance});
    } else {
      varying.push_back(column);
    }
  }

  // Greedy in schema order: a column goes if it correlates too strongly with
  // any column already kept, so the earlier of each redundant pair wins.
  std::vector<std::size_t> kept;
  for (std::size_t column : varying) {
    bool redundant = false;
    for (std::size_t earlier : kept) {
      if (std::fabs(matrix.at(earlier, column)) > policy.correlation_threshold) {
        redundant = true;
        break;
      }
    }
    if (redundant) {
      out.dropped.push_back({schema.names[column], DropReason::HighCorrelation});
    } else {
      kept.push_back(column);
    }
  }

  for (std::size_t column : kept) out.names.push_back(schema.names[column]);
  return out;
}

}  // namespace iotchain::ids
