#include "iotchain/ids/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "iotchain/common/rng.hpp"

namespace iotchain::ids {
namespace {

// Column layout: one indicator dimension per class, two plain noise columns,
// then the planted flaws. The duplicate column mirrors "Total Fwd Packets".
constexpr std::size_t kInformative = kClassCount;
constexpr std::size_t kDuplicateSource = 1;

const char* const kColumnNames[] = {
    "Flow Duration",
    "Total Fwd Packets",
    "Total Backward Packets",
    "Flow Bytes/s",
    "Flow Packets/s",
    "Fwd Packet Length Mean",
    "Bwd Packet Length Mean",
    "Flow IAT Mean",
    "Fwd IAT Mean",
    "Bwd IAT Mean",
    "SYN Flag Count",
    "ACK Flag Count",
    "Packet Length Variance",
    "Average Packet Size",
    "Idle Mean",
    "Down/Up Ratio",
    "Active Mean",
    "Fwd PSH Flags",
    "Bwd URG Flags",
    "Fwd Avg Bulk Rate",
    "Init Win Bytes Fwd",
    "Subflow Fwd Packets",
};
constexpr std::size_t kColumnCount = std::size(kColumnNames);
constexpr std::size_t kConstantColumn = kColumnCount - 2;
constexpr std::size_t kDuplicateColumn = kColumnCount - 1;
constexpr double kConstantValue = 8192.0;

}  // namespace

Dataset synthetic_corpus(const SyntheticConfig& config) {
  Dataset data;
  data.labels = canonical_labels();
  data.schema.names.assign(kColumnNames, kColumnNames + kColumnCount);
  data.per_class_counts.assign(kClassCount, 0);

  Rng rng(config.seed);
  for (std::uint32_t k = 0; k < kClassCount; ++k) {
    double scaled = double(cicids2017_class_counts()[k]) / double(config.rows_divisor);
    auto rows = static_cast<std::uint64_t>(std::llround(scaled));
    rows = std::max(rows, config.min_rows_per_class);
    data.per_class_counts[k] = rows;

    for (std::uint64_t r = 0; r < rows; ++r) {
      FlowRecord record;
      record.label = k;
      record.features.resize(kColumnCount);
      for (std::size_t j = 0; j < kConstantColumn; ++j) {
        double shift = j < kInformative && j == k ? config.class_mean_shift : 0.0;
        record.features[j] = shift + rng.normal();
      }
      record.features[kConstantColumn] = kConstantValue;
      record.features[kDuplicateColumn] = record.features[kDuplicateSource];
      data.records.push_back(std::move(record));
    }
  }
  return data;
}

}  // namespace iotchain::ids
