#include "iotchain/ids/dataset.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include "iotchain/common/rng.hpp"
#include "iotchain/crypto/sha256.hpp"
#include "iotchain/ids/features.hpp"

namespace iotchain::ids {
namespace {

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

std::vector<std::string> split_cells(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.emplace_back(line.substr(start));
      return cells;
    }
    cells.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

struct LabelAlias {
  std::string_view normalized;
  std::uint32_t index;
};

// Raw spellings seen across corpus files, normalized. Canonical names are
// included so the table also resolves round-trips of its own output.
constexpr LabelAlias kLabelAliases[] = {
    {"benign", 0},
    {"bot", 1},
    {"ftp patator", 2},
    {"ssh patator", 3},
    {"ddos", 4},
    {"dos goldeneye", 5},
    {"dos hulk", 6},
    {"dos slowhttptest", 7},
    {"dos slowloris", 8},
    {"heartbleed", 9},
    {"infiltration", 10},
    {"portscan", 11},
    {"port scan", 11},
    {"web attack brute force", 12},
    {"web brute force", 12},
    {"web attack sql injection", 13},
    {"web sql injection", 13},
    {"web attack xss", 14},
    {"web xss", 14},
};

double parse_cell(const std::string& cell, bool& invalid) {
  std::string text = trim(cell);
  if (text.empty()) {
    invalid = true;
    return std::numeric_limits<double>::quiet_NaN();
  }
  const char* begin = text.c_str();
  char* end = nullptr;
  double value = std::strtod(begin, &end);
  if (end != begin + text.size()) {
    invalid = true;
    return std::numeric_limits<double>::quiet_NaN();
  }
  return value;
}

Failure<IngestError> header_mismatch(std::string detail) {
  return {IngestError::HeaderMismatch, std::move(detail)};
}

}  // namespace

std::string_view drop_reason_name(DropReason reason) {
  switch (reason) {
    case DropReason::NamedWeak: return "named-weak";
    case DropReason::Identifier: return "identifier";
    case DropReason::ZeroVariance: return "zero-variance";
    case DropReason::HighCorrelation: return "high-correlation";
  }
  return "unknown";
}

std::string_view ingest_error_name(IngestError error) {
  switch (error) {
    case IngestError::MissingFile: return "MissingFile";
    case IngestError::HeaderMismatch: return "HeaderMismatch";
  }
  return "unknown";
}

std::string_view split_error_name(SplitError error) {
  switch (error) {
    case SplitError::BadFraction: return "BadFraction";
    case SplitError::ClassTooSmall: return "ClassTooSmall";
  }
  return "unknown";
}

std::optional<std::uint32_t> LabelMap::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == name) return static_cast<std::uint32_t>(i);
  }
  std::string normalized = normalized_name(name);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (normalized_name(classes[i]) == normalized) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

const LabelMap& canonical_labels() {
  static const LabelMap labels{{
      "Benign",
      "Bot",
      "FTP Patator",
      "SSH Patator",
      "DDos",
      "Dos GoldenEye",
      "Dos Hulk",
      "Dos slowhttptest",
      "Dos slowloris",
      "Heartbleed",
      "Infiltration",
      "PortScan",
      "Web Brute Force",
      "Web SQL Injection",
      "Web XSS",
  }};
  return labels;
}

std::optional<std::uint32_t> normalize_label(std::string_view raw) {
  std::string normalized = normalized_name(raw);
  for (const LabelAlias& alias : kLabelAliases) {
    if (alias.normalized == normalized) return alias.index;
  }
  return std::nullopt;
}

const std::array<std::uint64_t, kClassCount>& cicids2017_class_counts() {
  static const std::array<std::uint64_t, kClassCount> counts{
      2272688, 1966, 7938, 5897, 128027, 10293, 230124, 5499,
      5796,    11,   36,   158930, 1507, 21,    652,
  };
  return counts;
}

Result<RawTable, IngestError> ingest_csv(const std::string& path,
                                         std::span<const std::string> expected_columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {IngestError::MissingFile, "cannot open " + path};

  std::string line;
  if (!std::getline(in, line)) return header_mismatch(path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  RawTable table;
  for (const std::string& cell : split_cells(line)) table.columns.push_back(trim(cell));

  if (!expected_columns.empty()) {
    if (table.columns.size() != expected_columns.size()) {
      return header_mismatch(path + " has " + std::to_string(table.columns.size()) +
                             " columns, expected " + std::to_string(expected_columns.size()));
    }
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      if (table.columns[i] != expected_columns[i]) {
        return header_mismatch(path + " column " + std::to_string(i) + " is \"" +
                               table.columns[i] + "\", expected \"" + expected_columns[i] + "\"");
      }
    }
  }

  // Column roles: the label column by its fixed name, identifiers by the
  // shared predicate, everything else a feature.
  std::size_t label_column = table.columns.size();
  std::vector<std::size_t> feature_columns;
  std::vector<bool> is_identifier(table.columns.size(), false);
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (table.columns[i] == "Label") {
      if (label_column != table.columns.size()) {
        return header_mismatch(path + " has more than one Label column");
      }
      label_column = i;
    } else if (is_identifier_column(table.columns[i])) {
      is_identifier[i] = true;
      table.identifier_names.push_back(table.columns[i]);
    } else {
      feature_columns.push_back(i);
      table.feature_names.push_back(table.columns[i]);
    }
  }
  if (label_column == table.columns.size()) {
    return header_mismatch(path + " has no Label column");
  }

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_cells(line);

    RawRecord row;
    row.features.reserve(feature_columns.size());
    if (cells.size() != table.columns.size()) {
      row.features.assign(feature_columns.size(), std::numeric_limits<double>::quiet_NaN());
      row.invalid_cells = static_cast<std::uint32_t>(feature_columns.size());
    } else {
      for (std::size_t column : feature_columns) {
        bool invalid = false;
        row.features.push_back(parse_cell(cells[column], invalid));
        if (invalid) ++row.invalid_cells;
      }
      row.label = trim(cells[label_column]);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

Result<RawTable, IngestError> ingest_corpus(const std::string& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::exists(path, ec)) return {IngestError::MissingFile, "cannot open " + path};
  if (!fs::is_directory(path, ec)) return ingest_csv(path);

  std::vector<std::string> files;
  for (const fs::directory_entry& entry : fs::directory_iterator(path, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path().string());
    }
  }
  if (files.empty()) return {IngestError::MissingFile, "no .csv files in " + path};
  std::sort(files.begin(), files.end());

  auto first = ingest_csv(files[0]);
  if (!first.ok()) return first;
  RawTable merged = first.take();
  for (std::size_t i = 1; i < files.size(); ++i) {
    auto next = ingest_csv(files[i], merged.columns);
    if (!next.ok()) return next;
    RawTable table = next.take();
    merged.rows.insert(merged.rows.end(), std::make_move_iterator(table.rows.begin()),
                       std::make_move_iterator(table.rows.end()));
  }
  return merged;
}

Cleaned clean(const RawTable& raw) {
  Cleaned out;
  CleanReport& report = out.report;
  Dataset& data = out.dataset;

  data.labels = canonical_labels();
  data.schema.names = raw.feature_names;
  for (const std::string& name : raw.identifier_names) {
    data.schema.dropped.push_back({name, DropReason::Identifier});
  }
  report.input_rows = raw.rows.size();
  report.class_counts_before_dedup.assign(kClassCount, 0);
  data.per_class_counts.assign(kClassCount, 0);

  std::map<std::string, std::uint64_t> unknown_tally;
  std::set<std::array<std::uint64_t, 2>> seen;
  for (const RawRecord& row : raw.rows) {
    if (row.invalid_cells > 0) {
      ++report.invalid_cell_rows;
      continue;
    }
    bool finite = true;
    for (double value : row.features) {
      if (!std::isfinite(value)) {
        finite = false;
        break;
      }
    }
    if (!finite) {
      ++report.nonfinite_rows;
      continue;
    }
    std::optional<std::uint32_t> label = normalize_label(row.label);
    if (!label) {
      ++report.unknown_label_rows;
      ++unknown_tally[row.label];
      continue;
    }
    ++report.class_counts_before_dedup[*label];

    // Duplicate identity is the full feature vector plus the label, keyed by
    // a truncated content hash so the whole corpus fits in memory.
    crypto::Sha256 hasher;
    hasher.update(reinterpret_cast<const std::uint8_t*>(row.features.data()),
                  row.features.size() * sizeof(double));
    hasher.update(reinterpret_cast<const std::uint8_t*>(&*label), sizeof(*label));
    crypto::Digest digest = hasher.finish();
    std::array<std::uint64_t, 2> key;
    std::memcpy(key.data(), digest.bytes.data(), sizeof(key));
    if (!seen.insert(key).second) {
      ++report.duplicate_rows;
      continue;
    }

    ++data.per_class_counts[*label];
    data.records.push_back({row.features, *label});
  }
  report.kept_rows = data.records.size();
  report.unknown_labels.assign(unknown_tally.begin(), unknown_tally.end());
  return out;
}

namespace {

std::vector<std::uint64_t> count_classes(const std::vector<FlowRecord>& records,
                                         std::size_t classes) {
  std::vector<std::uint64_t> counts(classes, 0);
  for (const FlowRecord& record : records) ++counts[record.label];
  return counts;
}

Dataset gather(const Dataset& data, const std::vector<bool>& picked, bool want) {
  Dataset out;
  out.schema = data.schema;
  out.labels = data.labels;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    if (picked[i] == want) out.records.push_back(data.records[i]);
  }
  out.per_class_counts = count_classes(out.records, data.labels.classes.size());
  return out;
}

}  // namespace

Result<SplitResult, SplitError> split(const Dataset& data, double test_fraction,
                                      std::uint64_t seed, bool stratified) {
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
    return {SplitError::BadFraction, "test fraction must be inside (0, 1)"};
  }

  std::vector<bool> in_test(data.records.size(), false);
  Rng rng(seed);
  if (stratified) {
    std::vector<std::vector<std::size_t>> by_class(data.labels.classes.size());
    for (std::size_t i = 0; i < data.records.size(); ++i) {
      by_class[data.records[i].label].push_back(i);
    }
    for (std::size_t k = 0; k < by_class.size(); ++k) {
      std::vector<std::size_t>& members = by_class[k];
      if (members.empty()) continue;
      if (members.size() < 2) {
        return {SplitError::ClassTooSmall,
                "class " + data.labels.classes[k] + " has " + std::to_string(members.size()) +
                    " record, needs one per side"};
      }
      auto want = static_cast<std::size_t>(std::llround(test_fraction * double(members.size())));
      want = std::clamp<std::size_t>(want, 1, members.size() - 1);
      rng.shuffle(members);
      for (std::size_t i = 0; i < want; ++i) in_test[members[i]] = true;
    }
  } else {
    if (data.records.size() < 2) {
      return {SplitError::ClassTooSmall, "need at least two records to split"};
    }
    std::vector<std::size_t> order(data.records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto want = static_cast<std::size_t>(std::llround(test_fraction * double(order.size())));
    want = std::clamp<std::size_t>(want, 1, order.size() - 1);
    rng.shuffle(order);
    for (std::size_t i = 0; i < want; ++i) in_test[order[i]] = true;
  }

  SplitResult result;
  result.train = gather(data, in_test, false);
  result.test = gather(data, in_test, true);
  return result;
}

Result<Dataset, SplitError> stratified_sample(const Dataset& data, double fraction,
                                              std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    return {SplitError::BadFraction, "sample fraction must be inside (0, 1]"};
  }
  std::vector<bool> keep(data.records.size(), false);
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> by_class(data.labels.classes.size());
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    by_class[data.records[i].label].push_back(i);
  }
  for (std::vector<std::size_t>& members : by_class) {
    if (members.empty()) continue;
    auto want = static_cast<std::size_t>(std::ceil(fraction * double(members.size())));
    want = std::clamp<std::size_t>(want, 1, members.size());
    rng.shuffle(members);
    for (std::size_t i = 0; i < want; ++i) keep[members[i]] = true;
  }
  return gather(data, keep, true);
}

Dataset project(const Dataset& data, const FeatureSchema& selected) {
  std::unordered_map<std::string_view, std::size_t> column_of;
  for (std::size_t i = 0; i < data.schema.names.size(); ++i) {
    column_of.emplace(data.schema.names[i], i);
  }
  std::vector<std::size_t> columns;
  columns.reserve(selected.names.size());
  for (const std::string& name : selected.names) {
    auto it = column_of.find(name);
    assert(it != column_of.end());
    columns.push_back(it->second);
  }

  Dataset out;
  out.schema = selected;
  out.labels = data.labels;
  out.per_class_counts = data.per_class_counts;
  out.records.reserve(data.records.size());
  for (const FlowRecord& record : data.records) {
    FlowRecord narrowed;
    narrowed.label = record.label;
    narrowed.features.reserve(columns.size());
    for (std::size_t column : columns) narrowed.features.push_back(record.features[column]);
    out.records.push_back(std::move(narrowed));
  }
  return out;
}

}  // namespace iotchain::ids
