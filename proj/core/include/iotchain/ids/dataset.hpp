#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iotchain/common/result.hpp"

namespace iotchain::ids {

inline constexpr std::size_t kClassCount = 15;

// Why a column left the active feature set. Recorded per dropped column so a
// training report can account for every input column.
enum class DropReason : std::uint8_t {
  NamedWeak = 0,        // matches a name on the built-in weak-feature list
  Identifier = 1,       // flow ids, addresses, ports, timestamps
  ZeroVariance = 2,     // constant over the training sample
  HighCorrelation = 3,  // redundant with an earlier kept column
};
std::string_view drop_reason_name(DropReason reason);

struct DroppedFeature {
  std::string name;
  DropReason reason = DropReason::NamedWeak;

  bool operator==(const DroppedFeature&) const = default;
};

// Ordered active columns plus the ledger of everything dropped. The order is
// the contract between training and prediction, so it never changes after
// selection; a model refuses inputs shaped by any other schema.
struct FeatureSchema {
  std::vector<std::string> names;
  std::vector<DroppedFeature> dropped;

  bool operator==(const FeatureSchema&) const = default;
};

// Fixed class vocabulary: benign plus fourteen attack categories. Raw label
// spellings vary by source file (case, punctuation, encoding of dashes), so
// lookups go through normalize_label rather than exact string match.
struct LabelMap {
  std::vector<std::string> classes;

  std::optional<std::uint32_t> index_of(std::string_view name) const;

  bool operator==(const LabelMap&) const = default;
};
const LabelMap& canonical_labels();

// Canonical class index for a raw label cell, or nullopt for spellings the
// normalization table does not cover.
std::optional<std::uint32_t> normalize_label(std::string_view raw);

// Published per-class row counts of the cleaned CICIDS2017 corpus, in
// canonical class order. The sum is 2,829,385.
const std::array<std::uint64_t, kClassCount>& cicids2017_class_counts();

struct FlowRecord {
  std::vector<double> features;
  std::uint32_t label = 0;

  bool operator==(const FlowRecord&) const = default;
};

struct Dataset {
  std::vector<FlowRecord> records;
  FeatureSchema schema;
  LabelMap labels;
  std::vector<std::uint64_t> per_class_counts;
};

// One parsed CSV row before cleaning. Cells that failed to parse as numbers
// are stored as NaN and counted, never silently zeroed.
struct RawRecord {
  std::vector<double> features;
  std::uint32_t invalid_cells = 0;
  std::string label;
};

// Parsed file (or merged file set). Identifier columns are recognized by
// name at parse time and their values are not materialized; their names are
// kept so feature selection can record the drops.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::string> feature_names;
  std::vector<std::string> identifier_names;
  std::vector<RawRecord> rows;
};

enum class IngestError : std::uint8_t {
  MissingFile = 0,
  HeaderMismatch = 1,
};
std::string_view ingest_error_name(IngestError error);

// Reads one comma-separated file with a header row. Header names are
// whitespace-trimmed; when expected_columns is nonempty the trimmed header
// must match it exactly. The label column must be named "Label".
Result<RawTable, IngestError> ingest_csv(const std::string& path,
                                         std::span<const std::string> expected_columns = {});

// A single file, or a directory whose *.csv files (sorted by name) share one
// header; rows are concatenated in file order.
Result<RawTable, IngestError> ingest_corpus(const std::string& path);

struct CleanReport {
  std::uint64_t input_rows = 0;
  std::uint64_t invalid_cell_rows = 0;
  std::uint64_t nonfinite_rows = 0;
  std::uint64_t unknown_label_rows = 0;
  std::uint64_t duplicate_rows = 0;
  std::uint64_t kept_rows = 0;
  // Counts after row removal but before duplicate removal, for comparison
  // against published corpus statistics that keep duplicates.
  std::vector<std::uint64_t> class_counts_before_dedup;
  std::vector<std::pair<std::string, std::uint64_t>> unknown_labels;
};

struct Cleaned {
  Dataset dataset;
  CleanReport report;
};

// Removes rows with unparseable cells, non-finite values, or labels outside
// the vocabulary, then exact duplicates (same features and label). Keeps the
// first occurrence of each duplicate group; row order is otherwise preserved.
Cleaned clean(const RawTable& raw);

enum class SplitError : std::uint8_t {
  BadFraction = 0,
  ClassTooSmall = 1,
};
std::string_view split_error_name(SplitError error);

struct SplitResult {
  Dataset train;
  Dataset test;
};

// Seeded disjoint split. Stratified mode rounds each class's test share to
// the nearest count, clamped so both sides keep at least one row of every
// present class; classes with a single row cannot satisfy that and fail.
// Row order within each side follows the input.
Result<SplitResult, SplitError> split(const Dataset& data, double test_fraction,
                                      std::uint64_t seed, bool stratified);

// Seeded stratified subsample keeping ceil(fraction * n) of each present
// class, at least one row each; used to scale desk runs down.
Result<Dataset, SplitError> stratified_sample(const Dataset& data, double fraction,
                                              std::uint64_t seed);

// Narrows records to the selected schema's columns, by name. Every selected
// name must exist in the dataset's schema.
Dataset project(const Dataset& data, const FeatureSchema& selected);

}  // namespace iotchain::ids
