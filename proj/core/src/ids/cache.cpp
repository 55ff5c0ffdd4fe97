#include "iotchain/ids/cache.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace iotchain::ids {
namespace {

constexpr char kMagic[8] = {'F', 'L', 'O', 'W', 'C', 'O', 'L', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t value) {
  std::array<char, 4> buf;
  for (std::size_t i = 0; i < 4; ++i) buf[i] = static_cast<char>(value >> (8 * i));
  out.write(buf.data(), buf.size());
}

void put_u64(std::ostream& out, std::uint64_t value) {
  std::array<char, 8> buf;
  for (std::size_t i = 0; i < 8; ++i) buf[i] = static_cast<char>(value >> (8 * i));
  out.write(buf.data(), buf.size());
}

void put_f64(std::ostream& out, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, sizeof(bits));
  put_u64(out, bits);
}

void put_string(std::ostream& out, const std::string& text) {
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

struct Reader {
  std::istream& in;
  bool failed = false;

  bool read_raw(char* data, std::size_t size) {
    in.read(data, static_cast<std::streamsize>(size));
    if (in.gcount() != static_cast<std::streamsize>(size)) failed = true;
    return !failed;
  }
  std::uint32_t u32() {
    std::array<char, 4> buf{};
    if (!read_raw(buf.data(), buf.size())) return 0;
    std::uint32_t value = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      value |= std::uint32_t(static_cast<unsigned char>(buf[i])) << (8 * i);
    }
    return value;
  }
  std::uint64_t u64() {
    std::array<char, 8> buf{};
    if (!read_raw(buf.data(), buf.size())) return 0;
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      value |= std::uint64_t(static_cast<unsigned char>(buf[i])) << (8 * i);
    }
    return value;
  }
  double f64() {
    std::uint64_t bits = u64();
    double value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
  }
  std::string string() {
    std::uint32_t size = u32();
    if (failed || size > (1u << 20)) {
      failed = true;
      return {};
    }
    std::string text(size, '\0');
    read_raw(text.data(), size);
    return text;
  }
};

Failure<CacheError> corrupt(std::string detail) {
  return {CacheError::Corrupt, std::move(detail)};
}

}  // namespace

std::string_view cache_error_name(CacheError error) {
  switch (error) {
    case CacheError::MissingFile: return "MissingFile";
    case CacheError::BadMagic: return "BadMagic";
    case CacheError::VersionMismatch: return "VersionMismatch";
    case CacheError::Corrupt: return "Corrupt";
  }
  return "unknown";
}

Status<CacheError> save_cache(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return {CacheError::MissingFile, "cannot write " + path};

  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);

  put_u32(out, static_cast<std::uint32_t>(data.schema.names.size()));
  for (const std::string& name : data.schema.names) put_string(out, name);
  put_u32(out, static_cast<std::uint32_t>(data.schema.dropped.size()));
  for (const DroppedFeature& dropped : data.schema.dropped) {
    put_string(out, dropped.name);
    out.put(static_cast<char>(dropped.reason));
  }
  put_u32(out, static_cast<std::uint32_t>(data.labels.classes.size()));
  for (const std::string& name : data.labels.classes) put_string(out, name);

  const std::size_t features = data.schema.names.size();
  put_u64(out, data.records.size());
  for (std::size_t column = 0; column < features; ++column) {
    for (const FlowRecord& record : data.records) put_f64(out, record.features[column]);
  }
  for (const FlowRecord& record : data.records) put_u32(out, record.label);

  out.flush();
  if (!out) return {CacheError::Corrupt, "short write to " + path};
  return {};
}

Result<Dataset, CacheError> load_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {CacheError::MissingFile, "cannot open " + path};

  char magic[sizeof(kMagic)] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    return {CacheError::BadMagic, path + " is not a flow-column cache"};
  }

  Reader reader{in};
  std::uint32_t version = reader.u32();
  if (reader.failed) return corrupt("truncated header");
  if (version != kVersion) {
    return {CacheError::VersionMismatch,
            "version " + std::to_string(version) + ", expected " + std::to_string(kVersion)};
  }

  Dataset data;
  std::uint32_t feature_count = reader.u32();
  for (std::uint32_t i = 0; i < feature_count && !reader.failed; ++i) {
    data.schema.names.push_back(reader.string());
  }
  std::uint32_t dropped_count = reader.u32();
  for (std::uint32_t i = 0; i < dropped_count && !reader.failed; ++i) {
    DroppedFeature dropped;
    dropped.name = reader.string();
    char reason = 0;
    reader.read_raw(&reason, 1);
    if (static_cast<unsigned char>(reason) > static_cast<unsigned char>(DropReason::HighCorrelation)) {
      return corrupt("bad drop reason for " + dropped.name);
    }
    dropped.reason = static_cast<DropReason>(reason);
    data.schema.dropped.push_back(std::move(dropped));
  }
  std::uint32_t class_count = reader.u32();
  for (std::uint32_t i = 0; i < class_count && !reader.failed; ++i) {
    data.labels.classes.push_back(reader.string());
  }
  if (reader.failed) return corrupt("truncated schema");
  if (class_count == 0) return corrupt("no classes");

  std::uint64_t rows = reader.u64();
  if (reader.failed) return corrupt("truncated row count");
  data.records.resize(rows);
  for (std::uint64_t r = 0; r < rows; ++r) {
    data.records[r].features.resize(feature_count);
  }
  for (std::uint32_t column = 0; column < feature_count; ++column) {
    for (std::uint64_t r = 0; r < rows; ++r) {
      data.records[r].features[column] = reader.f64();
    }
    if (reader.failed) return corrupt("truncated column " + data.schema.names[column]);
  }
  data.per_class_counts.assign(class_count, 0);
  for (std::uint64_t r = 0; r < rows; ++r) {
    std::uint32_t label = reader.u32();
    if (label >= class_count) return corrupt("label out of range at row " + std::to_string(r));
    data.records[r].label = label;
    ++data.per_class_counts[label];
  }
  if (reader.failed) return corrupt("truncated labels");
  if (in.peek() != std::char_traits<char>::eof()) return corrupt("trailing bytes");
  return data;
}

}  // namespace iotchain::ids
