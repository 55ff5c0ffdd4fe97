#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "iotchain/common/result.hpp"
#include "iotchain/ids/dataset.hpp"

namespace iotchain::ids {

enum class CacheError : std::uint8_t {
  MissingFile = 0,
  BadMagic = 1,
  VersionMismatch = 2,
  Corrupt = 3,
};
std::string_view cache_error_name(CacheError error);

// Columnar binary snapshot of a cleaned dataset so re-runs skip CSV parsing.
// Layout (all integers and floats little-endian): magic "FLOWCOL\0", u32
// version, schema (active names, then dropped name/reason pairs), label
// names, u64 row count, one contiguous f64 column per feature, then u32
// labels per row. Strings are u32 length + bytes.
Status<CacheError> save_cache(const Dataset& data, const std::string& path);
Result<Dataset, CacheError> load_cache(const std::string& path);

}  // namespace iotchain::ids
