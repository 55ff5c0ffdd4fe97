#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iotchain {

using Bytes = std::vector<std::uint8_t>;

std::string to_hex(const std::uint8_t* data, std::size_t size);
std::string to_hex(const Bytes& data);

// Strict decoder: accepts only an even count of lowercase hex digits.
// Everything written by the export paths round-trips through this, so any
// stray byte in a dump is a parse failure rather than a silent skip.
std::optional<Bytes> from_hex(std::string_view text);

Bytes to_bytes(std::string_view text);

}  // namespace iotchain
