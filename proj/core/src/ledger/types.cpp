#include "iotchain/ledger/types.hpp"

#include <cmath>

namespace iotchain::ledger {

namespace {

constexpr std::int64_t kMaxIntegral = INT64_MAX / ScaledValue::kScale;

}  // namespace

ScaledValue ScaledValue::from_double(double value) {
  return ScaledValue{std::llround(value * double(kScale))};
}

std::optional<ScaledValue> ScaledValue::parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  std::size_t pos = 0;
  if (text[0] == '-') {
    negative = true;
    pos = 1;
  }
  if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos]))) {
    return std::nullopt;
  }

  unsigned __int128 integral = 0;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
    integral = integral * 10 + (text[pos] - '0');
    if (integral > static_cast<unsigned __int128>(kMaxIntegral)) return std::nullopt;
    ++pos;
  }

  std::int64_t fraction = 0;
  if (pos < text.size()) {
    if (text[pos] != '.') return std::nullopt;
    ++pos;
    int digits = 0;
    std::int64_t scale = kScale;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      if (++digits > 6) return std::nullopt;
      scale /= 10;
      fraction += (text[pos] - '0') * scale;
      ++pos;
    }
    if (digits == 0 || pos != text.size()) return std::nullopt;
  }

  std::int64_t magnitude = static_cast<std::int64_t>(integral) * kScale + fraction;
  return ScaledValue{negative ? -magnitude : magnitude};
}

std::string ScaledValue::str() const {
  std::uint64_t magnitude =
      raw < 0 ? std::uint64_t(-(raw + 1)) + 1 : std::uint64_t(raw);
  std::uint64_t integral = magnitude / kScale;
  std::uint64_t fraction = magnitude % kScale;

  std::string out;
  if (raw < 0) out.push_back('-');
  out += std::to_string(integral);
  if (fraction != 0) {
    std::string digits = std::to_string(fraction);
    digits.insert(digits.begin(), 6 - digits.size(), '0');
    while (digits.back() == '0') digits.pop_back();
    out.push_back('.');
    out += digits;
  }
  return out;
}

std::string_view device_status_name(DeviceStatus status) {
  return status == DeviceStatus::Active ? "active" : "quarantined";
}

}  // namespace iotchain::ledger
