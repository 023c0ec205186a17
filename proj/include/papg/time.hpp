#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace papg {

// All persisted times are whole UTC seconds so profile round-trips are exact.
using Timestamp = std::chrono::sys_seconds;
using Clock = std::function<Timestamp()>;

Timestamp system_now();

inline constexpr std::chrono::seconds days(long long n) { return std::chrono::seconds{n * 86400}; }

// RFC 3339 in the form 2026-10-17T08:30:00Z.
std::string format_rfc3339(Timestamp t);

// Accepts "Z" or a numeric offset; fractional seconds are truncated.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

}  // namespace papg
