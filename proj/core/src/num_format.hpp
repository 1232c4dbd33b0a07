#pragma once

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "vjdet/error.hpp"

namespace vjdet::numfmt {

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Accepts any standard decimal/exponent form, including trailing-dot
/// variants like "-1." that OpenCV emits.
inline double parse_double(std::string_view s, Errc on_error, const std::string& context) {
  double value = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return value;
  // from_chars rejects forms like "-1."; fall back to strtod.
  const std::string copy(s);
  char* end = nullptr;
  value = std::strtod(copy.c_str(), &end);
  if (end == copy.c_str() || end != copy.c_str() + copy.size())
    raise(on_error, context + ": bad number \"" + copy + "\"");
  if (std::isnan(value) || std::isinf(value)) raise(on_error, context + ": non-finite number");
  return value;
}

/// Whitespace-separated number list.
inline std::vector<double> parse_double_list(std::string_view s, Errc on_error, const std::string& context) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    out.push_back(parse_double(s.substr(i, j - i), on_error, context));
    i = j;
  }
  return out;
}

inline long parse_long(std::string_view s, Errc on_error, const std::string& context) {
  const double v = parse_double(s, on_error, context);
  const long r = static_cast<long>(v);
  if (static_cast<double>(r) != v) raise(on_error, context + ": expected integer, got \"" + std::string(s) + "\"");
  return r;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace vjdet::numfmt
