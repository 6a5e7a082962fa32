#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace sscmi {

/// Thrown when a coordinate name is missing, duplicated, or malformed.
class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an operation's structural premise is absent (e.g. an
/// exchangeability-based identity requested on a non-exchangeable world).
class NotApplicable : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Thrown for infeasible numeric parameters; carries the residual that failed.
class InfeasibleParameters : public std::invalid_argument {
 public:
  InfeasibleParameters(const std::string& what, double residual)
      : std::invalid_argument(what), residual_(residual) {}
  [[nodiscard]] double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Thrown when an exact enumeration would exceed the configured atom cap.
class EnumerationTooLarge : public std::length_error {
 public:
  EnumerationTooLarge(const std::string& what, int round) : std::length_error(what), round_(round) {}
  [[nodiscard]] int round() const noexcept { return round_; }

 private:
  int round_;
};

/// Per-round coordinate name, e.g. col("U", 3) == "U[3]".
inline std::string col(std::string_view base, int t) {
  std::string s(base);
  s += '[';
  s += std::to_string(t);
  s += ']';
  return s;
}

/// Shortest round-trip decimal form; the single formatter for every CSV cell.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc{}) throw std::runtime_error("format_number: to_chars failed");
  return {buf, res.ptr};
}

inline double parse_number(std::string_view s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("parse_number: not a number: '" + std::string(s) + "'");
  return v;
}

/// FNV-1a, used for config digests (identity, not security).
inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

inline std::vector<std::string_view> split_view(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace sscmi
