#include "whatif/cost.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "whatif/errors.hpp"

namespace whatif {

namespace {
constexpr double kMaxFinite = 9.0e9;  // keeps units below int64 range with headroom
}

Cost Cost::from_double(double value) {
  if (std::isnan(value) || value < 0.0) throw ValidationError("cost must be a nonnegative number");
  if (std::isinf(value)) return infinite();
  if (value > kMaxFinite) throw ValidationError("cost " + std::to_string(value) + " exceeds supported range");
  return Cost(std::llround(value * static_cast<double>(kUnitsPerOne)));
}

Cost Cost::parse(const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "inf" || lower == "infinity" || lower == "∞") return infinite();
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') throw ValidationError("not a cost value: '" + text + "'");
  return from_double(v);
}

double Cost::to_double() const {
  if (is_infinite()) return std::numeric_limits<double>::infinity();
  return static_cast<double>(units_) / static_cast<double>(kUnitsPerOne);
}

std::string Cost::to_string() const {
  if (is_infinite()) return "inf";
  const bool neg = units_ < 0;
  const std::int64_t a = neg ? -units_ : units_;
  std::string s = std::to_string(a / kUnitsPerOne);
  std::int64_t frac = a % kUnitsPerOne;
  if (frac != 0) {
    std::string f = std::to_string(frac);
    f.insert(0, 9 - f.size(), '0');
    while (!f.empty() && f.back() == '0') f.pop_back();
    s += "." + f;
  }
  return neg ? "-" + s : s;
}

Cost Cost::scaled(double factor) const {
  if (std::isnan(factor) || factor < 0.0) throw ValidationError("scale factor must be nonnegative");
  if (is_infinite() || std::isinf(factor)) return infinite();
  return from_double(to_double() * factor);
}

Cost operator+(Cost a, Cost b) {
  if (a.is_infinite() || b.is_infinite()) return Cost::infinite();
  return Cost(a.units_ + b.units_);
}

Cost operator-(Cost a, Cost b) {
  if (b.is_infinite()) throw ContractViolation("cannot subtract an infinite cost");
  if (a.is_infinite()) return a;
  return Cost(a.units_ - b.units_);
}

}  // namespace whatif
