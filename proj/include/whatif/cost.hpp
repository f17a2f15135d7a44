#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <string>

namespace whatif {

/// Budget and fix-cost arithmetic on a fixed-point grid of 1e-9 units.
///
/// Decimal literals with up to nine fractional digits are represented
/// exactly, so sums of costs and budget-boundary checks are deterministic
/// and independent of summation order. Infinity is a distinguished value
/// absorbing under addition.
class Cost {
 public:
  static constexpr std::int64_t kUnitsPerOne = 1'000'000'000;

  constexpr Cost() = default;

  static Cost from_double(double value);
  static constexpr Cost from_units(std::int64_t units) { return Cost(units); }
  static constexpr Cost zero() { return Cost(0); }
  static constexpr Cost infinite() { return Cost(kInfiniteUnits); }

  /// Parses "inf", "infinity", or a decimal number.
  static Cost parse(const std::string& text);

  constexpr bool is_infinite() const { return units_ == kInfiniteUnits; }
  constexpr std::int64_t units() const { return units_; }
  double to_double() const;
  std::string to_string() const;

  /// Multiplies by a nonnegative factor; an infinite factor yields infinity
  /// (including for zero, since the caller asked for an unbounded budget).
  Cost scaled(double factor) const;

  friend Cost operator+(Cost a, Cost b);
  /// Subtraction of a finite amount. Infinity minus finite stays infinite.
  friend Cost operator-(Cost a, Cost b);
  Cost& operator+=(Cost other) { return *this = *this + other; }
  Cost& operator-=(Cost other) { return *this = *this - other; }

  friend constexpr auto operator<=>(Cost, Cost) = default;

 private:
  static constexpr std::int64_t kInfiniteUnits = std::numeric_limits<std::int64_t>::max();
  constexpr explicit Cost(std::int64_t units) : units_(units) {}

  std::int64_t units_ = 0;
};

}  // namespace whatif
