#pragma once

#include <chrono>
#include <cstddef>
#include <optional>

namespace whatif {

/// Cooperative wall-clock and memory limits. Searches call the check
/// functions at expansion granularity; a violated limit throws
/// ResourceLimitExceeded so callers can keep partial results.
///
/// Memory is an estimate: the owner of long-lived caches publishes their
/// size through set_baseline(), and nested searches add their own working
/// set when checking.
class ResourceGuard {
 public:
  ResourceGuard() = default;
  ResourceGuard(std::optional<double> seconds, std::optional<std::size_t> bytes);

  void check_time() const;
  void check_memory(std::size_t transient_bytes = 0) const;
  void check(std::size_t transient_bytes = 0) const {
    check_time();
    check_memory(transient_bytes);
  }

  void set_baseline(std::size_t bytes) const { baseline_ = bytes; }
  std::size_t peak_bytes() const { return peak_; }
  double elapsed_seconds() const;

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_ = Clock::now();
  std::optional<Clock::time_point> deadline_;
  std::optional<std::size_t> max_bytes_;
  mutable std::size_t baseline_ = 0;
  mutable std::size_t peak_ = 0;
};

}  // namespace whatif
