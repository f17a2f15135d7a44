#include "whatif/limits.hpp"

#include <algorithm>
#include <string>

#include "whatif/errors.hpp"

namespace whatif {

ResourceGuard::ResourceGuard(std::optional<double> seconds, std::optional<std::size_t> bytes)
    : max_bytes_(bytes) {
  if (seconds)
    deadline_ = start_ + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(*seconds));
}

void ResourceGuard::check_time() const {
  if (deadline_ && Clock::now() > *deadline_)
    throw ResourceLimitExceeded(ResourceLimitExceeded::Kind::Time, "time limit exceeded");
}

void ResourceGuard::check_memory(std::size_t transient_bytes) const {
  const auto total = baseline_ + transient_bytes;
  peak_ = std::max(peak_, total);
  if (max_bytes_ && total > *max_bytes_)
    throw ResourceLimitExceeded(ResourceLimitExceeded::Kind::Memory,
                                "memory limit exceeded (" + std::to_string(total) + " bytes)");
}

double ResourceGuard::elapsed_seconds() const {
  return std::chrono::duration<double>(Clock::now() - start_).count();
}

}  // namespace whatif
