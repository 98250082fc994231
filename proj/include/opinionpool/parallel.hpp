#pragma once

#include <cstddef>
#include <functional>

namespace opinionpool {

/// Runs fn(0) .. fn(count-1) across jobs worker threads (0 = hardware
/// concurrency). Indices are claimed from an atomic counter; exceptions are
/// captured and the first one rethrown after all workers join. Callers must
/// keep per-index work independent so results do not depend on scheduling.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace opinionpool
