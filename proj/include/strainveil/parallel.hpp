#pragma once

#include <cstddef>
#include <functional>

namespace strainveil {

/// Worker count used by parallel_for; 0 restores the hardware default.
void set_num_threads(unsigned n);
unsigned num_threads();

/// Runs body(i) for i in [begin, end) across a static partition. Each index
/// is visited exactly once, so results written per index do not depend on
/// the schedule. The first exception thrown by any worker is rethrown.
void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end,
                  const std::function<void(std::ptrdiff_t)>& body);

}  // namespace strainveil
