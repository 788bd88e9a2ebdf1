#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace lf {

// Process-wide worker cap, settable from the CLI (--threads).
void set_max_threads(int n);
int max_threads();

// Runs fn(i) for i in [0, count). Work items must write to disjoint outputs;
// the partitioning is by index so results do not depend on the thread count.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace lf
