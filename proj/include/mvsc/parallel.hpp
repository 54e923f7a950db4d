#pragma once

#include <functional>

namespace mvsc {

void set_thread_count(int k);
int thread_count();

// Runs fn(i) for i in [0, count) on the configured number of workers.
// Work items must write to disjoint outputs; ordering of results is by index.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace mvsc
