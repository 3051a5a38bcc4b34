#pragma once

#include <functional>

namespace reconet {

// Worker count from RECONET_THREADS; unset, empty, or invalid values give 1
// so runs reproduce byte-for-byte without any environment setup. Values are
// clamped to the hardware thread count.
int worker_cap();

// Runs fn(i) for i in [0, n) on up to worker_cap() threads. Callers stay
// deterministic by writing to disjoint slots and reducing in index order
// afterwards; this function never reduces on its own.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace reconet
