#include "reconet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace reconet {

int worker_cap() {
  const char* env = std::getenv("RECONET_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long requested = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || requested < 1) return 1;
  const long hardware = std::max(1L, static_cast<long>(std::thread::hardware_concurrency()));
  return static_cast<int>(std::min(requested, hardware));
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::min(worker_cap(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace reconet
