#include "ecnd/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace ecnd {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads.store(n < 1 ? 1 : n); }

int num_threads() { return g_threads.load(); }

int default_num_threads() {
  if (const char *env = std::getenv("ECNDNET_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)> &fn) {
  std::size_t count = end > begin ? end - begin : 0;
  int nt = num_threads();
  if (nt <= 1 || count <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::size_t workers = std::min<std::size_t>(nt, count);
  std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    std::size_t lo = begin + t * chunk;
    std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto &th : pool) th.join();
}

} // namespace ecnd
