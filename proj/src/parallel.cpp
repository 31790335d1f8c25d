#include "reslab/parallel.hpp"

#include <atomic>

namespace reslab {

namespace {
std::atomic<int> g_threads{1};
}

int default_threads() { return g_threads.load(); }
void set_default_threads(int n) { g_threads.store(std::max(n, 1)); }

}  // namespace reslab
