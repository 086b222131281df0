#include "encpipe/parallel.hpp"

#include <atomic>

namespace encpipe {

namespace {
std::atomic<unsigned> g_threads{0}; // 0 = not set yet, use hardware count
}

void set_thread_count(unsigned n) { g_threads.store(n == 0 ? 1u : n); }

unsigned thread_count() {
    const unsigned n = g_threads.load();
    if (n != 0) return n;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

} // namespace encpipe
