#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <utility>
#include <vector>

namespace encpipe {

// Process-wide worker budget; the CLI sets it from --threads.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs fn(i) for i in [0, n).  Work is split into contiguous index ranges
// fixed by n and the worker count only, and every fn(i) must write to slots
// no other index touches, so the result is identical whatever the budget is.
// Cross-index reductions do not belong here; do those serially.
template <typename F>
void parallel_for(std::size_t n, F&& fn) {
    const unsigned budget = thread_count();
    if (n == 0) return;
    if (budget <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(budget, n);
    const std::size_t base = n / workers;
    const std::size_t extra = n % workers;

    std::vector<std::thread> threads;
    threads.reserve(workers);
    std::vector<std::exception_ptr> errors(workers);
    std::size_t begin = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t len = base + (w < extra ? 1 : 0);
        const std::size_t end = begin + len;
        threads.emplace_back([&fn, &errors, w, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace encpipe
