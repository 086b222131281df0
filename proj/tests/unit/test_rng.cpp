#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "encpipe/parallel.hpp"
#include "encpipe/rng.hpp"

using namespace encpipe;

TEST_CASE("same seed gives the same stream") {
    Rng a(2024), b(2024), c(2025);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        all_equal = all_equal && (va == b.next_u64());
        any_diff = any_diff || (va != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform doubles stay in range") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.next_double();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
    for (int i = 0; i < 1000; ++i) CHECK(rng.next_index(7) < 7);
}

TEST_CASE("normals have roughly standard moments") {
    Rng rng(17);
    const std::size_t n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = rng.next_normal();
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / double(n);
    const double var = sumsq / double(n) - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("shuffle permutes deterministically") {
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
    Rng a(9), b(9);
    auto v1 = v, v2 = v;
    a.shuffle(v1);
    b.shuffle(v2);
    CHECK(v1 == v2);
    auto sorted = v1;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == v);
}

TEST_CASE("derived seeds split the stream") {
    const auto s1 = Rng::derive_seed(100, 0);
    const auto s2 = Rng::derive_seed(100, 1);
    CHECK(s1 != s2);
    CHECK(Rng::derive_seed(100, 0) == s1);
}

TEST_CASE("parallel_for output is thread-count invariant") {
    const std::size_t n = 1001;
    auto run = [&](unsigned threads) {
        set_thread_count(threads);
        std::vector<double> out(n, 0.0);
        parallel_for(n, [&](std::size_t i) { out[i] = std::sin(double(i)) * 1.000000001; });
        return out;
    };
    const auto one = run(1);
    const auto four = run(4);
    const auto many = run(64);
    set_thread_count(1);
    CHECK(one == four);
    CHECK(one == many);
}

TEST_CASE("parallel_for propagates exceptions") {
    set_thread_count(4);
    CHECK_THROWS_AS(
        parallel_for(100, [](std::size_t i) { if (i == 57) throw std::runtime_error("x"); }),
        std::runtime_error);
    set_thread_count(1);
}
