#pragma once

#include <cstddef>

namespace encpipe::kernels {

// Data-parallel inner loops shared by the numerical core. Each entry has a
// scalar reference implementation; AVX2 variants are selected at runtime when
// the CPU supports them. The environment variable ENCPIPE_SIMD
// (auto|scalar|avx2) overrides detection; selection happens once, on first use.
//
// Every kernel computes in a fixed operation order, so results are
// reproducible run to run for a given backend.
struct Ops {
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double* y, double a, const double* x, std::size_t n);          // y += a*x
    void (*fmadd)(double* d, const double* a, const double* b, std::size_t n);  // d += a.*b
    void (*add)(double* d, const double* a, std::size_t n);                     // d += a
    void (*scale)(double* d, double a, std::size_t n);                          // d *= a
    double (*sum)(const double* a, std::size_t n);
    double (*sumsq)(const double* a, std::size_t n);
    // d = (x - mean).*s   (s is typically 1/std)
    void (*center_scale)(double* d, const double* x, const double* mean, const double* s, std::size_t n);
    // plane rotation: (a, b) <- (c*a - s*b, s*a + c*b)
    void (*rot)(double* a, double* b, double c, double s, std::size_t n);
    // d = wa.*a + wb.*b   (elementwise weights)
    void (*combine2)(double* d, const double* wa, const double* a, const double* wb, const double* b, std::size_t n);
};

// Active kernel table (runtime-selected).
const Ops& ops();

// Scalar reference table, always available; used by equivalence tests.
const Ops& scalar_ops();

// AVX2 table, or nullptr when this build/CPU cannot run it.
const Ops* avx2_ops();

// Name of the active backend: "scalar" or "avx2".
const char* backend_name();

} // namespace encpipe::kernels
