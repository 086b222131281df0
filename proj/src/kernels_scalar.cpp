#include "encpipe/kernels.hpp"

// Reference kernels. Plain loops, sequential accumulation order; these define
// the semantics the SIMD variants are tested against.

namespace encpipe::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double* y, double a, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void fmadd_scalar(double* d, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) d[i] += a[i] * b[i];
}

void add_scalar(double* d, const double* a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) d[i] += a[i];
}

void scale_scalar(double* d, double a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) d[i] *= a;
}

double sum_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

double sumsq_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

void center_scale_scalar(double* d, const double* x, const double* mean, const double* s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) d[i] = (x[i] - mean[i]) * s[i];
}

void rot_scalar(double* a, double* b, double c, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double ai = a[i];
        const double bi = b[i];
        a[i] = c * ai - s * bi;
        b[i] = s * ai + c * bi;
    }
}

void combine2_scalar(double* d, const double* wa, const double* a, const double* wb, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) d[i] = wa[i] * a[i] + wb[i] * b[i];
}

} // namespace

const Ops& scalar_ops() {
    static const Ops table = {
        dot_scalar,   axpy_scalar,  fmadd_scalar,        add_scalar,
        scale_scalar, sum_scalar,   sumsq_scalar,        center_scale_scalar,
        rot_scalar,   combine2_scalar,
    };
    return table;
}

} // namespace encpipe::kernels
