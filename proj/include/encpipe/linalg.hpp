#pragma once

#include <vector>

#include "encpipe/types.hpp"

namespace encpipe::linalg {

// C = A * B
TimeSeriesMatrix matmul(const TimeSeriesMatrix& a, const TimeSeriesMatrix& b);

// C = A' * B  (A is m-by-n, B is m-by-p, result n-by-p)
TimeSeriesMatrix gemm_tn(const TimeSeriesMatrix& a, const TimeSeriesMatrix& b);

// G = A' * A  (n-by-n, exactly symmetric: upper triangle computed, mirrored)
TimeSeriesMatrix gram_cols(const TimeSeriesMatrix& a);

// G = A * A'  (m-by-m, exactly symmetric)
TimeSeriesMatrix gram_rows(const TimeSeriesMatrix& a);

TimeSeriesMatrix transpose(const TimeSeriesMatrix& a);

// Eigendecomposition of a symmetric matrix: values descending, vectors.row(i)
// is the unit eigenvector paired with values[i].
struct SymEig {
    std::vector<double> values;
    TimeSeriesMatrix vectors;
};

SymEig sym_eig(const TimeSeriesMatrix& sym);

} // namespace encpipe::linalg
