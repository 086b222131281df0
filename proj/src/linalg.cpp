#include "encpipe/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "encpipe/error.hpp"
#include "encpipe/kernels.hpp"
#include "encpipe/parallel.hpp"

namespace encpipe::linalg {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw NumericError(what);
}

} // namespace

TimeSeriesMatrix matmul(const TimeSeriesMatrix& a, const TimeSeriesMatrix& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions disagree");
    const auto& k = kernels::ops();
    TimeSeriesMatrix c(a.rows(), b.cols());
    const std::size_t n = a.cols(), p = b.cols();
    parallel_for(a.rows(), [&](std::size_t i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t t = 0; t < n; ++t)
            if (ai[t] != 0.0) k.axpy(ci, ai[t], b.row(t), p);
    });
    return c;
}

TimeSeriesMatrix gemm_tn(const TimeSeriesMatrix& a, const TimeSeriesMatrix& b) {
    require(a.rows() == b.rows(), "gemm_tn: row counts disagree");
    const auto& k = kernels::ops();
    const std::size_t m = a.rows(), n = a.cols(), p = b.cols();
    TimeSeriesMatrix c(n, p);
    parallel_for(n, [&](std::size_t i) {
        double* ci = c.row(i);
        for (std::size_t t = 0; t < m; ++t) {
            const double coeff = a.row(t)[i];
            if (coeff != 0.0) k.axpy(ci, coeff, b.row(t), p);
        }
    });
    return c;
}

TimeSeriesMatrix gram_cols(const TimeSeriesMatrix& a) {
    const auto& k = kernels::ops();
    const std::size_t m = a.rows(), n = a.cols();
    TimeSeriesMatrix g(n, n);
    parallel_for(n, [&](std::size_t i) {
        double* gi = g.row(i) + i;
        for (std::size_t t = 0; t < m; ++t) {
            const double* at = a.row(t);
            if (at[i] != 0.0) k.axpy(gi, at[i], at + i, n - i);
        }
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) g(j, i) = g(i, j);
    return g;
}

TimeSeriesMatrix gram_rows(const TimeSeriesMatrix& a) {
    const auto& k = kernels::ops();
    const std::size_t m = a.rows(), n = a.cols();
    TimeSeriesMatrix g(m, m);
    parallel_for(m, [&](std::size_t i) {
        double* gi = g.row(i);
        for (std::size_t j = i; j < m; ++j) gi[j] = k.dot(a.row(i), a.row(j), n);
    });
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) g(j, i) = g(i, j);
    return g;
}

TimeSeriesMatrix transpose(const TimeSeriesMatrix& a) {
    TimeSeriesMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = ai[j];
    }
    return t;
}

namespace {

// Householder tridiagonalization.  W is overwritten; vectors/betas capture the
// reflectors so the accumulation pass can rebuild the basis with row access
// only.  d and e come back as the tridiagonal diagonal and subdiagonal.
void tridiagonalize(TimeSeriesMatrix& w, std::vector<double>& d, std::vector<double>& e,
                    std::vector<std::vector<double>>& hv, std::vector<double>& hbeta) {
    const auto& k = kernels::ops();
    const std::size_t n = w.rows();
    d.assign(n, 0.0);
    e.assign(n, 0.0);
    hv.assign(n, {});
    hbeta.assign(n, 0.0);

    std::vector<double> v(n), p(n), wk(n);
    for (std::size_t i = 0; i + 2 < n; ++i) {
        const std::size_t lo = i + 1, m = n - lo;

        double amax = 0.0;
        for (std::size_t r = lo; r < n; ++r) amax = std::max(amax, std::abs(w(r, i)));
        if (amax == 0.0) { e[i] = 0.0; continue; }
        double tail = 0.0;
        for (std::size_t r = lo + 1; r < n; ++r) {
            const double t = w(r, i) / amax;
            tail += t * t;
        }
        if (tail == 0.0) { e[i] = w(lo, i); continue; }

        const double x0 = w(lo, i);
        const double x0s = x0 / amax;
        const double norm = amax * std::sqrt(x0s * x0s + tail);
        const double alpha = x0 >= 0.0 ? -norm : norm;
        for (std::size_t r = lo; r < n; ++r) v[r] = w(r, i);
        v[lo] = x0 - alpha;
        const double beta = 1.0 / (alpha * (alpha - x0));
        e[i] = alpha;

        // p = beta * W[lo:, lo:] * v ; w = p - (beta * p'v / 2) v
        for (std::size_t r = lo; r < n; ++r)
            p[r] = beta * k.dot(w.row(r) + lo, v.data() + lo, m);
        const double pv = k.dot(p.data() + lo, v.data() + lo, m);
        const double half = 0.5 * beta * pv;
        for (std::size_t r = lo; r < n; ++r) wk[r] = p[r] - half * v[r];

        // rank-2 update: W -= v w' + w v'
        for (std::size_t r = lo; r < n; ++r) {
            double* row = w.row(r) + lo;
            k.axpy(row, -v[r], wk.data() + lo, m);
            k.axpy(row, -wk[r], v.data() + lo, m);
        }

        hv[i].assign(v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
        hbeta[i] = beta;
    }
    if (n >= 2) e[n - 2] = w(n - 1, n - 2);
    for (std::size_t j = 0; j < n; ++j) d[j] = w(j, j);
}

// Accumulates the transposed basis: row j of the result is what column j of
// the reflector product would be.  Applied last-to-first so each step only
// touches the trailing block.
TimeSeriesMatrix accumulate_basis(std::size_t n, const std::vector<std::vector<double>>& hv,
                                  const std::vector<double>& hbeta) {
    const auto& k = kernels::ops();
    TimeSeriesMatrix vmat(n, n);
    for (std::size_t j = 0; j < n; ++j) vmat(j, j) = 1.0;
    if (n < 3) return vmat;
    std::vector<double> t(n);
    for (std::size_t step = n - 2; step-- > 0;) {
        if (hv[step].empty()) continue;
        const std::size_t lo = step + 1, m = n - lo;
        const double* v = hv[step].data();
        const double beta = hbeta[step];
        for (std::size_t r = lo; r < n; ++r) t[r] = k.dot(vmat.row(r) + lo, v, m);
        for (std::size_t r = lo; r < n; ++r)
            if (t[r] != 0.0) k.axpy(vmat.row(r) + lo, -beta * t[r], v, m);
    }
    return vmat;
}

// Implicit-shift QL sweep on the tridiagonal (d, e), rotating the basis rows
// along with it.
void ql_diagonalize(std::vector<double>& d, std::vector<double>& e, TimeSeriesMatrix& vmat) {
    const auto& k = kernels::ops();
    const std::size_t n = d.size();
    if (n < 2) return;
    const double eps = std::numeric_limits<double>::epsilon();
    e[n - 1] = 0.0;

    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        while (true) {
            std::size_t m = l;
            while (m + 1 < n) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (e[m] == 0.0 || std::abs(e[m]) <= eps * dd) break;
                ++m;
            }
            if (m == l) break;
            if (iter++ == 50) throw NumericError("symmetric eigensolver failed to converge");

            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0, c = 1.0, p = 0.0;
            bool underflow = false;
            for (std::size_t i = m; i-- > l;) {
                double f = s * e[i];
                const double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                k.rot(vmat.row(i), vmat.row(i + 1), c, s, n);
            }
            if (underflow) continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

} // namespace

SymEig sym_eig(const TimeSeriesMatrix& sym) {
    require(sym.rows() == sym.cols(), "sym_eig: matrix must be square");
    const std::size_t n = sym.rows();

    TimeSeriesMatrix w(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) w(i, j) = 0.5 * (sym(i, j) + sym(j, i));

    std::vector<double> d, e;
    std::vector<std::vector<double>> hv;
    std::vector<double> hbeta;
    tridiagonalize(w, d, e, hv, hbeta);
    TimeSeriesMatrix vmat = accumulate_basis(n, hv, hbeta);
    ql_diagonalize(d, e, vmat);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (d[a] != d[b]) return d[a] > d[b];
        return a < b;
    });

    SymEig out;
    out.values.resize(n);
    out.vectors = TimeSeriesMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = d[order[i]];
        const double* src = vmat.row(order[i]);
        std::copy(src, src + n, out.vectors.row(i));
    }
    return out;
}

} // namespace encpipe::linalg
