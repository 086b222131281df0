#include "encpipe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "encpipe/error.hpp"
#include "encpipe/kernels.hpp"
#include "encpipe/rng.hpp"

namespace encpipe {

PearsonResult pearson(const double* a, const double* b, std::size_t n) {
    if (n < 2) return {};
    const auto& k = kernels::ops();
    const double ma = k.sum(a, n) / double(n);
    const double mb = k.sum(b, n) / double(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) return {};
    double r = sab / std::sqrt(saa * sbb);
    r = std::clamp(r, -1.0, 1.0);
    return {r, true};
}

PearsonResult pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DataError("pearson: length mismatch");
    return pearson(a.data(), b.data(), a.size());
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * (double(i) + double(j)) + 1.0; // 1-based mean rank
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

} // namespace

PearsonResult spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DataError("spearman: length mismatch");
    if (a.size() < 2) return {};
    return pearson(average_ranks(a), average_ranks(b));
}

AccuracyReport score_columns(const TimeSeriesMatrix& est, const TimeSeriesMatrix& truth) {
    if (est.rows() != truth.rows() || est.cols() != truth.cols())
        throw DataError("score_columns: shape mismatch");
    const std::size_t d = est.cols();
    AccuracyReport rep;
    rep.per_target_r.assign(d, 0.0);
    rep.defined.assign(d, false);
    rep.n_samples = est.rows();

    double acc = 0.0;
    std::size_t n_def = 0;
    for (std::size_t c = 0; c < d; ++c) {
        const auto r = pearson(est.column(c), truth.column(c));
        rep.per_target_r[c] = r.defined ? r.r : 0.0;
        rep.defined[c] = r.defined;
        if (r.defined) {
            acc += r.r;
            ++n_def;
        } else {
            ++rep.n_undefined;
        }
    }
    rep.mean_r = n_def == 0 ? 0.0 : acc / double(n_def);
    return rep;
}

namespace {

double mean_defined_r(const TimeSeriesMatrix& est, const TimeSeriesMatrix& truth,
                      const std::vector<std::size_t>& rows) {
    const std::size_t d = est.cols();
    std::vector<double> ec(rows.size()), tc(rows.size());
    double acc = 0.0;
    std::size_t n_def = 0;
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            ec[i] = est(rows[i], c);
            tc[i] = truth(rows[i], c);
        }
        const auto r = pearson(ec, tc);
        if (r.defined) {
            acc += r.r;
            ++n_def;
        }
    }
    return n_def == 0 ? 0.0 : acc / double(n_def);
}

} // namespace

BootstrapResult bootstrap_compare(const TimeSeriesMatrix& truth, const TimeSeriesMatrix& est_a,
                                  const TimeSeriesMatrix& est_b, std::size_t n_boot,
                                  std::uint64_t seed, ResampleUnit unit, const ClipIndex* clips) {
    if (!truth.same_shape(est_a) || !truth.same_shape(est_b))
        throw DataError("bootstrap_compare: shape mismatch");
    if (n_boot < 100) throw DataError("bootstrap_compare: n_boot must be >= 100");
    if (unit == ResampleUnit::clip) {
        if (!clips) throw DataError("bootstrap_compare: clip unit needs a clip index");
        if (clips->total_rows() != truth.rows())
            throw DataError("bootstrap_compare: clip index does not cover the rows");
    }

    const std::size_t t = truth.rows();
    std::vector<std::size_t> all_rows(t);
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
    BootstrapResult out;
    out.observed_diff =
        mean_defined_r(est_a, truth, all_rows) - mean_defined_r(est_b, truth, all_rows);

    std::size_t n_le = 0;
    std::vector<std::size_t> rows;
    for (std::size_t boot = 0; boot < n_boot; ++boot) {
        Rng rng(Rng::derive_seed(seed, boot));
        rows.clear();
        if (unit == ResampleUnit::timepoint) {
            for (std::size_t i = 0; i < t; ++i) rows.push_back(rng.next_index(t));
        } else {
            const auto& spans = clips->spans();
            for (std::size_t i = 0; i < spans.size(); ++i) {
                const auto& span = spans[rng.next_index(spans.size())];
                for (std::size_t r = 0; r < span.length; ++r) rows.push_back(span.start + r);
            }
        }
        const double diff =
            mean_defined_r(est_a, truth, rows) - mean_defined_r(est_b, truth, rows);
        if (diff <= 0.0) ++n_le;
    }
    out.p = double(n_le + 1) / double(n_boot + 1);
    return out;
}

std::vector<double> variability_series(const std::vector<TimeSeriesMatrix>& sources) {
    if (sources.size() < 2) throw DataError("variability_series needs at least 2 sources");
    const std::size_t t = sources[0].rows(), d = sources[0].cols();
    for (const auto& s : sources)
        if (s.rows() != t || s.cols() != d)
            throw DataError("variability_series: sources must share shape");
    if (t < 2) throw DataError("variability_series needs at least 2 rows");

    const std::size_t n_src = sources.size();
    std::vector<double> out(t - 1, 0.0);
    std::vector<std::vector<double>> windows(n_src, std::vector<double>(2 * d));
    for (std::size_t w = 0; w + 1 < t; ++w) {
        for (std::size_t s = 0; s < n_src; ++s) {
            std::copy(sources[s].row(w), sources[s].row(w) + d, windows[s].begin());
            std::copy(sources[s].row(w + 1), sources[s].row(w + 1) + d,
                      windows[s].begin() + static_cast<std::ptrdiff_t>(d));
        }
        double acc = 0.0;
        std::size_t n_pairs = 0;
        for (std::size_t i = 0; i < n_src; ++i)
            for (std::size_t j = i + 1; j < n_src; ++j) {
                const auto r = pearson(windows[i], windows[j]);
                // a degenerate window correlates with nothing; count it as
                // the neutral distance
                acc += 1.0 - (r.defined ? r.r : 0.0);
                ++n_pairs;
            }
        out[w] = acc / double(n_pairs);
    }
    return out;
}

namespace {

double betacf(double a, double b, double x) {
    const int max_iter = 200;
    const double eps = 3e-14, fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw NumericError("incomplete beta continued fraction did not converge");
}

} // namespace

double incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) throw NumericError("incomplete_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log(1.0 - x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double correlation_p_value(double r, std::size_t n) {
    if (n < 3) return 1.0;
    const double df = double(n - 2);
    const double denom = 1.0 - r * r;
    if (denom <= 0.0) return 0.0;
    const double t2 = r * r * df / denom;
    return incomplete_beta(0.5 * df, 0.5, df / (df + t2));
}

CorrelationTest variability_correlation(const std::vector<double>& v1,
                                        const std::vector<double>& v2) {
    if (v1.size() != v2.size()) throw DataError("variability_correlation: length mismatch");
    if (v1.size() < 3) throw DataError("variability_correlation needs length >= 3");
    CorrelationTest out;
    const auto pr = pearson(v1, v2);
    const auto sr = spearman(v1, v2);
    if (!pr.defined) return out;
    out.defined = true;
    out.r = pr.r;
    out.rho = sr.defined ? sr.r : 0.0;
    out.p = correlation_p_value(pr.r, v1.size());
    return out;
}

std::vector<SweepRow> sample_size_sweep(const TimeSeriesMatrix& x_train,
                                        const TimeSeriesMatrix& y_train, const ClipIndex& clips,
                                        const TimeSeriesMatrix& x_test,
                                        const TimeSeriesMatrix& y_test,
                                        const std::vector<std::size_t>& sizes, std::size_t n_seeds,
                                        std::uint64_t seed, const SweepTrainer& trainer) {
    if (sizes.empty()) throw DataError("sample_size_sweep: no sizes");
    if (n_seeds == 0) throw DataError("sample_size_sweep: n_seeds must be >= 1");
    if (clips.total_rows() != x_train.rows())
        throw DataError("sample_size_sweep: clip index does not cover training rows");
    if (x_train.rows() != y_train.rows())
        throw DataError("sample_size_sweep: feature/label row mismatch");
    for (const auto s : sizes)
        if (s == 0 || s > x_train.rows())
            throw DataError("sample_size_sweep: size " + std::to_string(s) +
                            " outside available training rows");

    std::vector<SweepRow> table;
    for (const auto size : sizes) {
        std::vector<double> per_seed;
        for (std::size_t sd = 0; sd < n_seeds; ++sd) {
            std::vector<std::size_t> clip_order(clips.n_clips());
            std::iota(clip_order.begin(), clip_order.end(), std::size_t{0});
            Rng rng(Rng::derive_seed(seed, sd));
            rng.shuffle(clip_order);

            std::vector<std::size_t> rows;
            for (const auto ci : clip_order) {
                const auto& span = clips.spans()[ci];
                for (std::size_t r = 0; r < span.length; ++r) rows.push_back(span.start + r);
                if (rows.size() >= size) break;
            }
            const auto xs = x_train.take_rows(rows);
            const auto ys = y_train.take_rows(rows);
            per_seed.push_back(trainer(xs, ys, x_test, y_test));
        }
        SweepRow row;
        row.size = size;
        row.mean_r = std::accumulate(per_seed.begin(), per_seed.end(), 0.0) / double(n_seeds);
        double var = 0.0;
        for (const auto v : per_seed) var += (v - row.mean_r) * (v - row.mean_r);
        row.sd_r = n_seeds < 2 ? 0.0 : std::sqrt(var / double(n_seeds - 1));
        table.push_back(row);
    }
    return table;
}

} // namespace encpipe
