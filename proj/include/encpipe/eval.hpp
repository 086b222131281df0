#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "encpipe/types.hpp"

namespace encpipe {

// Sample Pearson correlation.  Undefined when either side has zero variance
// or fewer than 2 samples.
struct PearsonResult {
    double r = 0.0;
    bool defined = false;
};

PearsonResult pearson(const double* a, const double* b, std::size_t n);
PearsonResult pearson(const std::vector<double>& a, const std::vector<double>& b);

// Pearson on average ranks (ties get the mean rank).
PearsonResult spearman(const std::vector<double>& a, const std::vector<double>& b);

// Column-wise accuracy of est against truth.  Undefined targets carry r = 0
// with defined = false; mean_r averages the defined targets only and
// n_undefined counts the rest.  Fold-level selection elsewhere scores
// undefined targets as 0 instead, since a mean over folds needs a number.
struct AccuracyReport {
    std::vector<double> per_target_r;
    std::vector<bool> defined;
    double mean_r = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_undefined = 0;
};

AccuracyReport score_columns(const TimeSeriesMatrix& est, const TimeSeriesMatrix& truth);

enum class ResampleUnit { timepoint, clip };

// One-sided bootstrap for "a predicts truth better than b": resample rows
// (or whole clips) with replacement, recompute the mean-r difference, and
// report p = (#{diff* <= 0} + 1)/(n_boot + 1).  Each resample draws from its
// own derived generator, so execution order cannot matter.
struct BootstrapResult {
    double p = 1.0;
    double observed_diff = 0.0;
};

BootstrapResult bootstrap_compare(const TimeSeriesMatrix& truth, const TimeSeriesMatrix& est_a,
                                  const TimeSeriesMatrix& est_b, std::size_t n_boot,
                                  std::uint64_t seed, ResampleUnit unit = ResampleUnit::timepoint,
                                  const ClipIndex* clips = nullptr);

// Mean pairwise correlation distance (1 - r) across sources inside a 2-sample
// window slid in 1-sample steps; each window is flattened across all columns
// before correlating.  Output length is T - 1.
std::vector<double> variability_series(const std::vector<TimeSeriesMatrix>& sources);

// Pearson and Spearman between two variability series, with a two-sided
// t-test p for the Pearson r.
struct CorrelationTest {
    double r = 0.0;
    double rho = 0.0;
    double p = 1.0;
    bool defined = false;
};

CorrelationTest variability_correlation(const std::vector<double>& v1,
                                        const std::vector<double>& v2);

// Accuracy as a function of training-set size.  Per seed, clips are shuffled
// once and each size takes the leading clips of that order until the row
// budget is met, so smaller samples nest inside larger ones.
struct SweepRow {
    std::size_t size = 0;
    double mean_r = 0.0;
    double sd_r = 0.0;
};

using SweepTrainer = std::function<double(const TimeSeriesMatrix& x_train,
                                          const TimeSeriesMatrix& y_train,
                                          const TimeSeriesMatrix& x_test,
                                          const TimeSeriesMatrix& y_test)>;

std::vector<SweepRow> sample_size_sweep(const TimeSeriesMatrix& x_train,
                                        const TimeSeriesMatrix& y_train, const ClipIndex& clips,
                                        const TimeSeriesMatrix& x_test,
                                        const TimeSeriesMatrix& y_test,
                                        const std::vector<std::size_t>& sizes, std::size_t n_seeds,
                                        std::uint64_t seed, const SweepTrainer& trainer);

// Regularized incomplete beta, exposed for the t-test and its tests.
double incomplete_beta(double a, double b, double x);

// Two-sided p for a correlation r on n samples via t = r sqrt((n-2)/(1-r^2)).
double correlation_p_value(double r, std::size_t n);

} // namespace encpipe
