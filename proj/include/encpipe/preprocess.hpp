#pragma once

#include <map>
#include <string>
#include <vector>

#include "encpipe/types.hpp"

namespace encpipe {

// Per-column normalization statistics, fit on training data only.
struct ZScoreStats {
    std::vector<double> means;
    std::vector<double> stds; // population convention (divide by T)
};

ZScoreStats fit_zscore(const TimeSeriesMatrix& m);

// (m - mean) / std per column; columns whose training std was zero map to
// all-zero output.
TimeSeriesMatrix apply_zscore(const TimeSeriesMatrix& m, const ZScoreStats& stats);

// Subtracts a running median per column.  The window is centered; at the
// series edges it truncates to the samples that exist.  Even window
// cardinality takes the mean of the two middle order statistics.
TimeSeriesMatrix detrend_median(const TimeSeriesMatrix& m, std::size_t window_s = 120);

// Repeats each row `factor` times, e.g. 2-s ratings stretched onto a 1-s grid.
TimeSeriesMatrix oversample_labels(const TimeSeriesMatrix& m, std::size_t factor);

// Expands one scalar per clip into a T-by-1 series.
TimeSeriesMatrix fill_clipwise(const std::map<std::string, double>& values, const ClipIndex& idx);

// Elementwise natural log; rejects non-positive values with their location.
TimeSeriesMatrix log_transform(const TimeSeriesMatrix& m);

// One description = the word vectors of one annotator's sentence.  Scene
// vector = mean over descriptions of the mean over words.
using WordVector = std::vector<double>;
using Description = std::vector<WordVector>;
TimeSeriesMatrix aggregate_word_vectors(const std::vector<std::vector<Description>>& scenes);

} // namespace encpipe
