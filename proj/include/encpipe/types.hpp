#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace encpipe {

/// Dense T x D matrix of 64-bit reals, row-major. One row per 1-s sample.
/// The shared container for features, voxel responses, labels, and model
/// weights. Immutable by convention once handed out of a builder; operations
/// never mutate their inputs.
class TimeSeriesMatrix {
public:
    TimeSeriesMatrix() = default;

    // Zero-filled rows x cols.
    TimeSeriesMatrix(std::size_t rows, std::size_t cols);

    // Takes ownership of row-major data; throws DataError unless
    // data.size() == rows*cols, both dims >= 1, and every value is finite.
    static TimeSeriesMatrix from_data(std::size_t rows, std::size_t cols,
                                      std::vector<double> data,
                                      std::vector<std::string> channel_names = {});

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    const double* row(std::size_t r) const { return data_.data() + r * cols_; }
    double* row(std::size_t r) { return data_.data() + r * cols_; }

    const double* data() const { return data_.data(); }
    double* data() { return data_.data(); }

    const std::vector<std::string>& channel_names() const { return names_; }
    void set_channel_names(std::vector<std::string> names);

    // Throws DataError naming the first non-finite cell, if any.
    void check_finite(const std::string& context) const;

    bool same_shape(const TimeSeriesMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    std::vector<double> column(std::size_t c) const;

    // Rows listed in `keep`, in the order given.
    TimeSeriesMatrix take_rows(const std::vector<std::size_t>& keep) const;

    // Columns listed in `keep`, in the order given.
    TimeSeriesMatrix take_cols(const std::vector<std::size_t>& keep) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
    std::vector<std::string> names_;
};

/// One contiguous run of rows belonging to a single source clip.
struct ClipSpan {
    std::string clip_id;
    std::size_t start = 0;
    std::size_t length = 0;
};

/// Maps every 1-s sample to its source clip. Clips occupy contiguous,
/// non-overlapping row runs covering [0, total_rows).
class ClipIndex {
public:
    ClipIndex() = default;
    explicit ClipIndex(std::vector<ClipSpan> spans);  // validates contiguity

    const std::vector<ClipSpan>& spans() const { return spans_; }
    std::size_t total_rows() const { return total_rows_; }
    std::size_t n_clips() const { return spans_.size(); }

    const std::string& clip_of_row(std::size_t row) const;
    bool has_clip(const std::string& id) const;

    // Row indices (ascending) of the clips in `ids`; throws DataError on an
    // unknown id.
    std::vector<std::size_t> rows_of_clips(const std::set<std::string>& ids) const;

    // Uniform clips of `clip_len` rows covering `total_rows`; a remainder
    // becomes one short trailing clip. Ids are "clip0000", "clip0001", ...
    static ClipIndex uniform(std::size_t total_rows, std::size_t clip_len);

private:
    std::vector<ClipSpan> spans_;
    std::vector<std::size_t> row_to_span_;
    std::size_t total_rows_ = 0;
};

/// Ordered set of integer temporal offsets in samples. Positive = past
/// (design row t reads source row t-k), negative = future.
class DelaySpec {
public:
    DelaySpec(std::initializer_list<int> delays);
    explicit DelaySpec(std::vector<int> delays);  // must be strictly increasing, non-empty

    const std::vector<int>& delays() const { return delays_; }
    std::size_t size() const { return delays_.size(); }
    int operator[](std::size_t i) const { return delays_[i]; }

    // Leads {3,4,5} -> delays {-5,-4,-3}: the lead sense used when labels at t
    // are regressed on responses at t+k.
    static DelaySpec from_leads(const std::vector<int>& leads);

private:
    std::vector<int> delays_;
};

/// Per-partition result of a clip-aligned train/test split.
struct ClipSplit {
    TimeSeriesMatrix train;
    TimeSeriesMatrix test;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
};

ClipSplit split_by_clips(const TimeSeriesMatrix& m, const ClipIndex& idx,
                         const std::set<std::string>& test_clips);

} // namespace encpipe
