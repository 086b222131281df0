#include "encpipe/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "encpipe/error.hpp"

namespace encpipe {

TimeSeriesMatrix::TimeSeriesMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0) throw DataError("matrix dimensions must be >= 1");
}

TimeSeriesMatrix TimeSeriesMatrix::from_data(std::size_t rows, std::size_t cols,
                                             std::vector<double> data,
                                             std::vector<std::string> channel_names) {
    if (rows == 0 || cols == 0) throw DataError("matrix dimensions must be >= 1");
    if (data.size() != rows * cols)
        throw DataError("data length " + std::to_string(data.size()) + " does not match " +
                        std::to_string(rows) + "x" + std::to_string(cols));
    TimeSeriesMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.data_ = std::move(data);
    m.check_finite("matrix construction");
    if (!channel_names.empty()) m.set_channel_names(std::move(channel_names));
    return m;
}

void TimeSeriesMatrix::set_channel_names(std::vector<std::string> names) {
    if (!names.empty() && names.size() != cols_)
        throw DataError("channel name count " + std::to_string(names.size()) +
                        " does not match column count " + std::to_string(cols_));
    names_ = std::move(names);
}

void TimeSeriesMatrix::check_finite(const std::string& context) const {
    for (std::size_t r = 0; r < rows_; ++r) {
        const double* p = row(r);
        for (std::size_t c = 0; c < cols_; ++c) {
            if (!std::isfinite(p[c]))
                throw DataError(context + ": non-finite value at row " + std::to_string(r) +
                                ", col " + std::to_string(c));
        }
    }
}

std::vector<double> TimeSeriesMatrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

TimeSeriesMatrix TimeSeriesMatrix::take_rows(const std::vector<std::size_t>& keep) const {
    if (keep.empty()) throw DataError("row selection is empty");
    TimeSeriesMatrix out(keep.size(), cols_);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (keep[i] >= rows_) throw DataError("row index out of range");
        std::copy(row(keep[i]), row(keep[i]) + cols_, out.row(i));
    }
    out.names_ = names_;
    return out;
}

TimeSeriesMatrix TimeSeriesMatrix::take_cols(const std::vector<std::size_t>& keep) const {
    if (keep.empty()) throw DataError("column selection is empty");
    TimeSeriesMatrix out(rows_, keep.size());
    for (std::size_t r = 0; r < rows_; ++r) {
        const double* src = row(r);
        double* dst = out.row(r);
        for (std::size_t i = 0; i < keep.size(); ++i) {
            if (keep[i] >= cols_) throw DataError("column index out of range");
            dst[i] = src[keep[i]];
        }
    }
    if (!names_.empty()) {
        std::vector<std::string> names(keep.size());
        for (std::size_t i = 0; i < keep.size(); ++i) names[i] = names_[keep[i]];
        out.names_ = std::move(names);
    }
    return out;
}

ClipIndex::ClipIndex(std::vector<ClipSpan> spans) : spans_(std::move(spans)) {
    if (spans_.empty()) throw DataError("clip index has no clips");
    std::size_t expected_start = 0;
    std::set<std::string> seen;
    for (const auto& s : spans_) {
        if (s.length == 0) throw DataError("clip '" + s.clip_id + "' has zero length");
        if (s.start != expected_start)
            throw DataError("clip '" + s.clip_id + "' starts at row " + std::to_string(s.start) +
                            ", expected " + std::to_string(expected_start) +
                            " (clips must be contiguous and non-overlapping)");
        if (!seen.insert(s.clip_id).second)
            throw DataError("duplicate clip id '" + s.clip_id + "'");
        expected_start += s.length;
    }
    total_rows_ = expected_start;
    row_to_span_.resize(total_rows_);
    for (std::size_t i = 0; i < spans_.size(); ++i)
        for (std::size_t r = spans_[i].start; r < spans_[i].start + spans_[i].length; ++r)
            row_to_span_[r] = i;
}

const std::string& ClipIndex::clip_of_row(std::size_t row) const {
    if (row >= total_rows_) throw DataError("row " + std::to_string(row) + " outside clip index");
    return spans_[row_to_span_[row]].clip_id;
}

bool ClipIndex::has_clip(const std::string& id) const {
    return std::any_of(spans_.begin(), spans_.end(),
                       [&](const ClipSpan& s) { return s.clip_id == id; });
}

std::vector<std::size_t> ClipIndex::rows_of_clips(const std::set<std::string>& ids) const {
    for (const auto& id : ids)
        if (!has_clip(id)) throw DataError("unknown clip id '" + id + "'");
    std::vector<std::size_t> rows;
    for (const auto& s : spans_) {
        if (ids.count(s.clip_id) == 0) continue;
        for (std::size_t r = s.start; r < s.start + s.length; ++r) rows.push_back(r);
    }
    return rows;
}

ClipIndex ClipIndex::uniform(std::size_t total_rows, std::size_t clip_len) {
    if (total_rows == 0 || clip_len == 0)
        throw DataError("uniform clip index needs rows and clip_len >= 1");
    std::vector<ClipSpan> spans;
    std::size_t start = 0;
    std::size_t k = 0;
    while (start < total_rows) {
        const std::size_t len = std::min(clip_len, total_rows - start);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "clip%04zu", k++);
        spans.push_back({buf, start, len});
        start += len;
    }
    return ClipIndex(std::move(spans));
}

DelaySpec::DelaySpec(std::initializer_list<int> delays) : DelaySpec(std::vector<int>(delays)) {}

DelaySpec::DelaySpec(std::vector<int> delays) : delays_(std::move(delays)) {
    if (delays_.empty()) throw DataError("delay list is empty");
    for (std::size_t i = 1; i < delays_.size(); ++i)
        if (delays_[i] <= delays_[i - 1])
            throw DataError("delays must be strictly increasing");
}

DelaySpec DelaySpec::from_leads(const std::vector<int>& leads) {
    std::vector<int> d;
    d.reserve(leads.size());
    for (int k : leads) d.push_back(-k);
    std::sort(d.begin(), d.end());
    return DelaySpec(std::move(d));
}

ClipSplit split_by_clips(const TimeSeriesMatrix& m, const ClipIndex& idx,
                         const std::set<std::string>& test_clips) {
    if (idx.total_rows() != m.rows())
        throw DataError("clip index covers " + std::to_string(idx.total_rows()) +
                        " rows but matrix has " + std::to_string(m.rows()));
    for (const auto& id : test_clips)
        if (!idx.has_clip(id)) throw DataError("unknown clip id '" + id + "'");

    ClipSplit out;
    for (const auto& s : idx.spans()) {
        auto& rows = test_clips.count(s.clip_id) ? out.test_rows : out.train_rows;
        for (std::size_t r = s.start; r < s.start + s.length; ++r) rows.push_back(r);
    }
    if (out.train_rows.empty()) throw DataError("empty training partition");
    if (out.test_rows.empty()) throw DataError("empty test partition");
    out.train = m.take_rows(out.train_rows);
    out.test = m.take_rows(out.test_rows);
    return out;
}

} // namespace encpipe
