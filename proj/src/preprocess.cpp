#include "encpipe/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "encpipe/error.hpp"
#include "encpipe/kernels.hpp"
#include "encpipe/parallel.hpp"

namespace encpipe {

ZScoreStats fit_zscore(const TimeSeriesMatrix& m) {
    if (m.rows() < 2) throw DataError("fit_zscore needs at least 2 rows");
    const auto& k = kernels::ops();
    const std::size_t t = m.rows(), d = m.cols();

    ZScoreStats stats;
    stats.means.assign(d, 0.0);
    for (std::size_t r = 0; r < t; ++r) k.add(stats.means.data(), m.row(r), d);
    k.scale(stats.means.data(), 1.0 / double(t), d);

    std::vector<double> ones(d, 1.0), centered(d), var(d, 0.0);
    for (std::size_t r = 0; r < t; ++r) {
        k.center_scale(centered.data(), m.row(r), stats.means.data(), ones.data(), d);
        k.fmadd(var.data(), centered.data(), centered.data(), d);
    }
    stats.stds.resize(d);
    for (std::size_t c = 0; c < d; ++c) stats.stds[c] = std::sqrt(var[c] / double(t));
    return stats;
}

TimeSeriesMatrix apply_zscore(const TimeSeriesMatrix& m, const ZScoreStats& stats) {
    if (m.cols() != stats.means.size() || stats.means.size() != stats.stds.size())
        throw DataError("apply_zscore: stats do not match matrix width");
    const auto& k = kernels::ops();
    const std::size_t d = m.cols();

    std::vector<double> inv(d);
    for (std::size_t c = 0; c < d; ++c) inv[c] = stats.stds[c] == 0.0 ? 0.0 : 1.0 / stats.stds[c];

    TimeSeriesMatrix out(m.rows(), d);
    parallel_for(m.rows(), [&](std::size_t r) {
        k.center_scale(out.row(r), m.row(r), stats.means.data(), inv.data(), d);
    });
    out.set_channel_names(m.channel_names());
    return out;
}

namespace {

// Sliding sorted window; windows are small (~120) so vector insertion wins
// over a tree.
class MedianWindow {
public:
    void insert(double v) {
        sorted_.insert(std::lower_bound(sorted_.begin(), sorted_.end(), v), v);
    }
    void erase(double v) {
        sorted_.erase(std::lower_bound(sorted_.begin(), sorted_.end(), v));
    }
    double median() const {
        const std::size_t n = sorted_.size();
        if (n % 2 == 1) return sorted_[n / 2];
        return 0.5 * (sorted_[n / 2 - 1] + sorted_[n / 2]);
    }

private:
    std::vector<double> sorted_;
};

} // namespace

TimeSeriesMatrix detrend_median(const TimeSeriesMatrix& m, std::size_t window_s) {
    if (window_s < 1) throw DataError("detrend window must be >= 1");
    const std::size_t t = m.rows();
    const std::size_t left = (window_s - 1) / 2, right = window_s / 2;

    TimeSeriesMatrix out(t, m.cols());
    parallel_for(m.cols(), [&](std::size_t c) {
        const auto col = m.column(c);
        MedianWindow win;
        const std::size_t first_end = std::min(t - 1, right);
        for (std::size_t i = 0; i <= first_end; ++i) win.insert(col[i]);
        for (std::size_t i = 0; i < t; ++i) {
            if (i > 0) {
                const std::size_t incoming = i + right;
                if (incoming < t) win.insert(col[incoming]);
                if (i >= left + 1) win.erase(col[i - 1 - left]);
            }
            out(i, c) = col[i] - win.median();
        }
    });
    out.set_channel_names(m.channel_names());
    return out;
}

TimeSeriesMatrix oversample_labels(const TimeSeriesMatrix& m, std::size_t factor) {
    if (factor < 1) throw DataError("oversample factor must be >= 1");
    TimeSeriesMatrix out(m.rows() * factor, m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t rep = 0; rep < factor; ++rep)
            std::copy(m.row(r), m.row(r) + m.cols(), out.row(r * factor + rep));
    out.set_channel_names(m.channel_names());
    return out;
}

TimeSeriesMatrix fill_clipwise(const std::map<std::string, double>& values, const ClipIndex& idx) {
    TimeSeriesMatrix out(idx.total_rows(), 1);
    for (const auto& span : idx.spans()) {
        const auto it = values.find(span.clip_id);
        if (it == values.end()) throw DataError("no value for clip " + span.clip_id);
        for (std::size_t r = 0; r < span.length; ++r) out(span.start + r, 0) = it->second;
    }
    return out;
}

TimeSeriesMatrix log_transform(const TimeSeriesMatrix& m) {
    TimeSeriesMatrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            if (v <= 0.0)
                throw DataError("log_transform: non-positive value at row " + std::to_string(r) +
                                ", column " + std::to_string(c));
            out(r, c) = std::log(v);
        }
    out.set_channel_names(m.channel_names());
    return out;
}

TimeSeriesMatrix aggregate_word_vectors(const std::vector<std::vector<Description>>& scenes) {
    if (scenes.empty()) throw DataError("aggregate_word_vectors: no scenes");
    std::size_t dim = 0;
    for (const auto& scene : scenes) {
        for (const auto& desc : scene)
            if (!desc.empty()) { dim = desc.front().size(); break; }
        if (dim != 0) break;
    }
    if (dim == 0) throw DataError("aggregate_word_vectors: no word vectors");

    TimeSeriesMatrix out(scenes.size(), dim);
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        const auto& scene = scenes[s];
        if (scene.empty())
            throw DataError("aggregate_word_vectors: scene " + std::to_string(s) +
                            " has no descriptions");
        std::vector<double> scene_sum(dim, 0.0);
        for (const auto& desc : scene) {
            if (desc.empty())
                throw DataError("aggregate_word_vectors: empty description in scene " +
                                std::to_string(s));
            std::vector<double> desc_sum(dim, 0.0);
            for (const auto& word : desc) {
                if (word.size() != dim)
                    throw DataError("aggregate_word_vectors: dimension mismatch in scene " +
                                    std::to_string(s));
                for (std::size_t j = 0; j < dim; ++j) desc_sum[j] += word[j];
            }
            for (std::size_t j = 0; j < dim; ++j)
                scene_sum[j] += desc_sum[j] / double(desc.size());
        }
        for (std::size_t j = 0; j < dim; ++j) out(s, j) = scene_sum[j] / double(scene.size());
    }
    return out;
}

} // namespace encpipe
