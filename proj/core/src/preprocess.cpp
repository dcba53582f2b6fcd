#include "mmff/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmff/error.hpp"
#include "mmff/rng.hpp"

namespace mmff {

namespace {

std::size_t common_dims(std::span<const FrameSequence> sequences, const char* op) {
    if (sequences.empty()) {
        throw UsageError(std::string(op) + ": empty training collection");
    }
    const std::size_t dims = sequences.front().dims();
    for (const auto& seq : sequences) {
        validate(seq);
        if (seq.dims() != dims) {
            throw DimensionError(std::string(op) + ": sequence '" + seq.sample_id + "' has " +
                                 std::to_string(seq.dims()) + " dims, expected " +
                                 std::to_string(dims));
        }
    }
    return dims;
}

void require_dims(const FrameSequence& seq, std::size_t dims, const char* op) {
    if (seq.dims() != dims) {
        throw DimensionError(std::string(op) + ": sequence '" + seq.sample_id + "' has " +
                             std::to_string(seq.dims()) + " dims, fitted on " +
                             std::to_string(dims));
    }
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

std::vector<double> multiply(const Matrix& m, std::span<const double> v) {
    std::vector<double> out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            acc += m(i, j) * v[j];
        }
        out[i] = acc;
    }
    return out;
}

void normalize_sign(std::vector<double>& w) {
    for (double x : w) {
        if (x != 0.0) {
            if (x < 0.0) {
                for (double& y : w) {
                    y = -y;
                }
            }
            return;
        }
    }
}

} // namespace

NormStats fit_minmax(std::span<const FrameSequence> training) {
    const std::size_t dims = common_dims(training, "fit_minmax");
    NormStats stats;
    stats.min.assign(dims, std::numeric_limits<double>::infinity());
    stats.max.assign(dims, -std::numeric_limits<double>::infinity());
    for (const auto& seq : training) {
        for (std::size_t r = 0; r < seq.length(); ++r) {
            auto row = seq.frames.row(r);
            for (std::size_t k = 0; k < dims; ++k) {
                stats.min[k] = std::min(stats.min[k], row[k]);
                stats.max[k] = std::max(stats.max[k], row[k]);
            }
        }
    }
    return stats;
}

FrameSequence apply_minmax(const FrameSequence& seq, const NormStats& stats) {
    require_dims(seq, stats.dims(), "apply_minmax");
    FrameSequence out = seq;
    for (std::size_t r = 0; r < out.length(); ++r) {
        auto row = out.frames.row(r);
        for (std::size_t k = 0; k < row.size(); ++k) {
            const double range = stats.max[k] - stats.min[k];
            row[k] = range > 0.0 ? std::clamp((row[k] - stats.min[k]) / range, 0.0, 1.0) : 0.0;
        }
    }
    return out;
}

std::size_t FilterMask::kept() const {
    return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
}

FilterMask fit_low_variance_filter(std::span<const FrameSequence> training, double beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw ConfigError("low-variance filter: beta must be finite and non-negative");
    }
    const std::size_t dims = common_dims(training, "fit_low_variance_filter");

    // per_sample[k][i]: temporal variance of dimension k within sample i.
    std::vector<std::vector<double>> per_sample(dims, std::vector<double>(training.size()));
    for (std::size_t i = 0; i < training.size(); ++i) {
        const auto& frames = training[i].frames;
        const double m = static_cast<double>(frames.rows);
        for (std::size_t k = 0; k < dims; ++k) {
            double mu = 0.0;
            for (std::size_t j = 0; j < frames.rows; ++j) {
                mu += frames(j, k);
            }
            mu /= m;
            double var = 0.0;
            for (std::size_t j = 0; j < frames.rows; ++j) {
                const double d = frames(j, k) - mu;
                var += d * d;
            }
            per_sample[k][i] = var / m;
        }
    }

    FilterMask mask;
    mask.beta = beta;
    mask.keep.resize(dims);
    mask.statistic.resize(dims);
    for (std::size_t k = 0; k < dims; ++k) {
        // Summing in sorted order makes the statistic independent of sample order.
        std::sort(per_sample[k].begin(), per_sample[k].end());
        double total = 0.0;
        for (double v : per_sample[k]) {
            total += v;
        }
        mask.statistic[k] = total / static_cast<double>(training.size());
        mask.keep[k] = mask.statistic[k] > beta;
    }
    if (mask.kept() == 0) {
        throw ConfigError("low-variance filter removed all " + std::to_string(dims) +
                          " dimensions at beta=" + std::to_string(beta) + "; use a smaller beta");
    }
    return mask;
}

FrameSequence apply_filter(const FrameSequence& seq, const FilterMask& mask) {
    require_dims(seq, mask.keep.size(), "apply_filter");
    FrameSequence out;
    out.sample_id = seq.sample_id;
    out.modality = seq.modality;
    out.frames = Matrix(seq.length(), mask.kept());
    for (std::size_t r = 0; r < seq.length(); ++r) {
        auto src = seq.frames.row(r);
        auto dst = out.frames.row(r);
        std::size_t c = 0;
        for (std::size_t k = 0; k < src.size(); ++k) {
            if (mask.keep[k]) {
                dst[c++] = src[k];
            }
        }
    }
    return out;
}

Matrix pool_frames(std::span<const FrameSequence> sequences) {
    const std::size_t dims = common_dims(sequences, "pool_frames");
    std::size_t rows = 0;
    for (const auto& seq : sequences) {
        rows += seq.length();
    }
    Matrix pooled(rows, dims);
    std::size_t r = 0;
    for (const auto& seq : sequences) {
        std::copy(seq.frames.data.begin(), seq.frames.data.end(),
                  pooled.data.begin() + static_cast<std::ptrdiff_t>(r * dims));
        r += seq.length();
    }
    return pooled;
}

Matrix sample_covariance(const Matrix& pooled, std::span<const double> mean) {
    const std::size_t dims = pooled.cols;
    Matrix cov(dims, dims);
    std::vector<double> centered(dims);
    for (std::size_t r = 0; r < pooled.rows; ++r) {
        auto row = pooled.row(r);
        for (std::size_t k = 0; k < dims; ++k) {
            centered[k] = row[k] - mean[k];
        }
        for (std::size_t a = 0; a < dims; ++a) {
            for (std::size_t b = a; b < dims; ++b) {
                cov(a, b) += centered[a] * centered[b];
            }
        }
    }
    const double denom = static_cast<double>(pooled.rows - 1);
    for (std::size_t a = 0; a < dims; ++a) {
        for (std::size_t b = a; b < dims; ++b) {
            cov(a, b) /= denom;
            cov(b, a) = cov(a, b);
        }
    }
    return cov;
}

std::vector<double> PrincipalAxis::project(const Matrix& frames) const {
    if (frames.cols != direction.size()) {
        throw DimensionError("project: frames have " + std::to_string(frames.cols) +
                             " dims, axis has " + std::to_string(direction.size()));
    }
    std::vector<double> out(frames.rows);
    for (std::size_t r = 0; r < frames.rows; ++r) {
        auto row = frames.row(r);
        double acc = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) {
            acc += (row[k] - mean[k]) * direction[k];
        }
        out[r] = acc;
    }
    return out;
}

PrincipalAxis first_principal_component(const Matrix& pooled) {
    if (pooled.rows < 2 || pooled.cols == 0) {
        throw UsageError("first_principal_component: needs at least 2 frames, got " +
                         std::to_string(pooled.rows));
    }
    const std::size_t dims = pooled.cols;
    PrincipalAxis axis;
    axis.mean.assign(dims, 0.0);
    for (std::size_t r = 0; r < pooled.rows; ++r) {
        auto row = pooled.row(r);
        for (std::size_t k = 0; k < dims; ++k) {
            axis.mean[k] += row[k];
        }
    }
    for (double& m : axis.mean) {
        m /= static_cast<double>(pooled.rows);
    }
    const Matrix cov = sample_covariance(pooled, axis.mean);

    // Fixed-seed start vector: generic, so never exactly orthogonal to the
    // dominant eigenvector in practice, and reproducible.
    RngStream rng(0x5EEDCA5EULL);
    std::vector<double> w(dims);
    for (double& x : w) {
        x = rng.normal();
    }
    double n0 = norm2(w);
    for (double& x : w) {
        x /= n0;
    }

    bool converged = false;
    for (std::size_t it = 0; it < kPowerIterationLimit; ++it) {
        std::vector<double> next = multiply(cov, w);
        const double n = norm2(next);
        axis.iterations = it + 1;
        if (n == 0.0) {
            converged = true;  // zero covariance: every direction is an eigenvector
            break;
        }
        double change = 0.0;
        for (std::size_t k = 0; k < dims; ++k) {
            next[k] /= n;
            const double d = next[k] - w[k];
            change += d * d;
        }
        w = std::move(next);
        if (std::sqrt(change) < kPowerIterationTolerance) {
            converged = true;
            break;
        }
    }

    normalize_sign(w);
    const std::vector<double> cw = multiply(cov, w);
    double lambda = 0.0;
    for (std::size_t k = 0; k < dims; ++k) {
        lambda += w[k] * cw[k];
    }
    double residual = 0.0;
    for (std::size_t k = 0; k < dims; ++k) {
        const double d = cw[k] - lambda * w[k];
        residual += d * d;
    }
    axis.direction = std::move(w);
    axis.eigenvalue = std::max(lambda, 0.0);
    axis.residual = std::sqrt(residual);
    if (!converged) {
        throw NumericError("first_principal_component: power iteration did not converge in " +
                           std::to_string(kPowerIterationLimit) +
                           " iterations (residual " + std::to_string(axis.residual) + ")");
    }
    return axis;
}

std::vector<std::size_t> MidimaxPlan::indices() const {
    std::vector<std::size_t> out;
    for (const auto& slice : selected) {
        out.insert(out.end(), slice.begin(), slice.end());
    }
    return out;
}

MidimaxPlan midimax_select(std::span<const double> series, std::size_t ratio) {
    if (series.empty()) {
        throw UsageError("midimax_select: empty series");
    }
    if (ratio == 0) {
        throw UsageError("midimax_select: compression ratio must be at least 1");
    }
    MidimaxPlan plan;
    plan.ratio = ratio;
    std::vector<double> scratch;
    for (std::size_t begin = 0; begin < series.size(); begin += ratio) {
        const std::size_t len = std::min(ratio, series.size() - begin);
        const bool short_final = len < ratio;
        plan.slice_begin.push_back(begin);
        std::vector<std::size_t> picks;
        if (len < 3 || (short_final && len == 3)) {
            for (std::size_t i = 0; i < len; ++i) {
                picks.push_back(begin + i);
            }
        } else {
            auto slice = series.subspan(begin, len);
            std::size_t hi = 0;
            std::size_t lo = 0;
            for (std::size_t i = 1; i < len; ++i) {
                if (slice[i] > slice[hi]) {
                    hi = i;
                }
                if (slice[i] < slice[lo]) {
                    lo = i;
                }
            }
            scratch.assign(slice.begin(), slice.end());
            const std::size_t rank = (len - 1) / 2;
            std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(rank),
                             scratch.end());
            const double median = scratch[rank];
            std::size_t mid = 0;
            while (slice[mid] != median) {
                ++mid;
            }
            picks = {begin + hi, begin + lo, begin + mid};
            std::sort(picks.begin(), picks.end());
        }
        plan.selected.push_back(std::move(picks));
    }
    return plan;
}

FrameSequence compress_sequence(const FrameSequence& seq, const PrincipalAxis& axis,
                                std::size_t target_len) {
    if (seq.length() == 0 || seq.dims() == 0) {
        throw DataError("compress_sequence: sequence '" + seq.sample_id + "' is empty");
    }
    if (target_len < 3) {
        throw UsageError("compress_sequence: target length must be at least 3");
    }
    const std::size_t m = seq.length();
    const std::size_t ratio = std::max<std::size_t>(1, (3 * m + target_len - 1) / target_len);
    const std::vector<double> projected = axis.project(seq.frames);
    std::vector<std::size_t> picks = midimax_select(projected, ratio).indices();
    if (picks.size() > target_len) {
        picks.resize(target_len);
    }
    while (picks.size() < target_len) {
        picks.push_back(picks.back());
    }

    FrameSequence out;
    out.sample_id = seq.sample_id;
    out.modality = seq.modality;
    out.frames = Matrix(target_len, seq.dims());
    for (std::size_t r = 0; r < target_len; ++r) {
        auto src = seq.frames.row(picks[r]);
        auto dst = out.frames.row(r);
        const double n = norm2(src);
        for (std::size_t k = 0; k < src.size(); ++k) {
            dst[k] = n > 0.0 ? src[k] / n : 0.0;
        }
    }
    return out;
}

SequencePreprocessor SequencePreprocessor::fit(std::span<const FrameSequence> training,
                                               double beta, std::size_t target_len) {
    SequencePreprocessor pre;
    pre.target_len = target_len;
    pre.norm = fit_minmax(training);
    std::vector<FrameSequence> staged;
    staged.reserve(training.size());
    for (const auto& seq : training) {
        staged.push_back(apply_minmax(seq, pre.norm));
    }
    pre.filter = fit_low_variance_filter(staged, beta);
    for (auto& seq : staged) {
        seq = apply_filter(seq, pre.filter);
    }
    pre.axis = first_principal_component(pool_frames(staged));
    return pre;
}

FrameSequence SequencePreprocessor::apply(const FrameSequence& seq) const {
    return compress_sequence(apply_filter(apply_minmax(seq, norm), filter), axis, target_len);
}

} // namespace mmff
