#pragma once

// Sequence compression for long audio/video feature streams:
// min-max normalization -> low-variance filtering -> projection onto the
// first principal component -> Midimax key-frame selection -> gather of the
// original frames -> unit normalization.

#include <cstddef>
#include <span>
#include <vector>

#include "mmff/types.hpp"

namespace mmff {

inline constexpr double kDefaultVarianceThreshold = 0.01;
inline constexpr std::size_t kDefaultAudioTargetLength = 600;
inline constexpr std::size_t kDefaultVideoTargetLength = 1200;

struct NormStats {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t dims() const { return min.size(); }
};

NormStats fit_minmax(std::span<const FrameSequence> training);

// (x - min) / (max - min), clamped to [0, 1]; constant dimensions map to 0.
FrameSequence apply_minmax(const FrameSequence& seq, const NormStats& stats);

struct FilterMask {
    std::vector<bool> keep;
    double beta = kDefaultVarianceThreshold;
    // Pooled mean of per-sample temporal variances, one per original dim.
    std::vector<double> statistic;

    std::size_t kept() const;
};

// Dimension k is dropped iff mean_i( var_j(x_i^{jk}) ) <= beta.
// Throws ConfigError when every dimension would be dropped.
FilterMask fit_low_variance_filter(std::span<const FrameSequence> training,
                                   double beta = kDefaultVarianceThreshold);
FrameSequence apply_filter(const FrameSequence& seq, const FilterMask& mask);

struct PrincipalAxis {
    std::vector<double> mean;
    std::vector<double> direction;  // unit length, first nonzero entry positive
    double eigenvalue = 0.0;
    double residual = 0.0;  // ||C w - lambda w||
    std::size_t iterations = 0;

    std::vector<double> project(const Matrix& frames) const;
};

inline constexpr std::size_t kPowerIterationLimit = 1000;
inline constexpr double kPowerIterationTolerance = 1e-9;

// Dominant eigenvector of the sample covariance of `pooled` (rows are
// observations) by power iteration. Throws NumericError on non-convergence.
PrincipalAxis first_principal_component(const Matrix& pooled);

// Sample covariance with (n - 1) normalization.
Matrix sample_covariance(const Matrix& pooled, std::span<const double> mean);

Matrix pool_frames(std::span<const FrameSequence> sequences);

struct MidimaxPlan {
    std::size_t ratio = 1;
    std::vector<std::size_t> slice_begin;               // one per slice
    std::vector<std::vector<std::size_t>> selected;     // absolute indices, sorted

    std::vector<std::size_t> indices() const;
};

// Slices of `ratio` consecutive samples; each slice of length >= 3 keeps
// the indices of its maximum, minimum and lower median (ties -> earliest),
// sorted ascending. Slices shorter than 3, and a short final slice of
// exactly 3, keep every index.
MidimaxPlan midimax_select(std::span<const double> series, std::size_t ratio);

// Compresses a normalized, filtered sequence to exactly `target_len` frames.
FrameSequence compress_sequence(const FrameSequence& seq, const PrincipalAxis& axis,
                                std::size_t target_len);

// Fitted statistics for one modality, applied unchanged to every split.
struct SequencePreprocessor {
    NormStats norm;
    FilterMask filter;
    PrincipalAxis axis;
    std::size_t target_len = kDefaultAudioTargetLength;

    static SequencePreprocessor fit(std::span<const FrameSequence> training, double beta,
                                    std::size_t target_len);
    FrameSequence apply(const FrameSequence& seq) const;
};

} // namespace mmff
