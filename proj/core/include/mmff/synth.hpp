#pragma once

// Synthetic multimodal regression data.
//
// Each sample draws u ~ N(0, I). Every modality's frame j is
//   c_m + A_m u + noise * B_m e_j
// where e_j is a moving average (window 5) of white Gaussian noise, so the
// signal is constant over time and the temporal variation is smoothed noise
// in a low-rank subspace (rows of B_m have unit norm). Text frames are
// rescaled to unit norm. The label is 12 + 4 * (w . u_L) clipped to
// [0, 24], with u_L the first `label_dims` coordinates. With a dominant
// modality only that modality's A_m reads u_L. Audio and video also carry
// `dead_dims` columns that are constant within a sample.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "mmff/dataset.hpp"

namespace mmff {

struct SynthConfig {
    std::size_t samples = 64;
    std::size_t test_samples = 0;
    std::size_t latent_dim = 6;
    std::size_t label_dims = 2;
    std::array<std::size_t, kModalityCount> dims{12, 10, 12};
    std::array<std::size_t, kModalityCount> min_length{6, 90, 120};
    std::array<std::size_t, kModalityCount> max_length{10, 150, 180};
    std::size_t dead_dims = 2;
    std::size_t noise_rank = 3;
    double noise = 1.0;
    std::optional<Modality> dominant;
    std::uint64_t seed = 0;

    void validate() const;
};

inline constexpr std::size_t kSmoothingWindow = 5;
inline constexpr double kLabelCenter = 12.0;
inline constexpr double kLabelScale = 4.0;

// Deterministic in the config. The test split shares the generating maps
// with the training split and uses independent samples.
Dataset synth_dataset(const SynthConfig& config, std::string_view split);

// Writes train.csv (and test.csv when test_samples > 0) with their
// sequence files under `out_dir`.
void synth_generate(const SynthConfig& config, const std::filesystem::path& out_dir);

} // namespace mmff
