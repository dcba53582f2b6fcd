#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmff {

enum class Modality { text = 0, audio = 1, video = 2 };

inline constexpr std::array<Modality, 3> kModalities{Modality::text, Modality::audio,
                                                     Modality::video};
inline constexpr std::size_t kModalityCount = 3;

constexpr std::size_t index_of(Modality m) { return static_cast<std::size_t>(m); }

std::string_view to_string(Modality m);
std::string_view short_name(Modality m);  // "t", "a", "v"
Modality parse_modality(std::string_view name);

// Row-major dense matrix of plain values.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    bool empty() const { return rows == 0 || cols == 0; }
};

// One sample's per-frame features for one modality: rows are frames (M),
// columns are feature dimensions (K).
struct FrameSequence {
    std::string sample_id;
    Modality modality = Modality::audio;
    Matrix frames;

    std::size_t length() const { return frames.rows; }
    std::size_t dims() const { return frames.cols; }
};

// Throws DataError if M or K is zero or any value is non-finite.
void validate(const FrameSequence& seq);

} // namespace mmff
