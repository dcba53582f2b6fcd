#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mmff/types.hpp"

namespace mmff {

inline constexpr std::string_view kManifestHeader = "sample_id,label,text_path,audio_path,video_path";
inline constexpr double kLabelMin = 0.0;
inline constexpr double kLabelMax = 24.0;

// Header dim_0..dim_{K-1}, one frame per row, values written with "%.12g".
FrameSequence read_sequence_csv(const std::filesystem::path& path, std::string sample_id,
                                Modality modality);
void write_sequence_csv(const std::filesystem::path& path, const FrameSequence& seq);

struct ManifestRow {
    std::string sample_id;
    double label = 0.0;
    std::array<std::string, kModalityCount> paths;  // relative to the manifest directory
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows);

struct Sample {
    std::string id;
    double label = 0.0;
    std::array<FrameSequence, kModalityCount> sequences;

    const FrameSequence& operator[](Modality m) const { return sequences[index_of(m)]; }
    FrameSequence& operator[](Modality m) { return sequences[index_of(m)]; }
};

// Samples keep manifest row order.
struct Dataset {
    std::string split;
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
    std::vector<double> labels() const;
    std::vector<FrameSequence> sequences(Modality m) const;
    // Frame dimension of modality `m`; throws DataError if samples disagree.
    std::size_t dims(Modality m) const;
};

std::filesystem::path manifest_path(const std::filesystem::path& dir, std::string_view split);

// Reads <dir>/<split>.csv and every sequence it references.
Dataset load_dataset(const std::filesystem::path& manifest);
Dataset load_split(const std::filesystem::path& dir, std::string_view split);

// Writes <dir>/<split>.csv plus <dir>/<split>/<id>_<modality>.csv files.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Fold index per sample: samples ranked by label (ties by position), rank mod k.
std::vector<std::size_t> stratified_folds(std::span<const double> labels, std::size_t k);

} // namespace mmff
