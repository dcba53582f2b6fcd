#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "mmff/csv.hpp"
#include "mmff/dataset.hpp"
#include "mmff/error.hpp"

namespace mmff {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
    }
    while (!lines.empty() && lines.back().empty()) {
        lines.pop_back();
    }
    return lines;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ": row " + std::to_string(line);
}

} // namespace

FrameSequence read_sequence_csv(const std::filesystem::path& path, std::string sample_id,
                                Modality modality) {
    if (!std::filesystem::is_regular_file(path)) {
        throw DataError("missing sequence file " + path.string());
    }
    const auto lines = split_lines(read_text_file(path));
    if (lines.empty()) {
        throw DataError(path.string() + ": empty file");
    }
    const auto header = split_csv_line(lines[0]);
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] != "dim_" + std::to_string(k)) {
            throw DataError(where(path, 1) + ": expected header column dim_" + std::to_string(k) +
                            ", found '" + header[k] + "'");
        }
    }
    if (lines.size() < 2) {
        throw DataError(path.string() + ": no frames");
    }
    FrameSequence seq;
    seq.sample_id = std::move(sample_id);
    seq.modality = modality;
    seq.frames = Matrix(lines.size() - 1, header.size());
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_csv_line(lines[r]);
        if (fields.size() != header.size()) {
            throw DataError(where(path, r + 1) + ": " + std::to_string(fields.size()) +
                            " values, expected " + std::to_string(header.size()));
        }
        for (std::size_t k = 0; k < fields.size(); ++k) {
            double v = 0.0;
            if (!parse_double(fields[k], v)) {
                throw DataError(where(path, r + 1) + ": cannot parse '" + fields[k] + "'");
            }
            if (!std::isfinite(v)) {
                throw DataError(where(path, r + 1) + ": non-finite value in column dim_" +
                                std::to_string(k));
            }
            seq.frames(r - 1, k) = v;
        }
    }
    return seq;
}

void write_sequence_csv(const std::filesystem::path& path, const FrameSequence& seq) {
    validate(seq);
    std::string out;
    for (std::size_t k = 0; k < seq.dims(); ++k) {
        out += (k == 0 ? "dim_" : ",dim_") + std::to_string(k);
    }
    out += '\n';
    for (std::size_t r = 0; r < seq.length(); ++r) {
        const auto row = seq.frames.row(r);
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k > 0) {
                out += ',';
            }
            out += format_number(row[k]);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) {
        throw DataError("missing manifest " + path.string());
    }
    const auto lines = split_lines(read_text_file(path));
    if (lines.empty() || lines[0] != kManifestHeader) {
        throw DataError(where(path, 1) + ": expected header '" + std::string(kManifestHeader) + "'");
    }
    std::vector<ManifestRow> rows;
    std::unordered_set<std::string> seen;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_csv_line(lines[r]);
        if (fields.size() != 5) {
            throw DataError(where(path, r + 1) + ": expected 5 fields, found " +
                            std::to_string(fields.size()));
        }
        ManifestRow row;
        row.sample_id = fields[0];
        if (row.sample_id.empty()) {
            throw DataError(where(path, r + 1) + ": empty sample_id");
        }
        if (!seen.insert(row.sample_id).second) {
            throw DataError(where(path, r + 1) + ": duplicate sample_id '" + row.sample_id + "'");
        }
        if (!parse_double(fields[1], row.label) || !std::isfinite(row.label)) {
            throw DataError(where(path, r + 1) + ": invalid label '" + fields[1] + "'");
        }
        if (row.label < kLabelMin || row.label > kLabelMax) {
            throw DataError(where(path, r + 1) + ": label " + fields[1] + " outside [0, 24]");
        }
        for (std::size_t m = 0; m < kModalityCount; ++m) {
            row.paths[m] = fields[2 + m];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows) {
    std::string out(kManifestHeader);
    out += '\n';
    for (const auto& row : rows) {
        out += row.sample_id + ',' + format_number(row.label);
        for (const auto& p : row.paths) {
            out += ',' + p;
        }
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<double> Dataset::labels() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back(s.label);
    }
    return out;
}

std::vector<FrameSequence> Dataset::sequences(Modality m) const {
    std::vector<FrameSequence> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back(s[m]);
    }
    return out;
}

std::size_t Dataset::dims(Modality m) const {
    if (samples.empty()) {
        throw DataError("dataset '" + split + "' has no samples");
    }
    const std::size_t k = samples.front()[m].dims();
    for (const auto& s : samples) {
        if (s[m].dims() != k) {
            throw DataError("sample '" + s.id + "': " + std::string(to_string(m)) + " has " +
                            std::to_string(s[m].dims()) + " dims, expected " + std::to_string(k));
        }
    }
    return k;
}

std::filesystem::path manifest_path(const std::filesystem::path& dir, std::string_view split) {
    return dir / (std::string(split) + ".csv");
}

Dataset load_dataset(const std::filesystem::path& manifest) {
    const auto rows = read_manifest(manifest);
    const auto base = manifest.parent_path();
    Dataset ds;
    ds.split = manifest.stem().string();
    ds.samples.reserve(rows.size());
    for (const auto& row : rows) {
        Sample s;
        s.id = row.sample_id;
        s.label = row.label;
        for (Modality m : kModalities) {
            s[m] = read_sequence_csv(base / row.paths[index_of(m)], row.sample_id, m);
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

Dataset load_split(const std::filesystem::path& dir, std::string_view split) {
    return load_dataset(manifest_path(dir, split));
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
    if (dataset.split.empty()) {
        throw UsageError("save_dataset: dataset has no split name");
    }
    std::vector<ManifestRow> rows;
    rows.reserve(dataset.size());
    for (const auto& s : dataset.samples) {
        ManifestRow row;
        row.sample_id = s.id;
        row.label = s.label;
        for (Modality m : kModalities) {
            const std::string rel =
                dataset.split + "/" + s.id + "_" + std::string(to_string(m)) + ".csv";
            write_sequence_csv(dir / rel, s[m]);
            row.paths[index_of(m)] = rel;
        }
        rows.push_back(std::move(row));
    }
    write_manifest(manifest_path(dir, dataset.split), rows);
}

std::vector<std::size_t> stratified_folds(std::span<const double> labels, std::size_t k) {
    if (k < 2) {
        throw ConfigError("k-fold count must be at least 2");
    }
    if (labels.size() < k) {
        throw ConfigError("k-fold count " + std::to_string(k) + " exceeds sample count " +
                          std::to_string(labels.size()));
    }
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
    std::vector<std::size_t> fold(labels.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        fold[order[rank]] = rank % k;
    }
    return fold;
}

} // namespace mmff
