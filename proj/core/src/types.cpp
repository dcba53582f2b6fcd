#include "mmff/types.hpp"

#include <cmath>

#include "mmff/error.hpp"

namespace mmff {

std::string_view to_string(Modality m) {
    switch (m) {
    case Modality::text: return "text";
    case Modality::audio: return "audio";
    case Modality::video: return "video";
    }
    throw UsageError("unknown modality");
}

std::string_view short_name(Modality m) {
    switch (m) {
    case Modality::text: return "t";
    case Modality::audio: return "a";
    case Modality::video: return "v";
    }
    throw UsageError("unknown modality");
}

Modality parse_modality(std::string_view name) {
    for (Modality m : kModalities) {
        if (name == to_string(m) || name == short_name(m)) {
            return m;
        }
    }
    throw UsageError("unknown modality '" + std::string(name) + "' (expected text|audio|video)");
}

void validate(const FrameSequence& seq) {
    if (seq.frames.rows == 0 || seq.frames.cols == 0) {
        throw DataError("sequence '" + seq.sample_id + "' (" + std::string(to_string(seq.modality)) +
                        ") is empty");
    }
    if (seq.frames.data.size() != seq.frames.rows * seq.frames.cols) {
        throw DataError("sequence '" + seq.sample_id + "' has inconsistent storage");
    }
    for (std::size_t r = 0; r < seq.frames.rows; ++r) {
        for (double v : seq.frames.row(r)) {
            if (!std::isfinite(v)) {
                throw DataError("sequence '" + seq.sample_id + "' has a non-finite value in frame " +
                                std::to_string(r));
            }
        }
    }
}

} // namespace mmff
