#include "mmff/checkpoint.hpp"

#include <bit>
#include <limits>

#include "mmff/csv.hpp"
#include "mmff/error.hpp"

namespace mmff {

namespace {

template <typename T>
void put_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
    }
}

class Reader {
public:
    Reader(std::string_view bytes, std::string_view origin) : bytes_(bytes), origin_(origin) {}

    template <typename T>
    T take(const char* what) {
        need(sizeof(T), what);
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return value;
    }

    std::string_view take_bytes(std::size_t n, const char* what) {
        need(n, what);
        auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    bool done() const { return pos_ == bytes_.size(); }
    std::size_t position() const { return pos_; }

private:
    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw CorruptionError(std::string(origin_) + ": truncated while reading " + what +
                                  " at byte " + std::to_string(pos_));
        }
    }

    std::string_view bytes_;
    std::string_view origin_;
    std::size_t pos_ = 0;
};

void append_array(std::string& out, const CheckpointArray& a) {
    if (a.name.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw UsageError("checkpoint array name too long: " + a.name.substr(0, 32) + "...");
    }
    if (a.dims.size() > std::numeric_limits<std::uint8_t>::max()) {
        throw UsageError("checkpoint array '" + a.name + "' has too many dimensions");
    }
    std::uint64_t count = 1;
    for (auto d : a.dims) {
        count *= d;
    }
    if (count != a.values.size()) {
        throw UsageError("checkpoint array '" + a.name + "': dims do not match value count");
    }
    put_le(out, static_cast<std::uint16_t>(a.name.size()));
    out += a.name;
    out.push_back(static_cast<char>(a.frozen ? 1 : 0));
    out.push_back(static_cast<char>(a.dims.size()));
    for (auto d : a.dims) {
        put_le(out, d);
    }
    for (float v : a.values) {
        put_le(out, std::bit_cast<std::uint32_t>(v));
    }
}

} // namespace

const CheckpointArray* Checkpoint::find(std::string_view name) const {
    for (const auto& a : arrays) {
        if (a.name == name) {
            return &a;
        }
    }
    return nullptr;
}

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
    std::string out(kCheckpointMagic);
    put_le(out, kCheckpointVersion);
    put_le(out, static_cast<std::uint32_t>(checkpoint.arrays.size() + 1));
    append_array(out, CheckpointArray{std::string(kStageArrayName), true, {1},
                                      {static_cast<float>(checkpoint.stage)}});
    for (const auto& a : checkpoint.arrays) {
        if (a.name == kStageArrayName) {
            throw UsageError("checkpoint array name '" + a.name + "' is reserved");
        }
        append_array(out, a);
    }
    return out;
}

Checkpoint parse_checkpoint(std::string_view bytes, std::string_view origin) {
    Reader in(bytes, origin);
    if (bytes.size() < kCheckpointMagic.size() ||
        bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
        throw FormatError(std::string(origin) + ": bad magic, not an MMFF checkpoint");
    }
    in.take_bytes(kCheckpointMagic.size(), "magic");
    const auto version = in.take<std::uint32_t>("version");
    if (version != kCheckpointVersion) {
        throw VersionError(std::string(origin) + ": checkpoint version " + std::to_string(version) +
                           ", this build reads version " + std::to_string(kCheckpointVersion));
    }
    const auto count = in.take<std::uint32_t>("array count");
    Checkpoint ck;
    bool have_stage = false;
    for (std::uint32_t i = 0; i < count; ++i) {
        CheckpointArray a;
        const auto name_len = in.take<std::uint16_t>("name length");
        a.name = std::string(in.take_bytes(name_len, "name"));
        const auto frozen = in.take<std::uint8_t>("frozen flag");
        if (frozen > 1) {
            throw CorruptionError(std::string(origin) + ": array '" + a.name +
                                  "' has invalid frozen flag " + std::to_string(frozen));
        }
        a.frozen = frozen == 1;
        const auto rank = in.take<std::uint8_t>("rank");
        std::uint64_t total = 1;
        for (std::uint8_t r = 0; r < rank; ++r) {
            a.dims.push_back(in.take<std::uint64_t>("dims"));
            const std::uint64_t d = a.dims.back();
            if (d != 0 && total > std::numeric_limits<std::uint64_t>::max() / d) {
                throw CorruptionError(std::string(origin) + ": array '" + a.name +
                                      "' has overflowing dims");
            }
            total *= d;
        }
        if (total > (bytes.size() - in.position()) / 4) {
            throw CorruptionError(std::string(origin) + ": truncated payload of array '" + a.name +
                                  "'");
        }
        a.values.resize(total);
        for (auto& v : a.values) {
            v = std::bit_cast<float>(in.take<std::uint32_t>("payload"));
        }
        if (a.name == kStageArrayName) {
            if (a.values.size() != 1) {
                throw CorruptionError(std::string(origin) + ": malformed stage marker");
            }
            ck.stage = static_cast<int>(a.values[0]);
            have_stage = true;
        } else {
            ck.arrays.push_back(std::move(a));
        }
    }
    if (!in.done()) {
        throw CorruptionError(std::string(origin) + ": trailing bytes after array " +
                              std::to_string(count));
    }
    if (!have_stage) {
        throw FormatError(std::string(origin) + ": missing stage marker");
    }
    return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    write_text_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) {
        throw IoError("missing checkpoint " + path.string());
    }
    return parse_checkpoint(read_text_file(path), path.string());
}

void append_store(Checkpoint& checkpoint, const ParamStore& store) {
    for (const auto& e : store.entries()) {
        CheckpointArray a;
        a.name = e.name;
        a.frozen = e.frozen;
        for (auto d : e.var.shape()) {
            a.dims.push_back(static_cast<std::uint64_t>(d));
        }
        const auto values = e.var.value();
        a.values.reserve(values.size());
        for (double v : values) {
            a.values.push_back(static_cast<float>(v));
        }
        checkpoint.arrays.push_back(std::move(a));
    }
}

void restore_store(const Checkpoint& checkpoint, ParamStore& store) {
    for (auto& e : store.entries()) {
        const CheckpointArray* a = checkpoint.find(e.name);
        if (a == nullptr) {
            throw FormatError("checkpoint has no array '" + e.name + "'");
        }
        bool same = a->dims.size() == e.var.shape().size();
        for (std::size_t i = 0; same && i < a->dims.size(); ++i) {
            same = a->dims[i] == e.var.shape()[i];
        }
        if (!same) {
            std::string dims;
            for (auto d : a->dims) {
                dims += (dims.empty() ? "" : "x") + std::to_string(d);
            }
            throw FormatError("checkpoint array '" + e.name + "' has shape [" + dims +
                              "], model expects " + shape_string(e.var.shape()));
        }
        auto values = e.var.mutable_value();
        for (std::size_t i = 0; i < values.size(); ++i) {
            values[i] = static_cast<double>(a->values[i]);
        }
        e.frozen = a->frozen;
    }
}

} // namespace mmff
