#pragma once

// Binary container for named arrays.
//
//   "MMFF" | version u32 | count u32 |
//   count x ( name_len u16 | name | frozen u8 | rank u8 | dims u64[rank] | f32[prod dims] )
//
// All integers and floats are little-endian. The training stage is stored
// as an ordinary rank-1 array named "__stage__".

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmff/param_store.hpp"

namespace mmff {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "MMFF";
inline constexpr std::string_view kStageArrayName = "__stage__";

struct CheckpointArray {
    std::string name;
    bool frozen = false;
    std::vector<std::uint64_t> dims;
    std::vector<float> values;
};

struct Checkpoint {
    int stage = -1;  // last completed training stage, -1 when untrained
    std::vector<CheckpointArray> arrays;

    const CheckpointArray* find(std::string_view name) const;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
// `origin` names the source in error messages.
Checkpoint parse_checkpoint(std::string_view bytes, std::string_view origin = "checkpoint");

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Appends every parameter of `store`, values rounded to f32.
void append_store(Checkpoint& checkpoint, const ParamStore& store);
// Copies values and frozen flags into `store`. Every parameter must be
// present with the same shape; throws FormatError otherwise.
void restore_store(const Checkpoint& checkpoint, ParamStore& store);

} // namespace mmff
