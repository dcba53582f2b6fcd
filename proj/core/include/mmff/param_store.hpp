#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mmff/tensor.hpp"

namespace mmff {

// Named trainable parameters in insertion order. Entries hold Var handles,
// so layers that captured a Var observe in-place updates made through the
// store (optimizer steps, checkpoint restores).
class ParamStore {
public:
    struct Entry {
        std::string name;
        Var var;
        bool frozen = false;
    };

    ParamStore() = default;
    ParamStore(const ParamStore&) = delete;
    ParamStore& operator=(const ParamStore&) = delete;
    ParamStore(ParamStore&&) noexcept = default;
    ParamStore& operator=(ParamStore&&) noexcept = default;

    // Throws UsageError on a duplicate name.
    Var add(std::string name, Shape shape, std::vector<double> values);

    bool contains(std::string_view name) const;
    const Var& get(std::string_view name) const;

    bool frozen(std::string_view name) const;
    void set_frozen(std::string_view name, bool frozen);
    void freeze_all();
    bool all_frozen() const;

    void zero_grad();

    std::size_t size() const { return entries_.size(); }
    std::size_t parameter_count() const;
    std::span<const Entry> entries() const { return entries_; }
    std::span<Entry> entries() { return entries_; }

private:
    std::size_t index_of(std::string_view name) const;

    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

} // namespace mmff
