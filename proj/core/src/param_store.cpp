#include "mmff/param_store.hpp"

#include <algorithm>

#include "mmff/error.hpp"

namespace mmff {

Var ParamStore::add(std::string name, Shape shape, std::vector<double> values) {
    if (index_.contains(name)) {
        throw UsageError("ParamStore: duplicate parameter name '" + name + "'");
    }
    Var var = Var::parameter(std::move(shape), std::move(values));
    index_.emplace(name, entries_.size());
    entries_.push_back(Entry{std::move(name), var, false});
    return var;
}

std::size_t ParamStore::index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) {
        throw UsageError("ParamStore: no parameter named '" + std::string(name) + "'");
    }
    return it->second;
}

bool ParamStore::contains(std::string_view name) const {
    return index_.contains(std::string(name));
}

const Var& ParamStore::get(std::string_view name) const { return entries_[index_of(name)].var; }

bool ParamStore::frozen(std::string_view name) const { return entries_[index_of(name)].frozen; }

void ParamStore::set_frozen(std::string_view name, bool frozen) {
    entries_[index_of(name)].frozen = frozen;
}

void ParamStore::freeze_all() {
    for (auto& entry : entries_) {
        entry.frozen = true;
    }
}

bool ParamStore::all_frozen() const {
    return std::all_of(entries_.begin(), entries_.end(), [](const Entry& e) { return e.frozen; });
}

void ParamStore::zero_grad() {
    for (auto& entry : entries_) {
        entry.var.zero_grad();
    }
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& entry : entries_) {
        n += entry.var.size();
    }
    return n;
}

} // namespace mmff
