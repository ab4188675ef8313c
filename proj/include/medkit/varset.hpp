#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace medkit {

/// Ordered list of variable names used as a set. Order is preserved where it
/// matters (table layout, lexicographic tie-breaking) and ignored for equality
/// via same_members().
using VarSet = std::vector<std::string>;

inline bool contains(const VarSet& set, const std::string& name) {
    return std::find(set.begin(), set.end(), name) != set.end();
}

inline VarSet set_union(const VarSet& a, const VarSet& b) {
    VarSet out = a;
    for (const auto& name : b) {
        if (!contains(out, name)) out.push_back(name);
    }
    return out;
}

inline VarSet set_difference(const VarSet& a, const VarSet& b) {
    VarSet out;
    for (const auto& name : a) {
        if (!contains(b, name)) out.push_back(name);
    }
    return out;
}

inline VarSet set_intersection(const VarSet& a, const VarSet& b) {
    VarSet out;
    for (const auto& name : a) {
        if (contains(b, name)) out.push_back(name);
    }
    return out;
}

inline bool same_members(const VarSet& a, const VarSet& b) {
    return a.size() == b.size() && std::all_of(a.begin(), a.end(), [&](const std::string& n) {
               return contains(b, n);
           });
}

inline bool has_duplicates(const VarSet& set) {
    for (std::size_t i = 0; i < set.size(); ++i) {
        for (std::size_t j = i + 1; j < set.size(); ++j) {
            if (set[i] == set[j]) return true;
        }
    }
    return false;
}

std::string format_set(const VarSet& set);

}  // namespace medkit
