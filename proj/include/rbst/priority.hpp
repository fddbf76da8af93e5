#ifndef RBST_PRIORITY_HPP
#define RBST_PRIORITY_HPP

#include <algorithm>
#include <compare>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "common.hpp"

namespace rbst {

/// Total order on keys: smaller compares first (it was "inserted earlier").
struct Priority {
    std::uint64_t rank = 0;
    Key key = 0;

    friend auto operator<=>(const Priority&, const Priority&) = default;
    friend bool operator==(const Priority&, const Priority&) = default;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Rank function of image format version 1. Changing it requires a version bump.
inline std::uint64_t hash_rank(Key key, Seed seed) {
    return detail::splitmix64(detail::splitmix64(key ^ detail::splitmix64(seed)) + seed);
}

inline Priority priority_of(Key key, Seed seed) { return {hash_rank(key, seed), key}; }

/// Maps keys to priorities, either through the seeded hash or an explicit rank table.
class PrioritySource {
public:
    PrioritySource() = default;
    explicit PrioritySource(Seed seed) : seed_(seed) {}

    /// `assignment` must be a bijection onto {1..n}.
    static PrioritySource explicit_permutation(const std::unordered_map<Key, std::uint64_t>& assignment) {
        const std::size_t n = assignment.size();
        std::vector<bool> seen(n + 1, false);
        for (const auto& [k, r] : assignment) {
            if (r < 1 || r > n || seen[r])
                throw Error(Errc::invalid_permutation, "rank " + std::to_string(r) + " of key " + std::to_string(k));
            seen[r] = true;
        }
        PrioritySource p;
        p.table_ = std::make_shared<const std::unordered_map<Key, std::uint64_t>>(assignment);
        return p;
    }

    /// Ranks follow the order of `keys_by_rank` (first = smallest priority).
    static PrioritySource from_order(const std::vector<Key>& keys_by_rank) {
        std::unordered_map<Key, std::uint64_t> m;
        m.reserve(keys_by_rank.size());
        for (std::size_t i = 0; i < keys_by_rank.size(); ++i) m.emplace(keys_by_rank[i], i + 1);
        if (m.size() != keys_by_rank.size()) throw Error(Errc::invalid_permutation, "duplicate key in order");
        return explicit_permutation(m);
    }

    Priority operator()(Key k) const {
        if (table_) {
            auto it = table_->find(k);
            if (it == table_->end())
                throw Error(Errc::invalid_permutation, "key " + std::to_string(k) + " has no explicit rank");
            return {it->second, k};
        }
        return priority_of(k, seed_);
    }

    Seed seed() const { return seed_; }
    bool is_explicit() const { return static_cast<bool>(table_); }

private:
    Seed seed_ = 0;
    std::shared_ptr<const std::unordered_map<Key, std::uint64_t>> table_;
};

}  // namespace rbst

#endif  // RBST_PRIORITY_HPP
