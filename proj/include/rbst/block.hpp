#ifndef RBST_BLOCK_HPP
#define RBST_BLOCK_HPP

#include <algorithm>
#include <cstring>
#include <span>
#include <vector>

#include "common.hpp"
#include "priority.hpp"

namespace rbst {

struct ChildRef {
    Key label = 0;
    std::uint64_t weight = 0;

    friend bool operator==(const ChildRef&, const ChildRef&) = default;
};

/// One external-memory block. `label` is the block's address in the UR region and is
/// not part of the serialized record.
struct BlockNode {
    Key label = 0;
    std::vector<Key> keys;                       // ascending
    std::uint16_t fanout = 1;                    // stored delta
    std::vector<std::optional<ChildRef>> slots;  // alpha+1 entries
    std::optional<Key> parent;
    std::uint32_t depth = 0;

    static BlockNode empty(unsigned alpha) {
        BlockNode b;
        b.slots.resize(alpha + 1u);
        return b;
    }

    std::uint64_t weight() const {
        std::uint64_t w = keys.size();
        for (const auto& s : slots)
            if (s) w += s->weight;
        return w;
    }

    bool has_children() const {
        return std::any_of(slots.begin(), slots.end(), [](const auto& s) { return s.has_value(); });
    }

    friend bool operator==(const BlockNode&, const BlockNode&) = default;
};

inline std::size_t block_record_size(unsigned alpha) {
    return 4 + 2 + 2 + 1 + 8 + 8 * std::size_t(alpha) + 17 * std::size_t(alpha + 1);
}

namespace detail {

inline void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t& pos, int bytes) {
    if (pos + bytes > in.size()) throw Error(Errc::format, "truncated block record");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= std::uint64_t(in[pos + i]) << (8 * i);
    pos += bytes;
    return v;
}

}  // namespace detail

/// Fixed-size little-endian record; unused key and child slots are zero-filled.
inline std::vector<std::uint8_t> serialize_block(const BlockNode& b, unsigned alpha) {
    std::vector<std::uint8_t> out;
    out.reserve(block_record_size(alpha));
    detail::put_le(out, b.depth, 4);
    detail::put_le(out, b.keys.size(), 2);
    detail::put_le(out, b.fanout, 2);
    detail::put_le(out, b.parent ? 1 : 0, 1);
    detail::put_le(out, b.parent.value_or(0), 8);
    for (unsigned i = 0; i < alpha; ++i) detail::put_le(out, i < b.keys.size() ? b.keys[i] : 0, 8);
    for (unsigned i = 0; i <= alpha; ++i) {
        const std::optional<ChildRef>* s = i < b.slots.size() ? &b.slots[i] : nullptr;
        bool present = s && s->has_value();
        detail::put_le(out, present ? 1 : 0, 1);
        detail::put_le(out, present ? (*s)->label : 0, 8);
        detail::put_le(out, present ? (*s)->weight : 0, 8);
    }
    return out;
}

inline BlockNode deserialize_block(std::span<const std::uint8_t> in, unsigned alpha, Key label) {
    if (in.size() < block_record_size(alpha))
        throw Error(Errc::format, "truncated block " + std::to_string(label));
    std::size_t pos = 0;
    BlockNode b;
    b.label = label;
    b.depth = static_cast<std::uint32_t>(detail::get_le(in, pos, 4));
    auto count = static_cast<unsigned>(detail::get_le(in, pos, 2));
    b.fanout = static_cast<std::uint16_t>(detail::get_le(in, pos, 2));
    bool has_parent = detail::get_le(in, pos, 1) != 0;
    Key parent = detail::get_le(in, pos, 8);
    if (has_parent) b.parent = parent;
    if (count > alpha) throw Error(Errc::format, "block " + std::to_string(label) + " key count exceeds alpha");
    b.keys.resize(count);
    for (unsigned i = 0; i < alpha; ++i) {
        Key k = detail::get_le(in, pos, 8);
        if (i < count) b.keys[i] = k;
    }
    b.slots.resize(alpha + 1u);
    for (unsigned i = 0; i <= alpha; ++i) {
        bool present = detail::get_le(in, pos, 1) != 0;
        Key l = detail::get_le(in, pos, 8);
        std::uint64_t w = detail::get_le(in, pos, 8);
        if (present) b.slots[i] = ChildRef{l, w};
    }
    return b;
}

/// Routing view of a block: active separators in key order and per-slot intervals.
struct Routing {
    std::vector<Key> separators;  // ascending
    unsigned fanout = 1;

    /// Slot whose section contains k; k must not be a separator.
    unsigned slot_of(Key k) const {
        return static_cast<unsigned>(std::lower_bound(separators.begin(), separators.end(), k) - separators.begin());
    }

    bool is_separator(Key k) const { return std::binary_search(separators.begin(), separators.end(), k); }

    Interval slot_interval(unsigned i, const Interval& node) const {
        Interval r;
        r.lo = i == 0 ? node.lo : std::optional<Key>(separators[i - 1]);
        r.hi = i < separators.size() ? std::optional<Key>(separators[i]) : node.hi;
        return r;
    }
};

/// The min(delta-1, |keys|) smallest-priority keys of `keys` route searches.
template <typename Prio>
Routing routing_of(std::span<const Key> keys, unsigned fanout, const Prio& prio) {
    Routing r;
    r.fanout = fanout;
    std::size_t count = std::min<std::size_t>(fanout - 1u, keys.size());
    if (count == keys.size()) {
        r.separators.assign(keys.begin(), keys.end());
    } else {
        std::vector<std::pair<Priority, Key>> pk;
        pk.reserve(keys.size());
        for (Key k : keys) pk.emplace_back(prio(k), k);
        std::nth_element(pk.begin(), pk.begin() + count, pk.end());
        for (std::size_t i = 0; i < count; ++i) r.separators.push_back(pk[i].second);
        std::sort(r.separators.begin(), r.separators.end());
    }
    return r;
}

template <typename Prio>
Routing routing_of(const BlockNode& b, const Prio& prio) {
    return routing_of(std::span<const Key>(b.keys), b.fanout, prio);
}

template <typename Prio>
Priority max_priority(std::span<const Key> keys, const Prio& prio) {
    Priority m{};
    for (Key k : keys) m = std::max(m, prio(k));
    return m;
}

template <typename Prio>
Key min_priority_key(std::span<const Key> keys, const Prio& prio) {
    Key best = keys.front();
    Priority bp = prio(best);
    for (Key k : keys.subspan(1)) {
        Priority p = prio(k);
        if (p < bp) { bp = p; best = k; }
    }
    return best;
}

}  // namespace rbst

#endif  // RBST_BLOCK_HPP
