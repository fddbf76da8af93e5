#ifndef RBST_TREE_HPP
#define RBST_TREE_HPP

#include <unordered_set>

#include "block_store.hpp"

namespace rbst {

struct Violation {
    Key label = 0;
    std::string what;
};

struct InvariantReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }

    std::string to_string() const {
        std::string s;
        for (const auto& v : violations) s += "block " + std::to_string(v.label) + ": " + v.what + "\n";
        return s;
    }
};

/// Handle over a block store: parameters, priority source, root label and key count.
class Tree {
public:
    Tree(const Params& params, PrioritySource prio)
        : params_(params), prio_(std::move(prio)), store_(params.alpha, params.buffering ? params.rho : 0, prio_.seed()) {}

    Tree(const Params& params, Seed seed) : Tree(params, PrioritySource(seed)) {}

    /// Adopts a loaded store; rho == 0 in the header selects unbuffered mode.
    static Tree from_store(BlockStore store, std::optional<PrioritySource> prio = std::nullopt) {
        Params p = store.rho() == 0 ? Params::unbuffered(store.alpha()) : Params::with_rho(store.alpha(), store.rho());
        Tree t(p, prio.value_or(PrioritySource(store.seed())));
        t.store_ = std::move(store);
        return t;
    }

    const Params& params() const { return params_; }
    const PrioritySource& prio() const { return prio_; }
    BlockStore& store() { return store_; }
    const BlockStore& store() const { return store_; }
    std::uint64_t size() const { return store_.n(); }
    bool empty() const { return !store_.root(); }
    std::optional<Key> root() const { return store_.root(); }
    StoreImage image() const { return store_.image(); }

    Priority priority(Key k) const { return prio_(k); }
    Routing routing(const BlockNode& b) const { return routing_of(b, prio_); }

    /// Smallest stored key >= q.
    std::optional<Key> successor(Key q) {
        std::optional<Key> best;
        std::optional<Key> label = store_.root();
        while (label) {
            Pinned b(store_, *label);
            for (Key k : b->keys)
                if (k >= q && (!best || k < *best)) best = k;
            if (best && *best == q) return best;
            Routing r = routing(*b);
            const auto& slot = b->slots[r.slot_of(q)];
            label = slot ? std::optional<Key>(slot->label) : std::nullopt;
        }
        return best;
    }

    bool contains(Key k) {
        auto s = successor(k);
        return s && *s == k;
    }

    std::vector<Key> range_report(Key lo, Key hi) {
        if (lo > hi) throw Error(Errc::invalid_range, "lo > hi");
        std::vector<Key> out;
        std::vector<std::pair<Key, Interval>> stack;
        if (store_.root()) stack.emplace_back(*store_.root(), Interval::all());
        while (!stack.empty()) {
            auto [label, iv] = stack.back();
            stack.pop_back();
            Pinned b(store_, label);
            for (Key k : b->keys)
                if (lo <= k && k <= hi) out.push_back(k);
            Routing r = routing(*b);
            for (unsigned i = 0; i < r.separators.size() + 1; ++i) {
                const auto& s = b->slots[i];
                if (!s) continue;
                Interval c = r.slot_interval(i, iv);
                if ((!c.lo || *c.lo < hi) && (!c.hi || *c.hi > lo)) stack.emplace_back(s->label, c);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// |X ∩ [lo, hi]|, using stored child weights for subtrees inside the range.
    std::uint64_t range_count(Key lo, Key hi) {
        if (lo > hi) throw Error(Errc::invalid_range, "lo > hi");
        constexpr Key kMax = std::numeric_limits<Key>::max();
        std::uint64_t count = 0;
        std::vector<std::pair<Key, Interval>> stack;
        if (store_.root()) stack.emplace_back(*store_.root(), Interval::all());
        while (!stack.empty()) {
            auto [label, iv] = stack.back();
            stack.pop_back();
            Pinned b(store_, label);
            for (Key k : b->keys)
                if (lo <= k && k <= hi) ++count;
            Routing r = routing(*b);
            for (unsigned i = 0; i < r.separators.size() + 1; ++i) {
                const auto& s = b->slots[i];
                if (!s) continue;
                Interval c = r.slot_interval(i, iv);
                if (!((!c.lo || *c.lo < hi) && (!c.hi || *c.hi > lo))) continue;
                bool lo_ok = c.lo ? *c.lo + 1 >= lo || *c.lo == kMax : lo == 0;
                bool hi_ok = c.hi ? *c.hi <= hi || *c.hi - 1 <= hi : hi == kMax;
                if (lo_ok && hi_ok) count += s->weight;
                else stack.emplace_back(s->label, c);
            }
        }
        return count;
    }

    /// k-th smallest key, 1-based.
    Key select_kth(std::uint64_t k) {
        if (k < 1 || k > size()) throw Error(Errc::invalid_rank, "rank " + std::to_string(k) + " out of range");
        std::uint64_t t = k;
        std::vector<Key> extra;  // non-active ancestor keys lying inside the current interval
        Key label = *store_.root();
        Interval iv = Interval::all();
        for (;;) {
            Pinned b(store_, label);
            std::vector<Key> pending(extra);
            pending.insert(pending.end(), b->keys.begin(), b->keys.end());
            std::sort(pending.begin(), pending.end());
            Routing r = routing(*b);
            bool descended = false;
            for (unsigned i = 0; i < r.separators.size() + 1; ++i) {
                Interval c = r.slot_interval(i, iv);
                std::vector<Key> inside;
                for (Key p : pending)
                    if (c.contains(p)) inside.push_back(p);
                const auto& s = b->slots[i];
                std::uint64_t cnt = inside.size() + (s ? s->weight : 0);
                if (t <= cnt) {
                    if (!s) return inside[t - 1];
                    extra = std::move(inside);
                    label = s->label;
                    iv = c;
                    descended = true;
                    break;
                }
                t -= cnt;
                if (i < r.separators.size()) {
                    if (t == 1) return r.separators[i];
                    --t;
                }
            }
            if (!descended) throw Error(Errc::corruption, "rank walk fell off block " + std::to_string(label));
        }
    }

    InvariantReport check_invariants();

private:
    Params params_;
    PrioritySource prio_;
    BlockStore store_;
};

inline InvariantReport Tree::check_invariants() {
    InvariantReport rep;
    auto fail = [&](Key l, std::string w) { rep.violations.push_back({l, std::move(w)}); };
    if (!store_.root()) {
        if (store_.n() != 0) fail(0, "empty tree with non-zero key count");
        if (store_.size() != 0) fail(0, "empty tree with stored blocks");
        return rep;
    }

    struct Frame {
        Key label;
        Interval iv;
        std::uint32_t depth;
        std::optional<Key> parent;
        std::uint64_t expected_weight;
        bool post = false;
    };
    // Post-order walk computing true subtree weights and minimum priorities.
    struct Summary {
        std::uint64_t weight = 0;
        Priority min_prio{};
    };
    std::unordered_map<Key, Summary> done;
    std::unordered_set<Key> all_keys;
    std::unordered_set<Key> visited;
    std::vector<Frame> stack{{*store_.root(), Interval::all(), 0, std::nullopt, store_.n()}};

    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        if (!store_.contains(f.label)) {
            fail(f.label, "dangling child reference");
            done[f.label] = {f.expected_weight, Priority{}};
            continue;
        }
        Pinned b(store_, f.label);
        Routing r = routing(*b);
        if (!f.post) {
            if (!visited.insert(f.label).second) {
                fail(f.label, "block reachable twice");
                continue;
            }
            f.post = true;
            stack.push_back(f);
            for (unsigned i = 0; i <= params_.alpha; ++i) {
                const auto& s = b->slots[i];
                if (!s) continue;
                if (i >= r.separators.size() + 1) continue;  // reported in post
                stack.push_back({s->label, r.slot_interval(i, f.iv), f.depth + 1, f.label, s->weight});
            }
            continue;
        }

        const BlockNode& n = *b;
        if (n.keys.empty()) fail(n.label, "empty block");
        for (std::size_t i = 1; i < n.keys.size(); ++i)
            if (n.keys[i - 1] >= n.keys[i]) fail(n.label, "keys not strictly ascending");
        if (n.keys.size() > params_.alpha) fail(n.label, "more than alpha keys");
        if (!n.keys.empty() && min_priority_key(std::span<const Key>(n.keys), prio_) != n.label)
            fail(n.label, "label is not the minimum-priority key");
        if (n.depth != f.depth) fail(n.label, "depth field " + std::to_string(n.depth) + " != " + std::to_string(f.depth));
        if (n.parent != f.parent) fail(n.label, "parent field mismatch");
        for (Key k : n.keys) {
            if (!f.iv.contains(k)) fail(n.label, "key " + std::to_string(k) + " outside interval");
            if (!all_keys.insert(k).second) fail(n.label, "key " + std::to_string(k) + " stored twice");
        }

        Summary sum;
        sum.weight = n.keys.size();
        sum.min_prio = n.keys.empty() ? Priority{} : prio_(n.label);
        Priority top = max_priority(std::span<const Key>(n.keys), prio_);
        for (unsigned i = 0; i <= params_.alpha; ++i) {
            const auto& s = n.slots[i];
            if (!s) continue;
            if (i >= r.separators.size() + 1) {
                fail(n.label, "child slot " + std::to_string(i) + " beyond fan-out");
                continue;
            }
            const Summary& cs = done[s->label];
            if (s->weight == 0) fail(n.label, "child slot with zero weight");
            if (cs.weight != s->weight)
                fail(n.label, "child weight " + std::to_string(s->weight) + " != actual " + std::to_string(cs.weight));
            if (cs.min_prio <= top) fail(n.label, "child " + std::to_string(s->label) + " outranks a block key");
            sum.weight += cs.weight;
        }
        if (n.has_children() && n.keys.size() != params_.alpha) fail(n.label, "internal block not full");
        if (n.fanout != fanout_bound(sum.weight, params_))
            fail(n.label, "fan-out " + std::to_string(n.fanout) + " != bound " +
                              std::to_string(fanout_bound(sum.weight, params_)));
        if (f.parent == std::nullopt && sum.weight != store_.n())
            fail(n.label, "root weight " + std::to_string(sum.weight) + " != n");
        done[n.label] = sum;
    }
    if (visited.size() != store_.size())
        fail(0, "store holds " + std::to_string(store_.size()) + " blocks, " + std::to_string(visited.size()) +
                    " reachable");
    return rep;
}

}  // namespace rbst

#endif  // RBST_TREE_HPP
