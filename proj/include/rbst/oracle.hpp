#ifndef RBST_ORACLE_HPP
#define RBST_ORACLE_HPP

#include <boost/multiprecision/cpp_int.hpp>
#include <functional>
#include <memory>
#include <numeric>

#include "tree.hpp"

namespace rbst {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

namespace oracle_detail {

/// Direct layout from the recursive definition: a subtree keeps its alpha smallest priorities,
/// the delta-1 smallest of those split the rest, and every nonempty section recurses.
struct Builder {
    const PrioritySource& prio;
    const Params& params;
    std::function<void(BlockNode&&)> emit;

    ChildRef build(std::vector<Key> keys, std::optional<Key> parent, std::uint32_t depth) {
        const std::size_t a = params.alpha;
        std::vector<std::pair<Priority, Key>> pk;
        pk.reserve(keys.size());
        for (Key k : keys) pk.emplace_back(prio(k), k);
        std::size_t take = std::min(a, pk.size());
        std::partial_sort(pk.begin(), pk.begin() + take, pk.end());

        BlockNode b = BlockNode::empty(params.alpha);
        b.label = pk.front().second;
        b.parent = parent;
        b.depth = depth;
        const std::uint64_t w = keys.size();
        b.fanout = static_cast<std::uint16_t>(fanout_bound(w, params));
        for (std::size_t i = 0; i < take; ++i) b.keys.push_back(pk[i].second);
        std::sort(b.keys.begin(), b.keys.end());

        std::size_t nsep = std::min<std::size_t>(b.fanout - 1u, take);
        std::vector<Key> seps;
        for (std::size_t i = 0; i < nsep; ++i) seps.push_back(pk[i].second);
        std::sort(seps.begin(), seps.end());

        std::vector<std::vector<Key>> sections(seps.size() + 1);
        for (Key k : keys) {
            if (std::binary_search(b.keys.begin(), b.keys.end(), k)) continue;
            auto j = std::lower_bound(seps.begin(), seps.end(), k) - seps.begin();
            sections[j].push_back(k);
        }
        keys.clear();
        keys.shrink_to_fit();
        for (std::size_t j = 0; j < sections.size(); ++j) {
            if (sections[j].empty()) continue;
            b.slots[j] = build(std::move(sections[j]), b.label, depth + 1);
        }
        ChildRef ref{b.label, w};
        emit(std::move(b));
        return ref;
    }
};

}  // namespace oracle_detail

/// Tree built by direct layout, bypassing the update algorithm.
inline Tree oracle_build_tree(std::vector<Key> keys, const PrioritySource& prio, const Params& params) {
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) throw Error(Errc::duplicate_key, "duplicate key in set");
    Tree t(params, prio);
    if (!keys.empty()) {
        std::uint64_t n = keys.size();
        oracle_detail::Builder b{prio, params, [&](BlockNode&& node) { t.store().put(node); }};
        ChildRef root = b.build(std::move(keys), std::nullopt, 0);
        t.store().set_root(root.label);
        t.store().set_n(n);
    }
    t.store().reset_stats();
    return t;
}

inline StoreImage oracle_build(std::vector<Key> keys, const PrioritySource& prio, const Params& params) {
    return oracle_build_tree(std::move(keys), prio, params).image();
}

struct ShapeCensus {
    std::uint64_t blocks = 0;
    std::uint64_t full = 0;
    std::uint64_t nonfull() const { return blocks - full; }
};

/// Block counts of the layout, without serializing anything.
inline ShapeCensus shape_census(std::vector<Key> keys, const PrioritySource& prio, const Params& params) {
    ShapeCensus c;
    if (keys.empty()) return c;
    std::sort(keys.begin(), keys.end());
    oracle_detail::Builder b{prio, params, [&](BlockNode&& node) {
                                 ++c.blocks;
                                 if (node.keys.size() == params.alpha) ++c.full;
                             }};
    b.build(std::move(keys), std::nullopt, 0);
    return c;
}

/// Classic treap: binary search tree by key, min-heap by priority, built by rotations.
class Treap {
public:
    struct Node {
        Key key;
        Priority prio;
        std::unique_ptr<Node> left, right;
    };

    explicit Treap(PrioritySource prio) : prio_(std::move(prio)) {}

    void insert(Key k) { insert(root_, k); }
    const Node* root() const { return root_.get(); }

private:
    static void rotate_right(std::unique_ptr<Node>& n) {
        auto l = std::move(n->left);
        n->left = std::move(l->right);
        l->right = std::move(n);
        n = std::move(l);
    }

    static void rotate_left(std::unique_ptr<Node>& n) {
        auto r = std::move(n->right);
        n->right = std::move(r->left);
        r->left = std::move(n);
        n = std::move(r);
    }

    void insert(std::unique_ptr<Node>& n, Key k) {
        if (!n) {
            n = std::make_unique<Node>(Node{k, prio_(k), nullptr, nullptr});
            return;
        }
        if (k == n->key) throw Error(Errc::duplicate_key, "key " + std::to_string(k));
        if (k < n->key) {
            insert(n->left, k);
            if (n->left->prio < n->prio) rotate_right(n);
        } else {
            insert(n->right, k);
            if (n->right->prio < n->prio) rotate_left(n);
        }
    }

    PrioritySource prio_;
    std::unique_ptr<Node> root_;
};

/// Keys inserted in the given order (which must not matter).
inline Treap treap_reference(const std::vector<Key>& insertion_order, const PrioritySource& prio) {
    Treap t(prio);
    for (Key k : insertion_order) t.insert(k);
    return t;
}

/// Node-for-node comparison of a treap with an alpha = 1 unbuffered tree (slot 0 left, slot 1 right).
inline bool isomorphic(const Treap& treap, Tree& tree) {
    if (tree.params().alpha != 1 || tree.params().buffering) throw Error(Errc::config, "needs alpha = 1 without buffering");
    std::vector<std::pair<const Treap::Node*, std::optional<Key>>> stack{{treap.root(), tree.root()}};
    while (!stack.empty()) {
        auto [node, label] = stack.back();
        stack.pop_back();
        if (!node || !label) {
            if (node || label) return false;
            continue;
        }
        Pinned b(tree.store(), *label);
        if (b->keys.size() != 1 || b->keys[0] != node->key) return false;
        auto child = [&](unsigned i) { return b->slots[i] ? std::optional<Key>(b->slots[i]->label) : std::nullopt; };
        stack.emplace_back(node->left.get(), child(0));
        stack.emplace_back(node->right.get(), child(1));
    }
    return true;
}

// Exact combinatorics.

inline BigInt binom(std::int64_t n, std::int64_t k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    BigInt r = 1;
    for (std::int64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

inline Rational ratio(const BigInt& a, const BigInt& b) { return Rational(a, b); }

inline Rational rpow(const Rational& x, unsigned e) {
    Rational r = 1;
    for (unsigned i = 0; i < e; ++i) r *= x;
    return r;
}

/// Calls f on every composition of `total` into `parts` non-negative integers.
inline void for_each_composition(unsigned total, unsigned parts, const std::function<void(const std::vector<unsigned>&)>& f) {
    if (parts == 0) return;
    std::vector<unsigned> c(parts, 0);
    std::function<void(unsigned, unsigned)> rec = [&](unsigned i, unsigned left) {
        if (i + 1 == parts) {
            c[i] = left;
            f(c);
            return;
        }
        for (unsigned v = 0; v <= left; ++v) {
            c[i] = v;
            rec(i + 1, left - v);
        }
    };
    rec(0, total);
}

inline constexpr unsigned kEnumerationLimit = 9;
inline constexpr unsigned kCompositionLimit = 64;

/// Pr[X_k >= t] for the keys between consecutive root keys: C(n-t, alpha) / C(n, alpha).
inline Rational section_tail_prob(unsigned n, unsigned alpha, unsigned t) {
    if (alpha < 1 || n < alpha) throw Error(Errc::domain, "need 1 <= alpha <= n");
    if (t > n - alpha) throw Error(Errc::domain, "t must lie in [0, n - alpha]");
    return ratio(binom(n - t, alpha), binom(n, alpha));
}

/// Per-section counts of root key sets with X_k >= t, over all C(n, alpha) choices of root keys.
inline std::vector<BigInt> root_section_counts(unsigned n, unsigned alpha, unsigned t) {
    if (n > kCompositionLimit) throw Error(Errc::enumeration_limit, "n too large for subset enumeration");
    if (alpha < 1 || n < alpha) throw Error(Errc::domain, "need 1 <= alpha <= n");
    std::vector<BigInt> counts(alpha + 1, 0);
    std::vector<unsigned> pick(alpha);
    std::iota(pick.begin(), pick.end(), 1u);
    for (;;) {
        unsigned prev = 0;
        for (unsigned k = 0; k <= alpha; ++k) {
            unsigned next = k < alpha ? pick[k] : n + 1;
            if (next - prev - 1 >= t) ++counts[k];
            prev = next;
        }
        int i = static_cast<int>(alpha) - 1;
        while (i >= 0 && pick[i] == n - alpha + 1 + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (unsigned j = i + 1; j < alpha; ++j) pick[j] = pick[j - 1] + 1;
    }
    return counts;
}

struct SectionCheck {
    Rational exact;
    Rational lower;
    Rational upper;
    Rational enumerated;
    bool bracketed() const { return lower <= exact && exact <= upper; }
};

/// X_1 + ... + X_m = n uniformly over compositions: exact Pr[X_i >= t] and its two closed-form bounds.
inline SectionCheck section_distribution_checks(unsigned n, unsigned m, unsigned t, unsigned section = 0) {
    if (m < 2) throw Error(Errc::domain, "m must be at least 2");
    if (t > n) throw Error(Errc::domain, "t must lie in [0, n]");
    if (section >= m) throw Error(Errc::domain, "section index out of range");
    SectionCheck c;
    c.exact = ratio(binom(n - t + m - 1, m - 1), binom(n + m - 1, m - 1));
    c.lower = rpow(Rational(1) - Rational(t, n + 1), m - 1);
    c.upper = rpow(Rational(1) - Rational(t, n + m - 1), m - 1);
    if (n <= kCompositionLimit && binom(n + m - 1, m - 1) <= 5'000'000) {
        BigInt hit = 0, total = 0;
        for_each_composition(n, m, [&](const std::vector<unsigned>& x) {
            ++total;
            if (x[section] >= t) ++hit;
        });
        c.enumerated = ratio(hit, total);
    } else {
        throw Error(Errc::enumeration_limit, "composition count too large");
    }
    return c;
}

struct SizeExpectation {
    Rational blocks;   // E[S_n]
    Rational full;     // E[F_n]
    Rational nonfull;  // E[E_n]
};

/// Averages over all n! priority orders of the keys 1..n.
inline SizeExpectation exact_expected_size(unsigned n, const Params& params) {
    if (n > kEnumerationLimit) throw Error(Errc::enumeration_limit, "n = " + std::to_string(n) + " exceeds 9");
    std::vector<Key> keys(n);
    std::iota(keys.begin(), keys.end(), Key{1});
    std::vector<Key> order = keys;
    BigInt s = 0, f = 0, perms = 0;
    do {
        ShapeCensus c = shape_census(keys, PrioritySource::from_order(order), params);
        s += c.blocks;
        f += c.full;
        ++perms;
    } while (std::next_permutation(order.begin(), order.end()));
    if (n == 0) perms = 1;
    return {ratio(s, perms), ratio(f, perms), ratio(s - f, perms)};
}

struct NonfullCensus {
    Rational exact;           // exact mode
    double mean = 0;          // Monte Carlo mode
    double stddev = 0;
    double ci95 = 0;
    unsigned trials = 0;
    unsigned delta = 1;       // fan-out bound of the whole set
    std::uint64_t bound = 0;  // 27 * delta
    bool in_domain = true;    // n <= alpha + beta
    bool exact_mode = true;
};

/// Expected number of non-full blocks, by full enumeration (n <= 9).
inline NonfullCensus buffer_nonfull_census(unsigned n, const Params& params) {
    NonfullCensus c;
    c.exact = exact_expected_size(n, params).nonfull;
    c.delta = fanout_bound(n, params);
    c.bound = 27ull * c.delta;
    c.in_domain = n <= params.buffer_capacity();
    return c;
}

/// Monte Carlo estimate of the same statistic: keys 1..n under seeded priorities.
inline NonfullCensus buffer_nonfull_montecarlo(std::uint64_t n, const Params& params, unsigned trials, Seed seed_base) {
    NonfullCensus c;
    c.exact_mode = false;
    c.trials = trials;
    c.delta = fanout_bound(n, params);
    c.bound = 27ull * c.delta;
    c.in_domain = n <= params.buffer_capacity();
    std::vector<Key> keys(n);
    std::iota(keys.begin(), keys.end(), Key{1});
    std::vector<double> xs;
    for (unsigned i = 0; i < trials; ++i)
        xs.push_back(static_cast<double>(shape_census(keys, PrioritySource(seed_base + i), params).nonfull()));
    double sum = std::accumulate(xs.begin(), xs.end(), 0.0);
    c.mean = sum / trials;
    double ss = 0;
    for (double x : xs) ss += (x - c.mean) * (x - c.mean);
    c.stddev = trials > 1 ? std::sqrt(ss / (trials - 1)) : 0.0;
    c.ci95 = 1.96 * c.stddev / std::sqrt(static_cast<double>(trials));
    return c;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace rbst

#endif  // RBST_ORACLE_HPP
