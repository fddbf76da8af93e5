#ifndef RBST_VERIFY_HPP
#define RBST_VERIFY_HPP

#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "oracle.hpp"
#include "update.hpp"

namespace rbst {

struct SuiteResult {
    std::string name;
    std::uint64_t cases = 0;
    std::uint64_t failures = 0;
    std::string first_failure;

    bool ok() const { return failures == 0 && cases > 0; }

    void fail(const std::string& why) {
        if (failures++ == 0) first_failure = why;
    }
};

struct UrGridConfig {
    unsigned cases = 240;
    std::vector<unsigned> alphas{1, 2, 3, 4};
    std::vector<std::uint32_t> rhos{1, 2, 4};  // 0 selects unbuffered mode
    unsigned max_n = 64;
    Seed seed = 1;
};

namespace verify_detail {

inline Params params_for(unsigned alpha, std::uint32_t rho) {
    return rho == 0 ? Params::unbuffered(alpha) : Params::with_rho(alpha, rho);
}

inline std::string describe(unsigned alpha, std::uint32_t rho, std::size_t n, Seed s) {
    std::ostringstream os;
    os << "alpha=" << alpha << " rho=" << rho << " n=" << n << " seed=" << s;
    return os.str();
}

}  // namespace verify_detail

/// Random insertion orders and insert/delete churn; the final image must equal a direct build of the net set,
/// and the invariant checker must be clean after every operation.
inline SuiteResult ur_grid(const UrGridConfig& cfg) {
    using namespace verify_detail;
    SuiteResult res{"unique-representation", 0, 0, {}};
    std::mt19937_64 rng(cfg.seed);
    for (unsigned c = 0; c < cfg.cases; ++c) {
        unsigned alpha = cfg.alphas[c % cfg.alphas.size()];
        std::uint32_t rho = cfg.rhos[(c / cfg.alphas.size()) % cfg.rhos.size()];
        Params p = params_for(alpha, rho);
        Seed s = rng();
        std::size_t n = rng() % (cfg.max_n + 1);
        Key universe = 3 * cfg.max_n + 3;
        std::vector<Key> pool(universe);
        std::iota(pool.begin(), pool.end(), Key{1});
        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<Key> target(pool.begin(), pool.begin() + n);
        std::vector<Key> extra(pool.begin() + n, pool.begin() + std::min<std::size_t>(pool.size(), n + n / 2 + 2));
        Tree t(p, PrioritySource(s));
        std::set<Key> live;
        std::string where = describe(alpha, rho, n, s);
        ++res.cases;
        try {
            auto check = [&](const char* op, Key k) {
                auto rep = t.check_invariants();
                if (!rep.ok()) throw Error(Errc::corruption, std::string("after ") + op + " " + std::to_string(k) + ": " + rep.to_string());
                if (t.size() != live.size()) throw Error(Errc::corruption, "size mismatch");
            };
            // Interleave the target keys with short-lived extras, then delete the extras.
            std::vector<Op> ops;
            for (Key k : target) ops.push_back({OpKind::insert, k});
            for (Key k : extra) ops.push_back({OpKind::insert, k});
            std::shuffle(ops.begin(), ops.end(), rng);
            for (const Op& op : ops) {
                insert(t, op.key);
                live.insert(op.key);
                check("insert", op.key);
                if (rng() % 4 == 0 && !live.empty()) {
                    auto it = live.begin();
                    std::advance(it, rng() % live.size());
                    Key k = *it;
                    erase(t, k);
                    live.erase(k);
                    check("erase", k);
                    insert(t, k);
                    live.insert(k);
                    check("insert", k);
                }
            }
            std::shuffle(extra.begin(), extra.end(), rng);
            for (Key k : extra) {
                erase(t, k);
                live.erase(k);
                check("erase", k);
            }
            if (t.image() != oracle_build(target, t.prio(), p)) {
                res.fail(where + ": image differs from direct build");
                continue;
            }
            StoreImage before = t.image();
            Key fresh = universe + 1 + rng() % 1000;
            insert(t, fresh);
            erase(t, fresh);
            if (t.image() != before) res.fail(where + ": insert+erase of " + std::to_string(fresh) + " not byte-exact");
        } catch (const std::exception& e) {
            res.fail(where + ": " + e.what());
        }
    }
    return res;
}

/// alpha = 1 without buffering is node-for-node the rotation-built treap.
inline SuiteResult treap_grid(unsigned cases, unsigned max_n, Seed seed) {
    SuiteResult res{"treap-degeneration", 0, 0, {}};
    std::mt19937_64 rng(seed);
    Params p = Params::unbuffered(1);
    for (unsigned c = 0; c < cases; ++c) {
        std::size_t n = 1 + rng() % max_n;
        std::set<Key> ks;
        while (ks.size() < n) ks.insert(rng() % (10 * max_n) + 1);
        std::vector<Key> keys(ks.begin(), ks.end());
        std::shuffle(keys.begin(), keys.end(), rng);
        PrioritySource prio(rng());
        ++res.cases;
        Treap treap = treap_reference(keys, prio);
        Tree t(p, prio);
        for (Key k : keys) insert(t, k);
        if (!isomorphic(treap, t)) res.fail("n=" + std::to_string(n) + ": shape differs from treap");
        else if (!t.check_invariants().ok()) res.fail("n=" + std::to_string(n) + ": invariant violation");
    }
    return res;
}

/// E[S] at n = 2 alpha without buffering equals 1 + (alpha+1)/2.
inline SuiteResult size_examples(unsigned max_alpha = 3) {
    SuiteResult res{"expected-size", 0, 0, {}};
    for (unsigned a = 1; a <= max_alpha; ++a) {
        ++res.cases;
        Rational got = exact_expected_size(2 * a, Params::unbuffered(a)).blocks;
        Rational want = Rational(1) + Rational(a + 1, 2);
        if (got != want) {
            std::ostringstream os;
            os << "alpha=" << a << ": E[S]=" << got << " expected " << want;
            res.fail(os.str());
        }
    }
    return res;
}

/// Closed-form section tail vs subset enumeration, equal in every section.
inline SuiteResult section_tail_sweep(unsigned max_n = 12, unsigned max_alpha = 4) {
    SuiteResult res{"section-tail", 0, 0, {}};
    for (unsigned n = 1; n <= max_n; ++n)
        for (unsigned a = 1; a <= std::min(max_alpha, n); ++a)
            for (unsigned t = 0; t <= n - a; ++t) {
                ++res.cases;
                Rational closed = section_tail_prob(n, a, t);
                auto counts = root_section_counts(n, a, t);
                BigInt total = binom(n, a);
                for (unsigned k = 0; k <= a; ++k)
                    if (ratio(counts[k], total) != closed) {
                        std::ostringstream os;
                        os << "n=" << n << " alpha=" << a << " t=" << t << " section " << k << ": " << counts[k] << "/" << total
                           << " vs " << closed;
                        res.fail(os.str());
                        break;
                    }
            }
    return res;
}

/// Exact composition tail vs enumeration and its two closed-form bounds, every section.
inline SuiteResult bracketing_sweep(unsigned max_n = 12, unsigned max_m = 5) {
    SuiteResult res{"section-bracketing", 0, 0, {}};
    for (unsigned n = 1; n <= max_n; ++n)
        for (unsigned m = 2; m <= max_m; ++m)
            for (unsigned t = 0; t <= n; ++t)
                for (unsigned i = 0; i < m; ++i) {
                    ++res.cases;
                    SectionCheck c = section_distribution_checks(n, m, t, i);
                    if (c.exact != c.enumerated || !c.bracketed()) {
                        std::ostringstream os;
                        os << "n=" << n << " m=" << m << " t=" << t << " i=" << i << ": exact " << c.exact << " enumerated "
                           << c.enumerated << " bounds [" << c.lower << ", " << c.upper << "]";
                        res.fail(os.str());
                    }
                }
    return res;
}

/// Lists (fan-out bound 1) hold at most one non-full block in every permutation.
inline SuiteResult list_nonfull(unsigned max_n = 7) {
    SuiteResult res{"list-nonfull", 0, 0, {}};
    for (unsigned a = 1; a <= 3; ++a)
        for (std::uint32_t rho : {1u, 2u, 4u}) {
            Params p = Params::with_rho(a, rho);
            for (unsigned n = 1; n <= std::min<unsigned>(max_n, a + rho); ++n) {
                if (fanout_bound(n, p) != 1) continue;
                ++res.cases;
                std::vector<Key> keys(n);
                std::iota(keys.begin(), keys.end(), Key{1});
                std::vector<Key> order = keys;
                do {
                    auto c = shape_census(keys, PrioritySource::from_order(order), p);
                    if (c.nonfull() > 1) {
                        res.fail("alpha=" + std::to_string(a) + " rho=" + std::to_string(rho) + " n=" + std::to_string(n));
                        break;
                    }
                } while (std::next_permutation(order.begin(), order.end()));
            }
        }
    return res;
}

inline std::string format_suites(const std::vector<SuiteResult>& suites) {
    std::ostringstream os;
    os << std::left << std::setw(24) << "suite" << std::setw(10) << "cases" << std::setw(10) << "failures" << "result\n";
    for (const auto& s : suites) {
        os << std::left << std::setw(24) << s.name << std::setw(10) << s.cases << std::setw(10) << s.failures
           << (s.ok() ? "PASS" : "FAIL") << "\n";
        if (!s.first_failure.empty()) os << "  first failure: " << s.first_failure << "\n";
    }
    return os.str();
}

}  // namespace rbst

#endif  // RBST_VERIFY_HPP
