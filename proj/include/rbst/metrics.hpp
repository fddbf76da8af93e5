#ifndef RBST_METRICS_HPP
#define RBST_METRICS_HPP

#include <iomanip>
#include <locale>
#include <random>
#include <sstream>

#include "oracle.hpp"
#include "update.hpp"

namespace rbst {

enum class Workload { build_then_query, insert_heavy, mixed };

struct ExperimentConfig {
    std::vector<unsigned> alphas{2};
    std::vector<double> epsilons{0.5};
    double c_rho = 108.0;
    std::vector<std::uint64_t> ns{10000};
    unsigned trials = 30;
    Seed seed_base = 1;
    Workload workload = Workload::build_then_query;
    bool buffering = true;
    unsigned queries = 1000;     // searches per trial
    unsigned updates = 200;      // updates per trial
    bool verify_images = true;   // compare the final image of update runs against a direct build
    bool audit_every_op = false;  // run the invariant checker after every update, not only at the end of a trial

    void validate() const {
        if (trials < 1) throw Error(Errc::config, "trials must be at least 1");
        if (alphas.empty() || ns.empty() || (buffering && epsilons.empty())) throw Error(Errc::config, "empty parameter list");
        for (std::uint64_t n : ns)
            if (n == 0) throw Error(Errc::config, "n must be positive");
    }

    Params params(unsigned alpha, double eps) const {
        return buffering ? Params::make(alpha, eps, c_rho) : Params::unbuffered(alpha);
    }
};

struct BoundReport {
    std::string experiment;
    unsigned alpha = 0;
    double eps = 0;
    std::uint32_t rho = 0;
    std::uint64_t n = 0;
    unsigned trials = 0;
    std::string metric;
    double mean = 0;
    double stddev = 0;
    double ci95 = 0;
    std::optional<double> bound;
    bool upper = true;  // bound is an upper bound on the mean
    bool pass = true;
    double margin() const { return bound ? (upper ? *bound - mean : mean - *bound) : 0.0; }
};

struct Sample {
    double mean = 0, stddev = 0, ci95 = 0;

    static Sample of(const std::vector<double>& xs) {
        Sample s;
        if (xs.empty()) return s;
        for (double x : xs) s.mean += x;
        s.mean /= static_cast<double>(xs.size());
        if (xs.size() > 1) {
            double ss = 0;
            for (double x : xs) ss += (x - s.mean) * (x - s.mean);
            s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        }
        s.ci95 = 1.96 * s.stddev / std::sqrt(static_cast<double>(xs.size()));
        return s;
    }
};

namespace metrics_detail {

inline Seed trial_seed(Seed base, std::uint64_t salt, unsigned trial) {
    return detail::splitmix64(detail::splitmix64(base ^ (salt * 0xA24BAED4963EE407ULL)) + trial);
}

/// n distinct keys drawn from the full 64-bit range, ascending.
inline std::vector<Key> random_keys(std::uint64_t n, std::mt19937_64& rng) {
    std::vector<Key> keys;
    keys.reserve(n);
    while (keys.size() < n) {
        keys.clear();
        for (std::uint64_t i = 0; i < n; ++i) keys.push_back(rng());
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    }
    return keys;
}

/// Uniform over the gaps between stored keys, never a stored key.
inline Key gap_query(const std::vector<Key>& sorted, std::mt19937_64& rng) {
    for (;;) {
        std::size_t g = rng() % (sorted.size() + 1);
        Key lo = g == 0 ? 0 : sorted[g - 1] + 1;
        Key hi = g == sorted.size() ? std::numeric_limits<Key>::max() : sorted[g] - 1;
        if (g > 0 && sorted[g - 1] == std::numeric_limits<Key>::max()) continue;
        if (g < sorted.size() && sorted[g] == 0) continue;
        if (lo > hi) continue;
        Key span = hi - lo;
        return span == std::numeric_limits<Key>::max() ? rng() : lo + rng() % (span + 1);
    }
}

struct PathCount {
    std::uint64_t primary = 0;
    std::uint64_t secondary = 0;
};

/// Blocks on the search path of q, split by whether the block has full fan-out.
inline PathCount search_path(Tree& t, Key q) {
    PathCount c;
    std::optional<Key> label = t.root();
    while (label) {
        Pinned b(t.store(), *label);
        if (b->fanout == t.params().alpha + 1u) ++c.primary;
        else ++c.secondary;
        Routing r = t.routing(*b);
        if (r.is_separator(q)) break;
        const auto& s = b->slots[r.slot_of(q)];
        label = s ? std::optional<Key>(s->label) : std::nullopt;
    }
    return c;
}

inline double log_base(double x, double b) { return std::log(x) / std::log(b); }

inline BoundReport row(const std::string& exp, const Params& p, double eps, std::uint64_t n, unsigned trials,
                       const std::string& metric, const std::vector<double>& xs, std::optional<double> bound,
                       bool upper = true) {
    Sample s = Sample::of(xs);
    BoundReport r{exp, p.alpha, eps, p.rho, n, trials, metric, s.mean, s.stddev, s.ci95, bound, upper, true};
    if (bound) r.pass = upper ? s.mean <= *bound : s.mean >= *bound;
    return r;
}

inline void require_clean(Tree& t, const std::string& exp) {
    auto rep = t.check_invariants();
    if (!rep.ok()) throw Error(Errc::corruption, exp + " left an invalid tree:\n" + rep.to_string());
}

}  // namespace metrics_detail

/// Unsuccessful-search path lengths (primary vs secondary blocks) and range-report reads.
inline std::vector<BoundReport> bench_depth(const ExperimentConfig& cfg) {
    using namespace metrics_detail;
    cfg.validate();
    std::vector<BoundReport> rows;
    std::vector<double> eps_list = cfg.buffering ? cfg.epsilons : std::vector<double>{0.5};
    for (unsigned alpha : cfg.alphas)
        for (double eps : eps_list)
            for (std::uint64_t n : cfg.ns) {
                if (n < alpha) throw Error(Errc::config, "n must be at least alpha");
                Params p = cfg.params(alpha, eps);
                std::vector<double> prim, sec, range_c;
                for (unsigned tr = 0; tr < cfg.trials; ++tr) {
                    std::mt19937_64 rng(trial_seed(cfg.seed_base, n * 1000 + alpha, tr));
                    auto keys = random_keys(n, rng);
                    Tree t = oracle_build_tree(keys, PrioritySource(rng()), p);
                    double ps = 0, ss = 0;
                    for (unsigned q = 0; q < cfg.queries; ++q) {
                        PathCount c = search_path(t, gap_query(keys, rng));
                        ps += static_cast<double>(c.primary);
                        ss += static_cast<double>(c.secondary);
                    }
                    prim.push_back(ps / cfg.queries);
                    sec.push_back(ss / cfg.queries);
                    double rc = 0;
                    const unsigned ranges = std::max(1u, cfg.queries / 10);
                    for (unsigned q = 0; q < ranges; ++q) {
                        Key a = gap_query(keys, rng);
                        std::size_t pos = std::lower_bound(keys.begin(), keys.end(), a) - keys.begin();
                        std::size_t w = rng() % (10u * alpha + 1u);
                        Key b = pos + w < keys.size() ? keys[pos + w] : std::numeric_limits<Key>::max();
                        IoStats before = t.store().stats();
                        auto out = t.range_report(a, b);
                        double reads = static_cast<double>(t.store().stats().reads - before.reads);
                        double scale = (cfg.buffering ? 1.0 / eps : 1.0) + static_cast<double>(out.size()) / alpha +
                                       (alpha > 1 ? std::max(1.0, log_base(static_cast<double>(n), alpha)) : 1.0);
                        rc += reads / scale;
                    }
                    range_c.push_back(rc / ranges);
                    require_clean(t, "bench-depth");
                }
                std::optional<double> bound;
                if (alpha > 1) bound = 5.0 * log_base(static_cast<double>(n), alpha);
                rows.push_back(row("depth", p, eps, n, cfg.trials, "primary_visits", prim, bound));
                rows.push_back(row("depth", p, eps, n, cfg.trials, "secondary_visits", sec, std::nullopt));
                if (cfg.buffering) {
                    std::vector<double> c;
                    for (double s : sec) c.push_back(s * eps);
                    rows.push_back(row("depth", p, eps, n, cfg.trials, "secondary_C", c, std::nullopt));
                }
                rows.push_back(row("depth", p, eps, n, cfg.trials, "range_reads_C", range_c, std::nullopt));
            }
    return rows;
}

/// Non-full blocks, total blocks and load factor of directly built trees.
inline std::vector<BoundReport> bench_size(const ExperimentConfig& cfg) {
    using namespace metrics_detail;
    cfg.validate();
    std::vector<BoundReport> rows;
    std::vector<double> eps_list = cfg.buffering ? cfg.epsilons : std::vector<double>{0.5};
    for (unsigned alpha : cfg.alphas)
        for (double eps : eps_list)
            for (std::uint64_t n : cfg.ns) {
                if (n < alpha) throw Error(Errc::config, "n must be at least alpha");
                Params p = cfg.params(alpha, eps);
                std::vector<double> nonfull, blocks, load;
                for (unsigned tr = 0; tr < cfg.trials; ++tr) {
                    std::mt19937_64 rng(trial_seed(cfg.seed_base, n * 1000 + alpha + 7, tr));
                    auto keys = random_keys(n, rng);
                    Tree t = oracle_build_tree(keys, PrioritySource(rng()), p);
                    std::uint64_t full = 0;
                    for (Key l : t.store().labels()) {
                        Pinned b(t.store(), l);
                        if (b->keys.size() == alpha) ++full;
                    }
                    const double s = static_cast<double>(t.store().size());
                    nonfull.push_back(s - static_cast<double>(full));
                    blocks.push_back(s);
                    load.push_back(static_cast<double>(n) / (alpha * s));
                    require_clean(t, "bench-size");
                }
                std::optional<double> b_nonfull, b_blocks, b_load;
                if (cfg.buffering) {
                    b_nonfull = std::max(eps * static_cast<double>(n) / alpha, 1.0);
                    b_blocks = (1.0 + eps) * static_cast<double>(n) / alpha;
                    if (n >= p.buffer_capacity()) b_load = 1.0 - eps;
                }
                rows.push_back(row("size", p, eps, n, cfg.trials, "nonfull_blocks", nonfull, b_nonfull));
                rows.push_back(row("size", p, eps, n, cfg.trials, "total_blocks", blocks, b_blocks));
                rows.push_back(row("size", p, eps, n, cfg.trials, "load_factor", load, b_load, false));
            }
    return rows;
}

/// Steady-state churn: per-update writes, structural change, receipt audit and pinned-block peak.
inline std::vector<BoundReport> bench_updates(const ExperimentConfig& cfg) {
    using namespace metrics_detail;
    cfg.validate();
    std::vector<BoundReport> rows;
    std::vector<double> eps_list = cfg.buffering ? cfg.epsilons : std::vector<double>{0.5};
    for (unsigned alpha : cfg.alphas)
        for (double eps : eps_list) {
            std::vector<std::pair<std::uint64_t, double>> mean_writes;
            for (std::uint64_t n : cfg.ns) {
                if (n < alpha) throw Error(Errc::config, "n must be at least alpha");
                Params p = cfg.params(alpha, eps);
                std::vector<double> writes, change, reads, wc, violations, peaks, mismatch, ms, mps, dps;
                for (unsigned tr = 0; tr < cfg.trials; ++tr) {
                    std::mt19937_64 rng(trial_seed(cfg.seed_base, n * 1000 + alpha + 13, tr));
                    auto keys = random_keys(n, rng);
                    Tree t = oracle_build_tree(keys, PrioritySource(rng()), p);
                    std::unordered_set<Key> present(keys.begin(), keys.end());
                    t.store().reset_stats();
                    double w = 0, mm = 0, r = 0, bad = 0, m = 0, mp = 0, dp = 0;
                    unsigned ops = 0;
                    auto audit = [&](const UpdateReceipt& rc) {
                        w += static_cast<double>(rc.writes);
                        mm += static_cast<double>(rc.m + rc.m_prime);
                        m += static_cast<double>(rc.m);
                        mp += static_cast<double>(rc.m_prime);
                        dp += static_cast<double>(rc.d_prime);
                        r += static_cast<double>(rc.reads);
                        if (rc.writes > 4 * (rc.m + rc.m_prime) + 4) ++bad;
                        if (rc.reads > 4 * (rc.m_prime + std::uint64_t(rc.d_prime) * rc.m) + 4) ++bad;
                        ++ops;
                        if (cfg.audit_every_op) require_clean(t, "bench-updates");
                    };
                    for (unsigned u = 0; u < cfg.updates; ++u) {
                        bool do_insert = cfg.workload == Workload::insert_heavy || u % 2 == 0 || keys.empty();
                        if (do_insert) {
                            Key k;
                            do k = rng();
                            while (present.count(k));
                            audit(insert(t, k));
                            present.insert(k);
                            keys.push_back(k);
                        } else {
                            std::size_t i = rng() % keys.size();
                            audit(erase(t, keys[i]));
                            present.erase(keys[i]);
                            keys[i] = keys.back();
                            keys.pop_back();
                        }
                    }
                    writes.push_back(w / ops);
                    change.push_back(mm / ops);
                    ms.push_back(m / ops);
                    mps.push_back(mp / ops);
                    dps.push_back(dp / ops);
                    reads.push_back(r / ops);
                    double scale = 1.0 / eps + (alpha > 1 ? log_base(static_cast<double>(n), alpha) / alpha : 1.0);
                    wc.push_back(w / ops / scale);
                    violations.push_back(bad);
                    peaks.push_back(static_cast<double>(t.store().stats().peak_pinned));
                    require_clean(t, "bench-updates");
                    if (cfg.verify_images) mismatch.push_back(t.image() == oracle_build(keys, t.prio(), p) ? 0.0 : 1.0);
                }
                rows.push_back(row("updates", p, eps, n, cfg.trials, "writes", writes, std::nullopt));
                rows.push_back(row("updates", p, eps, n, cfg.trials, "m", ms, std::nullopt));
                rows.push_back(row("updates", p, eps, n, cfg.trials, "m_prime", mps, std::nullopt));
                rows.push_back(row("updates", p, eps, n, cfg.trials, "m_plus_m_prime", change, std::nullopt));
                rows.push_back(row("updates", p, eps, n, cfg.trials, "d_prime", dps, std::nullopt));
                rows.push_back(row("updates", p, eps, n, cfg.trials, "reads", reads, std::nullopt));
                rows.push_back(row("updates", p, eps, n, cfg.trials, "writes_C", wc, std::nullopt));
                rows.push_back(row("updates", p, eps, n, cfg.trials, "audit_violations", violations, 0.0));
                rows.push_back(row("updates", p, eps, n, cfg.trials, "peak_pinned", peaks, std::nullopt));
                if (cfg.verify_images) rows.push_back(row("updates", p, eps, n, cfg.trials, "image_mismatch", mismatch, 0.0));
                mean_writes.emplace_back(n, Sample::of(writes).mean);
            }
            if (mean_writes.size() >= 2) {
                auto by_writes = [](const auto& x, const auto& y) { return x.second < y.second; };
                auto lo = *std::min_element(mean_writes.begin(), mean_writes.end(), by_writes);
                auto hi = *std::max_element(mean_writes.begin(), mean_writes.end(), by_writes);
                Params p = cfg.params(alpha, eps);
                rows.push_back(row("updates", p, eps, hi.first, cfg.trials, "writes_flatness", {hi.second / lo.second}, 1.5));
            }
        }
    return rows;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::fixed << std::setprecision(6) << v;
    return os.str();
}

inline std::string csv_header() { return "experiment,alpha,eps,rho,n,trials,metric,mean,stddev,bound,pass\n"; }

inline std::string to_csv(const std::vector<BoundReport>& rows) {
    std::string out = csv_header();
    for (const auto& r : rows) {
        out += r.experiment + "," + std::to_string(r.alpha) + "," + format_double(r.eps) + "," + std::to_string(r.rho) +
               "," + std::to_string(r.n) + "," + std::to_string(r.trials) + "," + r.metric + "," +
               format_double(r.mean) + "," + format_double(r.stddev) + "," + (r.bound ? format_double(*r.bound) : "") +
               "," + (r.pass ? "1" : "0") + "\n";
    }
    return out;
}

/// Human-readable table with CI and margin columns.
inline std::string to_table(const std::vector<BoundReport>& rows) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::left << std::setw(9) << "exp" << std::setw(7) << "alpha" << std::setw(6) << "eps" << std::setw(9) << "n"
       << std::setw(18) << "metric" << std::setw(24) << "mean +- ci95" << std::setw(14) << "bound" << "pass\n";
    for (const auto& r : rows) {
        std::ostringstream m;
        m.imbue(std::locale::classic());
        m << std::fixed << std::setprecision(3) << r.mean << " +- " << r.ci95;
        os << std::left << std::setw(9) << r.experiment << std::setw(7) << r.alpha << std::setw(6) << r.eps
           << std::setw(9) << r.n << std::setw(18) << r.metric << std::setw(24) << m.str() << std::setw(14)
           << (r.bound ? format_double(*r.bound) : "-") << (r.pass ? "PASS" : "FAIL") << "\n";
    }
    return os.str();
}

}  // namespace rbst

#endif  // RBST_METRICS_HPP
