#ifndef RBST_COMMON_HPP
#define RBST_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace rbst {

using Key = std::uint64_t;
using Seed = std::uint64_t;

enum class Errc {
    not_found,
    invalid_block,
    corruption,
    accounting,
    format,
    invalid_range,
    invalid_rank,
    duplicate_key,
    missing_key,
    invalid_permutation,
    enumeration_limit,
    domain,
    config,
};

inline const char* errc_name(Errc e) {
    switch (e) {
    case Errc::not_found: return "not-found";
    case Errc::invalid_block: return "invalid-block";
    case Errc::corruption: return "corruption";
    case Errc::accounting: return "accounting";
    case Errc::format: return "format";
    case Errc::invalid_range: return "invalid-range";
    case Errc::invalid_rank: return "invalid-rank";
    case Errc::duplicate_key: return "duplicate-key";
    case Errc::missing_key: return "missing-key";
    case Errc::invalid_permutation: return "invalid-permutation";
    case Errc::enumeration_limit: return "enumeration-limit";
    case Errc::domain: return "domain";
    case Errc::config: return "config";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Open key interval (lo, hi); an absent bound is the matching infinity.
struct Interval {
    std::optional<Key> lo;
    std::optional<Key> hi;

    static Interval all() { return {}; }

    bool contains(Key k) const {
        return (!lo || *lo < k) && (!hi || k < *hi);
    }

    /// True iff every key of `*this` is also a key of `outer`.
    bool within(const Interval& outer) const {
        bool lo_ok = !outer.lo || (lo && *lo >= *outer.lo);
        bool hi_ok = !outer.hi || (hi && *hi <= *outer.hi);
        return lo_ok && hi_ok;
    }

    /// Conservative: may report overlap for intervals that share no integer key.
    bool overlaps(const Interval& o) const {
        bool a = !lo || !o.hi || *lo < *o.hi;
        bool b = !o.lo || !hi || *o.lo < *hi;
        return a && b;
    }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Tree parameters: block array size, buffering tuning and the derived fan-out constant.
struct Params {
    std::uint16_t alpha = 1;
    double eps = 0.5;
    double c_rho = 108.0;
    std::uint32_t rho = 0;
    bool buffering = true;

    /// rho = ceil(c_rho * alpha / eps).
    static Params make(unsigned alpha, double eps, double c_rho = 108.0) {
        if (alpha < 1 || alpha > 0xFFFF) throw Error(Errc::config, "alpha must be in [1, 65535]");
        if (!(eps > 0.0 && eps <= 0.5)) throw Error(Errc::config, "eps must lie in (0, 1/2]");
        if (!(c_rho > 0.0)) throw Error(Errc::config, "c_rho must be positive");
        Params p;
        p.alpha = static_cast<std::uint16_t>(alpha);
        p.eps = eps;
        p.c_rho = c_rho;
        long double r = std::ceil(static_cast<long double>(c_rho) * alpha / eps - 1e-9L);
        if (r < 1) r = 1;
        if (r > std::numeric_limits<std::uint32_t>::max()) throw Error(Errc::config, "rho overflows");
        p.rho = static_cast<std::uint32_t>(r);
        return p;
    }

    /// Explicit rho, used by small enumerations and the image loader.
    static Params with_rho(unsigned alpha, std::uint32_t rho, double eps = 0.5) {
        if (alpha < 1 || alpha > 0xFFFF) throw Error(Errc::config, "alpha must be in [1, 65535]");
        if (rho < 1) throw Error(Errc::config, "rho must be >= 1 when buffering");
        if (!(eps > 0.0 && eps <= 0.5)) throw Error(Errc::config, "eps must lie in (0, 1/2]");
        Params p;
        p.alpha = static_cast<std::uint16_t>(alpha);
        p.eps = eps;
        p.c_rho = static_cast<double>(rho) * eps / alpha;
        p.rho = rho;
        return p;
    }

    /// beta = 0: every block is a primary block with fan-out alpha+1.
    static Params unbuffered(unsigned alpha) {
        if (alpha < 1 || alpha > 0xFFFF) throw Error(Errc::config, "alpha must be in [1, 65535]");
        Params p;
        p.alpha = static_cast<std::uint16_t>(alpha);
        p.rho = 0;
        p.buffering = false;
        return p;
    }

    std::uint64_t beta() const { return buffering ? std::uint64_t(alpha + 1) * rho : 0; }
    std::uint64_t buffer_capacity() const { return beta() + alpha; }
};

/// delta(n) = min{alpha+1, max{1, ceil((n - alpha) / rho)}}; alpha+1 for every n > 0 without buffering.
inline unsigned fanout_bound(std::uint64_t n_sub, const Params& p) {
    const unsigned full = p.alpha + 1u;
    if (!p.buffering) return full;
    if (n_sub <= p.alpha) return 1;
    std::uint64_t d = (n_sub - p.alpha + p.rho - 1) / p.rho;
    return d >= full ? full : static_cast<unsigned>(d < 1 ? 1 : d);
}

}  // namespace rbst

#endif  // RBST_COMMON_HPP
