#include <gtest/gtest.h>

#include "rbst/rbst.hpp"

using namespace rbst;

namespace {

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::config;
}

}  // namespace

TEST(Combinatorics, Binomials) {
    EXPECT_EQ(binom(13, 3), 286);
    EXPECT_EQ(binom(6, 3), 20);
    EXPECT_EQ(binom(5, 0), 1);
    EXPECT_EQ(binom(3, 5), 0);
    EXPECT_EQ(binom(60, 30), BigInt("118264581564861424"));
}

TEST(Combinatorics, CompositionCount) {
    for (unsigned n = 0; n <= 8; ++n)
        for (unsigned m = 1; m <= 4; ++m) {
            BigInt count = 0;
            for_each_composition(n, m, [&](const std::vector<unsigned>& x) {
                unsigned sum = 0;
                for (unsigned v : x) sum += v;
                ASSERT_EQ(sum, n);
                ++count;
            });
            EXPECT_EQ(count, binom(n + m - 1, m - 1));
        }
}

TEST(SectionTail, WorkedExample) {
    EXPECT_EQ(section_tail_prob(6, 3, 1), Rational(1, 2));
    auto counts = root_section_counts(6, 3, 1);
    ASSERT_EQ(counts.size(), 4u);
    for (const auto& c : counts) EXPECT_EQ(c, 10);
}

TEST(SectionTail, ZeroThresholdIsCertain) {
    for (unsigned n = 1; n <= 10; ++n)
        for (unsigned a = 1; a <= n; ++a) EXPECT_EQ(section_tail_prob(n, a, 0), Rational(1));
}

TEST(SectionTail, DomainErrors) {
    EXPECT_EQ(code_of([] { section_tail_prob(6, 3, 4); }), Errc::domain);
    EXPECT_EQ(code_of([] { section_tail_prob(2, 3, 0); }), Errc::domain);
    EXPECT_EQ(code_of([] { root_section_counts(65, 2, 1); }), Errc::enumeration_limit);
}

TEST(SectionTail, EqualAcrossSectionsAndMatchesClosedForm) {
    SuiteResult r = section_tail_sweep(12, 4);
    EXPECT_GT(r.cases, 200u);
    EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(SectionDistribution, WorkedExample) {
    SectionCheck c = section_distribution_checks(10, 4, 5);
    EXPECT_EQ(c.exact, Rational(56, 286));
    EXPECT_EQ(c.exact, Rational(28, 143));
    EXPECT_EQ(c.enumerated, c.exact);
    EXPECT_EQ(c.lower, Rational(216, 1331));
    EXPECT_EQ(c.upper, Rational(512, 2197));
    EXPECT_TRUE(c.bracketed());
}

TEST(SectionDistribution, ZeroThreshold) {
    SectionCheck c = section_distribution_checks(7, 3, 0);
    EXPECT_EQ(c.exact, Rational(1));
    EXPECT_EQ(c.lower, Rational(1));
    EXPECT_EQ(c.upper, Rational(1));
}

TEST(SectionDistribution, SweepTwelveThree) {
    for (unsigned t = 1; t <= 12; ++t)
        for (unsigned i = 0; i < 3; ++i) {
            SectionCheck c = section_distribution_checks(12, 3, t, i);
            EXPECT_TRUE(c.bracketed()) << "t=" << t;
            EXPECT_EQ(c.exact, c.enumerated) << "t=" << t << " i=" << i;
        }
}

TEST(SectionDistribution, FullGrid) {
    SuiteResult r = bracketing_sweep(12, 5);
    EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(SectionDistribution, DomainErrors) {
    EXPECT_EQ(code_of([] { section_distribution_checks(5, 1, 1); }), Errc::domain);
    EXPECT_EQ(code_of([] { section_distribution_checks(5, 3, 6); }), Errc::domain);
    EXPECT_EQ(code_of([] { section_distribution_checks(5, 3, 1, 3); }), Errc::domain);
}

TEST(ExactSize, TwoAlphaWithoutBuffering) {
    EXPECT_EQ(exact_expected_size(2, Params::unbuffered(1)).blocks, Rational(2));
    EXPECT_EQ(exact_expected_size(4, Params::unbuffered(2)).blocks, Rational(5, 2));
    EXPECT_EQ(exact_expected_size(6, Params::unbuffered(3)).blocks, Rational(3));
    EXPECT_TRUE(size_examples(3).ok());
}

TEST(ExactSize, ListsAreDeterministic) {
    for (unsigned a = 1; a <= 3; ++a)
        for (unsigned n = 0; n <= 6; ++n) {
            Params p = Params::with_rho(a, 8);
            ASSERT_EQ(fanout_bound(n, p), 1u);
            SizeExpectation e = exact_expected_size(n, p);
            EXPECT_EQ(e.blocks, Rational((n + a - 1) / a));
            EXPECT_EQ(e.nonfull, Rational(n % a ? 1 : 0));
        }
}

TEST(ExactSize, EnumerationLimit) {
    EXPECT_EQ(code_of([] { exact_expected_size(10, Params::unbuffered(2)); }), Errc::enumeration_limit);
}

// rho = 1 lies outside the configurations covered by the non-full bound max{eps n / alpha, 1}; the exact value
// and its excess over that bound at eps = 1/2 are pinned as observed.
TEST(NonfullCensus, SevenKeysRhoOne) {
    Params p = Params::with_rho(3, 1);
    SizeExpectation e = exact_expected_size(7, p);
    EXPECT_EQ(e.blocks, Rational(17, 5));
    EXPECT_EQ(e.nonfull, Rational(68, 35));
    EXPECT_EQ(e.full + e.nonfull, e.blocks);
    Rational bound = std::max(Rational(7, 6), Rational(1));
    EXPECT_GT(e.nonfull, bound);
    EXPECT_LE(e.nonfull, Rational(27 * fanout_bound(7, p)));
}

TEST(NonfullCensus, EightKeysRhoTwo) {
    Params p = Params::with_rho(3, 2);
    NonfullCensus c = buffer_nonfull_census(8, p);
    EXPECT_EQ(c.exact, Rational(12, 7));
    EXPECT_EQ(c.delta, 3u);
    EXPECT_EQ(c.bound, 81u);
    EXPECT_TRUE(c.in_domain);
    EXPECT_LE(c.exact, Rational(c.bound));
}

TEST(NonfullCensus, ListsHoldAtMostOneNonfullBlock) {
    SuiteResult r = list_nonfull(7);
    EXPECT_GT(r.cases, 20u);
    EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(NonfullCensus, MonteCarloLargeN) {
    Params p = Params::make(2, 0.5);
    NonfullCensus c = buffer_nonfull_montecarlo(10000, p, 30, 1);
    EXPECT_EQ(c.delta, 3u);
    EXPECT_EQ(c.bound, 81u);
    EXPECT_FALSE(c.in_domain);
    EXPECT_LE(c.mean, double(c.bound));
    RecordProperty("mean_nonfull", std::to_string(c.mean));
}

TEST(NonfullCensus, MonteCarloInsideDomain) {
    Params p = Params::make(2, 0.5);
    NonfullCensus c = buffer_nonfull_montecarlo(p.buffer_capacity(), p, 30, 1);
    EXPECT_TRUE(c.in_domain);
    EXPECT_LE(c.mean, double(c.bound));
}

TEST(Treap, DegenerationOnRandomSets) {
    SuiteResult r = treap_grid(200, 100, 99);
    EXPECT_EQ(r.cases, 200u);
    EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(Treap, RequiresUnbufferedAlphaOne) {
    Tree t(Params::unbuffered(2), Seed{1});
    Treap tr(PrioritySource(1));
    EXPECT_EQ(code_of([&] { isomorphic(tr, t); }), Errc::config);
}

TEST(OracleBuild, ResetsStatsAndIsClean) {
    std::vector<Key> keys(300);
    std::iota(keys.begin(), keys.end(), Key{1});
    Tree t = oracle_build_tree(keys, PrioritySource(4), Params::with_rho(4, 3));
    EXPECT_EQ(t.store().stats().writes, 0u);
    EXPECT_EQ(t.store().stats().reads, 0u);
    EXPECT_EQ(t.store().aux_size(), 0u);
    EXPECT_TRUE(t.check_invariants().ok());
    ShapeCensus c = shape_census(keys, PrioritySource(4), Params::with_rho(4, 3));
    EXPECT_EQ(c.blocks, t.store().size());
}

TEST(OracleBuild, DuplicateKeysRejected) {
    EXPECT_EQ(code_of([] { oracle_build({1, 2, 2}, PrioritySource(1), Params::unbuffered(2)); }), Errc::duplicate_key);
}
