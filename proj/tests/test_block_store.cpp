#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "rbst/rbst.hpp"

using namespace rbst;

namespace {

BlockNode leaf(unsigned alpha, std::vector<Key> keys) {
    BlockNode b = BlockNode::empty(alpha);
    b.keys = std::move(keys);
    if (!b.keys.empty()) b.label = b.keys.front();
    return b;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("rbst_test_" + name)).string();
}

std::vector<Key> iota_keys(std::size_t n) {
    std::vector<Key> k(n);
    std::iota(k.begin(), k.end(), Key{1});
    return k;
}

}  // namespace

TEST(BlockStore, ReadsRootAfterSmallBuild) {
    Tree t = oracle_build_tree({1, 2, 3}, PrioritySource(5), Params::unbuffered(3));
    ASSERT_TRUE(t.root());
    Pinned b(t.store(), *t.root());
    EXPECT_EQ(b->keys, (std::vector<Key>{1, 2, 3}));
    EXPECT_FALSE(b->has_children());
}

TEST(BlockStore, UnknownLabelIsNotFound) {
    BlockStore s(3, 0, 1);
    try {
        s.read(Key{17});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::not_found);
    }
    EXPECT_THROW(s.read(AuxHandle{9}), Error);
}

TEST(BlockStore, EveryReadCounts) {
    BlockStore s(2, 0, 1);
    s.put(leaf(2, {4, 9}));
    s.reset_stats();
    { Pinned a(s, 4); }
    { Pinned b(s, 4); }
    EXPECT_EQ(s.stats().reads, 2u);
    EXPECT_EQ(s.stats().writes, 0u);
}

TEST(BlockStore, AuxRoundTripCostsOneWrite) {
    BlockStore s(3, 0, 1);
    auto before = s.stats().writes;
    AuxHandle h = s.write_aux(leaf(3, {5}));
    EXPECT_EQ(s.stats().writes - before, 1u);
    Pinned p(s, h);
    EXPECT_EQ(p->keys, std::vector<Key>{5});
}

TEST(BlockStore, RejectsInvalidBlocks) {
    BlockStore s(2, 0, 1);
    auto code = [&](const BlockNode& b) {
        try {
            s.write_aux(b);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::config;
    };
    BlockNode over = leaf(2, {1, 2, 3});
    EXPECT_EQ(code(over), Errc::invalid_block);
    BlockNode unsorted = leaf(2, {5, 3});
    EXPECT_EQ(code(unsorted), Errc::invalid_block);
    BlockNode wrong_slots = leaf(2, {1});
    wrong_slots.slots.resize(5);
    EXPECT_EQ(code(wrong_slots), Errc::invalid_block);
    BlockNode bad_label = leaf(2, {1, 2});
    bad_label.label = 7;
    EXPECT_EQ(code(bad_label), Errc::invalid_block);
    EXPECT_EQ(s.stats().writes, 0u);
}

TEST(BlockStore, CommitReplacingRoot) {
    BlockStore s(3, 0, 1);
    s.put(leaf(3, {2}));
    s.set_root(2);
    s.set_n(1);
    s.reset_stats();
    AuxHandle h = s.write_aux(leaf(3, {1, 2}));
    auto w = s.stats().writes;
    std::vector<Key> obsolete{2};
    std::vector<AuxHandle> staged{h};
    s.commit_rebuild(obsolete, staged);
    EXPECT_EQ(s.size(), 1u);
    EXPECT_EQ(s.aux_size(), 0u);
    EXPECT_EQ(s.stats().frees, 1u);
    EXPECT_EQ(s.stats().writes - w, 1u);
}

TEST(BlockStore, CommitPureGrowthFreesNothing) {
    BlockStore s(3, 0, 1);
    s.put(leaf(3, {1, 2, 3}));
    s.reset_stats();
    AuxHandle h = s.write_aux(leaf(3, {9}));
    std::vector<AuxHandle> staged{h};
    s.commit_rebuild({}, staged);
    EXPECT_EQ(s.stats().frees, 0u);
    EXPECT_EQ(s.size(), 2u);
}

TEST(BlockStore, CommitCollisionIsCorruption) {
    BlockStore s(3, 0, 1);
    s.put(leaf(3, {4}));
    AuxHandle h = s.write_aux(leaf(3, {4, 5}));
    std::vector<AuxHandle> staged{h};
    try {
        s.commit_rebuild({}, staged);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::corruption);
    }
}

TEST(BlockStore, CommitUnknownObsoleteLeavesStoreIntact) {
    BlockStore s(3, 0, 1);
    s.put(leaf(3, {4}));
    AuxHandle h = s.write_aux(leaf(3, {6}));
    std::vector<Key> obsolete{99};
    std::vector<AuxHandle> staged{h};
    EXPECT_THROW(s.commit_rebuild(obsolete, staged), Error);
    EXPECT_EQ(s.size(), 1u);
    EXPECT_EQ(s.aux_size(), 1u);
}

TEST(BlockStore, PinAccounting) {
    BlockStore s(2, 0, 1);
    s.put(leaf(2, {3}));
    s.read(Key{3});
    EXPECT_EQ(s.stats().cur_pinned, 1u);
    s.release(Key{3});
    EXPECT_EQ(s.stats().cur_pinned, 0u);
    EXPECT_EQ(s.stats().peak_pinned, 1u);
    try {
        s.release(Key{3});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::accounting);
    }
}

TEST(BlockStore, StatsLifecycle) {
    BlockStore s(2, 0, 1);
    EXPECT_EQ(s.stats(), IoStats{});
    s.put(leaf(2, {1}));
    { Pinned p(s, 1); }
    IoStats a = s.stats();
    s.put(leaf(2, {5}));
    { Pinned p(s, 5); }
    IoStats b = s.stats();
    EXPECT_GE(b.reads, a.reads);
    EXPECT_GE(b.writes, a.writes);
    EXPECT_GE(b.allocs, a.allocs);
    EXPECT_GE(b.frees, a.frees);
    EXPECT_GE(b.peak_pinned, a.peak_pinned);
    s.reset_stats();
    EXPECT_EQ(s.stats().reads, 0u);
    EXPECT_EQ(s.stats().writes, 0u);
}

TEST(BlockStore, SerializationLayoutIsFixedSize) {
    for (unsigned alpha : {1u, 3u, 16u}) {
        BlockNode b = leaf(alpha, {7});
        b.depth = 3;
        b.parent = 2;
        b.fanout = static_cast<std::uint16_t>(alpha + 1);
        b.slots[0] = ChildRef{1, 1};
        auto bytes = serialize_block(b, alpha);
        EXPECT_EQ(bytes.size(), 17 + 8 * alpha + 17 * (alpha + 1));
        EXPECT_EQ(bytes[0], 3);   // depth, little-endian
        EXPECT_EQ(bytes[4], 1);   // key count
        EXPECT_EQ(bytes[8], 1);   // parent present
        EXPECT_EQ(bytes[9], 2);   // parent label
        EXPECT_EQ(bytes[17], 7);  // first key
        BlockNode back = deserialize_block(bytes, alpha, 7);
        EXPECT_EQ(back, b);
    }
}

TEST(BlockStore, ImageFileRoundTrip) {
    std::mt19937_64 rng(11);
    std::vector<Key> keys;
    while (keys.size() < 100) keys.push_back(rng() % 100000);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    Tree t = oracle_build_tree(keys, PrioritySource(3), Params::with_rho(3, 4));
    std::string path = temp_path("roundtrip.rbst");
    t.store().save_image(path);
    StoreImage loaded = StoreImage::load(path);
    EXPECT_EQ(loaded, t.image());
    Tree u = Tree::from_store(BlockStore::load_image(path));
    EXPECT_TRUE(u.check_invariants().ok());
    EXPECT_EQ(u.range_report(0, ~Key{0}), t.range_report(0, ~Key{0}));
    std::filesystem::remove(path);
}

TEST(BlockStore, EqualKeySetsGiveEqualImages) {
    auto keys = iota_keys(60);
    Params p = Params::with_rho(2, 2);
    StoreImage a = oracle_build(keys, PrioritySource(8), p);
    std::reverse(keys.begin(), keys.end());
    Tree t(p, PrioritySource(8));
    for (Key k : keys) insert(t, k);
    EXPECT_EQ(a, t.image());
    EXPECT_EQ(a.to_bytes(), t.image().to_bytes());
}

TEST(BlockStore, FlippedMagicIsFormatError) {
    auto bytes = oracle_build(iota_keys(10), PrioritySource(1), Params::unbuffered(2)).to_bytes();
    bytes[0] ^= 0xFF;
    try {
        StoreImage::from_bytes(bytes);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::format);
    }
}

TEST(BlockStore, FormatErrors) {
    auto good = oracle_build(iota_keys(20), PrioritySource(1), Params::unbuffered(2)).to_bytes();
    auto expect_format = [](const std::vector<std::uint8_t>& b, const std::string& needle) {
        try {
            StoreImage::from_bytes(b);
            ADD_FAILURE() << "accepted corrupt image, wanted " << needle;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::format);
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    auto version = good;
    version[4] = 9;
    expect_format(version, "version");
    auto truncated = good;
    truncated.resize(truncated.size() - 5);
    expect_format(truncated, "truncated");
    auto trailing = good;
    trailing.push_back(0);
    expect_format(trailing, "trailing");

    StoreImage img = StoreImage::from_bytes(good);
    Key victim = 0;
    for (auto& [label, rec] : img.blocks) {
        BlockNode b = deserialize_block(rec, img.alpha, label);
        for (auto& s : b.slots)
            if (s) {
                s->label = 999999;
                rec = serialize_block(b, img.alpha);
                victim = label;
                break;
            }
        if (victim) break;
    }
    ASSERT_NE(victim, 0u);
    expect_format(img.to_bytes(), "999999");
}

TEST(BlockStore, EmptyImageLoads) {
    Tree t(Params::with_rho(2, 3), PrioritySource(4));
    std::string path = temp_path("empty.rbst");
    t.store().save_image(path);
    BlockStore s = BlockStore::load_image(path);
    EXPECT_EQ(s.size(), 0u);
    EXPECT_EQ(s.n(), 0u);
    EXPECT_FALSE(s.root());
    EXPECT_EQ(s.rho(), 3u);
    std::filesystem::remove(path);
}

TEST(BlockStore, MissingFileIsNotFound) {
    try {
        StoreImage::load(temp_path("does_not_exist.rbst"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::not_found);
    }
}

TEST(BlockStore, FreedLabelsLeaveNoTrace) {
    Params p = Params::with_rho(2, 2);
    Tree t(p, PrioritySource(21));
    auto keys = iota_keys(40);
    for (Key k : keys) insert(t, k);
    for (Key k = 1; k <= 40; k += 3) erase(t, k);
    std::vector<Key> rest;
    for (Key k : keys)
        if (k % 3 != 1) rest.push_back(k);
    EXPECT_EQ(t.image(), oracle_build(rest, t.prio(), p));
    EXPECT_EQ(t.store().aux_size(), 0u);
    EXPECT_EQ(t.store().stats().cur_pinned, 0u);
}
