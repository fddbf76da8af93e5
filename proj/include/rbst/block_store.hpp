#ifndef RBST_BLOCK_STORE_HPP
#define RBST_BLOCK_STORE_HPP

#include <fstream>
#include <iterator>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "block.hpp"

namespace rbst {

struct IoStats {
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
    std::uint64_t allocs = 0;
    std::uint64_t frees = 0;
    std::uint64_t peak_pinned = 0;
    std::uint64_t cur_pinned = 0;

    friend bool operator==(const IoStats&, const IoStats&) = default;
};

struct AuxHandle {
    std::uint64_t id = 0;
    friend bool operator==(const AuxHandle&, const AuxHandle&) = default;
};

inline constexpr char kImageMagic[4] = {'R', 'B', 'S', 'T'};
inline constexpr std::uint16_t kImageVersion = 1;

/// Observer view of the UR region: header plus label -> serialized block.
struct StoreImage {
    std::uint16_t alpha = 1;
    std::uint32_t rho = 0;
    Seed seed = 0;
    std::uint64_t n = 0;
    std::optional<Key> root;
    std::map<Key, std::vector<std::uint8_t>> blocks;

    friend bool operator==(const StoreImage&, const StoreImage&) = default;

    std::vector<std::uint8_t> to_bytes() const {
        std::vector<std::uint8_t> out(kImageMagic, kImageMagic + 4);
        detail::put_le(out, kImageVersion, 2);
        detail::put_le(out, alpha, 2);
        detail::put_le(out, rho, 4);
        detail::put_le(out, seed, 8);
        detail::put_le(out, n, 8);
        detail::put_le(out, root ? 1 : 0, 1);
        detail::put_le(out, root.value_or(0), 8);
        detail::put_le(out, blocks.size(), 8);
        for (const auto& [label, rec] : blocks) {
            detail::put_le(out, label, 8);
            out.insert(out.end(), rec.begin(), rec.end());
        }
        return out;
    }

    static StoreImage from_bytes(std::span<const std::uint8_t> in) {
        if (in.size() < 4 || !std::equal(kImageMagic, kImageMagic + 4, in.begin()))
            throw Error(Errc::format, "bad magic");
        std::size_t pos = 4;
        if (detail::get_le(in, pos, 2) != kImageVersion) throw Error(Errc::format, "version mismatch");
        StoreImage img;
        img.alpha = static_cast<std::uint16_t>(detail::get_le(in, pos, 2));
        if (img.alpha < 1) throw Error(Errc::format, "alpha must be positive");
        img.rho = static_cast<std::uint32_t>(detail::get_le(in, pos, 4));
        img.seed = detail::get_le(in, pos, 8);
        img.n = detail::get_le(in, pos, 8);
        bool has_root = detail::get_le(in, pos, 1) != 0;
        Key root = detail::get_le(in, pos, 8);
        if (has_root) img.root = root;
        std::uint64_t count = detail::get_le(in, pos, 8);
        const std::size_t rec = block_record_size(img.alpha);
        for (std::uint64_t i = 0; i < count; ++i) {
            Key label = detail::get_le(in, pos, 8);
            if (pos + rec > in.size()) throw Error(Errc::format, "truncated block " + std::to_string(label));
            if (!img.blocks.empty() && img.blocks.rbegin()->first >= label)
                throw Error(Errc::format, "labels not ascending at block " + std::to_string(label));
            img.blocks.emplace(label, std::vector<std::uint8_t>(in.begin() + pos, in.begin() + pos + rec));
            pos += rec;
        }
        if (pos != in.size()) throw Error(Errc::format, "trailing bytes after last block");
        img.validate_structure();
        return img;
    }

    /// Every child reference resolves and the blocks form one tree rooted at `root`.
    void validate_structure() const {
        if (!root) {
            if (!blocks.empty()) throw Error(Errc::format, "blocks present without a root");
            if (n != 0) throw Error(Errc::format, "non-zero key count without a root");
            return;
        }
        if (!blocks.count(*root)) throw Error(Errc::format, "dangling root label " + std::to_string(*root));
        std::unordered_set<Key> seen;
        std::vector<Key> stack{*root};
        std::uint64_t keys = 0;
        while (!stack.empty()) {
            Key l = stack.back();
            stack.pop_back();
            if (!seen.insert(l).second) throw Error(Errc::format, "block " + std::to_string(l) + " reachable twice");
            BlockNode b = deserialize_block(blocks.at(l), alpha, l);
            keys += b.keys.size();
            for (const auto& s : b.slots) {
                if (!s) continue;
                if (!blocks.count(s->label))
                    throw Error(Errc::format, "dangling child label " + std::to_string(s->label) + " in block " +
                                                  std::to_string(l));
                stack.push_back(s->label);
            }
        }
        if (seen.size() != blocks.size()) throw Error(Errc::format, "unreachable blocks in image");
        if (keys != n) throw Error(Errc::format, "key count disagrees with header");
    }

    void save(const std::string& path) const {
        auto bytes = to_bytes();
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(Errc::not_found, "cannot open " + path + " for writing");
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw Error(Errc::format, "short write to " + path);
    }

    static StoreImage load(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw Error(Errc::not_found, "image file " + path + " not found");
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        return from_bytes(bytes);
    }
};

/// Simulated block-addressable external memory with a UR region keyed by block label and an
/// auxiliary scratch region. Every block access is counted; reads pin until released.
class BlockStore {
public:
    BlockStore(unsigned alpha, std::uint32_t rho, Seed seed) : alpha_(alpha), rho_(rho), seed_(seed) {
        if (alpha < 1) throw Error(Errc::config, "alpha must be positive");
    }

    unsigned alpha() const { return alpha_; }
    std::uint32_t rho() const { return rho_; }
    Seed seed() const { return seed_; }
    std::uint64_t n() const { return n_; }
    void set_n(std::uint64_t n) { n_ = n; }
    std::optional<Key> root() const { return root_; }
    void set_root(std::optional<Key> r) { root_ = r; }
    std::size_t size() const { return ur_.size(); }
    std::size_t aux_size() const { return aux_.size(); }
    bool contains(Key label) const { return ur_.count(label) != 0; }

    BlockNode read(Key label) {
        auto it = ur_.find(label);
        if (it == ur_.end()) throw Error(Errc::not_found, "label " + std::to_string(label));
        ++stats_.reads;
        ++pinned_ur_[label];
        pin_one();
        return deserialize_block(it->second, alpha_, label);
    }

    BlockNode read(AuxHandle h) {
        auto it = aux_.find(h.id);
        if (it == aux_.end()) throw Error(Errc::not_found, "aux handle " + std::to_string(h.id));
        ++stats_.reads;
        ++pinned_aux_[h.id];
        pin_one();
        return it->second;
    }

    void release(Key label) { unpin(pinned_ur_, label, "label"); }
    void release(AuxHandle h) { unpin(pinned_aux_, h.id, "aux handle"); }

    AuxHandle write_aux(const BlockNode& b) {
        validate(b);
        AuxHandle h{next_aux_++};
        aux_.emplace(h.id, b);
        ++stats_.writes;
        ++stats_.allocs;
        return h;
    }

    void rewrite_aux(AuxHandle h, const BlockNode& b) {
        validate(b);
        auto it = aux_.find(h.id);
        if (it == aux_.end()) throw Error(Errc::not_found, "aux handle " + std::to_string(h.id));
        it->second = b;
        ++stats_.writes;
    }

    /// Direct write of a new UR block (bulk load).
    void put(const BlockNode& b) {
        validate(b);
        if (!ur_.emplace(b.label, serialize_block(b, alpha_)).second)
            throw Error(Errc::corruption, "label collision on " + std::to_string(b.label));
        ++stats_.writes;
        ++stats_.allocs;
    }

    /// In-place rewrite of an existing UR block.
    void rewrite(const BlockNode& b) {
        validate(b);
        auto it = ur_.find(b.label);
        if (it == ur_.end()) throw Error(Errc::not_found, "label " + std::to_string(b.label));
        it->second = serialize_block(b, alpha_);
        ++stats_.writes;
    }

    /// Frees the obsolete UR blocks and moves the staged auxiliary blocks into the UR region.
    void commit_rebuild(std::span<const Key> obsolete, std::span<const AuxHandle> staged) {
        for (Key l : obsolete)
            if (!ur_.count(l)) throw Error(Errc::not_found, "obsolete label " + std::to_string(l));
        for (AuxHandle h : staged)
            if (!aux_.count(h.id)) throw Error(Errc::not_found, "aux handle " + std::to_string(h.id));
        std::unordered_set<Key> freed;
        for (Key l : obsolete) {
            auto it = ur_.find(l);
            if (it == ur_.end()) throw Error(Errc::corruption, "label " + std::to_string(l) + " freed twice");
            std::fill(it->second.begin(), it->second.end(), std::uint8_t{0});
            ur_.erase(it);
            freed.insert(l);
            ++stats_.frees;
        }
        for (AuxHandle h : staged) {
            auto it = aux_.find(h.id);
            const BlockNode& b = it->second;
            if (!ur_.emplace(b.label, serialize_block(b, alpha_)).second)
                throw Error(Errc::corruption, "staged block collides with live label " + std::to_string(b.label));
            ++stats_.writes;
            aux_.erase(it);
        }
    }

    void discard_aux() { aux_.clear(); }

    IoStats stats() const { return stats_; }
    void reset_stats() {
        auto cur = stats_.cur_pinned;
        stats_ = IoStats{};
        stats_.cur_pinned = cur;
        stats_.peak_pinned = cur;
    }

    StoreImage image() const {
        StoreImage img;
        img.alpha = static_cast<std::uint16_t>(alpha_);
        img.rho = rho_;
        img.seed = seed_;
        img.n = n_;
        img.root = root_;
        for (const auto& [l, rec] : ur_) img.blocks.emplace(l, rec);
        return img;
    }

    static BlockStore from_image(const StoreImage& img) {
        img.validate_structure();
        BlockStore s(img.alpha, img.rho, img.seed);
        s.n_ = img.n;
        s.root_ = img.root;
        for (const auto& [l, rec] : img.blocks) s.ur_.emplace(l, rec);
        return s;
    }

    void save_image(const std::string& path) const { image().save(path); }
    static BlockStore load_image(const std::string& path) { return from_image(StoreImage::load(path)); }

    /// Labels currently in the UR region, unordered.
    std::vector<Key> labels() const {
        std::vector<Key> out;
        out.reserve(ur_.size());
        for (const auto& kv : ur_) out.push_back(kv.first);
        return out;
    }

private:
    void validate(const BlockNode& b) const {
        if (b.keys.size() > alpha_)
            throw Error(Errc::invalid_block, "block " + std::to_string(b.label) + " holds more than alpha keys");
        for (std::size_t i = 1; i < b.keys.size(); ++i)
            if (b.keys[i - 1] >= b.keys[i])
                throw Error(Errc::invalid_block, "block " + std::to_string(b.label) + " keys not strictly ascending");
        if (b.slots.size() != alpha_ + 1u)
            throw Error(Errc::invalid_block, "block " + std::to_string(b.label) + " needs alpha+1 child slots");
        if (!b.keys.empty() && !std::binary_search(b.keys.begin(), b.keys.end(), b.label))
            throw Error(Errc::invalid_block, "label " + std::to_string(b.label) + " is not a key of its block");
    }

    void pin_one() {
        ++stats_.cur_pinned;
        stats_.peak_pinned = std::max(stats_.peak_pinned, stats_.cur_pinned);
    }

    template <typename Id>
    void unpin(std::unordered_map<Id, std::uint32_t>& pins, Id id, const char* what) {
        auto it = pins.find(id);
        if (it == pins.end() || it->second == 0)
            throw Error(Errc::accounting, std::string("release of unpinned ") + what + " " + std::to_string(id));
        if (--it->second == 0) pins.erase(it);
        --stats_.cur_pinned;
    }

    unsigned alpha_;
    std::uint32_t rho_;
    Seed seed_;
    std::uint64_t n_ = 0;
    std::optional<Key> root_;
    std::unordered_map<Key, std::vector<std::uint8_t>> ur_;
    std::unordered_map<std::uint64_t, BlockNode> aux_;
    std::uint64_t next_aux_ = 1;
    std::unordered_map<Key, std::uint32_t> pinned_ur_;
    std::unordered_map<std::uint64_t, std::uint32_t> pinned_aux_;
    IoStats stats_;
};

/// Scoped pin: reads on construction, releases on destruction.
class Pinned {
public:
    Pinned(BlockStore& s, Key label) : store_(&s), node_(s.read(label)), aux_(false), label_(label) {}
    Pinned(BlockStore& s, AuxHandle h) : store_(&s), node_(s.read(h)), aux_(true), handle_(h) {}
    Pinned(const Pinned&) = delete;
    Pinned& operator=(const Pinned&) = delete;
    ~Pinned() {
        if (aux_) store_->release(handle_);
        else store_->release(label_);
    }

    const BlockNode& operator*() const { return node_; }
    const BlockNode* operator->() const { return &node_; }
    BlockNode& mut() { return node_; }

private:
    BlockStore* store_;
    BlockNode node_;
    bool aux_;
    AuxHandle handle_{};
    Key label_ = 0;
};

}  // namespace rbst

#endif  // RBST_BLOCK_STORE_HPP
