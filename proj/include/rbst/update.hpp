#ifndef RBST_UPDATE_HPP
#define RBST_UPDATE_HPP

#include <queue>
#include <variant>

#include "tree.hpp"

namespace rbst {

enum class OpKind { insert, erase };

struct Op {
    OpKind kind;
    Key key;
};

enum class RebuildCase {
    list_new_block,
    subtree_emptied,
    fanout_change,
    list_update,
    in_array_active,
    in_array_inactive,
};

inline const char* case_name(RebuildCase c) {
    switch (c) {
    case RebuildCase::list_new_block: return "list-new-block";
    case RebuildCase::subtree_emptied: return "subtree-emptied";
    case RebuildCase::fanout_change: return "fanout-change";
    case RebuildCase::list_update: return "list-update";
    case RebuildCase::in_array_active: return "in-array-active";
    case RebuildCase::in_array_inactive: return "in-array-inactive";
    }
    return "unknown";
}

struct SectionPlan {
    Interval iv;
    std::vector<Key> sources;  // old child roots overlapping the section
};

struct RebuildPlan {
    Op op{OpKind::insert, 0};
    std::optional<Key> anchor;  // absent: new block below `anchor_parent`
    std::optional<Key> anchor_parent;
    std::uint32_t anchor_depth = 0;
    RebuildCase tag = RebuildCase::list_new_block;
    std::vector<SectionPlan> sections;  // rebuilt from scratch
    std::optional<Key> carry;           // key pushed into (or pulled from) a surviving section
};

struct UpdateReceipt {
    std::uint64_t m = 0;        // obsolete blocks + rewritten ancestors
    std::uint64_t m_prime = 0;  // staged blocks + rewritten ancestors
    std::uint64_t ancestor_writes = 0;
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
    std::uint32_t d_prime = 0;
    RebuildPlan plan;
};

struct TopResult {
    std::vector<Key> by_priority;
    std::vector<Key> by_key;
    std::vector<std::uint64_t> gaps;  // gaps[i]: unreported keys between by_key[i-1] and by_key[i]
};

namespace detail {

/// Keys y in J with priority above thr, minus a key being deleted, plus a key being inserted.
struct Filter {
    Interval J;
    std::optional<Priority> thr;
    std::optional<Op> op;

    bool accepts_stored(Key y, const Priority& p) const {
        if (!J.contains(y)) return false;
        if (thr && !(p > *thr)) return false;
        return !(op && op->kind == OpKind::erase && op->key == y);
    }

    bool deleted_inside(const Interval& iv) const { return op && op->kind == OpKind::erase && iv.contains(op->key); }
};

/// The k accepted keys of smallest priority among X(src) (plus an inserted key), ascending by priority.
inline std::vector<std::pair<Priority, Key>> top_select(Tree& t, Key src, const Interval& src_iv, std::size_t k,
                                                        const Filter& f) {
    if (k == 0) return {};
    std::priority_queue<std::pair<Priority, Key>> best;  // max-heap
    auto offer = [&](const Priority& p, Key y) {
        if (best.size() < k) best.emplace(p, y);
        else if (p < best.top().first) {
            best.pop();
            best.emplace(p, y);
        }
    };
    if (f.op && f.op->kind == OpKind::insert && f.J.contains(f.op->key)) {
        Priority p = t.priority(f.op->key);
        if (!f.thr || p > *f.thr) offer(p, f.op->key);
    }
    struct Entry {
        Key label;
        Interval iv;
        std::optional<Priority> lb;  // every key below has priority > lb
    };
    std::vector<Entry> stack{{src, src_iv, std::nullopt}};
    while (!stack.empty()) {
        Entry e = stack.back();
        stack.pop_back();
        if (e.lb && best.size() == k && best.top().first < *e.lb) continue;
        Pinned b(t.store(), e.label);
        Priority top{};
        for (Key y : b->keys) {
            Priority p = t.priority(y);
            top = std::max(top, p);
            if (f.accepts_stored(y, p)) offer(p, y);
        }
        if (best.size() == k && best.top().first < top) continue;
        Routing r = t.routing(*b);
        for (int i = static_cast<int>(r.separators.size()); i >= 0; --i) {
            const auto& s = b->slots[i];
            if (!s) continue;
            Interval c = r.slot_interval(static_cast<unsigned>(i), e.iv);
            if (c.overlaps(f.J)) stack.push_back({s->label, c, top});
        }
    }
    std::vector<std::pair<Priority, Key>> out;
    out.reserve(best.size());
    while (!best.empty()) {
        out.push_back(best.top());
        best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

/// Accepted keys of X(src) (plus an inserted key) per target interval, skipping `excl`.
/// Whole child subtrees are counted from stored weights when provably all accepted.
inline std::vector<std::uint64_t> count_buckets(Tree& t, Key src, const Interval& src_iv,
                                                const std::vector<Interval>& targets, const std::vector<Key>& excl,
                                                const std::optional<Priority>& thr, const std::optional<Op>& op) {
    std::vector<std::uint64_t> counts(targets.size(), 0);
    auto target_of = [&](Key y) -> int {
        for (std::size_t i = 0; i < targets.size(); ++i)
            if (targets[i].contains(y)) return static_cast<int>(i);
        return -1;
    };
    auto excluded = [&](Key y) { return std::binary_search(excl.begin(), excl.end(), y); };
    auto excl_inside = [&](const Interval& iv) {
        auto it = iv.lo ? std::upper_bound(excl.begin(), excl.end(), *iv.lo) : excl.begin();
        return it != excl.end() && iv.contains(*it);
    };
    Filter any{Interval::all(), thr, op};

    std::vector<std::pair<Key, Interval>> stack{{src, src_iv}};
    while (!stack.empty()) {
        auto [label, iv] = stack.back();
        stack.pop_back();
        Pinned b(t.store(), label);
        Priority top{};
        for (Key y : b->keys) {
            Priority p = t.priority(y);
            top = std::max(top, p);
            if (!any.accepts_stored(y, p) || excluded(y)) continue;
            int ti = target_of(y);
            if (ti >= 0) ++counts[ti];
        }
        Routing r = t.routing(*b);
        for (unsigned i = 0; i < r.separators.size() + 1; ++i) {
            const auto& s = b->slots[i];
            if (!s) continue;
            Interval c = r.slot_interval(i, iv);
            int whole = -1;
            bool touches = false;
            for (std::size_t ti = 0; ti < targets.size(); ++ti) {
                if (!c.overlaps(targets[ti])) continue;
                touches = true;
                if (c.within(targets[ti])) whole = static_cast<int>(ti);
            }
            if (!touches) continue;
            if (whole >= 0 && !excl_inside(c) && !any.deleted_inside(c) && (!thr || top >= *thr))
                counts[whole] += s->weight;
            else
                stack.emplace_back(s->label, c);
        }
    }
    if (op && op->kind == OpKind::insert && !excluded(op->key)) {
        Priority p = t.priority(op->key);
        int ti = target_of(op->key);
        if (ti >= 0 && (!thr || p > *thr)) ++counts[ti];
    }
    return counts;
}

/// Moves the source root down while all accepted keys of J must lie in a single child.
inline void narrow(Tree& t, Key& src, Interval& src_iv, const Filter& f) {
    for (;;) {
        Pinned b(t.store(), src);
        for (Key y : b->keys)
            if (f.accepts_stored(y, t.priority(y))) return;
        Routing r = t.routing(*b);
        std::optional<std::pair<Key, Interval>> only;
        int hits = 0;
        for (unsigned i = 0; i < r.separators.size() + 1; ++i) {
            const auto& s = b->slots[i];
            if (!s) continue;
            Interval c = r.slot_interval(i, src_iv);
            if (!c.overlaps(f.J)) continue;
            ++hits;
            only = std::make_pair(s->label, c);
        }
        if (hits != 1) return;
        src = only->first;
        src_iv = only->second;
    }
}

}  // namespace detail

namespace detail {

/// Top-down partial rebuild driven by a worklist of frames. Update frames re-derive a block whose
/// subtree gains or loses one key; build frames lay out a section from scratch.
class Updater {
public:
    Updater(Tree& t, Op op) : t_(t), s_(t.store()), prio_(t.prio()), alpha_(t.params().alpha), op_(op) {}

    UpdateReceipt run() {
        const IoStats before = s_.stats();
        bool present = t_.contains(op_.key);
        if (op_.kind == OpKind::insert && present)
            throw Error(Errc::duplicate_key, "key " + std::to_string(op_.key) + " already stored");
        if (op_.kind == OpKind::erase && !present)
            throw Error(Errc::missing_key, "key " + std::to_string(op_.key) + " not stored");
        anchor_ = descend();
        try {
            work_.emplace_back(anchor_);
            while (!work_.empty()) {
                Frame f = std::move(work_.back());
                work_.pop_back();
                std::visit([this](auto& fr) { process(fr); }, f);
            }
        } catch (...) {
            s_.discard_aux();
            throw;
        }
        s_.commit_rebuild(obsolete_, staged_);
        fix_ancestors();
        s_.set_n(op_.kind == OpKind::insert ? s_.n() + 1 : s_.n() - 1);

        const IoStats after = s_.stats();
        UpdateReceipt r;
        r.ancestor_writes = ancestors_;
        r.m = obsolete_.size() + ancestors_;
        r.m_prime = staged_.size() + ancestors_;
        r.reads = after.reads - before.reads;
        r.writes = after.writes - before.writes;
        r.d_prime = touched_ ? max_depth_ - min_depth_ + 1 : 0;
        r.plan = plan_;
        return r;
    }

    RebuildPlan plan_only() {
        UpdateFrame f = descend();
        if (!f.old) return make_plan(f, nullptr, nullptr);
        BlockNode old = load(*f.old);
        if (weight_after(f) == 0) return make_plan(f, &old, nullptr);
        Shape sh = classify(f, old);
        return make_plan(f, &old, &sh);
    }

private:
    struct Link {
        enum class Kind { root, ancestor, aux } kind = Kind::root;
        Key ancestor = 0;
        AuxHandle aux{};
        unsigned slot = 0;
    };

    struct UpdateFrame {
        std::optional<Key> old;
        Interval iv;
        std::optional<Priority> thr;
        std::uint32_t depth = 0;
        std::optional<Key> parent;
        Link link;
        std::uint64_t old_weight = 0;
        Op op;
    };

    struct BuildFrame {
        Key src;
        Interval src_iv;
        Interval iv;
        std::optional<Priority> thr;
        std::uint32_t depth = 0;
        std::optional<Key> parent;
        Link link;
        std::uint64_t weight = 0;
        std::optional<Op> op;
    };

    using Frame = std::variant<UpdateFrame, BuildFrame>;

    enum class Act { reuse, update, build };

    struct Section {
        Interval iv;
        Act act = Act::build;
        std::optional<ChildRef> old_child;
        std::optional<Op> diff;
        std::uint64_t weight = 0;
        bool counted = false;
        std::vector<Key> sources;
    };

    struct Shape {
        std::vector<Key> keys;
        Key label = 0;
        Priority top{};
        unsigned fanout = 1;
        std::vector<Section> sections;
        std::vector<bool> kept;  // old slots carried over by reuse or update
    };

    BlockNode load(Key label) {
        Pinned b(s_, label);
        return *b;
    }

    std::uint64_t weight_after(const UpdateFrame& f) const {
        return f.op.kind == OpKind::insert ? f.old_weight + 1 : f.old_weight - 1;
    }

    void touch(std::uint32_t depth) {
        if (!touched_) min_depth_ = max_depth_ = depth;
        min_depth_ = std::min(min_depth_, depth);
        max_depth_ = std::max(max_depth_, depth);
        touched_ = true;
    }

    void retire(Key label, std::uint32_t depth) {
        obsolete_.push_back(label);
        touch(depth);
    }

    void retire_subtree(Key label) {
        std::vector<Key> stack{label};
        while (!stack.empty()) {
            Key l = stack.back();
            stack.pop_back();
            Pinned b(s_, l);
            retire(l, b->depth);
            for (const auto& c : b->slots)
                if (c) stack.push_back(c->label);
        }
    }

    /// Writes `b` to the auxiliary region and points its parent link at it.
    AuxHandle stage(const BlockNode& b, const Link& link) {
        AuxHandle h = s_.write_aux(b);
        staged_.push_back(h);
        touch(b.depth);
        set_link(link, b.label);
        return h;
    }

    void set_link(const Link& link, std::optional<Key> label) {
        if (link.kind != Link::Kind::aux) {
            anchor_new_ = label;
            return;
        }
        Pinned p(s_, link.aux);
        BlockNode pb = *p;
        if (!pb.slots[link.slot] || !label) throw Error(Errc::corruption, "staged parent lacks a slot for its child");
        pb.slots[link.slot]->label = *label;
        s_.rewrite_aux(link.aux, pb);
    }

    UpdateFrame descend() {
        const Key x = op_.key;
        const bool ins = op_.kind == OpKind::insert;
        UpdateFrame f;
        f.op = op_;
        if (!s_.root()) return f;
        Key label = *s_.root();
        std::uint64_t s = s_.n();
        for (;;) {
            Pinned b(s_, label);
            f.old = label;
            f.old_weight = s;
            std::uint64_t s2 = ins ? s + 1 : s - 1;
            bool same_fanout = fanout_bound(s2, t_.params()) == fanout_bound(s, t_.params());
            Priority top = max_priority(std::span<const Key>(b->keys), prio_);
            bool pass = ins ? b->keys.size() == alpha_ && prio_(x) > top && same_fanout
                            : !std::binary_search(b->keys.begin(), b->keys.end(), x) && same_fanout;
            if (!pass) return f;
            Routing r = t_.routing(*b);
            unsigned i = r.slot_of(x);
            Interval c = r.slot_interval(i, f.iv);
            const auto& slot = b->slots[i];
            f.parent = label;
            f.link = Link{Link::Kind::ancestor, label, {}, i};
            f.thr = top;
            f.iv = c;
            f.depth = b->depth + 1;
            if (!slot) {
                if (!ins) throw Error(Errc::corruption, "search path for a stored key ends early");
                f.old.reset();
                f.old_weight = 0;
                return f;
            }
            s = slot->weight;
            label = slot->label;
        }
    }

    Shape classify(const UpdateFrame& f, const BlockNode& old) {
        const Key x = f.op.key;
        const bool ins = f.op.kind == OpKind::insert;
        const std::uint64_t s2 = weight_after(f);
        auto by_prio = top_select(t_, old.label, f.iv, alpha_, Filter{f.iv, f.thr, f.op});
        Shape sh;
        for (const auto& pk : by_prio) sh.keys.push_back(pk.second);
        std::sort(sh.keys.begin(), sh.keys.end());
        sh.label = by_prio.front().second;
        sh.top = by_prio.back().first;
        sh.fanout = fanout_bound(s2, t_.params());
        sh.kept.assign(alpha_ + 1u, false);
        if (s2 == sh.keys.size()) return sh;

        Routing nr = routing_of(std::span<const Key>(sh.keys), sh.fanout, prio_);
        Routing orr = t_.routing(old);
        auto in_old = [&](Key y) { return std::binary_search(old.keys.begin(), old.keys.end(), y); };
        auto in_new = [&](Key y) { return std::binary_search(sh.keys.begin(), sh.keys.end(), y); };
        std::vector<Interval> targets;
        for (unsigned j = 0; j < nr.separators.size() + 1; ++j) {
            Section sec;
            sec.iv = nr.slot_interval(j, f.iv);
            std::optional<unsigned> match;
            for (unsigned i = 0; i < orr.separators.size() + 1; ++i) {
                Interval oi = orr.slot_interval(i, f.iv);
                if (oi == sec.iv) match = i;
                if (old.slots[i] && oi.overlaps(sec.iv)) sec.sources.push_back(old.slots[i]->label);
            }
            if (match) {
                std::vector<Op> diffs;
                for (Key y : old.keys)
                    if (!in_new(y) && !(!ins && y == x) && sec.iv.contains(y)) diffs.push_back({OpKind::insert, y});
                if (ins && !in_new(x) && sec.iv.contains(x)) diffs.push_back({OpKind::insert, x});
                for (Key y : sh.keys)
                    if (!in_old(y) && !(ins && y == x) && sec.iv.contains(y)) diffs.push_back({OpKind::erase, y});
                if (!ins && !in_old(x) && sec.iv.contains(x)) diffs.push_back({OpKind::erase, x});
                sec.old_child = old.slots[*match];
                std::uint64_t w = sec.old_child ? sec.old_child->weight : 0;
                for (const Op& d : diffs) w = d.kind == OpKind::insert ? w + 1 : w - 1;
                sec.weight = w;
                if (diffs.empty()) sec.act = Act::reuse;
                else if (diffs.size() == 1) {
                    sec.act = Act::update;
                    sec.diff = diffs.front();
                }
                if (sec.act != Act::build && w > 0) sh.kept[*match] = true;
            } else {
                sec.counted = true;
                targets.push_back(sec.iv);
            }
            sh.sections.push_back(std::move(sec));
        }
        if (!targets.empty()) {
            auto counts = count_buckets(t_, old.label, f.iv, targets, sh.keys, f.thr, f.op);
            std::size_t ti = 0;
            for (auto& sec : sh.sections)
                if (sec.counted) sec.weight = counts[ti++];
        }
        std::uint64_t total = sh.keys.size();
        for (const auto& sec : sh.sections) total += sec.weight;
        if (total != s2)
            throw Error(Errc::corruption, "section weights of block " + std::to_string(old.label) + " sum to " +
                                              std::to_string(total) + ", expected " + std::to_string(s2));
        return sh;
    }

    RebuildPlan make_plan(const UpdateFrame& f, const BlockNode* old, const Shape* sh) const {
        RebuildPlan p;
        p.op = f.op;
        p.anchor = f.old;
        p.anchor_parent = f.parent;
        p.anchor_depth = f.depth;
        if (!old) {
            p.tag = RebuildCase::list_new_block;
            return p;
        }
        if (!sh) {
            p.tag = RebuildCase::subtree_emptied;
            return p;
        }
        const Key x = f.op.key;
        if (sh->keys == old->keys) p.tag = RebuildCase::fanout_change;
        else if (old->fanout <= 1 && sh->fanout <= 1) p.tag = RebuildCase::list_update;
        else {
            bool active = f.op.kind == OpKind::insert
                              ? routing_of(std::span<const Key>(sh->keys), sh->fanout, prio_).is_separator(x)
                              : t_.routing(*old).is_separator(x);
            p.tag = active ? RebuildCase::in_array_active : RebuildCase::in_array_inactive;
        }
        for (const auto& sec : sh->sections) {
            if (sec.act == Act::build && sec.weight > 0) p.sections.push_back({sec.iv, sec.sources});
            if (sec.act == Act::update && !p.carry) p.carry = sec.diff->key;
        }
        return p;
    }

    void process(const UpdateFrame& f) {
        const bool is_anchor = first_;
        first_ = false;
        if (!f.old) {
            if (f.op.kind != OpKind::insert) throw Error(Errc::corruption, "delete reached an empty section");
            BlockNode b = BlockNode::empty(alpha_);
            b.label = f.op.key;
            b.keys = {f.op.key};
            b.fanout = static_cast<std::uint16_t>(fanout_bound(1, t_.params()));
            b.parent = f.parent;
            b.depth = f.depth;
            if (is_anchor) plan_ = make_plan(f, nullptr, nullptr);
            stage(b, f.link);
            return;
        }
        BlockNode old = load(*f.old);
        if (weight_after(f) == 0) {
            if (is_anchor) plan_ = make_plan(f, &old, nullptr);
            retire(old.label, old.depth);
            set_link(f.link, std::nullopt);
            return;
        }
        Shape sh = classify(f, old);
        if (is_anchor) plan_ = make_plan(f, &old, &sh);

        BlockNode nb = BlockNode::empty(alpha_);
        nb.label = sh.label;
        nb.keys = sh.keys;
        nb.fanout = static_cast<std::uint16_t>(sh.fanout);
        nb.parent = f.parent;
        nb.depth = f.depth;
        for (std::size_t j = 0; j < sh.sections.size(); ++j) {
            const Section& sec = sh.sections[j];
            if (sec.weight == 0) continue;
            Key l = sec.act == Act::reuse ? sec.old_child->label : 0;
            nb.slots[j] = ChildRef{l, sec.weight};
        }
        retire(old.label, old.depth);
        for (unsigned i = 0; i <= alpha_; ++i)
            if (old.slots[i] && !sh.kept[i]) retire_subtree(old.slots[i]->label);
        AuxHandle h = stage(nb, f.link);

        for (std::size_t j = 0; j < sh.sections.size(); ++j) {
            const Section& sec = sh.sections[j];
            if (sec.weight == 0) continue;
            Link link{Link::Kind::aux, 0, h, static_cast<unsigned>(j)};
            switch (sec.act) {
            case Act::reuse:
                if (nb.label != old.label) {
                    BlockNode c = load(sec.old_child->label);
                    retire(c.label, c.depth);
                    c.parent = nb.label;
                    staged_.push_back(s_.write_aux(c));
                    touch(c.depth);
                }
                break;
            case Act::update: {
                UpdateFrame u;
                if (sec.old_child) u.old = sec.old_child->label;
                u.iv = sec.iv;
                u.thr = sh.top;
                u.depth = f.depth + 1;
                u.parent = nb.label;
                u.link = link;
                u.old_weight = sec.old_child ? sec.old_child->weight : 0;
                u.op = *sec.diff;
                work_.emplace_back(u);
                break;
            }
            case Act::build:
                work_.emplace_back(BuildFrame{old.label, f.iv, sec.iv, sh.top, f.depth + 1, nb.label, link, sec.weight, f.op});
                break;
            }
        }
    }

    void process(const BuildFrame& f) {
        Key src = f.src;
        Interval src_iv = f.src_iv;
        Filter flt{f.iv, f.thr, f.op};
        narrow(t_, src, src_iv, flt);
        auto by_prio = top_select(t_, src, src_iv, alpha_, flt);
        if (by_prio.size() != std::min<std::uint64_t>(alpha_, f.weight))
            throw Error(Errc::corruption, "section of weight " + std::to_string(f.weight) + " yielded " +
                                              std::to_string(by_prio.size()) + " keys");
        BlockNode nb = BlockNode::empty(alpha_);
        for (const auto& pk : by_prio) nb.keys.push_back(pk.second);
        std::sort(nb.keys.begin(), nb.keys.end());
        nb.label = by_prio.front().second;
        nb.fanout = static_cast<std::uint16_t>(fanout_bound(f.weight, t_.params()));
        nb.parent = f.parent;
        nb.depth = f.depth;
        const Priority top = by_prio.back().first;

        std::vector<Interval> secs;
        std::vector<std::uint64_t> weights;
        if (f.weight > nb.keys.size()) {
            Routing r = t_.routing(nb);
            for (unsigned j = 0; j < r.separators.size() + 1; ++j) secs.push_back(r.slot_interval(j, f.iv));
            if (secs.size() == 1) weights = {f.weight - nb.keys.size()};
            else weights = count_buckets(t_, src, src_iv, secs, nb.keys, f.thr, f.op);
            std::uint64_t total = nb.keys.size();
            for (std::size_t j = 0; j < secs.size(); ++j) {
                total += weights[j];
                if (weights[j] > 0) nb.slots[j] = ChildRef{0, weights[j]};
            }
            if (total != f.weight) throw Error(Errc::corruption, "rebuilt section weights disagree");
        }
        AuxHandle h = stage(nb, f.link);
        for (std::size_t j = 0; j < secs.size(); ++j) {
            if (weights[j] == 0) continue;
            Link link{Link::Kind::aux, 0, h, static_cast<unsigned>(j)};
            work_.emplace_back(BuildFrame{src, src_iv, secs[j], top, f.depth + 1, nb.label, link, weights[j], f.op});
        }
    }

    /// In-place weight (and, next to the anchor, label) fix-ups on the unchanged search path.
    void fix_ancestors() {
        const bool ins = op_.kind == OpKind::insert;
        if (anchor_.link.kind == Link::Kind::root) {
            s_.set_root(anchor_new_);
            return;
        }
        std::optional<Key> a = anchor_.link.ancestor;
        bool first = true;
        while (a) {
            BlockNode b = load(*a);
            unsigned i = first ? anchor_.link.slot : t_.routing(b).slot_of(op_.key);
            auto& slot = b.slots[i];
            std::uint64_t w = slot ? slot->weight : 0;
            w = ins ? w + 1 : w - 1;
            if (first) {
                if (anchor_new_) slot = ChildRef{*anchor_new_, w};
                else slot.reset();
            } else {
                if (!slot) throw Error(Errc::corruption, "ancestor " + std::to_string(*a) + " lost its child slot");
                slot->weight = w;
            }
            s_.rewrite(b);
            ++ancestors_;
            touch(b.depth);
            a = b.parent;
            first = false;
        }
    }

    Tree& t_;
    BlockStore& s_;
    const PrioritySource& prio_;
    unsigned alpha_;
    Op op_;
    UpdateFrame anchor_;
    bool first_ = true;
    std::optional<Key> anchor_new_;
    std::vector<Frame> work_;
    std::vector<Key> obsolete_;
    std::vector<AuxHandle> staged_;
    std::uint64_t ancestors_ = 0;
    bool touched_ = false;
    std::uint32_t min_depth_ = 0;
    std::uint32_t max_depth_ = 0;
    RebuildPlan plan_;
};

}  // namespace detail

inline UpdateReceipt insert(Tree& t, Key x) { return detail::Updater(t, {OpKind::insert, x}).run(); }

inline UpdateReceipt erase(Tree& t, Key x) { return detail::Updater(t, {OpKind::erase, x}).run(); }

/// Rebuild plan the update of x would execute; reads are counted, nothing is written.
inline RebuildPlan locate_rebuild(Tree& t, Key x, OpKind kind = OpKind::insert) {
    bool present = t.contains(x);
    if (kind == OpKind::insert && present) throw Error(Errc::duplicate_key, "key " + std::to_string(x) + " already stored");
    if (kind == OpKind::erase && !present) throw Error(Errc::missing_key, "key " + std::to_string(x) + " not stored");
    return detail::Updater(t, {kind, x}).plan_only();
}

/// The k <= alpha smallest-priority keys of X(v) in (lo, hi), with the unreported counts per gap.
inline TopResult top(Tree& t, std::size_t k, Key v, std::optional<Key> lo, std::optional<Key> hi) {
    if (k > t.params().alpha) throw Error(Errc::domain, "k exceeds alpha");
    if (!t.root()) throw Error(Errc::not_found, "label " + std::to_string(v));
    Key label = *t.root();
    Interval iv = Interval::all();
    for (;;) {
        Pinned b(t.store(), label);
        if (label == v) break;
        if (std::binary_search(b->keys.begin(), b->keys.end(), v))
            throw Error(Errc::not_found, "key " + std::to_string(v) + " is not a block label");
        Routing r = t.routing(*b);
        unsigned i = r.slot_of(v);
        if (!b->slots[i]) throw Error(Errc::not_found, "label " + std::to_string(v));
        iv = r.slot_interval(i, iv);
        label = b->slots[i]->label;
    }
    Interval J{lo, hi};
    if (!J.within(iv)) throw Error(Errc::invalid_range, "range does not nest inside the block's interval");
    TopResult res;
    for (const auto& pk : detail::top_select(t, v, iv, k, detail::Filter{J, std::nullopt, std::nullopt}))
        res.by_priority.push_back(pk.second);
    res.by_key = res.by_priority;
    std::sort(res.by_key.begin(), res.by_key.end());
    std::vector<Interval> gaps;
    std::optional<Key> prev = lo;
    for (Key y : res.by_key) {
        gaps.push_back({prev, y});
        prev = y;
    }
    gaps.push_back({prev, hi});
    res.gaps = detail::count_buckets(t, v, iv, gaps, res.by_key, std::nullopt, std::nullopt);
    return res;
}

}  // namespace rbst

#endif  // RBST_UPDATE_HPP
