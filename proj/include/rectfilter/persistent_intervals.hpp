#pragma once

// Partially persistent prioritized-interval store over [0, U-1], U = 2^bits.
//
// The structure is a trie of blocks with fan-out 2^k. A block covering a
// value range holds, per subinterval:
//   opt: the best (priority, -id) interval registered for that subinterval,
//   pq:  a shared max-multiset of all intervals registered there (general
//        mode only; priority queues are never read by queries and are shared
//        across versions rather than copied),
//   sub: a child block for the subinterval, present iff some stored interval
//        has an endpoint strictly inside it.
// An update path-copies the at most 2*ceil(bits/k) blocks whose range
// contains one of the interval's endpoints and registers the interval in the
// covered subintervals of those copies (its canonical decomposition). Old
// blocks are never mutated, so every earlier root keeps answering queries.
//
// Laminar mode drops the pq tables: opt cells are maintained by running
// (priority, -id) maximum, and removal is only possible as a stack-ordered
// undo that restores a previous root pointer wholesale.
//
// Blocks live in per-level u32 arenas: a block is a slice of
// [opt | sub? | pq?] tables indexed by a handle, which keeps path copying a
// memcpy and a version a single u32.

#include <cassert>
#include <cstdint>
#include <cstring>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "rectfilter/core.hpp"

namespace rectfilter {

struct PrioInterval {
    std::uint32_t interval_id = 0;
    Addr lo = 0;
    Addr hi = 0;
    Priority priority = 0;
    RuleId payload = 0;

    friend bool operator==(const PrioInterval&, const PrioInterval&) = default;
};

enum class StoreMode { general, laminar };

struct QueryStats {
    std::uint32_t blocks_visited = 0;
};

struct StoreCounters {
    std::uint64_t blocks_created = 0;
    std::uint64_t pq_touches = 0;
    std::uint64_t last_update_blocks = 0;
    std::uint64_t last_update_slots = 0;  // covered subintervals registered
};

class VersionedIntervalStore {
    static constexpr std::uint32_t kNone = 0xFFFFFFFFu;
    static constexpr std::uint32_t kTiedBit = 0x80000000u;
    static constexpr std::uint32_t kIdxMask = 0x7FFFFFFFu;

public:
    VersionedIntervalStore(int universe_bits, int k, StoreMode mode)
        : bits_(universe_bits), k_(k), mode_(mode) {
        umax_ = universe_max(universe_bits);
        if (k < 1 || k > universe_bits)
            throw std::invalid_argument("block parameter k must be in [1, universe_bits]");
        int remaining = bits_;
        while (remaining > 0) {
            LevelGeom g;
            g.fan_bits = remaining < k_ ? remaining : k_;
            g.sub_shift = remaining - g.fan_bits;
            g.opt_off = 0;
            g.sub_off = g.sub_shift > 0 ? (1u << g.fan_bits) : 0;
            std::uint32_t words = 1u << g.fan_bits;          // opt table
            if (g.sub_shift > 0) words += 1u << g.fan_bits;  // sub table
            if (mode_ == StoreMode::general) {
                g.pq_off = words;
                words += 1u << g.fan_bits;  // pq table
            }
            g.slice_words = words;
            geom_.push_back(g);
            arena_.emplace_back();
            remaining -= g.fan_bits;
        }
        roots_.push_back(make_block(0));
        counters_.last_update_blocks = 0;  // version 0 root is construction, not an update
    }

    int universe_bits() const { return bits_; }
    int block_k() const { return k_; }
    StoreMode mode() const { return mode_; }
    int levels() const { return static_cast<int>(geom_.size()); }
    std::uint32_t version_count() const { return static_cast<std::uint32_t>(roots_.size()); }
    std::uint32_t latest_version() const { return version_count() - 1; }
    const StoreCounters& counters() const { return counters_; }
    std::size_t block_count() const { return blocks_.size(); }

    std::size_t bytes_estimate() const {
        std::size_t b = sizeof(*this);
        for (const auto& a : arena_)
            b += a.capacity() * sizeof(std::uint32_t);
        b += blocks_.capacity() * sizeof(BlockRef);
        b += entries_.capacity() * sizeof(Entry);
        b += roots_.capacity() * sizeof(std::uint32_t);
        b += id_index_.size() * 32;  // rough node cost
        for (const auto& s : pq_pool_)
            b += s.size() * 64;
        return b;
    }

    // Appends a version with `iv` inserted. General mode only.
    std::uint32_t insert(const PrioInterval& iv) {
        require_mode(StoreMode::general, "insert requires general mode");
        check_new_interval(iv);
        begin_update();
        std::uint32_t root = update_block(roots_.back(), 0, 0, iv, Op::pq_insert);
        roots_.push_back(root);
        add_entry(iv);
        return latest_version();
    }

    // Appends a version with the interval removed. General mode only;
    // old versions keep answering as before the delete.
    std::uint32_t erase(std::uint32_t interval_id) {
        require_mode(StoreMode::general, "erase requires general mode");
        auto it = id_index_.find(interval_id);
        if (it == id_index_.end() || !entries_[it->second].active)
            throw std::invalid_argument("unknown or already-deleted interval_id");
        const PrioInterval iv = entries_[it->second].iv;
        begin_update();
        std::uint32_t root = update_block(roots_.back(), 0, 0, iv, Op::pq_erase);
        roots_.push_back(root);
        entries_[it->second].active = false;
        return latest_version();
    }

    // Laminar-mode insert: no pq maintenance, opt cells updated by running
    // maximum. `check_laminarity` verifies the nested-or-disjoint contract
    // against every active interval (debug aid; quadratic).
    std::uint32_t insert_laminar(const PrioInterval& iv, bool check_laminarity = false) {
        require_mode(StoreMode::laminar, "insert_laminar requires laminar mode");
        check_new_interval(iv);
        if (check_laminarity) {
            for (const auto& [id, root] : undo_stack_) {
                const PrioInterval& o = entries_[id_index_.at(id)].iv;
                bool nested = (o.lo <= iv.lo && iv.hi <= o.hi) || (iv.lo <= o.lo && o.hi <= iv.hi);
                bool disjoint = iv.hi < o.lo || o.hi < iv.lo;
                if (!nested && !disjoint)
                    throw std::invalid_argument("laminarity violation");
            }
        }
        begin_update();
        std::uint32_t prev_root = roots_.back();
        std::uint32_t root = update_block(prev_root, 0, 0, iv, Op::laminar_max);
        roots_.push_back(root);
        undo_stack_.push_back({iv.interval_id, prev_root});
        add_entry(iv);
        return latest_version();
    }

    // Reverts the most recent not-yet-undone laminar insert by re-publishing
    // the root recorded just before it. Stack discipline is mandatory.
    std::uint32_t undo(std::uint32_t interval_id) {
        require_mode(StoreMode::laminar, "undo requires laminar mode");
        if (undo_stack_.empty() || undo_stack_.back().first != interval_id)
            throw std::invalid_argument(
                "undo out of stack order: a later-inserted interval is still active");
        begin_update();
        roots_.push_back(undo_stack_.back().second);
        entries_[id_index_.at(interval_id)].active = false;
        undo_stack_.pop_back();
        return latest_version();
    }

    struct QueryResult {
        std::optional<PrioInterval> best;
        bool tie_possible = false;
    };

    // Maximum (priority, -id) interval containing p in the given version.
    std::optional<PrioInterval> query(std::uint32_t version, Addr p,
                                      QueryStats* stats = nullptr) const {
        return query_ex(version, p, stats).best;
    }

    QueryResult query_ex(std::uint32_t version, Addr p, QueryStats* stats = nullptr) const {
        if (version >= roots_.size())
            throw std::out_of_range("version out of range");
        if (p > umax_)
            throw std::out_of_range("query point outside universe");
        std::uint32_t cand[66];
        int cand_n = 0;
        std::uint32_t handle = roots_[version];
        Addr base = 0;
        std::uint32_t visited = 0;
        for (std::size_t level = 0; level < geom_.size(); ++level) {
            const LevelGeom& g = geom_[level];
            const std::uint32_t* s = slice(handle);
            ++visited;
            std::uint32_t i = static_cast<std::uint32_t>((p - base) >> g.sub_shift);
            std::uint32_t e = s[g.opt_off + i];
            if (e != kNone)
                cand[cand_n++] = e;
            if (g.sub_shift == 0)
                break;
            std::uint32_t child = s[g.sub_off + i];
            if (child == kNone)
                break;
            handle = child;
            base += Addr(i) << g.sub_shift;
        }
        if (stats)
            stats->blocks_visited = visited;

        QueryResult out;
        int best = -1;
        for (int c = 0; c < cand_n; ++c) {
            std::uint32_t idx = cand[c] & kIdxMask;
            if (best < 0 || wins(entries_[idx].iv, entries_[cand[best] & kIdxMask].iv))
                best = c;
        }
        if (best < 0)
            return out;
        const PrioInterval& w = entries_[cand[best] & kIdxMask].iv;
        out.best = w;
        for (int c = 0; c < cand_n; ++c) {
            std::uint32_t idx = cand[c] & kIdxMask;
            const PrioInterval& o = entries_[idx].iv;
            if (o.priority != w.priority)
                continue;
            if (o.interval_id != w.interval_id || (cand[c] & kTiedBit))
                out.tie_possible = true;
        }
        return out;
    }

private:
    struct LevelGeom {
        int fan_bits = 0;
        int sub_shift = 0;
        std::uint32_t opt_off = 0;
        std::uint32_t sub_off = 0;   // valid iff sub_shift > 0
        std::uint32_t pq_off = 0;    // valid iff general mode
        std::uint32_t slice_words = 0;
    };
    struct BlockRef {
        std::uint8_t level = 0;
        std::uint32_t slot = 0;
    };
    struct Entry {
        PrioInterval iv;
        bool active = true;
    };
    enum class Op { pq_insert, pq_erase, laminar_max };

    // pq multisets are keyed ascending (priority, -interval_id): *rbegin()
    // is the maximum-priority entry with the smallest id.
    struct PqLess {
        bool operator()(const std::pair<Priority, std::uint32_t>& a,
                        const std::pair<Priority, std::uint32_t>& b) const {
            if (a.first != b.first)
                return a.first < b.first;
            return a.second > b.second;
        }
    };
    using PqSet = std::set<std::pair<Priority, std::uint32_t>, PqLess>;

    static bool wins(const PrioInterval& a, const PrioInterval& b) {
        if (a.priority != b.priority)
            return a.priority > b.priority;
        return a.interval_id < b.interval_id;
    }

    void require_mode(StoreMode m, const char* msg) const {
        if (mode_ != m)
            throw std::logic_error(msg);
    }

    void check_new_interval(const PrioInterval& iv) const {
        if (iv.lo > iv.hi || iv.hi > umax_)
            throw std::out_of_range("interval outside universe");
        if (iv.interval_id >= kIdxMask)
            throw std::invalid_argument("interval_id too large");
        if (id_index_.contains(iv.interval_id))
            throw std::invalid_argument("duplicate interval_id");
    }

    void begin_update() {
        counters_.last_update_blocks = 0;
        counters_.last_update_slots = 0;
    }

    void add_entry(const PrioInterval& iv) {
        id_index_.emplace(iv.interval_id, static_cast<std::uint32_t>(entries_.size()));
        entries_.push_back({iv, true});
    }

    std::uint32_t* slice(std::uint32_t handle) {
        const BlockRef& b = blocks_[handle];
        return arena_[b.level].data() + std::size_t(b.slot) * geom_[b.level].slice_words;
    }
    const std::uint32_t* slice(std::uint32_t handle) const {
        const BlockRef& b = blocks_[handle];
        return arena_[b.level].data() + std::size_t(b.slot) * geom_[b.level].slice_words;
    }

    std::uint32_t make_block(int level) {
        auto& a = arena_[level];
        std::uint32_t slot = static_cast<std::uint32_t>(a.size() / geom_[level].slice_words);
        a.resize(a.size() + geom_[level].slice_words, kNone);
        blocks_.push_back({static_cast<std::uint8_t>(level), slot});
        ++counters_.blocks_created;
        ++counters_.last_update_blocks;
        return static_cast<std::uint32_t>(blocks_.size() - 1);
    }

    std::uint32_t clone_block(std::uint32_t handle) {
        const BlockRef src = blocks_[handle];
        std::uint32_t nh = make_block(src.level);
        const std::uint32_t words = geom_[src.level].slice_words;
        auto& a = arena_[src.level];
        std::memcpy(a.data() + std::size_t(blocks_[nh].slot) * words,
                    a.data() + std::size_t(src.slot) * words, words * sizeof(std::uint32_t));
        return nh;
    }

    std::uint32_t update_block(std::uint32_t old_handle, std::size_t level, Addr base,
                               const PrioInterval& iv, Op op) {
        std::uint32_t nh = old_handle == kNone ? make_block(static_cast<int>(level))
                                               : clone_block(old_handle);
        const LevelGeom& g = geom_[level];
        const std::uint32_t fan = 1u << g.fan_bits;
        const int sw = g.sub_shift;
        std::uint32_t i_lo = iv.lo <= base ? 0 : static_cast<std::uint32_t>((iv.lo - base) >> sw);
        Addr rel_hi = (iv.hi - base) >> sw;
        std::uint32_t i_hi = rel_hi >= fan - 1 ? fan - 1 : static_cast<std::uint32_t>(rel_hi);
        for (std::uint32_t i = i_lo; i <= i_hi; ++i) {
            Addr s_lo = base + (Addr(i) << sw);
            Addr s_hi = s_lo + ((Addr(1) << sw) - 1);
            if (iv.lo <= s_lo && s_hi <= iv.hi) {
                register_covered(nh, level, i, iv, op);
            } else {
                std::uint32_t old_child = slice(nh)[g.sub_off + i];
                if (op == Op::pq_erase && old_child == kNone)
                    throw std::logic_error("delete path missing a block");
                std::uint32_t child = update_block(old_child, level + 1, s_lo, iv, op);
                slice(nh)[g.sub_off + i] = child;
            }
        }
        return nh;
    }

    void register_covered(std::uint32_t handle, std::size_t level, std::uint32_t i,
                          const PrioInterval& iv, Op op) {
        const LevelGeom& g = geom_[level];
        ++counters_.last_update_slots;
        if (op == Op::laminar_max) {
            std::uint32_t* s = slice(handle);
            std::uint32_t cur = s[g.opt_off + i];
            std::uint32_t my_idx = static_cast<std::uint32_t>(entries_.size());
            if (cur == kNone) {
                s[g.opt_off + i] = my_idx;
                return;
            }
            const PrioInterval& o = entries_[cur & kIdxMask].iv;
            if (iv.priority > o.priority) {
                s[g.opt_off + i] = my_idx;
            } else if (iv.priority == o.priority) {
                std::uint32_t winner = iv.interval_id < o.interval_id ? my_idx : (cur & kIdxMask);
                s[g.opt_off + i] = winner | kTiedBit;
            }
            return;
        }
        std::uint32_t pq_idx = slice(handle)[g.pq_off + i];
        if (pq_idx == kNone) {
            if (op == Op::pq_erase)
                throw std::logic_error("delete of interval missing from pq");
            pq_idx = static_cast<std::uint32_t>(pq_pool_.size());
            pq_pool_.emplace_back();
            slice(handle)[g.pq_off + i] = pq_idx;
        }
        PqSet& pq = pq_pool_[pq_idx];
        ++counters_.pq_touches;
        if (op == Op::pq_insert) {
            pq.insert({iv.priority, iv.interval_id});
        } else {
            if (pq.erase({iv.priority, iv.interval_id}) != 1)
                throw std::logic_error("delete of interval missing from pq");
        }
        std::uint32_t* s = slice(handle);
        if (pq.empty()) {
            s[g.opt_off + i] = kNone;
            return;
        }
        auto top = pq.rbegin();
        std::uint32_t idx = top->second == iv.interval_id
                                ? static_cast<std::uint32_t>(entries_.size())
                                : id_index_.at(top->second);
        bool tied = pq.size() >= 2 && std::next(top)->first == top->first;
        s[g.opt_off + i] = idx | (tied ? kTiedBit : 0);
    }

    int bits_;
    int k_;
    StoreMode mode_;
    Addr umax_ = 0;
    std::vector<LevelGeom> geom_;
    std::vector<std::vector<std::uint32_t>> arena_;  // per level
    std::vector<BlockRef> blocks_;
    std::vector<std::uint32_t> roots_;  // version -> block handle
    std::vector<Entry> entries_;
    std::unordered_map<std::uint32_t, std::uint32_t> id_index_;  // interval_id -> entry
    std::vector<PqSet> pq_pool_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> undo_stack_;  // (id, prior root)
    StoreCounters counters_;
};

// Static integer predecessor structure: the set S becomes the nested chain of
// intervals [s, U-1] with priority s, so the maximum-priority interval
// containing q starts at the predecessor of q.
class PredecessorIndex {
public:
    PredecessorIndex(std::span<const Addr> sorted_distinct, int universe_bits, int k)
        : store_(universe_bits, k, StoreMode::laminar) {
        Addr umax = universe_max(universe_bits);
        for (std::size_t i = 0; i < sorted_distinct.size(); ++i) {
            Addr s = sorted_distinct[i];
            if (s > umax)
                throw std::out_of_range("set element outside universe");
            if (i > 0 && sorted_distinct[i - 1] >= s)
                throw std::invalid_argument("input must be sorted and distinct");
            store_.insert_laminar(PrioInterval{static_cast<std::uint32_t>(i), s, umax, s,
                                               static_cast<RuleId>(i)});
        }
    }

    // Largest s in S with s <= q, or none.
    std::optional<Addr> query(Addr q, QueryStats* stats = nullptr) const {
        auto iv = store_.query(store_.latest_version(), q, stats);
        if (!iv)
            return std::nullopt;
        return iv->lo;
    }

    // Index of the predecessor within the build input.
    std::optional<std::uint32_t> query_index(Addr q, QueryStats* stats = nullptr) const {
        auto iv = store_.query(store_.latest_version(), q, stats);
        if (!iv)
            return std::nullopt;
        return iv->payload;
    }

    const VersionedIntervalStore& store() const { return store_; }

private:
    VersionedIntervalStore store_;
};

}  // namespace rectfilter
