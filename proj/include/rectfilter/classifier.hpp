#pragma once

// Static two-dimensional max-priority point stabbing: a left-right sweep over
// rule x-boundaries feeds the rules' y-projections into a persistent interval
// store, one recorded version per distinct event coordinate. A query finds the
// version via integer predecessor search on the event coordinates (itself a
// frozen interval store), then stabs that version with the packet's y value.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <vector>

#include "rectfilter/core.hpp"
#include "rectfilter/persistent_intervals.hpp"

namespace rectfilter {

struct SweepEvent {
    Addr x = 0;  // insert at src.lo, delete at src.hi + 1
    enum class Kind { erase, insert } kind = Kind::insert;
    RuleId rule = 0;
};

enum class BuildMode { automatic, general, laminar };

struct ClassifierStats {
    std::uint64_t versions = 0;
    std::uint64_t blocks = 0;
    std::uint64_t bytes_estimate = 0;
    int max_query_path = 0;  // blocks per stab, both structures counted
    std::size_t event_coords = 0;
};

struct MatchResult {
    RuleId rule = 0;
    Priority priority = 0;
    bool tie_possible = false;
};

// Sweep events sorted by x; at equal x all deletes precede all inserts, so a
// rule ending at x-1 never coexists with one starting at x. Among equal-x
// laminar inserts, wider x-ranges go first (outer before inner) and deletes
// mirror that, which keeps undo strictly stack-ordered.
inline std::vector<SweepEvent> make_sweep_events(const RuleSet& rs) {
    Addr umax = universe_max(rs.universe_bits);
    std::vector<SweepEvent> events;
    events.reserve(rs.rules.size() * 2);
    std::vector<const Rule*> by_id(rs.rules.size(), nullptr);
    for (const Rule& r : rs.rules) {
        by_id[r.id] = &r;
        events.push_back({r.src.lo, SweepEvent::Kind::insert, r.id});
        if (r.src.hi < umax)
            events.push_back({r.src.hi + 1, SweepEvent::Kind::erase, r.id});
    }
    auto x_range = [&](RuleId id) { return by_id[id]->src; };
    std::sort(events.begin(), events.end(), [&](const SweepEvent& a, const SweepEvent& b) {
        if (a.x != b.x)
            return a.x < b.x;
        if (a.kind != b.kind)
            return a.kind == SweepEvent::Kind::erase;
        if (a.kind == SweepEvent::Kind::insert) {
            if (x_range(a.rule).hi != x_range(b.rule).hi)
                return x_range(a.rule).hi > x_range(b.rule).hi;  // wider first
            return a.rule < b.rule;
        }
        if (x_range(a.rule).lo != x_range(b.rule).lo)
            return x_range(a.rule).lo > x_range(b.rule).lo;  // inner first
        return a.rule > b.rule;
    });
    return events;
}

class PacketClassifier {
public:
    explicit PacketClassifier(const RuleSet& rs, int k = 8, BuildMode mode = BuildMode::automatic)
        : bits_(rs.universe_bits),
          umax_(universe_max(rs.universe_bits)),
          rules_(rs.rules),
          store_(make_store(rs, k, mode)),
          pred_(build_pred(rs, k)) {}

    StoreMode mode() const { return store_.mode(); }
    const std::vector<Addr>& event_coords() const { return event_coords_; }
    const VersionedIntervalStore& store() const { return store_; }

    std::optional<MatchResult> classify(const Packet& pkt, bool with_tie_check = false) const {
        if (pkt.src > umax_ || pkt.dst > umax_)
            throw std::out_of_range("packet outside universe");
        auto slot = pred_.query_index(pkt.src);
        if (!slot)
            return std::nullopt;
        std::uint32_t version = version_at_[*slot];
        if (with_tie_check) {
            auto res = store_.query_ex(version, pkt.dst);
            if (!res.best)
                return std::nullopt;
            return MatchResult{res.best->payload, res.best->priority, res.tie_possible};
        }
        auto best = store_.query(version, pkt.dst);
        if (!best)
            return std::nullopt;
        return MatchResult{best->payload, best->priority, false};
    }

    ClassifierStats stats() const {
        ClassifierStats s;
        s.versions = store_.version_count() - 1;  // beyond the empty version 0
        s.blocks = store_.block_count() + pred_.store().block_count();
        s.bytes_estimate = store_.bytes_estimate() + pred_.store().bytes_estimate();
        s.max_query_path = std::max(store_.levels(), pred_.store().levels());
        s.event_coords = event_coords_.size();
        return s;
    }

private:
    VersionedIntervalStore make_store(const RuleSet& rs, int k, BuildMode mode) {
        ValidationReport report = validate(rs);
        if (!report.empty()) {
            std::ostringstream msg;
            msg << "invalid rule set: rule " << report.front().rule_index << ": "
                << report.front().message;
            throw std::invalid_argument(msg.str());
        }
        StoreMode sm;
        switch (mode) {
            case BuildMode::general:
                sm = StoreMode::general;
                break;
            case BuildMode::laminar:
                sm = StoreMode::laminar;
                break;
            case BuildMode::automatic: {
                std::vector<AddressRange> xs, ys;
                xs.reserve(rs.rules.size());
                ys.reserve(rs.rules.size());
                for (const Rule& r : rs.rules) {
                    xs.push_back(r.src);
                    ys.push_back(r.dst);
                }
                sm = is_laminar(xs) && is_laminar(ys) ? StoreMode::laminar : StoreMode::general;
                break;
            }
        }
        VersionedIntervalStore store(rs.universe_bits, k, sm);
        std::vector<const Rule*> by_id(rs.rules.size(), nullptr);
        for (const Rule& r : rs.rules)
            by_id[r.id] = &r;
        std::vector<SweepEvent> events = make_sweep_events(rs);
        for (std::size_t i = 0; i < events.size(); ++i) {
            const SweepEvent& e = events[i];
            const Rule& r = *by_id[e.rule];
            if (e.kind == SweepEvent::Kind::insert) {
                PrioInterval iv{e.rule, r.dst.lo, r.dst.hi, r.priority, r.id};
                if (sm == StoreMode::laminar)
                    store.insert_laminar(iv);
                else
                    store.insert(iv);
            } else {
                if (sm == StoreMode::laminar)
                    store.undo(e.rule);
                else
                    store.erase(e.rule);
            }
            if (i + 1 == events.size() || events[i + 1].x != e.x) {
                event_coords_.push_back(e.x);
                version_at_.push_back(store.latest_version());
            }
        }
        return store;
    }

    PredecessorIndex build_pred(const RuleSet& rs, int k) {
        return PredecessorIndex(event_coords_, rs.universe_bits, k);
    }

    int bits_;
    Addr umax_;
    std::vector<Rule> rules_;
    std::vector<Addr> event_coords_;        // sorted distinct xs where versions change
    std::vector<std::uint32_t> version_at_;  // parallel to event_coords_
    VersionedIntervalStore store_;
    PredecessorIndex pred_;
};

}  // namespace rectfilter
