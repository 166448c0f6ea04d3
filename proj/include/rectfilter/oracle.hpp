#pragma once

// Brute-force reference implementations. These deliberately share no
// containment or comparison helpers with the fast modules: every scan below
// spells out its own arithmetic so a bug in the main code paths cannot hide
// in a shared primitive.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rectfilter/core.hpp"
#include "rectfilter/envelope.hpp"

namespace rectfilter::oracle {

struct ClassifyAnswer {
    RuleId winner = 0;
    Priority priority = 0;
    std::vector<RuleId> tied;  // all rules at the winning priority, ascending id
};

// Linear scan for the best (priority, -id) rule matching the packet.
inline std::optional<ClassifyAnswer> naive_classify(const RuleSet& rs, const Packet& pkt) {
    bool found = false;
    Priority best_pri = 0;
    RuleId best_id = 0;
    for (const Rule& r : rs.rules) {
        bool hit = r.src.lo <= pkt.src && pkt.src <= r.src.hi &&
                   r.dst.lo <= pkt.dst && pkt.dst <= r.dst.hi;
        if (!hit)
            continue;
        if (!found || r.priority > best_pri || (r.priority == best_pri && r.id < best_id)) {
            found = true;
            best_pri = r.priority;
            best_id = r.id;
        }
    }
    if (!found)
        return std::nullopt;
    ClassifyAnswer ans{best_id, best_pri, {}};
    for (const Rule& r : rs.rules)
        if (r.priority == best_pri &&
            r.src.lo <= pkt.src && pkt.src <= r.src.hi &&
            r.dst.lo <= pkt.dst && pkt.dst <= r.dst.hi)
            ans.tied.push_back(r.id);
    std::sort(ans.tied.begin(), ans.tied.end());
    return ans;
}

// All rules containing the packet, ascending id.
inline std::vector<RuleId> naive_list(const RuleSet& rs, const Packet& pkt) {
    std::vector<RuleId> out;
    for (const Rule& r : rs.rules)
        if (r.src.lo <= pkt.src && pkt.src <= r.src.hi &&
            r.dst.lo <= pkt.dst && pkt.dst <= r.dst.hi)
            out.push_back(r.id);
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

// Candidate coordinates: every rule bound and bound+1, clipped to the
// universe. Any cell of the rectangle arrangement contains one of these.
inline std::vector<Addr> candidate_coords(const RuleSet& rs, bool x_axis) {
    Addr umax = universe_max(rs.universe_bits);
    std::vector<Addr> coords;
    coords.reserve(rs.rules.size() * 4);
    for (const Rule& r : rs.rules) {
        Addr lo = x_axis ? r.src.lo : r.dst.lo;
        Addr hi = x_axis ? r.src.hi : r.dst.hi;
        coords.push_back(lo);
        coords.push_back(hi);
        if (lo < umax) coords.push_back(lo + 1);
        if (hi < umax) coords.push_back(hi + 1);
    }
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    return coords;
}

}  // namespace detail

// Work a full naive conflict scan would have to do: one query per candidate
// grid point. Used by the benchmarks as the quadratic-baseline cost measure.
inline std::uint64_t naive_conflict_grid_size(const RuleSet& rs) {
    return static_cast<std::uint64_t>(detail::candidate_coords(rs, true).size()) *
           static_cast<std::uint64_t>(detail::candidate_coords(rs, false).size());
}

// Scan the candidate grid in ascending (x, y) order; report the first point
// whose maximum-priority matching set has two or more rules.
inline std::optional<ConflictWitness> naive_conflict(const RuleSet& rs) {
    std::vector<Addr> xs = detail::candidate_coords(rs, true);
    std::vector<Addr> ys = detail::candidate_coords(rs, false);
    std::vector<const Rule*> column;
    for (Addr x : xs) {
        column.clear();
        for (const Rule& r : rs.rules)
            if (r.src.lo <= x && x <= r.src.hi)
                column.push_back(&r);
        if (column.size() < 2)
            continue;
        for (Addr y : ys) {
            bool found = false;
            Priority best = 0;
            RuleId first = 0, second = 0;
            int at_best = 0;
            for (const Rule* r : column) {
                if (!(r->dst.lo <= y && y <= r->dst.hi))
                    continue;
                if (!found || r->priority > best) {
                    found = true;
                    best = r->priority;
                    first = r->id;
                    at_best = 1;
                } else if (r->priority == best) {
                    ++at_best;
                    if (r->id < first) {
                        second = first;
                        first = r->id;
                    } else if (at_best == 2 || r->id < second) {
                        second = r->id;
                    }
                }
            }
            if (found && at_best >= 2)
                return ConflictWitness{x, y, first, second, best};
        }
    }
    return std::nullopt;
}

// Per-gap minimum scan over the position domain {0..m-1}.
inline std::vector<std::optional<std::uint32_t>> naive_envelope(std::span<const HSegment> segments,
                                                                std::uint32_t m) {
    std::uint32_t gaps = m >= 1 ? m - 1 : 0;
    std::vector<std::optional<std::uint32_t>> winners(gaps);
    for (std::uint32_t g = 0; g < gaps; ++g) {
        bool found = false;
        std::int64_t best_w = 0;
        std::uint32_t best_id = 0;
        for (const HSegment& s : segments) {
            if (!(s.x_lo <= g && g + 1 <= s.x_hi))
                continue;
            if (!found || s.weight < best_w || (s.weight == best_w && s.seg_id < best_id)) {
                found = true;
                best_w = s.weight;
                best_id = s.seg_id;
            }
        }
        if (found)
            winners[g] = best_id;
    }
    return winners;
}

// Largest element of `sorted` that is <= q, by linear scan.
inline std::optional<Addr> naive_predecessor(std::span<const Addr> sorted, Addr q) {
    std::optional<Addr> best;
    for (Addr s : sorted)
        if (s <= q && (!best || s > *best))
            best = s;
    return best;
}

}  // namespace rectfilter::oracle
