#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "rectfilter/core.hpp"

namespace rectfilter {

// Horizontal segment over a compressed position domain {0..m-1}: covers the
// unit gaps g with x_lo <= g and g+1 <= x_hi.
struct HSegment {
    std::uint32_t seg_id = 0;
    std::uint32_t x_lo = 0;
    std::uint32_t x_hi = 0;
    std::int64_t weight = 0;
};

struct EnvelopeCell {
    std::uint32_t gap = 0;
    std::optional<std::uint32_t> winner;  // seg_id of the minimum-weight cover
};

struct AmbiguityReport {
    std::int64_t weight = 0;
    std::uint32_t gap = 0;
    std::uint32_t seg_a = 0;
    std::uint32_t seg_b = 0;
};

struct PQOp {
    enum class Kind { insert, erase, query_min };
    Kind kind = Kind::query_min;
    std::int64_t value = 0;  // ignored for query_min
};

struct EnvelopeStats {
    std::uint64_t finds = 0;
    std::uint64_t contractions = 0;
};

// Union-find over gap slots with an extra per-root skip pointer: find_free(g)
// is the smallest unassigned gap >= g. Path compression + union by rank.
class UnionFind {
public:
    explicit UnionFind(std::uint32_t n) : parent_(n), rank_(n, 0), skip_(n) {
        for (std::uint32_t i = 0; i < n; ++i) {
            parent_[i] = i;
            skip_[i] = i;
        }
    }

    std::uint32_t find(std::uint32_t x) {
        ++finds_;
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    std::uint32_t find_free(std::uint32_t g) { return skip_[find(g)]; }

    // Mark gap g assigned by merging its slot with slot g+1.
    void contract(std::uint32_t g) {
        ++contractions_;
        std::uint32_t a = find(g);
        std::uint32_t b = find(g + 1);
        std::uint32_t next = skip_[b];
        if (rank_[a] < rank_[b]) {
            parent_[a] = b;
            skip_[b] = next;
        } else if (rank_[b] < rank_[a]) {
            parent_[b] = a;
            skip_[a] = next;
        } else {
            parent_[b] = a;
            ++rank_[a];
            skip_[a] = next;
        }
    }

    std::uint64_t finds() const { return finds_; }
    std::uint64_t contractions() const { return contractions_; }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint8_t> rank_;
    std::vector<std::uint32_t> skip_;
    std::uint64_t finds_ = 0;
    std::uint64_t contractions_ = 0;
};

enum class TieOrder { ascending_id, descending_id };

namespace detail {

inline void check_segments(std::span<const HSegment> segments, std::uint32_t m) {
    for (const HSegment& s : segments) {
        if (s.x_lo > s.x_hi || s.x_hi >= m)
            throw std::out_of_range("segment endpoint outside position domain");
    }
}

}  // namespace detail

// Per-gap minimum of the segments, computed by processing segments in
// increasing (weight, tie) order and claiming each still-unassigned gap via
// union-find jumps; every gap is contracted at most once.
inline std::vector<EnvelopeCell> lower_envelope(std::span<const HSegment> segments,
                                                std::uint32_t m,
                                                TieOrder tie = TieOrder::ascending_id,
                                                EnvelopeStats* stats = nullptr) {
    detail::check_segments(segments, m);
    std::uint32_t gaps = m >= 1 ? m - 1 : 0;
    std::vector<EnvelopeCell> cells(gaps);
    for (std::uint32_t g = 0; g < gaps; ++g)
        cells[g].gap = g;
    if (gaps == 0 || segments.empty()) {
        if (stats) *stats = {};
        return cells;
    }

    std::vector<std::uint32_t> order(segments.size());
    for (std::uint32_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (segments[a].weight != segments[b].weight)
            return segments[a].weight < segments[b].weight;
        return tie == TieOrder::ascending_id ? segments[a].seg_id < segments[b].seg_id
                                             : segments[a].seg_id > segments[b].seg_id;
    });

    UnionFind uf(gaps + 1);  // slot `gaps` is the off-the-end sentinel
    for (std::uint32_t idx : order) {
        const HSegment& s = segments[idx];
        if (s.x_lo == s.x_hi)
            continue;  // covers no gap
        std::uint32_t g = uf.find_free(s.x_lo);
        while (g < s.x_hi) {  // gap g covered iff g <= x_hi - 1
            cells[g].winner = s.seg_id;
            uf.contract(g);
            g = uf.find_free(g + 1);
        }
    }
    if (stats) {
        stats->finds = uf.finds();
        stats->contractions = uf.contractions();
    }
    return cells;
}

// Run the envelope under both tie orders and compare. A gap whose winners
// differ has two distinct minimum-weight covers; among those gaps the one of
// minimum weight is reported (lowest gap index on weight ties).
inline std::optional<AmbiguityReport> envelope_ambiguity(std::span<const HSegment> segments,
                                                         std::uint32_t m,
                                                         EnvelopeStats* stats = nullptr) {
    std::vector<EnvelopeCell> fwd = lower_envelope(segments, m, TieOrder::ascending_id, stats);
    std::vector<EnvelopeCell> rev = lower_envelope(segments, m, TieOrder::descending_id);

    std::unordered_map<std::uint32_t, std::int64_t> weight_of;
    weight_of.reserve(segments.size());
    for (const HSegment& s : segments)
        weight_of.emplace(s.seg_id, s.weight);

    std::optional<AmbiguityReport> best;
    for (std::uint32_t g = 0; g < fwd.size(); ++g) {
        if (fwd[g].winner == rev[g].winner)
            continue;
        std::int64_t w = weight_of.at(*fwd[g].winner);
        if (!best || w < best->weight)
            best = AmbiguityReport{w, g, *fwd[g].winner, *rev[g].winner};
    }
    return best;
}

// Offline integer priority queue: answers every query_min against the values
// active at that instant, via the segment reduction (insert index -> left
// endpoint, delete index -> right endpoint, value -> weight).
inline std::vector<std::optional<std::int64_t>> offline_min_queries(std::span<const PQOp> ops) {
    std::uint32_t t = static_cast<std::uint32_t>(ops.size());
    std::vector<HSegment> segments;
    std::vector<std::uint32_t> query_gaps;
    std::vector<std::pair<std::int64_t, std::uint32_t>> active;  // value -> insert index
    for (std::uint32_t i = 0; i < t; ++i) {
        const PQOp& op = ops[i];
        switch (op.kind) {
            case PQOp::Kind::insert: {
                for (const auto& [v, at] : active)
                    if (v == op.value)
                        throw std::invalid_argument("insert of an already-active value");
                active.emplace_back(op.value, i);
                break;
            }
            case PQOp::Kind::erase: {
                auto it = std::find_if(active.begin(), active.end(),
                                       [&](const auto& e) { return e.first == op.value; });
                if (it == active.end())
                    throw std::invalid_argument("delete of a value that is not active");
                segments.push_back({static_cast<std::uint32_t>(segments.size()),
                                    it->second + 1, i, op.value});
                active.erase(it);
                break;
            }
            case PQOp::Kind::query_min:
                query_gaps.push_back(i);
                break;
        }
    }
    for (const auto& [v, at] : active)
        segments.push_back({static_cast<std::uint32_t>(segments.size()), at + 1, t, v});

    std::vector<EnvelopeCell> cells = lower_envelope(segments, t + 1);
    std::vector<std::optional<std::int64_t>> answers;
    answers.reserve(query_gaps.size());
    for (std::uint32_t g : query_gaps) {
        if (cells[g].winner)
            answers.push_back(segments[*cells[g].winner].weight);
        else
            answers.push_back(std::nullopt);
    }
    return answers;
}

struct PathEdge {
    std::uint32_t u = 0;
    std::uint32_t v = 0;
    std::int64_t weight = 0;
};

// For the path 0-1-...-(path_n-1) as MST, the minimum-weight non-tree edge
// spanning each path edge (i, i+1), or none.
inline std::vector<std::optional<PathEdge>> path_replacements(std::uint32_t path_n,
                                                              std::span<const PathEdge> edges) {
    std::vector<HSegment> segments;
    segments.reserve(edges.size());
    for (std::uint32_t i = 0; i < edges.size(); ++i) {
        const PathEdge& e = edges[i];
        if (e.u >= e.v || e.v >= path_n)
            throw std::out_of_range("edge endpoint outside path");
        segments.push_back({i, e.u, e.v, e.weight});
    }
    std::vector<EnvelopeCell> cells = lower_envelope(segments, path_n);
    std::vector<std::optional<PathEdge>> out(cells.size());
    for (std::uint32_t g = 0; g < cells.size(); ++g)
        if (cells[g].winner)
            out[g] = edges[*cells[g].winner];
    return out;
}

}  // namespace rectfilter
