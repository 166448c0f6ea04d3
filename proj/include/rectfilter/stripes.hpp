#pragma once

// Conflict detection among prioritized stripes of one cell, given pre-sorted
// inputs, in linear time (up to inverse-Ackermann union-find).
//
// Each axis is partitioned into atoms: one per distinct boundary coordinate
// and one per nonempty open run of integers between consecutive boundaries.
// Working on atoms instead of raw positions keeps closed-interval adjacency
// from producing ties at coordinates no integer packet can have. The
// max-priority partition per axis is a lower-envelope computation over
// negated priority ranks; its ambiguities are found by the double run.

#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rectfilter/core.hpp"
#include "rectfilter/envelope.hpp"

namespace rectfilter {

enum class StripeKind { horizontal, vertical, universal };

struct Stripe {
    RuleId rule = 0;
    StripeKind kind = StripeKind::universal;
    Addr lo = 0;  // extent within the cell: y-range if horizontal, x-range if vertical
    Addr hi = 0;
    Priority priority = 0;
};

struct StripeBoundary {
    Addr value = 0;
    std::uint32_t stripe = 0;  // index into StripeBundle::stripes
    bool is_hi = false;
};

struct StripeBundle {
    std::vector<Stripe> stripes;
    std::vector<std::uint32_t> priority_order;  // stripe indices, ascending priority
    std::vector<StripeBoundary> h_boundaries;   // horizontal extents, sorted by value
    std::vector<StripeBoundary> v_boundaries;   // vertical extents, sorted by value
    Rect cell;
};

namespace detail {

constexpr std::int64_t kNegInf = -1;  // below every priority rank

struct AxisPartition {
    std::vector<Addr> rep;               // minimal raw coordinate per atom
    std::vector<std::int64_t> win_rank;  // winner priority rank per atom, -1 if uncovered
    std::vector<std::uint32_t> win_stripe;
    std::int64_t min_rank = kNegInf;  // -inf when any atom is uncovered
    std::uint32_t min_atom = 0;
    bool has_ambiguity = false;
    std::int64_t amb_rank = kNegInf;  // maximum rank over ambiguous atoms
    std::uint32_t amb_atom = 0;
    std::uint32_t amb_a = 0, amb_b = 0;     // stripe indices
    std::vector<std::uint64_t> present;     // rank bitmap over winners
    std::vector<std::uint32_t> rank_atom;   // one atom per present rank
};

inline AxisPartition build_partition(const StripeBundle& b,
                                     const std::vector<StripeBoundary>& boundaries,
                                     StripeKind kind, Addr axis_lo, Addr axis_hi,
                                     const std::vector<std::uint32_t>& rank_of,
                                     std::uint32_t rank_count) {
    AxisPartition part;

    // distinct coordinates: boundary values merged with the cell edges
    std::vector<Addr> coords;
    coords.reserve(boundaries.size() + 2);
    coords.push_back(axis_lo);
    for (const StripeBoundary& sb : boundaries)
        if (sb.value != coords.back())
            coords.push_back(sb.value);
    if (coords.back() != axis_hi)
        coords.push_back(axis_hi);

    // atoms: every coordinate, plus each nonempty open integer run between
    std::vector<std::uint32_t> point_atom(coords.size());
    for (std::size_t r = 0; r < coords.size(); ++r) {
        point_atom[r] = static_cast<std::uint32_t>(part.rep.size());
        part.rep.push_back(coords[r]);
        if (r + 1 < coords.size() && coords[r + 1] > coords[r] + 1)
            part.rep.push_back(coords[r] + 1);
    }
    std::uint32_t atoms = static_cast<std::uint32_t>(part.rep.size());

    // envelope segments; weights are reversed ranks so minima become maxima
    std::vector<HSegment> segments;
    std::vector<std::uint32_t> seg_stripe;
    {
        std::vector<std::uint32_t> lo_atom(b.stripes.size(), 0), hi_atom(b.stripes.size(), 0);
        std::size_t ci = 0;
        for (const StripeBoundary& sb : boundaries) {
            while (coords[ci] != sb.value)
                ++ci;
            (sb.is_hi ? hi_atom : lo_atom)[sb.stripe] = point_atom[ci];
        }
        for (std::uint32_t si = 0; si < b.stripes.size(); ++si) {
            if (b.stripes[si].kind != kind)
                continue;
            segments.push_back({si, lo_atom[si], hi_atom[si] + 1,
                                static_cast<std::int64_t>(rank_count - 1 - rank_of[si])});
            seg_stripe.push_back(si);
        }
    }

    std::vector<EnvelopeCell> cells = lower_envelope(segments, atoms + 1);
    part.win_rank.assign(atoms, kNegInf);
    part.win_stripe.assign(atoms, 0);
    part.present.assign((rank_count + 63) / 64, 0);
    part.rank_atom.assign(rank_count, 0);
    bool any_uncovered = false;
    bool have_min = false;
    for (std::uint32_t g = 0; g < atoms; ++g) {
        if (!cells[g].winner) {
            if (!any_uncovered) {
                any_uncovered = true;
                part.min_atom = g;
            }
            continue;
        }
        std::uint32_t si = *cells[g].winner;
        std::int64_t rank = rank_of[si];
        part.win_rank[g] = rank;
        part.win_stripe[g] = si;
        part.present[rank >> 6] |= std::uint64_t{1} << (rank & 63);
        part.rank_atom[rank] = g;
        if (!have_min || rank < part.min_rank) {
            have_min = true;
            part.min_rank = rank;
            if (!any_uncovered)
                part.min_atom = g;
        }
    }
    if (any_uncovered)
        part.min_rank = kNegInf;
    else if (have_min) {
        // recover the arg-min atom (first in atom order)
        for (std::uint32_t g = 0; g < atoms; ++g)
            if (part.win_rank[g] == part.min_rank) {
                part.min_atom = g;
                break;
            }
    }

    if (auto amb = envelope_ambiguity(segments, atoms + 1)) {
        part.has_ambiguity = true;
        part.amb_rank = static_cast<std::int64_t>(rank_count - 1) - amb->weight;
        part.amb_atom = amb->gap;
        part.amb_a = amb->seg_a;
        part.amb_b = amb->seg_b;
    }
    return part;
}

// highest rank >= floor present in both bitmaps, or kNegInf
inline std::int64_t highest_common_rank(const std::vector<std::uint64_t>& a,
                                        const std::vector<std::uint64_t>& b,
                                        std::int64_t floor_rank) {
    std::int64_t lo = floor_rank < 0 ? 0 : floor_rank;
    for (std::int64_t w = static_cast<std::int64_t>(a.size()) - 1; w >= lo >> 6; --w) {
        std::uint64_t both = a[w] & b[w];
        if (w == (lo >> 6) && (lo & 63) != 0)
            both &= ~std::uint64_t{0} << (lo & 63);
        if (both)
            return (w << 6) + 63 - std::countl_zero(both);
    }
    return kNegInf;
}

inline void check_bundle(const StripeBundle& b) {
    auto check_axis = [&](const std::vector<StripeBoundary>& bounds, StripeKind kind, Addr lo,
                          Addr hi) {
        std::vector<int> seen(b.stripes.size(), 0);
        for (std::size_t i = 0; i < bounds.size(); ++i) {
            const StripeBoundary& sb = bounds[i];
            if (i > 0 && bounds[i - 1].value > sb.value)
                throw std::invalid_argument("boundary order is not sorted");
            if (sb.stripe >= b.stripes.size() || b.stripes[sb.stripe].kind != kind)
                throw std::invalid_argument("boundary refers to a stripe of the wrong kind");
            const Stripe& s = b.stripes[sb.stripe];
            if (sb.value != (sb.is_hi ? s.hi : s.lo))
                throw std::invalid_argument("boundary value disagrees with stripe extent");
            if (sb.value < lo || sb.value > hi)
                throw std::invalid_argument("stripe extent outside the cell");
            ++seen[sb.stripe];
        }
        for (std::uint32_t si = 0; si < b.stripes.size(); ++si)
            if ((b.stripes[si].kind == kind) != (seen[si] == 2))
                throw std::invalid_argument("stripe missing from boundary order");
    };
    check_axis(b.h_boundaries, StripeKind::horizontal, b.cell.ylo, b.cell.yhi);
    check_axis(b.v_boundaries, StripeKind::vertical, b.cell.xlo, b.cell.xhi);
    if (b.priority_order.size() != b.stripes.size())
        throw std::invalid_argument("priority order size mismatch");
    for (std::size_t i = 1; i < b.priority_order.size(); ++i)
        if (b.stripes[b.priority_order[i - 1]].priority > b.stripes[b.priority_order[i]].priority)
            throw std::invalid_argument("priority order is not sorted");
}

}  // namespace detail

// Decide whether the bundle has a point with no unique maximum-priority
// stripe, and exhibit one. Linearity rests on the bundle's pre-sorted orders.
inline std::optional<ConflictWitness> detect_stripe_conflict(const StripeBundle& b,
                                                             bool check_orderings = false) {
    using detail::kNegInf;
    if (check_orderings)
        detail::check_bundle(b);
    if (b.stripes.empty())
        return std::nullopt;

    // dense priority ranks from the given order
    std::vector<std::uint32_t> rank_of(b.stripes.size(), 0);
    std::vector<Priority> rank_priority;
    for (std::uint32_t oi = 0; oi < b.priority_order.size(); ++oi) {
        std::uint32_t si = b.priority_order[oi];
        if (oi > 0 && b.stripes[si].priority == rank_priority.back()) {
            rank_of[si] = static_cast<std::uint32_t>(rank_priority.size() - 1);
        } else {
            rank_of[si] = static_cast<std::uint32_t>(rank_priority.size());
            rank_priority.push_back(b.stripes[si].priority);
        }
    }
    std::uint32_t ranks = static_cast<std::uint32_t>(rank_priority.size());

    detail::AxisPartition h = detail::build_partition(b, b.h_boundaries, StripeKind::horizontal,
                                                      b.cell.ylo, b.cell.yhi, rank_of, ranks);
    detail::AxisPartition v = detail::build_partition(b, b.v_boundaries, StripeKind::vertical,
                                                      b.cell.xlo, b.cell.xhi, rank_of, ranks);

    // universal stripes: maximum rank and up to two carriers
    std::int64_t m_u = kNegInf;
    std::optional<std::uint32_t> u_best, u_second;
    for (auto it = b.priority_order.rbegin(); it != b.priority_order.rend(); ++it) {
        std::uint32_t si = *it;
        if (b.stripes[si].kind != StripeKind::universal)
            continue;
        if (!u_best) {
            u_best = si;
            m_u = rank_of[si];
        } else if (rank_of[si] == m_u && !u_second) {
            u_second = si;
        } else {
            break;
        }
    }

    auto make = [&](Addr x, Addr y, std::uint32_t sa, std::uint32_t sb) {
        RuleId a = b.stripes[sa].rule, bb = b.stripes[sb].rule;
        return ConflictWitness{x, y, std::min(a, bb), std::max(a, bb),
                               b.stripes[sa].priority};
    };

    // two horizontal stripes: a max-priority ambiguity no vertical or
    // universal stripe everywhere dominates
    if (h.has_ambiguity && h.amb_rank >= v.min_rank && h.amb_rank >= m_u)
        return make(v.rep[v.min_atom], h.rep[h.amb_atom], h.amb_a, h.amb_b);

    if (v.has_ambiguity && v.amb_rank >= h.min_rank && v.amb_rank >= m_u)
        return make(v.rep[v.amb_atom], h.rep[h.min_atom], v.amb_a, v.amb_b);

    // two universal stripes sharing the top priority
    if (u_second && m_u >= h.min_rank && m_u >= v.min_rank)
        return make(v.rep[v.min_atom], h.rep[h.min_atom], *u_best, *u_second);

    // universal against a partition that carries the same priority
    if (u_best && m_u >= 0) {
        std::uint64_t bit = std::uint64_t{1} << (m_u & 63);
        if ((h.present[m_u >> 6] & bit) && m_u >= v.min_rank) {
            std::uint32_t atom = h.rank_atom[m_u];
            return make(v.rep[v.min_atom], h.rep[atom], *u_best, h.win_stripe[atom]);
        }
        if ((v.present[m_u >> 6] & bit) && m_u >= h.min_rank) {
            std::uint32_t atom = v.rank_atom[m_u];
            return make(v.rep[atom], h.rep[h.min_atom], *u_best, v.win_stripe[atom]);
        }
    }

    // horizontal against vertical: any shared priority at or above m_u
    std::int64_t common = detail::highest_common_rank(h.present, v.present, m_u);
    if (common != kNegInf) {
        std::uint32_t ha = h.rank_atom[common], va = v.rank_atom[common];
        return make(v.rep[va], h.rep[ha], h.win_stripe[ha], v.win_stripe[va]);
    }
    return std::nullopt;
}

}  // namespace rectfilter
