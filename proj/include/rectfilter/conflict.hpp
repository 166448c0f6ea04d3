#pragma once

// Whole-rule-set conflict detection: kD-tree over rectangle corners, depth
// first traversal carrying per-cell cover/crossing state, stripe detection at
// every leaf. Runs in roughly n*sqrt(n) stripe operations and linear space.
//
// All geometry here lives in a per-axis doubled-rank coordinate space:
// breakpoints are the sorted distinct {lo} u {hi+1} values of the rules, a
// rule maps to [2*rank(lo), 2*rank(hi+1) - 1], and doubled coordinate z maps
// back to breaks[z/2]. Containment of every integer point is preserved
// exactly, while rules that merely touch (shared edge or corner) gain a
// full-dimensional overlap strictly between grid lines, where no kd split
// can separate them. That keeps boundary-contact ties visible to some leaf,
// which closed cells with interior-overlap tests alone would miss.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rectfilter/core.hpp"
#include "rectfilter/kdtree.hpp"
#include "rectfilter/stripes.hpp"

namespace rectfilter {

struct DetectOptions {
    bool exhaustive = false;    // keep traversing after the first witness
    bool debug_checks = false;  // re-verify stripe bundle orderings per leaf
};

struct ConflictCounters {
    std::uint64_t leaves_visited = 0;
    std::uint64_t stripes_processed = 0;
    std::uint64_t peak_resident = 0;  // max total live crossing+boundary entries
    std::uint64_t kd_nodes = 0;
};

struct ConflictReport {
    std::optional<ConflictWitness> witness;
    ConflictCounters counters;
};

namespace detail {

struct AxisComp {
    std::vector<Addr> breaks;

    void build(const RuleSet& rs, bool x_axis) {
        Addr umax = universe_max(rs.universe_bits);
        breaks.clear();
        breaks.reserve(rs.rules.size() * 2);
        for (const Rule& r : rs.rules) {
            const AddressRange& a = x_axis ? r.src : r.dst;
            breaks.push_back(a.lo);
            if (a.hi < umax)
                breaks.push_back(a.hi + 1);
        }
        std::sort(breaks.begin(), breaks.end());
        breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    }

    Addr dlo(Addr lo) const {
        std::size_t r = std::lower_bound(breaks.begin(), breaks.end(), lo) - breaks.begin();
        return 2 * static_cast<Addr>(r);
    }
    Addr dhi(Addr hi, Addr umax) const {
        std::size_t e = hi == umax
                            ? breaks.size()
                            : static_cast<std::size_t>(
                                  std::lower_bound(breaks.begin(), breaks.end(), hi + 1) -
                                  breaks.begin());
        return 2 * static_cast<Addr>(e) - 1;
    }
    Addr to_raw(Addr z) const { return breaks[z / 2]; }
};

struct BoundaryEntry {
    Addr value = 0;
    std::uint32_t rule = 0;  // index into the detector's rule array
    bool is_hi = false;
};

struct CellContext {
    std::vector<std::uint32_t> crossing;  // rule indices, ascending (priority, id)
    std::vector<BoundaryEntry> hb;        // crossing rules' y bounds, sorted
    std::vector<BoundaryEntry> vb;        // crossing rules' x bounds, sorted
    std::optional<std::pair<Priority, RuleId>> cover_best;
    std::optional<RuleId> cover_second;  // second distinct rule at the same priority
};

class Detector {
public:
    Detector(const RuleSet& rs, const DetectOptions& opts) : rs_(rs), opts_(opts) {}

    ConflictReport run() {
        ValidationReport vr = validate(rs_);
        if (!vr.empty())
            throw std::invalid_argument("invalid rule set: " + vr.front().message);
        if (rs_.rules.empty())
            return {};

        xcomp_.build(rs_, true);
        ycomp_.build(rs_, false);
        Addr umax = universe_max(rs_.universe_bits);
        drects_.reserve(rs_.rules.size());
        std::vector<Point> corners;
        corners.reserve(rs_.rules.size() * 4);
        for (const Rule& r : rs_.rules) {
            Rect d{xcomp_.dlo(r.src.lo), xcomp_.dhi(r.src.hi, umax), ycomp_.dlo(r.dst.lo),
                   ycomp_.dhi(r.dst.hi, umax)};
            drects_.push_back(d);
            corners.push_back({d.xlo, d.ylo});
            corners.push_back({d.xlo, d.yhi});
            corners.push_back({d.xhi, d.ylo});
            corners.push_back({d.xhi, d.yhi});
        }
        tree_ = KdTree::build(std::move(corners));
        report_.counters.kd_nodes = tree_.node_count();
        mark_.assign(rs_.rules.size(), 0);

        CellContext root;
        for (std::uint32_t i = 0; i < rs_.rules.size(); ++i)
            root.crossing.push_back(i);
        std::sort(root.crossing.begin(), root.crossing.end(),
                  [&](std::uint32_t a, std::uint32_t b) {
                      if (rs_.rules[a].priority != rs_.rules[b].priority)
                          return rs_.rules[a].priority < rs_.rules[b].priority;
                      return rs_.rules[a].id < rs_.rules[b].id;
                  });
        // peel off rules covering the root (bounding box equal to the rule)
        std::vector<std::uint32_t> crossing;
        for (std::uint32_t ri : root.crossing) {
            switch (classify_rect(tree_.root().rect, drects_[ri])) {
                case RectRelation::covers:
                    add_cover(root, ri);
                    break;
                case RectRelation::crosses:
                    crossing.push_back(ri);
                    break;
                case RectRelation::disjoint:
                    throw std::logic_error("rule disjoint from its own bounding box");
            }
        }
        root.crossing = std::move(crossing);
        for (std::uint32_t ri : root.crossing) {
            root.hb.push_back({drects_[ri].ylo, ri, false});
            root.hb.push_back({drects_[ri].yhi, ri, true});
            root.vb.push_back({drects_[ri].xlo, ri, false});
            root.vb.push_back({drects_[ri].xhi, ri, true});
        }
        auto by_value = [](const BoundaryEntry& a, const BoundaryEntry& b) {
            if (a.value != b.value)
                return a.value < b.value;
            if (a.rule != b.rule)
                return a.rule < b.rule;
            return a.is_hi < b.is_hi;
        };
        std::sort(root.hb.begin(), root.hb.end(), by_value);
        std::sort(root.vb.begin(), root.vb.end(), by_value);

        acquire(root);
        walk(0, root);
        return std::move(report_);
    }

private:
    std::uint64_t context_size(const CellContext& c) const {
        return c.crossing.size() + c.hb.size() + c.vb.size();
    }
    void acquire(const CellContext& c) {
        resident_ += context_size(c);
        report_.counters.peak_resident = std::max(report_.counters.peak_resident, resident_);
    }
    void release(CellContext& c) {
        resident_ -= context_size(c);
        c = CellContext{};
    }

    void add_cover(CellContext& c, std::uint32_t ri) {
        Priority p = rs_.rules[ri].priority;
        RuleId id = rs_.rules[ri].id;
        if (!c.cover_best || p > c.cover_best->first) {
            c.cover_best = {p, id};
            c.cover_second.reset();
        } else if (p == c.cover_best->first && id != c.cover_best->second) {
            RuleId lo = std::min(c.cover_best->second, id);
            RuleId hi = std::max(c.cover_best->second, id);
            c.cover_best->second = lo;
            if (!c.cover_second || hi < *c.cover_second)
                c.cover_second = hi;
        }
    }

    void walk(std::size_t node_idx, CellContext& ctx) {
        const KdTree::Node& nd = tree_.node(node_idx);
        if (nd.is_leaf()) {
            evaluate_leaf(nd.rect, ctx);
            release(ctx);
            return;
        }
        CellContext children[2];
        for (int side = 0; side < 2; ++side) {
            const Rect& crect = tree_.node(nd.child[side]).rect;
            CellContext& ch = children[side];
            ch.cover_best = ctx.cover_best;
            ch.cover_second = ctx.cover_second;
            std::uint32_t token = next_token_++;
            for (std::uint32_t ri : ctx.crossing) {
                switch (classify_rect(crect, drects_[ri])) {
                    case RectRelation::covers:
                        add_cover(ch, ri);
                        break;
                    case RectRelation::crosses:
                        ch.crossing.push_back(ri);
                        mark_[ri] = token;
                        break;
                    case RectRelation::disjoint:
                        break;
                }
            }
            for (const BoundaryEntry& e : ctx.hb)
                if (mark_[e.rule] == token)
                    ch.hb.push_back(e);
            for (const BoundaryEntry& e : ctx.vb)
                if (mark_[e.rule] == token)
                    ch.vb.push_back(e);
            acquire(ch);
        }
        release(ctx);
        walk(nd.child[0], children[0]);
        if (report_.witness && !opts_.exhaustive) {
            release(children[1]);
            return;
        }
        walk(nd.child[1], children[1]);
    }

    void evaluate_leaf(const Rect& cell, CellContext& ctx) {
        ++report_.counters.leaves_visited;
        if (report_.witness && !opts_.exhaustive)
            return;

        StripeBundle b;
        b.cell = cell;
        std::uint32_t token = next_token_++;
        stripe_of_.resize(mark_.size());
        for (std::uint32_t ri : ctx.crossing) {
            const Rect& d = drects_[ri];
            bool spans_x = d.xlo <= cell.xlo && d.xhi >= cell.xhi;
            bool spans_y = d.ylo <= cell.ylo && d.yhi >= cell.yhi;
            if (spans_x == spans_y)
                throw std::logic_error("crossing rule does not form a stripe");
            Stripe s;
            s.rule = rs_.rules[ri].id;
            s.priority = rs_.rules[ri].priority;
            if (spans_x) {
                s.kind = StripeKind::horizontal;
                s.lo = std::max(d.ylo, cell.ylo);
                s.hi = std::min(d.yhi, cell.yhi);
            } else {
                s.kind = StripeKind::vertical;
                s.lo = std::max(d.xlo, cell.xlo);
                s.hi = std::min(d.xhi, cell.xhi);
            }
            mark_[ri] = token;
            stripe_of_[ri] = static_cast<std::uint32_t>(b.stripes.size());
            b.priority_order.push_back(static_cast<std::uint32_t>(b.stripes.size()));
            b.stripes.push_back(s);
        }
        // universal stripes from the covering pair, merged by priority
        std::vector<std::uint32_t> universal;
        if (ctx.cover_best) {
            universal.push_back(static_cast<std::uint32_t>(b.stripes.size()));
            b.stripes.push_back({ctx.cover_best->second, StripeKind::universal, 0, 0,
                                 ctx.cover_best->first});
            if (ctx.cover_second) {
                universal.push_back(static_cast<std::uint32_t>(b.stripes.size()));
                b.stripes.push_back({*ctx.cover_second, StripeKind::universal, 0, 0,
                                     ctx.cover_best->first});
            }
        }
        if (!universal.empty()) {
            std::vector<std::uint32_t> merged;
            merged.reserve(b.priority_order.size() + universal.size());
            std::size_t ui = 0;
            for (std::uint32_t si : b.priority_order) {
                while (ui < universal.size() &&
                       b.stripes[universal[ui]].priority <= b.stripes[si].priority)
                    merged.push_back(universal[ui++]);
                merged.push_back(si);
            }
            while (ui < universal.size())
                merged.push_back(universal[ui++]);
            b.priority_order = std::move(merged);
        }
        for (const BoundaryEntry& e : ctx.hb) {
            if (mark_[e.rule] != token ||
                b.stripes[stripe_of_[e.rule]].kind != StripeKind::horizontal)
                continue;
            Addr v = std::clamp(e.value, cell.ylo, cell.yhi);
            b.h_boundaries.push_back({v, stripe_of_[e.rule], e.is_hi});
        }
        for (const BoundaryEntry& e : ctx.vb) {
            if (mark_[e.rule] != token ||
                b.stripes[stripe_of_[e.rule]].kind != StripeKind::vertical)
                continue;
            Addr v = std::clamp(e.value, cell.xlo, cell.xhi);
            b.v_boundaries.push_back({v, stripe_of_[e.rule], e.is_hi});
        }

        report_.counters.stripes_processed += b.stripes.size();
        auto wit = detect_stripe_conflict(b, opts_.debug_checks);
        if (!wit)
            return;
        ConflictWitness w = *wit;
        w.x = xcomp_.to_raw(w.x);
        w.y = ycomp_.to_raw(w.y);
        if (!revalidate(w))
            throw std::logic_error("stripe witness failed whole-set revalidation");
        if (!report_.witness)
            report_.witness = w;
    }

    bool revalidate(const ConflictWitness& w) const {
        bool found = false;
        Priority best = 0;
        bool a_at_best = false, b_at_best = false;
        for (const Rule& r : rs_.rules) {
            if (!(r.src.lo <= w.x && w.x <= r.src.hi && r.dst.lo <= w.y && w.y <= r.dst.hi))
                continue;
            if (!found || r.priority > best) {
                found = true;
                best = r.priority;
                a_at_best = b_at_best = false;
            }
            if (r.priority == best) {
                a_at_best |= r.id == w.rule_a;
                b_at_best |= r.id == w.rule_b;
            }
        }
        return found && best == w.priority && a_at_best && b_at_best && w.rule_a != w.rule_b;
    }

    const RuleSet& rs_;
    DetectOptions opts_;
    AxisComp xcomp_, ycomp_;
    std::vector<Rect> drects_;
    KdTree tree_;
    std::vector<std::uint32_t> mark_;
    std::vector<std::uint32_t> stripe_of_;
    std::uint32_t next_token_ = 1;
    std::uint64_t resident_ = 0;
    ConflictReport report_;
};

}  // namespace detail

// Decide whether the rule set has a point with no unique maximum-priority
// matching rule; the returned witness is re-checked against every rule.
inline ConflictReport detect_conflict(const RuleSet& rs, const DetectOptions& opts = {}) {
    return detail::Detector(rs, opts).run();
}

// Geometric detection filtered by an action predicate: when a witness pair's
// actions do not conflict, one member is removed and detection re-runs, at
// most n times. The result is a conflict of the surviving subset.
inline ConflictReport detect_conflict_filtered(
    const RuleSet& rs, const std::function<bool(const std::string&, const std::string&)>& differs,
    const DetectOptions& opts = {}) {
    RuleSet working = rs;
    ConflictReport last;
    for (std::size_t round = 0; round <= rs.rules.size(); ++round) {
        // re-densify ids for the working subset, remembering the originals
        std::vector<RuleId> slot_to_orig(working.rules.size());
        for (std::size_t i = 0; i < working.rules.size(); ++i) {
            slot_to_orig[i] = working.rules[i].id;
            working.rules[i].id = static_cast<RuleId>(i);
        }
        ConflictReport rep = detect_conflict(working, opts);
        last.counters.leaves_visited += rep.counters.leaves_visited;
        last.counters.stripes_processed += rep.counters.stripes_processed;
        last.counters.peak_resident =
            std::max(last.counters.peak_resident, rep.counters.peak_resident);
        last.counters.kd_nodes = std::max(last.counters.kd_nodes, rep.counters.kd_nodes);
        if (!rep.witness)
            return last;
        RuleId a = rep.witness->rule_a, b = rep.witness->rule_b;
        if (differs(working.rules[a].action, working.rules[b].action)) {
            last.witness = rep.witness;
            last.witness->rule_a = std::min(slot_to_orig[a], slot_to_orig[b]);
            last.witness->rule_b = std::max(slot_to_orig[a], slot_to_orig[b]);
            return last;
        }
        // drop the higher-id member of the non-conflicting pair and retry
        working.rules.erase(working.rules.begin() + b);
        for (std::size_t i = 0; i < working.rules.size(); ++i)
            working.rules[i].id = slot_to_orig[i < b ? i : i + 1];
    }
    return last;
}

}  // namespace rectfilter
