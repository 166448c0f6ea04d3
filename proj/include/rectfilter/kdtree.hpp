#pragma once

// kD-tree over a 2-D point set with alternating median splits. Cells are
// closed integer rectangles; the two children of a split share the split
// coordinate on their common boundary. A cell is split while its open
// interior contains at least one input point, so every leaf interior is
// point-free; points on a cell boundary are dropped from the working set
// since no descendant can contain them strictly.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "rectfilter/core.hpp"

namespace rectfilter {

struct Point {
    Addr x = 0;
    Addr y = 0;
    friend bool operator==(const Point&, const Point&) = default;
};

enum class RectRelation { disjoint, crosses, covers };

// covers: cell entirely inside r. crosses: r meets the cell's open interior
// without covering. Degenerate cells have an empty interior and classify as
// disjoint unless covered.
inline RectRelation classify_rect(const Rect& cell, const Rect& r) {
    if (r.xlo <= cell.xlo && cell.xhi <= r.xhi && r.ylo <= cell.ylo && cell.yhi <= r.yhi)
        return RectRelation::covers;
    bool x_open = cell.xlo < cell.xhi && r.xhi > cell.xlo && r.xlo < cell.xhi;
    bool y_open = cell.ylo < cell.yhi && r.yhi > cell.ylo && r.ylo < cell.yhi;
    return x_open && y_open ? RectRelation::crosses : RectRelation::disjoint;
}

class KdTree {
public:
    struct Node {
        Rect rect;
        std::uint32_t depth = 0;
        int split_axis = -1;  // -1 leaf, 0 x, 1 y
        Addr split_coord = 0;
        std::int32_t child[2] = {-1, -1};

        bool is_leaf() const { return split_axis < 0; }
    };

    // Points may repeat; duplicates are removed first. An empty input yields
    // a single leaf over `empty_fallback`.
    static KdTree build(std::vector<Point> points, Rect empty_fallback = Rect{}) {
        KdTree t;
        std::sort(points.begin(), points.end(), [](const Point& a, const Point& b) {
            return a.x != b.x ? a.x < b.x : a.y < b.y;
        });
        points.erase(std::unique(points.begin(), points.end()), points.end());

        Rect root = empty_fallback;
        if (!points.empty()) {
            root = Rect{points[0].x, points[0].x, points[0].y, points[0].y};
            for (const Point& p : points) {
                root.xlo = std::min(root.xlo, p.x);
                root.xhi = std::max(root.xhi, p.x);
                root.ylo = std::min(root.ylo, p.y);
                root.yhi = std::max(root.yhi, p.y);
            }
        }
        t.nodes_.push_back({root, 0});
        t.build_rec(0, points.begin(), points.end(), points);
        return t;
    }

    const Node& node(std::size_t i) const { return nodes_[i]; }
    const Node& root() const { return nodes_[0]; }
    std::size_t node_count() const { return nodes_.size(); }

    std::size_t leaf_count() const {
        std::size_t n = 0;
        for (const Node& nd : nodes_)
            n += nd.is_leaf();
        return n;
    }

    std::uint32_t max_depth() const {
        std::uint32_t d = 0;
        for (const Node& nd : nodes_)
            d = std::max(d, nd.depth);
        return d;
    }

    // Number of cells at all levels whose open interior the axis-aligned
    // line meets (axis 0: vertical line x = coordinate; axis 1: horizontal).
    std::uint64_t cells_cut_by_line(int axis, Addr coordinate) const {
        return count_cut(0, axis, coordinate);
    }

private:
    using Iter = std::vector<Point>::iterator;

    void build_rec(std::size_t node_idx, Iter first, Iter last, std::vector<Point>& pts) {
        const Rect rect = nodes_[node_idx].rect;
        const std::uint32_t depth = nodes_[node_idx].depth;
        // keep only points strictly inside this cell
        Iter mid = std::partition(first, last, [&](const Point& p) {
            return rect.xlo < p.x && p.x < rect.xhi && rect.ylo < p.y && p.y < rect.yhi;
        });
        if (first == mid)
            return;  // leaf: interior is point-free
        int axis = depth % 2 == 0 ? 0 : 1;
        auto key = [axis](const Point& p) { return axis == 0 ? p.x : p.y; };
        Iter median = first + (std::distance(first, mid) - 1) / 2;  // lower median
        std::nth_element(first, median, mid, [&](const Point& a, const Point& b) {
            return key(a) < key(b);
        });
        Addr s = key(*median);

        Node& nd = nodes_[node_idx];
        nd.split_axis = axis;
        nd.split_coord = s;
        Rect lo_rect = rect, hi_rect = rect;
        if (axis == 0) {
            lo_rect.xhi = s;
            hi_rect.xlo = s;
        } else {
            lo_rect.yhi = s;
            hi_rect.ylo = s;
        }
        // points on the split line sit on both children's boundary; drop them
        Iter lo_end = std::partition(first, mid, [&](const Point& p) { return key(p) < s; });
        Iter hi_beg = std::partition(lo_end, mid, [&](const Point& p) { return key(p) == s; });

        std::int32_t lo_idx = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back({lo_rect, depth + 1});
        std::int32_t hi_idx = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back({hi_rect, depth + 1});
        nodes_[node_idx].child[0] = lo_idx;
        nodes_[node_idx].child[1] = hi_idx;
        build_rec(lo_idx, first, lo_end, pts);
        build_rec(hi_idx, hi_beg, mid, pts);
    }

    std::uint64_t count_cut(std::size_t idx, int axis, Addr c) const {
        const Node& nd = nodes_[idx];
        const Rect& r = nd.rect;
        bool cut = axis == 0 ? (r.xlo < c && c < r.xhi && r.ylo < r.yhi)
                             : (r.ylo < c && c < r.yhi && r.xlo < r.xhi);
        if (!cut)
            return 0;
        std::uint64_t total = 1;
        if (!nd.is_leaf()) {
            total += count_cut(nd.child[0], axis, c);
            total += count_cut(nd.child[1], axis, c);
        }
        return total;
    }

    std::vector<Node> nodes_;
};

}  // namespace rectfilter
