#include <catch2/catch_amalgamated.hpp>

#include "rectfilter/stripes.hpp"
#include "test_util.hpp"

using namespace rectfilter;

namespace {

// assemble a bundle from loose stripes (sorting is the caller's job in
// production; here we build the orders explicitly)
StripeBundle make_bundle(std::vector<Stripe> stripes, Rect cell) {
    StripeBundle b;
    b.cell = cell;
    b.stripes = std::move(stripes);
    for (std::uint32_t i = 0; i < b.stripes.size(); ++i)
        b.priority_order.push_back(i);
    std::stable_sort(b.priority_order.begin(), b.priority_order.end(),
                     [&](std::uint32_t x, std::uint32_t y) {
                         return b.stripes[x].priority < b.stripes[y].priority;
                     });
    for (std::uint32_t i = 0; i < b.stripes.size(); ++i) {
        const Stripe& s = b.stripes[i];
        if (s.kind == StripeKind::horizontal) {
            b.h_boundaries.push_back({s.lo, i, false});
            b.h_boundaries.push_back({s.hi, i, true});
        } else if (s.kind == StripeKind::vertical) {
            b.v_boundaries.push_back({s.lo, i, false});
            b.v_boundaries.push_back({s.hi, i, true});
        }
    }
    auto by_value = [](const StripeBoundary& a, const StripeBoundary& b2) {
        return a.value < b2.value;
    };
    std::stable_sort(b.h_boundaries.begin(), b.h_boundaries.end(), by_value);
    std::stable_sort(b.v_boundaries.begin(), b.v_boundaries.end(), by_value);
    return b;
}

// ground truth: evaluate every integer point of the cell
std::optional<ConflictWitness> grid_oracle(const StripeBundle& b) {
    for (Addr x = b.cell.xlo; x <= b.cell.xhi; ++x)
        for (Addr y = b.cell.ylo; y <= b.cell.yhi; ++y) {
            bool found = false;
            Priority best = 0;
            std::vector<std::uint32_t> at_best;
            for (std::uint32_t i = 0; i < b.stripes.size(); ++i) {
                const Stripe& s = b.stripes[i];
                bool hit = s.kind == StripeKind::universal ||
                           (s.kind == StripeKind::horizontal ? (s.lo <= y && y <= s.hi)
                                                             : (s.lo <= x && x <= s.hi));
                if (!hit)
                    continue;
                if (!found || s.priority > best) {
                    found = true;
                    best = s.priority;
                    at_best = {i};
                } else if (s.priority == best) {
                    at_best.push_back(i);
                }
            }
            if (found && at_best.size() >= 2)
                return ConflictWitness{x, y, b.stripes[at_best[0]].rule,
                                       b.stripes[at_best[1]].rule, best};
        }
    return std::nullopt;
}

bool witness_holds(const StripeBundle& b, const ConflictWitness& w) {
    if (!b.cell.contains(w.x, w.y) || w.rule_a == w.rule_b)
        return false;
    bool saw_a = false, saw_b = false;
    for (const Stripe& s : b.stripes) {
        bool hit = s.kind == StripeKind::universal ||
                   (s.kind == StripeKind::horizontal ? (s.lo <= w.y && w.y <= s.hi)
                                                     : (s.lo <= w.x && w.x <= s.hi));
        if (!hit)
            continue;
        if (s.priority > w.priority)
            return false;  // something higher covers the point
        if (s.priority == w.priority) {
            saw_a |= s.rule == w.rule_a;
            saw_b |= s.rule == w.rule_b;
        }
    }
    return saw_a && saw_b;
}

}  // namespace

TEST_CASE("two horizontal stripes tying on an overlap") {
    Rect cell{0, 9, 0, 9};
    auto b = make_bundle({{0, StripeKind::horizontal, 0, 4, 5},
                          {1, StripeKind::horizontal, 3, 8, 5}},
                         cell);
    auto w = detect_stripe_conflict(b, true);
    REQUIRE(w.has_value());
    CHECK(w->rule_a == 0);
    CHECK(w->rule_b == 1);
    CHECK(w->priority == 5);
    CHECK((w->y >= 3 && w->y <= 4));
    CHECK(witness_holds(b, *w));
}

TEST_CASE("a dominant universal stripe suppresses the tie") {
    Rect cell{0, 9, 0, 9};
    auto b = make_bundle({{0, StripeKind::horizontal, 0, 4, 5},
                          {1, StripeKind::horizontal, 3, 8, 5},
                          {2, StripeKind::universal, 0, 0, 9}},
                         cell);
    CHECK_FALSE(detect_stripe_conflict(b, true).has_value());
}

TEST_CASE("horizontal and vertical stripes of equal priority conflict") {
    Rect cell{0, 9, 0, 9};
    auto b = make_bundle({{0, StripeKind::horizontal, 0, 3, 7},
                          {1, StripeKind::vertical, 2, 5, 7}},
                         cell);
    auto w = detect_stripe_conflict(b, true);
    REQUIRE(w.has_value());
    CHECK((w->x >= 2 && w->x <= 5));
    CHECK((w->y >= 0 && w->y <= 3));
    CHECK(w->priority == 7);
    CHECK(witness_holds(b, *w));
}

TEST_CASE("two identical universal stripes conflict anywhere") {
    Rect cell{10, 20, 30, 40};
    auto b = make_bundle({{0, StripeKind::universal, 0, 0, 4},
                          {1, StripeKind::universal, 0, 0, 4}},
                         cell);
    auto w = detect_stripe_conflict(b, true);
    REQUIRE(w.has_value());
    CHECK(w->priority == 4);
    CHECK(witness_holds(b, *w));
}

TEST_CASE("universal against a partition carrying its priority") {
    Rect cell{0, 9, 0, 9};
    // horizontal at the universal's priority wins somewhere, no vertical cover
    auto b = make_bundle({{0, StripeKind::horizontal, 2, 6, 4},
                          {1, StripeKind::universal, 0, 0, 4}},
                         cell);
    auto w = detect_stripe_conflict(b, true);
    REQUIRE(w.has_value());
    CHECK(witness_holds(b, *w));

    // same but a stronger vertical stripe shields every x... only a proper
    // subset of the cell can be shielded, so the conflict survives off it
    auto b2 = make_bundle({{0, StripeKind::horizontal, 2, 6, 4},
                           {1, StripeKind::universal, 0, 0, 4},
                           {2, StripeKind::vertical, 0, 8, 9}},
                          cell);
    auto w2 = detect_stripe_conflict(b2, true);
    REQUIRE(w2.has_value());
    CHECK(w2->x == 9);
    CHECK(witness_holds(b2, *w2));
}

TEST_CASE("closed extents that merely touch do tie at the shared point") {
    Rect cell{0, 9, 0, 9};
    auto b = make_bundle({{0, StripeKind::horizontal, 0, 4, 5},
                          {1, StripeKind::horizontal, 4, 8, 5}},
                         cell);
    auto w = detect_stripe_conflict(b, true);
    REQUIRE(w.has_value());
    CHECK(w->y == 4);
    CHECK(witness_holds(b, *w));

    // adjacent but not touching: no shared integer point, no conflict
    auto b2 = make_bundle({{0, StripeKind::horizontal, 0, 4, 5},
                           {1, StripeKind::horizontal, 5, 8, 5}},
                          cell);
    CHECK_FALSE(detect_stripe_conflict(b2, true).has_value());
}

TEST_CASE("ambiguity confined to a gap with no integer points is not a conflict") {
    // the wide pair ties only strictly between y=3 and y=4 once the
    // dominators split the integer points among themselves
    Rect cell{0, 9, 0, 10};
    auto b = make_bundle({{0, StripeKind::horizontal, 0, 9, 5},
                          {1, StripeKind::horizontal, 0, 9, 5},
                          {2, StripeKind::horizontal, 0, 3, 9},
                          {3, StripeKind::horizontal, 4, 10, 9}},
                         cell);
    CHECK_FALSE(detect_stripe_conflict(b, true).has_value());
    CHECK_FALSE(grid_oracle(b).has_value());
}

TEST_CASE("random bundles agree with the dense grid oracle") {
    testutil::Rng rng(18);
    int conflicts = 0;
    for (int trial = 0; trial < 1500; ++trial) {
        Addr side = 3 + rng.below(28);
        Rect cell{0, side, 0, side};
        std::vector<Stripe> stripes;
        std::size_t count = 1 + rng.below(12);
        for (std::uint32_t i = 0; i < count; ++i) {
            Stripe s;
            s.rule = i;
            s.priority = rng.below(4);
            switch (rng.below(3)) {
                case 0:
                    s.kind = StripeKind::universal;
                    break;
                case 1: {
                    s.kind = StripeKind::horizontal;
                    // proper subset of the cell's y range
                    Addr a = rng.below(side + 1), b2 = rng.below(side + 1);
                    s.lo = std::min(a, b2);
                    s.hi = std::max(a, b2);
                    if (s.lo == cell.ylo && s.hi == cell.yhi)
                        s.hi -= 1;
                    break;
                }
                default: {
                    s.kind = StripeKind::vertical;
                    Addr a = rng.below(side + 1), b2 = rng.below(side + 1);
                    s.lo = std::min(a, b2);
                    s.hi = std::max(a, b2);
                    if (s.lo == cell.xlo && s.hi == cell.xhi)
                        s.hi -= 1;
                    break;
                }
            }
            stripes.push_back(s);
        }
        StripeBundle b = make_bundle(std::move(stripes), cell);
        auto got = detect_stripe_conflict(b, true);
        auto want = grid_oracle(b);
        REQUIRE(got.has_value() == want.has_value());
        if (got) {
            ++conflicts;
            CHECK(witness_holds(b, *got));
        }
    }
    CHECK(conflicts > 100);  // the sweep must actually exercise conflicts
}
