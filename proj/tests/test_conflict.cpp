#include <catch2/catch_amalgamated.hpp>

#include "rectfilter/conflict.hpp"
#include "rectfilter/oracle.hpp"
#include "test_util.hpp"

using namespace rectfilter;

namespace {

RuleSet make(int bits, std::vector<std::tuple<Priority, AddressRange, AddressRange>> rows,
             std::vector<std::string> actions = {}) {
    RuleSet rs;
    rs.universe_bits = bits;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto [p, s, d] = rows[i];
        rs.rules.push_back({static_cast<RuleId>(i), p, s, d,
                            i < actions.size() ? actions[i] : "permit"});
    }
    return rs;
}

bool witness_holds(const RuleSet& rs, const ConflictWitness& w) {
    bool found = false;
    Priority best = 0;
    bool a = false, b = false;
    for (const Rule& r : rs.rules) {
        if (!r.matches(w.x, w.y))
            continue;
        if (!found || r.priority > best) {
            found = true;
            best = r.priority;
            a = b = false;
        }
        if (r.priority == best) {
            a |= r.id == w.rule_a;
            b |= r.id == w.rule_b;
        }
    }
    return found && best == w.priority && a && b && w.rule_a != w.rule_b;
}

}  // namespace

TEST_CASE("overlapping equal-priority pair conflicts") {
    RuleSet rs = make(5, {{1, {0, 10}, {0, 10}}, {1, {5, 15}, {5, 15}}});
    auto rep = detect_conflict(rs, {.debug_checks = true});
    REQUIRE(rep.witness.has_value());
    CHECK(rep.witness->rule_a == 0);
    CHECK(rep.witness->rule_b == 1);
    CHECK(witness_holds(rs, *rep.witness));
    CHECK((rep.witness->x >= 5 && rep.witness->x <= 10));
    CHECK((rep.witness->y >= 5 && rep.witness->y <= 10));
}

TEST_CASE("a higher-priority cover suppresses the conflict") {
    RuleSet rs = make(5, {{1, {0, 10}, {0, 10}},
                          {1, {5, 15}, {5, 15}},
                          {2, {5, 10}, {5, 10}}});
    CHECK_FALSE(detect_conflict(rs, {.debug_checks = true}).witness.has_value());
}

TEST_CASE("degenerate rule sets") {
    CHECK_FALSE(detect_conflict(RuleSet{8, {}}).witness.has_value());
    RuleSet one = make(8, {{3, {0, 9}, {0, 9}}});
    CHECK_FALSE(detect_conflict(one).witness.has_value());

    RuleSet bad = make(8, {{1, {9, 3}, {0, 1}}});
    CHECK_THROWS_AS(detect_conflict(bad), std::invalid_argument);
}

TEST_CASE("adversarial fixtures") {
    SECTION("identical rectangles") {
        RuleSet rs = make(8, {{4, {3, 9}, {5, 11}}, {4, {3, 9}, {5, 11}}});
        auto rep = detect_conflict(rs, {.debug_checks = true});
        REQUIRE(rep.witness.has_value());
        CHECK(witness_holds(rs, *rep.witness));
    }
    SECTION("shared edge only") {
        RuleSet rs = make(8, {{4, {0, 5}, {0, 9}}, {4, {5, 12}, {0, 9}}});
        auto rep = detect_conflict(rs, {.debug_checks = true});
        REQUIRE(rep.witness.has_value());
        CHECK(rep.witness->x == 5);
        CHECK(witness_holds(rs, *rep.witness));
    }
    SECTION("corner contact only") {
        // the two rules share exactly one point
        RuleSet rs = make(8, {{4, {0, 5}, {0, 7}}, {4, {5, 12}, {7, 15}}});
        auto rep = detect_conflict(rs, {.debug_checks = true});
        REQUIRE(rep.witness.has_value());
        CHECK(rep.witness->x == 5);
        CHECK(rep.witness->y == 7);
        CHECK(witness_holds(rs, *rep.witness));
    }
    SECTION("corner contact with other corners interior") {
        RuleSet rs = make(8, {{4, {5, 10}, {7, 20}}, {4, {0, 5}, {0, 7}}});
        auto rep = detect_conflict(rs, {.debug_checks = true});
        REQUIRE(rep.witness.has_value());
        CHECK(witness_holds(rs, *rep.witness));
    }
    SECTION("point rectangles") {
        RuleSet rs = make(8, {{4, {6, 6}, {6, 6}}, {4, {6, 6}, {6, 6}}});
        auto rep = detect_conflict(rs, {.debug_checks = true});
        REQUIRE(rep.witness.has_value());
        CHECK(rep.witness->x == 6);
        CHECK(rep.witness->y == 6);
    }
    SECTION("tie fully dominated by an identical higher-priority rule") {
        RuleSet rs = make(8, {{4, {0, 9}, {0, 9}}, {4, {0, 9}, {0, 9}}, {9, {0, 9}, {0, 9}}});
        CHECK_FALSE(detect_conflict(rs, {.debug_checks = true}).witness.has_value());
    }
    SECTION("point rectangle meeting a large rule") {
        RuleSet rs = make(8, {{4, {6, 6}, {6, 6}}, {4, {0, 20}, {0, 20}}});
        auto rep = detect_conflict(rs, {.debug_checks = true});
        REQUIRE(rep.witness.has_value());
        CHECK(rep.witness->x == 6);
        CHECK(rep.witness->y == 6);
        CHECK(witness_holds(rs, *rep.witness));
    }
    SECTION("nested CIDR stack") {
        RuleSet rs;
        rs.universe_bits = 16;
        for (int len = 0; len <= 16; ++len)
            rs.rules.push_back({static_cast<RuleId>(len), static_cast<Priority>(len),
                                prefix_to_range(0x1234 & ~((1u << (16 - len)) - 1), len, 16),
                                prefix_to_range(0, 0, 16), "permit"});
        CHECK_FALSE(detect_conflict(rs, {.debug_checks = true}).witness.has_value());
        // duplicate the innermost rule: a tie right at the stack's top
        rs.rules.push_back({17, 16, rs.rules[16].src, rs.rules[16].dst, "deny"});
        auto rep = detect_conflict(rs, {.debug_checks = true});
        REQUIRE(rep.witness.has_value());
        CHECK(witness_holds(rs, *rep.witness));
    }
}

TEST_CASE("random rule sets agree with the candidate-grid oracle") {
    testutil::Rng rng(19);
    int conflicts = 0;
    for (int trial = 0; trial < 500; ++trial) {
        int bits = 5 + static_cast<int>(rng.below(6));
        std::size_t n = 1 + rng.below(40);
        // few priority levels to force ties
        RuleSet rs = testutil::random_ruleset(rng, n, bits, trial % 2 == 0, 3);
        auto rep = detect_conflict(rs, {.debug_checks = true});
        auto want = oracle::naive_conflict(rs);
        REQUIRE(rep.witness.has_value() == want.has_value());
        if (rep.witness) {
            ++conflicts;
            CHECK(witness_holds(rs, *rep.witness));
        }
    }
    CHECK(conflicts > 50);
}

TEST_CASE("crossing-list space stays linear") {
    testutil::Rng rng(20);
    for (std::size_t n : {200u, 800u}) {
        RuleSet rs = testutil::random_ruleset(rng, n, 16, true, 32);
        DetectOptions opts;
        opts.exhaustive = true;
        auto rep = detect_conflict(rs, opts);
        CHECK(rep.counters.peak_resident <= 16 * n + 64);
        CHECK(rep.counters.leaves_visited > 0);
    }
}

TEST_CASE("filtered detection honors the action predicate") {
    auto differs = [](const std::string& a, const std::string& b) { return a != b; };

    RuleSet same = make(8, {{4, {0, 9}, {0, 9}}, {4, {0, 9}, {0, 9}}}, {"permit", "permit"});
    CHECK_FALSE(detect_conflict_filtered(same, differs).witness.has_value());

    RuleSet mixed = make(8, {{4, {0, 9}, {0, 9}}, {4, {0, 9}, {0, 9}}}, {"permit", "deny"});
    auto rep = detect_conflict_filtered(mixed, differs);
    REQUIRE(rep.witness.has_value());
    CHECK(rep.witness->rule_a == 0);
    CHECK(rep.witness->rule_b == 1);

    CHECK_FALSE(detect_conflict_filtered(RuleSet{8, {}}, differs).witness.has_value());

    // identical-action pair masks a differing pair underneath
    RuleSet layered = make(8, {{9, {0, 9}, {0, 9}},
                               {9, {0, 9}, {0, 9}},
                               {2, {0, 5}, {0, 5}},
                               {2, {3, 8}, {3, 8}}},
                           {"permit", "permit", "permit", "deny"});
    auto rep2 = detect_conflict_filtered(layered, differs);
    REQUIRE(rep2.witness.has_value());
    CHECK(rep2.witness->rule_a == 2);
    CHECK(rep2.witness->rule_b == 3);
}

TEST_CASE("exhaustive mode visits every leaf and still reports the witness") {
    testutil::Rng rng(21);
    RuleSet rs = testutil::random_ruleset(rng, 60, 10, false, 2);
    auto eager = detect_conflict(rs);
    DetectOptions opts;
    opts.exhaustive = true;
    auto full = detect_conflict(rs, opts);
    CHECK(eager.witness.has_value() == full.witness.has_value());
    CHECK(full.counters.leaves_visited >= eager.counters.leaves_visited);
    if (eager.witness)
        CHECK(witness_holds(rs, *full.witness));
}
