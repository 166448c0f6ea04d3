#include <catch2/catch_amalgamated.hpp>

#include "rectfilter/core.hpp"
#include "test_util.hpp"

using namespace rectfilter;

TEST_CASE("prefix_to_range expands masked addresses") {
    CHECK(prefix_to_range(160, 4, 8) == AddressRange{160, 175});
    CHECK(prefix_to_range(0, 0, 8) == AddressRange{0, 255});
    CHECK(prefix_to_range(0xC0A80000, 16, 32) == AddressRange{0xC0A80000, 0xC0A8FFFF});
    CHECK(prefix_to_range(7, 8, 8) == AddressRange{7, 7});
    CHECK(prefix_to_range(0, 0, 64) == AddressRange{0, ~Addr{0}});
}

TEST_CASE("prefix_to_range rejects out-of-range input") {
    CHECK_THROWS_AS(prefix_to_range(0, 9, 8), std::out_of_range);
    CHECK_THROWS_AS(prefix_to_range(256, 4, 8), std::out_of_range);
    CHECK_THROWS_AS(prefix_to_range(0, -1, 8), std::out_of_range);
}

TEST_CASE("prefix_to_range width and laminarity properties") {
    testutil::Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        int bits = 1 + static_cast<int>(rng.below(32));
        int len = static_cast<int>(rng.below(bits + 1));
        Addr addr = rng.below(universe_max(bits) + 1);
        AddressRange r = prefix_to_range(addr, len, bits);
        REQUIRE(r.lo <= r.hi);
        CHECK(r.hi - r.lo + 1 == Addr{1} << (bits - len));
        CHECK(r.contains(addr));
    }
    // any family produced solely by prefix_to_range is laminar
    std::vector<AddressRange> family;
    for (int i = 0; i < 120; ++i)
        family.push_back(testutil::random_cidr(rng, 16));
    CHECK(is_laminar(family));
}

TEST_CASE("validate reports violations") {
    RuleSet rs;
    rs.universe_bits = 8;
    CHECK(validate(rs).empty());  // empty rule list

    rs.rules.push_back({0, 1, {5, 3}, {0, 1}, "permit"});
    auto report = validate(rs);
    REQUIRE(report.size() == 1);
    CHECK(report[0].message == "inverted range");

    rs.rules[0].src = {0, 256};  // one past the 8-bit universe
    report = validate(rs);
    REQUIRE(report.size() == 1);
    CHECK(report[0].message == "exceeds universe");

    rs.rules[0].src = {0, 255};
    rs.rules.push_back({0, 2, {0, 1}, {0, 1}, "deny"});
    report = validate(rs);
    REQUIRE(report.size() == 1);
    CHECK(report[0].message == "duplicate id");
}

TEST_CASE("is_laminar distinguishes nesting from partial overlap") {
    CHECK(is_laminar({{0, 7}, {0, 3}, {4, 7}}));
    CHECK_FALSE(is_laminar({{0, 5}, {3, 9}}));
    CHECK(is_laminar({}));
    CHECK(is_laminar({{2, 2}, {2, 2}}));        // identical ranges nest
    CHECK(is_laminar({{0, 9}, {0, 9}, {3, 5}}));
    CHECK_FALSE(is_laminar({{0, 5}, {5, 9}}));  // sharing one point is partial
}
