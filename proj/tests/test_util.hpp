#pragma once

#include <cstdint>
#include <vector>

#include "rectfilter/core.hpp"

namespace testutil {

// splitmix64; deterministic across platforms and stdlib versions
struct Rng {
    std::uint64_t s;
    explicit Rng(std::uint64_t seed) : s(seed + 0x9E3779B97F4A7C15ull) {}
    std::uint64_t next() {
        std::uint64_t z = (s += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    std::uint64_t below(std::uint64_t bound) { return bound ? next() % bound : 0; }
};

inline rectfilter::AddressRange random_range(Rng& rng, rectfilter::Addr umax) {
    rectfilter::Addr a = rng.below(umax + 1);
    rectfilter::Addr b = rng.below(umax + 1);
    return {std::min(a, b), std::max(a, b)};
}

inline rectfilter::AddressRange random_cidr(Rng& rng, int bits) {
    int len = static_cast<int>(rng.below(bits + 1));
    rectfilter::Addr addr = rng.below(rectfilter::universe_max(bits) + 1);
    return rectfilter::prefix_to_range(addr, len, bits);
}

inline rectfilter::RuleSet random_ruleset(Rng& rng, std::size_t n, int bits, bool cidr,
                                          std::uint64_t priority_levels) {
    rectfilter::RuleSet rs;
    rs.universe_bits = bits;
    rectfilter::Addr umax = rectfilter::universe_max(bits);
    for (std::size_t i = 0; i < n; ++i) {
        rectfilter::Rule r;
        r.id = static_cast<rectfilter::RuleId>(i);
        r.priority = rng.below(priority_levels);
        r.src = cidr ? random_cidr(rng, bits) : random_range(rng, umax);
        r.dst = cidr ? random_cidr(rng, bits) : random_range(rng, umax);
        r.action = (rng.next() & 1) ? "permit" : "deny";
        rs.rules.push_back(std::move(r));
    }
    return rs;
}

// Query coordinates worth probing: every rule boundary and its neighbors.
inline std::vector<rectfilter::Addr> boundary_coords(const rectfilter::RuleSet& rs, bool x_axis) {
    rectfilter::Addr umax = rectfilter::universe_max(rs.universe_bits);
    std::vector<rectfilter::Addr> out;
    for (const rectfilter::Rule& r : rs.rules) {
        for (rectfilter::Addr b : {x_axis ? r.src.lo : r.dst.lo, x_axis ? r.src.hi : r.dst.hi}) {
            out.push_back(b);
            if (b > 0) out.push_back(b - 1);
            if (b < umax) out.push_back(b + 1);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace testutil
