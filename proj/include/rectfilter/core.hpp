#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rectfilter {

using Addr = std::uint64_t;
using Priority = std::uint64_t;
using RuleId = std::uint32_t;

// Largest address representable with the given universe width.
inline Addr universe_max(int universe_bits) {
    if (universe_bits < 1 || universe_bits > 64)
        throw std::invalid_argument("universe_bits must be in [1, 64]");
    return universe_bits == 64 ? ~Addr{0} : ((Addr{1} << universe_bits) - 1);
}

// Closed integer range [lo, hi].
struct AddressRange {
    Addr lo = 0;
    Addr hi = 0;

    bool contains(Addr p) const { return lo <= p && p <= hi; }
    Addr width_minus_one() const { return hi - lo; }

    friend bool operator==(const AddressRange&, const AddressRange&) = default;
};

// Closed integer rectangle; x grows rightward, y upward.
struct Rect {
    Addr xlo = 0, xhi = 0, ylo = 0, yhi = 0;

    bool contains(Addr x, Addr y) const {
        return xlo <= x && x <= xhi && ylo <= y && y <= yhi;
    }
    friend bool operator==(const Rect&, const Rect&) = default;
};

// A prioritized filter rule: src range on the x axis, dst range on the y axis.
struct Rule {
    RuleId id = 0;
    Priority priority = 0;
    AddressRange src;
    AddressRange dst;
    std::string action;

    Rect rect() const { return Rect{src.lo, src.hi, dst.lo, dst.hi}; }
    bool matches(Addr sx, Addr dy) const { return src.contains(sx) && dst.contains(dy); }

    friend bool operator==(const Rule&, const Rule&) = default;
};

struct RuleSet {
    int universe_bits = 32;
    std::vector<Rule> rules;

    friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

struct Packet {
    Addr src = 0;
    Addr dst = 0;
};

// A point plus two rules that tie at maximum priority there.
struct ConflictWitness {
    Addr x = 0;
    Addr y = 0;
    RuleId rule_a = 0;
    RuleId rule_b = 0;
    Priority priority = 0;
};

// Expand `addr` masked to its first `prefix_len` bits into the covered range:
// low bits cleared for lo, set for hi.
inline AddressRange prefix_to_range(Addr addr, int prefix_len, int universe_bits) {
    Addr umax = universe_max(universe_bits);
    if (prefix_len < 0 || prefix_len > universe_bits)
        throw std::out_of_range("prefix length exceeds universe width");
    if (addr > umax)
        throw std::out_of_range("address outside universe");
    int host_bits = universe_bits - prefix_len;
    Addr host_mask = host_bits == 64 ? ~Addr{0} : ((Addr{1} << host_bits) - 1);
    return AddressRange{addr & ~host_mask, addr | host_mask};
}

struct Violation {
    std::size_t rule_index = 0;
    std::string message;
};

using ValidationReport = std::vector<Violation>;

// Report every rule-set invariant violation; empty report means the set is valid.
inline ValidationReport validate(const RuleSet& rs) {
    ValidationReport report;
    if (rs.universe_bits < 1 || rs.universe_bits > 64) {
        report.push_back({0, "universe_bits out of [1, 64]"});
        return report;
    }
    Addr umax = universe_max(rs.universe_bits);
    std::vector<char> seen(rs.rules.size(), 0);
    for (std::size_t i = 0; i < rs.rules.size(); ++i) {
        const Rule& r = rs.rules[i];
        for (const AddressRange* ar : {&r.src, &r.dst}) {
            if (ar->lo > ar->hi)
                report.push_back({i, "inverted range"});
            else if (ar->hi > umax)
                report.push_back({i, "exceeds universe"});
        }
        if (r.id >= rs.rules.size())
            report.push_back({i, "id outside dense range"});
        else if (seen[r.id]++)
            report.push_back({i, "duplicate id"});
    }
    return report;
}

// True iff every pair of ranges is nested or disjoint.
inline bool is_laminar(const std::vector<AddressRange>& ranges) {
    std::vector<AddressRange> sorted = ranges;
    std::sort(sorted.begin(), sorted.end(), [](const AddressRange& a, const AddressRange& b) {
        return a.lo != b.lo ? a.lo < b.lo : a.hi > b.hi;
    });
    std::vector<AddressRange> stack;
    for (const AddressRange& r : sorted) {
        while (!stack.empty() && stack.back().hi < r.lo)
            stack.pop_back();
        if (!stack.empty() && r.hi > stack.back().hi)
            return false;  // partial overlap
        stack.push_back(r);
    }
    return true;
}

}  // namespace rectfilter
