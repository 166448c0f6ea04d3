#pragma once

// Rule-file and packet-trace formats plus the deterministic generator.
//
// Rule file: optional leading `universe_bits <int>` header (default 32),
// then one rule per line:
//   priority <int> src <cidr-or-range> dst <cidr-or-range> action <token>
// Ranges are `lo-hi` in decimal; CIDR is `a.b.c.d/len` (32-bit universes)
// or `0xHEX/len`. `#` starts a comment; blank lines are ignored.
// Packet traces carry one `src dst` pair per line, same address literals.

#include <bit>
#include <charconv>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rectfilter/core.hpp"

namespace rectfilter {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

namespace detail {

inline bool parse_u64(std::string_view s, std::uint64_t& out, int base = 10) {
    if (s.empty())
        return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
    return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace detail

// decimal, 0xHEX, or dotted-quad address literal
inline Addr parse_address(std::string_view tok, int universe_bits, std::size_t line) {
    Addr v = 0;
    if (tok.find('.') != std::string_view::npos) {
        std::uint64_t octet[4];
        std::size_t pos = 0;
        for (int i = 0; i < 4; ++i) {
            std::size_t dot = i < 3 ? tok.find('.', pos) : tok.size();
            if (dot == std::string_view::npos ||
                !detail::parse_u64(tok.substr(pos, dot - pos), octet[i]) || octet[i] > 255)
                throw ParseError(line, "bad dotted address '" + std::string(tok) + "'");
            pos = dot + 1;
        }
        v = (octet[0] << 24) | (octet[1] << 16) | (octet[2] << 8) | octet[3];
    } else if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X')) {
        if (!detail::parse_u64(tok.substr(2), v, 16))
            throw ParseError(line, "bad hex address '" + std::string(tok) + "'");
    } else if (!detail::parse_u64(tok, v)) {
        throw ParseError(line, "bad address '" + std::string(tok) + "'");
    }
    if (v > universe_max(universe_bits))
        throw ParseError(line, "address '" + std::string(tok) + "' exceeds the universe");
    return v;
}

// `lo-hi` decimal range or `<address>/<len>` prefix
inline AddressRange parse_range_token(std::string_view tok, int universe_bits, std::size_t line) {
    std::size_t slash = tok.find('/');
    if (slash != std::string_view::npos) {
        Addr base = parse_address(tok.substr(0, slash), universe_bits, line);
        std::uint64_t len = 0;
        if (!detail::parse_u64(tok.substr(slash + 1), len) ||
            len > static_cast<std::uint64_t>(universe_bits))
            throw ParseError(line, "bad prefix length in '" + std::string(tok) + "'");
        return prefix_to_range(base, static_cast<int>(len), universe_bits);
    }
    std::size_t dash = tok.find('-');
    if (dash == std::string_view::npos)
        throw ParseError(line, "expected lo-hi or cidr, got '" + std::string(tok) + "'");
    std::uint64_t lo = 0, hi = 0;
    if (!detail::parse_u64(tok.substr(0, dash), lo) || !detail::parse_u64(tok.substr(dash + 1), hi))
        throw ParseError(line, "bad range '" + std::string(tok) + "'");
    if (lo > hi)
        throw ParseError(line, "inverted range '" + std::string(tok) + "'");
    if (hi > universe_max(universe_bits))
        throw ParseError(line, "range '" + std::string(tok) + "' exceeds the universe");
    return AddressRange{lo, hi};
}

inline RuleSet parse_rule_file(std::istream& in) {
    RuleSet rs;
    bool saw_rule = false, saw_header = false;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (std::size_t hash = raw.find('#'); hash != std::string::npos)
            raw.erase(hash);
        std::istringstream line(raw);
        std::string word;
        if (!(line >> word))
            continue;
        if (word == "universe_bits") {
            if (saw_header || saw_rule)
                throw ParseError(line_no, "universe_bits must appear once, before any rule");
            std::uint64_t bits = 0;
            std::string tok;
            if (!(line >> tok) || !detail::parse_u64(tok, bits) || bits < 1 || bits > 64)
                throw ParseError(line_no, "bad universe_bits value");
            rs.universe_bits = static_cast<int>(bits);
            saw_header = true;
            continue;
        }
        if (word != "priority")
            throw ParseError(line_no, "expected 'priority', got '" + word + "'");
        Rule r;
        r.id = static_cast<RuleId>(rs.rules.size());
        std::string prio_tok, key, src_tok, dst_tok;
        if (!(line >> prio_tok) || !detail::parse_u64(prio_tok, r.priority))
            throw ParseError(line_no, "bad priority");
        if (!(line >> key) || key != "src" || !(line >> src_tok))
            throw ParseError(line_no, "expected 'src <range>'");
        r.src = parse_range_token(src_tok, rs.universe_bits, line_no);
        if (!(line >> key) || key != "dst" || !(line >> dst_tok))
            throw ParseError(line_no, "expected 'dst <range>'");
        r.dst = parse_range_token(dst_tok, rs.universe_bits, line_no);
        if (!(line >> key) || key != "action" || !(line >> r.action))
            throw ParseError(line_no, "expected 'action <token>'");
        if (line >> key)
            throw ParseError(line_no, "trailing token '" + key + "'");
        rs.rules.push_back(std::move(r));
        saw_rule = true;
    }
    return rs;
}

inline std::vector<Packet> parse_packet_trace(std::istream& in, int universe_bits) {
    std::vector<Packet> pkts;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (std::size_t hash = raw.find('#'); hash != std::string::npos)
            raw.erase(hash);
        std::istringstream line(raw);
        std::string s, d, extra;
        if (!(line >> s))
            continue;
        if (!(line >> d))
            throw ParseError(line_no, "expected 'src dst'");
        if (line >> extra)
            throw ParseError(line_no, "trailing token '" + extra + "'");
        pkts.push_back({parse_address(s, universe_bits, line_no),
                        parse_address(d, universe_bits, line_no)});
    }
    return pkts;
}

inline std::string format_address(Addr a, int universe_bits) {
    if (universe_bits == 32) {
        std::ostringstream out;
        out << ((a >> 24) & 255) << '.' << ((a >> 16) & 255) << '.' << ((a >> 8) & 255) << '.'
            << (a & 255);
        return out.str();
    }
    std::ostringstream out;
    out << "0x" << std::hex << std::uppercase << a;
    return out.str();
}

inline std::string format_range(const AddressRange& r, int universe_bits) {
    // prefix-aligned ranges print as CIDR, everything else as lo-hi
    Addr span = r.hi - r.lo;  // width - 1
    if ((span & (span + 1)) == 0 && (r.lo & span) == 0) {
        int len = universe_bits - std::popcount(span);
        if (len >= 0)
            return format_address(r.lo, universe_bits) + "/" + std::to_string(len);
    }
    return std::to_string(r.lo) + "-" + std::to_string(r.hi);
}

inline void write_rule_file(std::ostream& out, const RuleSet& rs) {
    out << "universe_bits " << rs.universe_bits << "\n";
    for (const Rule& r : rs.rules) {
        out << "priority " << r.priority << " src " << format_range(r.src, rs.universe_bits)
            << " dst " << format_range(r.dst, rs.universe_bits) << " action " << r.action << "\n";
    }
}

struct GenConfig {
    std::size_t n = 0;
    std::uint64_t seed = 1;
    enum class Model { cidr, uniform } model = Model::cidr;
    std::uint64_t priority_levels = 16;
    int universe_bits = 32;
};

// mt19937_64 raw output with modulo keeps generation byte-identical across
// platforms (std distributions are implementation-defined, the engine is not)
inline RuleSet generate_ruleset(const GenConfig& cfg) {
    std::mt19937_64 eng(cfg.seed);
    auto below = [&](std::uint64_t bound) { return bound ? eng() % bound : 0; };
    Addr umax = universe_max(cfg.universe_bits);
    auto draw_addr = [&] { return umax == ~Addr{0} ? eng() : eng() % (umax + 1); };
    RuleSet rs;
    rs.universe_bits = cfg.universe_bits;
    for (std::size_t i = 0; i < cfg.n; ++i) {
        Rule r;
        r.id = static_cast<RuleId>(i);
        r.priority = below(cfg.priority_levels);
        for (AddressRange* ar : {&r.src, &r.dst}) {
            if (cfg.model == GenConfig::Model::cidr) {
                int len = static_cast<int>(below(cfg.universe_bits + 1));
                *ar = prefix_to_range(draw_addr(), len, cfg.universe_bits);
            } else {
                Addr a = draw_addr();
                Addr b = draw_addr();
                *ar = {std::min(a, b), std::max(a, b)};
            }
        }
        r.action = (eng() & 1) ? "deny" : "permit";
        rs.rules.push_back(std::move(r));
    }
    return rs;
}

}  // namespace rectfilter
