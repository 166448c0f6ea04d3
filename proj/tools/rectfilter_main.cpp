// rectfilter: classify packets against two-dimensional rule sets and audit
// them for conflicts. Exit codes: 0 success / no conflict, 1 conflict found
// or verification mismatch, 2 input error.

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "rectfilter/classifier.hpp"
#include "rectfilter/conflict.hpp"
#include "rectfilter/core.hpp"
#include "rectfilter/oracle.hpp"
#include "rectfilter/textio.hpp"

using namespace rectfilter;

namespace {

RuleSet load_rules(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "'");
    RuleSet rs = parse_rule_file(in);
    ValidationReport report = validate(rs);
    if (!report.empty()) {
        std::ostringstream msg;
        msg << "rule " << report.front().rule_index << ": " << report.front().message;
        throw std::runtime_error(msg.str());
    }
    return rs;
}

BuildMode parse_mode(const std::string& mode) {
    if (mode == "auto")
        return BuildMode::automatic;
    if (mode == "general")
        return BuildMode::general;
    if (mode == "laminar")
        return BuildMode::laminar;
    throw std::runtime_error("unknown mode '" + mode + "'");
}

int cmd_classify(const std::string& rules_path, const std::string& packets_path, int k,
                 const std::string& mode, int threads) {
    RuleSet rs = load_rules(rules_path);
    std::ifstream pin(packets_path);
    if (!pin)
        throw std::runtime_error("cannot open '" + packets_path + "'");
    std::vector<Packet> pkts = parse_packet_trace(pin, rs.universe_bits);

    PacketClassifier classifier(rs, k, parse_mode(mode));
    std::vector<std::optional<MatchResult>> results(pkts.size());
    auto worker = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            results[i] = classifier.classify(pkts[i]);
    };
    if (threads <= 1 || pkts.size() < 2) {
        worker(0, pkts.size());
    } else {
        std::size_t nt = std::min<std::size_t>(threads, pkts.size());
        std::vector<std::thread> pool;
        std::size_t chunk = (pkts.size() + nt - 1) / nt;
        for (std::size_t t = 0; t < nt; ++t)
            pool.emplace_back(worker, t * chunk, std::min(pkts.size(), (t + 1) * chunk));
        for (auto& th : pool)
            th.join();
    }

    std::vector<const Rule*> by_id(rs.rules.size());
    for (const Rule& r : rs.rules)
        by_id[r.id] = &r;
    std::ostringstream out;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i])
            out << i << " match rule=" << results[i]->rule << " prio=" << results[i]->priority
                << " action=" << by_id[results[i]->rule]->action << "\n";
        else
            out << i << " nomatch\n";
    }
    std::cout << out.str();
    return 0;
}

int cmd_conflicts(const std::string& rules_path, bool actions_differ) {
    RuleSet rs = load_rules(rules_path);
    ConflictReport report =
        actions_differ
            ? detect_conflict_filtered(
                  rs, [](const std::string& a, const std::string& b) { return a != b; })
            : detect_conflict(rs);
    if (!report.witness) {
        std::cout << "no-conflict\n";
        return 0;
    }
    const ConflictWitness& w = *report.witness;
    std::cout << "conflict point=(" << w.x << "," << w.y << ") rules=" << w.rule_a << ","
              << w.rule_b << " prio=" << w.priority << "\n";
    return 1;
}

int cmd_gen(std::size_t n, std::uint64_t seed, const std::string& model,
            std::uint64_t priority_levels, int bits) {
    GenConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    cfg.priority_levels = priority_levels;
    cfg.universe_bits = bits;
    if (model == "cidr")
        cfg.model = GenConfig::Model::cidr;
    else if (model == "uniform")
        cfg.model = GenConfig::Model::uniform;
    else
        throw std::runtime_error("unknown model '" + model + "'");
    write_rule_file(std::cout, generate_ruleset(cfg));
    return 0;
}

int cmd_verify(std::size_t n, std::uint64_t seed, std::size_t trials, bool inject_fault) {
    std::size_t classify_pass = 0, classify_fail = 0;
    std::size_t conflict_pass = 0, conflict_fail = 0;
    std::ostringstream repro;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        GenConfig cfg;
        cfg.n = n;
        cfg.seed = seed + trial;
        cfg.universe_bits = 16;
        cfg.priority_levels = 4;
        cfg.model = trial % 2 == 0 ? GenConfig::Model::cidr : GenConfig::Model::uniform;
        RuleSet rs = generate_ruleset(cfg);

        PacketClassifier classifier(rs);
        std::vector<Addr> xs, ys;
        Addr umax = universe_max(rs.universe_bits);
        for (const Rule& r : rs.rules) {
            for (Addr b : {r.src.lo, r.src.hi}) {
                xs.push_back(b);
                if (b < umax) xs.push_back(b + 1);
            }
            for (Addr b : {r.dst.lo, r.dst.hi}) {
                ys.push_back(b);
                if (b < umax) ys.push_back(b + 1);
            }
        }
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        std::sort(ys.begin(), ys.end());
        ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

        bool trial_ok = true;
        for (Addr x : xs) {
            for (Addr y : ys) {
                auto got = classifier.classify({x, y});
                auto want = oracle::naive_classify(rs, {x, y});
                bool same = got.has_value() == want.has_value() &&
                            (!got || (got->rule == want->winner && got->priority == want->priority));
                if (inject_fault && trial == 0 && x == xs.front() && y == ys.front())
                    same = false;  // test hook: force one mismatch
                if (!same) {
                    trial_ok = false;
                    if (repro.str().empty())
                        repro << "repro seed=" << cfg.seed << " trial=" << trial << " packet=("
                              << x << "," << y << ")\n";
                }
            }
        }
        trial_ok ? ++classify_pass : ++classify_fail;

        bool got_conflict = detect_conflict(rs).witness.has_value();
        bool want_conflict = oracle::naive_conflict(rs).has_value();
        if (got_conflict == want_conflict) {
            ++conflict_pass;
        } else {
            ++conflict_fail;
            if (repro.str().empty())
                repro << "repro seed=" << cfg.seed << " trial=" << trial << " conflicts\n";
        }
    }
    std::cout << "verify classify pass=" << classify_pass << " fail=" << classify_fail << "\n";
    std::cout << "verify conflicts pass=" << conflict_pass << " fail=" << conflict_fail << "\n";
    if (classify_fail + conflict_fail == 0)
        return 0;
    std::cout << repro.str();
    return 1;
}

int cmd_bench(const std::vector<std::size_t>& ns, const std::vector<int>& ks) {
    using clock = std::chrono::steady_clock;
    std::uint64_t prev_stripes = 0;
    for (std::size_t n : ns) {
        GenConfig cfg;
        cfg.n = n;
        cfg.seed = 42;
        cfg.priority_levels = 64;
        RuleSet rs = generate_ruleset(cfg);

        for (int k : ks) {
            auto t0 = clock::now();
            PacketClassifier classifier(rs, k);
            auto t1 = clock::now();
            std::mt19937_64 eng(7);
            Addr umax = universe_max(rs.universe_bits);
            const std::size_t queries = 200000;
            std::uint64_t sink = 0;
            auto t2 = clock::now();
            for (std::size_t q = 0; q < queries; ++q) {
                Packet p{eng() % (umax + 1), eng() % (umax + 1)};
                auto m = classifier.classify(p);
                sink += m ? m->rule : 0;
            }
            auto t3 = clock::now();
            double build_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            double qps = queries / std::chrono::duration<double>(t3 - t2).count();
            std::cout << "classify n=" << n << " k=" << k << " build_ms=" << std::fixed
                      << std::setprecision(1) << build_ms
                      << " bytes=" << classifier.stats().bytes_estimate << " queries_per_sec="
                      << std::setprecision(0) << qps
                      << " path_len=" << classifier.stats().max_query_path << " sink=" << sink % 10
                      << "\n";
        }

        DetectOptions opts;
        opts.exhaustive = true;
        auto c0 = clock::now();
        ConflictReport rep = detect_conflict(rs, opts);
        auto c1 = clock::now();
        double ms = std::chrono::duration<double, std::milli>(c1 - c0).count();
        std::cout << "conflict n=" << n << " ms=" << std::fixed << std::setprecision(1) << ms
                  << " stripes=" << rep.counters.stripes_processed
                  << " leaves=" << rep.counters.leaves_visited
                  << " found=" << (rep.witness ? 1 : 0) << "\n";
        std::cout << "baseline n=" << n << " grid_points=" << oracle::naive_conflict_grid_size(rs)
                  << "\n";
        if (prev_stripes)
            std::cout << "scaling n=" << n << " stripes_ratio=" << std::setprecision(2)
                      << double(rep.counters.stripes_processed) / double(prev_stripes) << "\n";
        prev_stripes = rep.counters.stripes_processed;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-dimensional packet filter classification and conflict auditing"};
    app.require_subcommand(1);

    std::string rules_path, packets_path, mode = "auto", model = "cidr";
    int k = 8, threads = 1, bits = 32;
    std::size_t n = 100, trials = 20;
    std::uint64_t seed = 1, priority_levels = 16;
    bool actions_differ = false, inject_fault = false;
    std::vector<std::size_t> bench_n{1000, 4000};
    std::vector<int> bench_k{4, 8, 16};

    auto* classify = app.add_subcommand("classify", "classify a packet trace against rules");
    classify->add_option("rules", rules_path)->required();
    classify->add_option("packets", packets_path)->required();
    classify->add_option("--k", k, "block fan-out exponent");
    classify->add_option("--mode", mode, "auto|general|laminar");
    classify->add_option("--threads", threads, "worker threads for the trace");

    auto* conflicts = app.add_subcommand("conflicts", "audit a rule set for conflicts");
    conflicts->add_option("rules", rules_path)->required();
    conflicts->add_flag("--actions-differ", actions_differ,
                        "only report pairs whose actions differ");

    auto* gen = app.add_subcommand("gen", "emit a deterministic synthetic rule set");
    gen->add_option("--n", n);
    gen->add_option("--seed", seed);
    gen->add_option("--model", model, "cidr|uniform");
    gen->add_option("--priority-levels", priority_levels);
    gen->add_option("--bits", bits);

    auto* verify = app.add_subcommand("verify", "cross-check fast paths against the oracles");
    verify->add_option("--n", n);
    verify->add_option("--seed", seed);
    verify->add_option("--trials", trials);
    verify->add_flag("--inject-fault", inject_fault)->group("");  // test hook

    auto* bench = app.add_subcommand("bench", "timing and scaling table");
    bench->add_option("--n", bench_n)->delimiter(',');
    bench->add_option("--k", bench_k)->delimiter(',');

    try {
        app.parse(argc, argv);
        if (classify->parsed())
            return cmd_classify(rules_path, packets_path, k, mode, threads);
        if (conflicts->parsed())
            return cmd_conflicts(rules_path, actions_differ);
        if (gen->parsed())
            return cmd_gen(n, seed, model, priority_levels, bits);
        if (verify->parsed())
            return cmd_verify(n, seed, trials, inject_fault);
        if (bench->parsed())
            return cmd_bench(bench_n, bench_k);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
