#pragma once

// Command-line dispatch. Results go to `out` (or --out), progress and
// diagnostics to `err`. Exit codes: 0 success, 1 search exhausted,
// 2 capacity exceeded, 3 precision budget exhausted, 64 usage.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "rootsum/config.hpp"
#include "rootsum/driver.hpp"
#include "rootsum/errors.hpp"
#include "rootsum/greedy.hpp"
#include "rootsum/pairs.hpp"
#include "rootsum/pigeonhole.hpp"
#include "rootsum/ring.hpp"
#include "rootsum/series.hpp"

namespace rootsum::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_not_found = 1;
inline constexpr int exit_capacity = 2;
inline constexpr int exit_budget = 3;
inline constexpr int exit_usage = 64;

/// Version of the JSON output layouts described in the README.
inline constexpr int schema_version = 1;

struct Config {
    std::uint64_t enum_cap = default_enum_cap;
    long bit_budget = default_bit_budget;
    std::string cache_dir;
    std::string format;
    unsigned jobs = 1;
    int verbosity = 0;

    SearchOptions search() const { return {enum_cap, jobs, bit_budget}; }
};

inline std::filesystem::path ladder_cache_file(const std::string& dir, int tau, std::uint64_t enum_cap) {
    return std::filesystem::path(dir) / ("ladder-tau" + std::to_string(tau) + "-cap" + std::to_string(enum_cap) + ".jsonl");
}

/// Ladder source backed by JSON-lines files in a cache directory. Entries that
/// fail re-validation are discarded and rebuilt.
class CachedLadders {
public:
    CachedLadders(Config cfg, std::ostream& log) : cfg_(std::move(cfg)), log_(&log) {}

    std::vector<LadderEntry> operator()(const Basis& basis, int J) {
        std::lock_guard lock(mu_);
        std::vector<LadderEntry> have;
        std::filesystem::path file;
        if (!cfg_.cache_dir.empty()) {
            file = ladder_cache_file(cfg_.cache_dir, basis.tau, cfg_.enum_cap);
            have = load(file, basis);
        }
        if (static_cast<int>(have.size()) >= J) {
            have.resize(static_cast<std::size_t>(J));
            return have;
        }
        const SearchOptions opts = cfg_.search();
        for (int j = static_cast<int>(have.size()) + 1; j <= J; ++j) {
            if (cfg_.verbosity > 0) *log_ << "ladder: tau=" << basis.tau << " level " << j << '\n';
            const SmallFracWitness w = dirichlet_search(basis, std::uint64_t{1} << j, opts);
            have.push_back(make_ladder_entry(basis, j, w.w, opts.bit_budget));
        }
        if (!file.empty()) store(file, have);
        return have;
    }

private:
    std::vector<LadderEntry> load(const std::filesystem::path& file, const Basis& basis) const {
        std::vector<LadderEntry> out;
        std::ifstream in(file);
        if (!in) return out;
        try {
            for (auto& e : read_ladder_jsonl(in)) {
                if (e.j != static_cast<int>(out.size()) + 1 || e.x.tau() != basis.tau || !ladder_entry_valid(e, cfg_.bit_budget)) break;
                out.push_back(std::move(e));
            }
        } catch (const std::exception& ex) {
            *log_ << "ladder cache " << file.string() << " ignored: " << ex.what() << '\n';
        }
        return out;
    }

    void store(const std::filesystem::path& file, const std::vector<LadderEntry>& entries) const {
        std::error_code ec;
        std::filesystem::create_directories(file.parent_path(), ec);
        const std::filesystem::path tmp = file.string() + ".tmp." + std::to_string(::getpid());
        {
            std::ofstream os(tmp, std::ios::trunc);
            if (!os) {
                *log_ << "ladder cache " << file.string() << " not writable\n";
                return;
            }
            write_ladder_jsonl(os, entries);
        }
        std::filesystem::rename(tmp, file, ec);
        if (ec) {
            *log_ << "ladder cache " << file.string() << " not updated: " << ec.message() << '\n';
            std::filesystem::remove(tmp, ec);
        }
    }

    Config cfg_;
    std::ostream* log_;
    std::mutex mu_;
};

namespace detail {

inline std::vector<std::uint64_t> parse_n_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
            throw usage_error("bad --n-list entry '" + item + "'");
        }
        out.push_back(std::stoull(item));
    }
    if (out.empty()) throw usage_error("--n-list is empty");
    return out;
}

inline mpq_class parse_rational(const std::string& text, const char* what) {
    mpq_class q;
    if (q.set_str(text, 10) != 0 || q.get_den() == 0) throw usage_error(std::string("bad ") + what + ": " + text);
    q.canonicalize();
    return q;
}

/// "a,d,c;a,d,c;..." with rational a, c and integer d.
inline std::vector<SqrtTerm> parse_probe(const std::string& text) {
    std::vector<SqrtTerm> out;
    std::stringstream ss(text);
    std::string term;
    while (std::getline(ss, term, ';')) {
        std::vector<std::string> parts;
        std::stringstream ts(term);
        std::string p;
        while (std::getline(ts, p, ',')) parts.push_back(p);
        if (parts.size() != 3) throw usage_error("probe terms are a,d,c separated by ';'");
        SqrtTerm t;
        t.a = parse_rational(parts[0], "probe coefficient");
        try {
            t.d = std::stol(parts[1]);
        } catch (const std::exception&) {
            throw usage_error("bad probe shift: " + parts[1]);
        }
        t.c = parse_rational(parts[2], "probe perturbation");
        out.push_back(std::move(t));
    }
    if (out.empty()) throw usage_error("--probe is empty");
    return out;
}

inline std::string fixed6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

} // namespace detail

/// Runs one command line (without the program name).
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sums of square roots close to integers or to a target", "rootsum"};
    app.require_subcommand(1);
    app.fallthrough();

    Config cfg;
    if (const char* env = std::getenv("ROOTSUM_CACHE_DIR")) cfg.cache_dir = env;
    int tau = 1, k = 1, levels = 0, T = 1, order = 4;
    std::uint64_t n = 0;
    std::string alpha = "0", n_list_text, out_path, mode = "t2", eps_text = "1/4", probe;

    app.add_option("--tau", tau, "number of primes")->check(CLI::Range(1, max_tau));
    app.add_option("--k", k, "number of square roots or decay exponent")->check(CLI::PositiveNumber);
    app.add_option("--n", n, "size bound");
    app.add_option("--alpha", alpha, "target: decimal, p/q, pi, e or sqrt2");
    app.add_option("--n-list", n_list_text, "comma-separated ascending n values");
    app.add_option("--enum-cap", cfg.enum_cap, "maximum enumerated points")->check(CLI::PositiveNumber);
    app.add_option("--bits", cfg.bit_budget, "precision budget in bits")->check(CLI::Range(64L, 1L << 24));
    app.add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::Range(1u, 1024u));
    app.add_option("--out", out_path, "write results here instead of stdout");
    app.add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--cache-dir", cfg.cache_dir, "ladder cache directory (default $ROOTSUM_CACHE_DIR)");
    app.add_flag("-v,--verbose", cfg.verbosity, "progress on stderr");

    auto* basis_cmd = app.add_subcommand("basis-info", "list the basis radicands for --tau");
    auto* pigeon_cmd = app.add_subcommand("pigeonhole", "small fractional part with height <= --n");
    auto* ladder_cmd = app.add_subcommand("ladder", "build the descent ladder for --tau");
    ladder_cmd->add_option("--levels", levels, "number of levels")->required()->check(CLI::Range(1, 62));
    auto* approx_cmd = app.add_subcommand("approx", "k square roots of integers <= --n close to --alpha mod 1");
    auto* scan_cmd = app.add_subcommand("scan", "error scan over --n-list");
    scan_cmd->add_option("--mode", mode, "t1 (integer instances) or t2 (targeting)")->check(CLI::IsMember({"t1", "t2"}));
    auto* t1_cmd = app.add_subcommand("theorem1", "integer instance whose fractional part decays like n^-k");
    auto* t1v_cmd = app.add_subcommand("theorem1-verify", "certified fractional parts of the --k instance over --n-list");
    for (auto* c : {t1_cmd, t1v_cmd, scan_cmd}) {
        c->add_option("--T", T, "tracked orders beyond the leading one")->check(CLI::Range(1, 16));
        c->add_option("--eps", eps_text, "tolerance p/q");
    }
    auto* gap_cmd = app.add_subcommand("min-gap", "exhaustive minimum distance to the integers for height <= --n");
    auto* series_cmd = app.add_subcommand("series", "exact expansion of a sum of a*sqrt((n+d)^2+c)");
    series_cmd->add_option("--probe", probe, "terms a,d,c separated by ';'")->required();
    series_cmd->add_option("--order", order, "truncation order")->check(CLI::Range(1, 64));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return exit_usage;
    }

    std::ofstream file_out;
    std::ostream* os = &out;
    if (!out_path.empty()) {
        file_out.open(out_path, std::ios::trunc);
        if (!file_out) {
            err << "error: cannot open " << out_path << '\n';
            return exit_usage;
        }
        os = &file_out;
    }

    auto require_n = [&](std::uint64_t min) {
        if (n < min) throw usage_error("--n must be at least " + std::to_string(min));
    };
    auto only_json = [&] {
        if (cfg.format == "csv") throw usage_error("this command only writes JSON");
    };
    // Every JSON document leads with "schema": "rootsum.<kind>/1".
    auto emit = [&](const char* kind, const nlohmann::ordered_json& body) {
        nlohmann::ordered_json j;
        j["schema"] = std::string("rootsum.") + kind + "/" + std::to_string(schema_version);
        for (const auto& [key, value] : body.items()) j[key] = value;
        *os << j.dump() << '\n';
    };
    CachedLadders ladders(cfg, err);
    LadderSource source = [&](const Basis& b, int J) { return ladders(b, J); };

    try {
        const SearchOptions opts = cfg.search();
        if (basis_cmd->parsed()) {
            only_json();
            const Basis& b = basis_for(tau);
            nlohmann::ordered_json j;
            j["tau"] = tau;
            j["primes"] = b.primes;
            j["products"] = b.products;
            emit("basis", j);
        } else if (pigeon_cmd->parsed()) {
            only_json();
            require_n(2);
            const Basis& b = basis_for(tau);
            const SmallFracWitness w = dirichlet_search(b, n, opts);
            nlohmann::ordered_json j;
            j["w"] = to_json(w.w);
            j["dist"] = to_json(w.dist);
            j["bound"] = std::to_string(n) + "^-" + std::to_string(irrational_dim(b));
            j["bound_value"] = pigeonhole_bound(b, n).get_str();
            j["certified"] = w.certified_upper.to_mpq() <= pigeonhole_bound(b, n);
            j["height_bound"] = w.height_bound;
            j["certified_upper"] = w.certified_upper.to_string();
            emit("pigeonhole", j);
        } else if (ladder_cmd->parsed()) {
            only_json();
            write_ladder_jsonl(*os, ladders(basis_for(tau), levels));
        } else if (approx_cmd->parsed()) {
            only_json();
            require_n(1);
            emit("approx", to_json(solve_theorem2(k, alpha, n, source, opts)));
        } else if (scan_cmd->parsed()) {
            ScanResult r;
            std::vector<std::uint64_t> ns;
            if (mode == "t1") {
                const Theorem1Instance inst = theorem1_for(k, T, detail::parse_rational(eps_text, "--eps"));
                ns = n_list_text.empty() ? default_verify_list(inst) : detail::parse_n_list(n_list_text);
                r = scan_theorem1(inst, ns, opts);
            } else {
                if (n_list_text.empty()) throw usage_error("scan --mode t2 needs --n-list");
                ns = detail::parse_n_list(n_list_text);
                r = scan_theorem2(k, alpha, ns, source, opts);
            }
            if (cfg.format == "json") {
                nlohmann::ordered_json j = scan_summary(r);
                nlohmann::ordered_json rows = nlohmann::ordered_json::array();
                for (const auto& row : r.rows) {
                    nlohmann::ordered_json x;
                    x["n"] = row.n;
                    x["err"] = to_json(row.err);
                    x["bound"] = row.bound.to_decimal();
                    if (row.slope_window) x["slope_window"] = detail::fixed6(*row.slope_window);
                    rows.push_back(std::move(x));
                }
                j["rows"] = std::move(rows);
                emit("scan", j);
            } else {
                write_scan_csv(*os, r);
                err << scan_summary(r).dump() << '\n';
            }
        } else if (t1_cmd->parsed()) {
            only_json();
            emit("theorem1", to_json(theorem1_for(k, T, detail::parse_rational(eps_text, "--eps"))));
        } else if (t1v_cmd->parsed()) {
            const Theorem1Instance inst = theorem1_for(k, T, detail::parse_rational(eps_text, "--eps"));
            const auto ns = n_list_text.empty() ? default_verify_list(inst) : detail::parse_n_list(n_list_text);
            for (auto x : ns) {
                if (x < 1) throw usage_error("n must be positive");
            }
            const VerifyTable t = theorem1_verify(inst, ns, 64, cfg.bit_budget);
            if (cfg.format == "json") {
                nlohmann::ordered_json j;
                j["instance"] = to_json(inst);
                j["slope"] = detail::fixed6(t.slope);
                nlohmann::ordered_json rows = nlohmann::ordered_json::array();
                for (const auto& row : t.rows) {
                    nlohmann::ordered_json x;
                    x["n"] = row.n;
                    x["err"] = to_json(row.err);
                    x["nk_times_err"] = detail::fixed6(row.scaled);
                    rows.push_back(std::move(x));
                }
                j["rows"] = std::move(rows);
                emit("theorem1-verify", j);
            } else {
                *os << "n,err_lo,err_hi,n^k_times_err\n";
                char buf[64];
                for (const auto& row : t.rows) {
                    std::snprintf(buf, sizeof buf, "%.12g", row.scaled);
                    *os << row.n << ',' << row.err.lo.to_decimal() << ',' << row.err.hi.to_decimal() << ',' << buf << '\n';
                }
                err << "slope " << detail::fixed6(t.slope) << '\n';
            }
        } else if (gap_cmd->parsed()) {
            only_json();
            require_n(1);
            const Basis& b = basis_for(tau);
            const MinDistResult r = brute_min_dist(b, n, opts);
            nlohmann::ordered_json j;
            j["tau"] = tau;
            j["n"] = n;
            j["w"] = to_json(r.w);
            j["dist"] = to_json(r.dist);
            mpz_class p;
            mpz_ui_pow_ui(p.get_mpz_t(), n, static_cast<unsigned long>(irrational_dim(b)));
            j["scaled_dist"] = Dyadic::floor_at(mpq_class(p) * r.dist.lo.to_mpq(), 64).to_decimal();
            emit("min-gap", j);
        } else if (series_cmd->parsed()) {
            only_json();
            const TruncatedSeries s = series_sum(detail::parse_probe(probe), order);
            nlohmann::ordered_json j;
            j["order"] = order;
            nlohmann::ordered_json c = nlohmann::ordered_json::object();
            for (int d = -1; d <= order; ++d) c[std::to_string(d)] = s[d].get_str();
            j["coeffs"] = std::move(c);
            emit("series", j);
        }
    } catch (const capacity_error& e) {
        err << "capacity: " << e.what() << '\n';
        return exit_capacity;
    } catch (const budget_error& e) {
        err << "precision: " << e.what() << '\n';
        return exit_budget;
    } catch (const not_found_error& e) {
        err << "not found: " << e.what() << '\n';
        return exit_not_found;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return exit_usage;
    }
    os->flush();
    return exit_ok;
}

} // namespace rootsum::cli
