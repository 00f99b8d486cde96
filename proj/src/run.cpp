#include "quenchlab/run.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "quenchlab/errors.hpp"

namespace quenchlab {

namespace fs = std::filesystem;

std::string git_blob_hash(std::string_view content) {
    const std::string header = "blob " + std::to_string(content.size()) + '\0';
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
        EVP_DigestUpdate(ctx, content.data(), content.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha1 digest failed");
    }
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

std::string config_hash(const RunConfig& config) { return git_blob_hash(resolved_text(config)); }

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Collects outputs in memory, then writes them with a hash header and a manifest.
class Outputs {
public:
    Outputs(const RunConfig& config, std::string subcommand, unsigned workers)
        : config_(config), hash_(config_hash(config)), subcommand_(std::move(subcommand)), workers_(workers) {
        add("config.txt", resolved_text(config));
    }

    void add(const std::string& name, const std::string& body) {
        files_.emplace_back(name, "# config_hash=" + hash_ + "\n" + body);
    }

    template <class Fn>
    void add_with(const std::string& name, Fn&& fn) {
        std::ostringstream s;
        fn(s);
        add(name, s.str());
    }

    void commit(const fs::path& dir) const {
        fs::create_directories(dir);
        std::ostringstream manifest;
        manifest << "# quenchlab manifest\n"
                 << "config_hash=" << hash_ << '\n'
                 << "seed=" << config_.seed << '\n'
                 << "workers=" << workers_ << '\n'
                 << "subcommand=" << subcommand_ << '\n';
        for (const auto& [name, body] : files_) {
            std::ofstream out(dir / name, std::ios::binary);
            out << body;
            if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
            manifest << "file=" << name << ' ' << git_blob_hash(body) << '\n';
        }
        std::istringstream cfg(resolved_text(config_));
        for (std::string line; std::getline(cfg, line);) manifest << "config." << line << '\n';
        std::ofstream out(dir / "manifest.txt", std::ios::binary);
        out << manifest.str();
        if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.txt").string());
    }

private:
    const RunConfig& config_;
    std::string hash_;
    std::string subcommand_;
    unsigned workers_;
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string verdict_text(const RunVerdict& v) {
    std::ostringstream s;
    s.precision(17);
    s << "status=" << to_string(v.status) << '\n'
      << "end_time=" << v.end_time << '\n'
      << "drift=" << v.drift << '\n'
      << "boundary_touched=" << (v.boundary_touched ? "true" : "false") << '\n'
      << "wallclock_hit=" << (v.wallclock_hit ? "true" : "false") << '\n'
      << "sup_final=" << (v.trace.empty() ? 0.0 : v.trace.back().sup) << '\n';
    return s.str();
}

std::string mc_text(const McEstimate& e) {
    std::ostringstream s;
    s.precision(17);
    s << "value=" << e.value << '\n' << "std_error=" << e.std_error << '\n' << "n=" << e.n << '\n';
    return s.str();
}

// Snapshots at the configured cadence, kept in memory until commit.
StepObserver snapshot_observer(Outputs& out, const Grid& grid, double interval) {
    if (!(interval > 0.0)) return {};
    auto next = std::make_shared<double>(interval);
    auto count = std::make_shared<int>(0);
    return [&out, grid, interval, next, count](const Field& f) {
        if (f.time + 1e-12 < *next) return;
        while (*next <= f.time + 1e-12) *next += interval;
        char name[32];
        std::snprintf(name, sizeof name, "snapshot_%04d.txt", ++*count);
        out.add_with(name, [&](std::ostream& s) { write_snapshot(s, f, grid); });
    };
}

std::vector<SupSample> read_sup_trace(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::vector<SupSample> trace;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line.rfind("t,sup", 0) != 0) throw ConfigError("trace CSV must start with columns t,sup");
            header = true;
            continue;
        }
        std::istringstream row(line);
        SupSample s;
        char comma = 0;
        if (!(row >> s.t >> comma >> s.sup) || comma != ',') throw ConfigError("malformed trace row: " + line);
        trace.push_back(s);
    }
    if (trace.empty()) throw ConfigError("trace CSV holds no samples");
    return trace;
}

bool certifiable(const Scenario& s) {
    return s.reaction.alpha() > 2.0 && s.flow.kind() != FlowKind::Periodic2D &&
           reaction_envelope_check(s.reaction, EnvelopeDirection::Upper).ok;
}

int run_solve(const RunConfig& cfg, Outputs& out) {
    const Scenario s = make_scenario(cfg);
    const Grid grid = scenario_grid(s);
    const RunVerdict v = run_scenario(s, snapshot_observer(out, grid, cfg.snapshot_interval));
    out.add_with("trace.csv", [&](std::ostream& o) { write_trace_csv(o, v.trace); });
    out.add_with("final.txt", [&](std::ostream& o) { write_snapshot(o, v.final_state, grid); });
    out.add("verdict.txt", verdict_text(v));
    std::optional<Certificate> cert = v.certificate;
    if (!cert && classify(v.status) == Outcome::Quench && certifiable(s)) {
        cert = datum_certificate(s, cfg.cert_horizon > 0.0 ? cfg.cert_horizon : cfg.horizon / 4.0);
    }
    if (cert) out.add_with("certificate.txt", [&](std::ostream& o) { write_certificate(o, *cert); });
    return 0;
}

int run_linear(const RunConfig& cfg, Outputs& out) {
    const Scenario s = make_scenario(cfg);
    const Grid grid = build_grid(s.grid, s.flow, zero_reaction());
    const RunVerdict v = linear_solve(initial_field(grid, s.init), s.flow, grid, s.horizon,
                                      s.detectors.trace_interval, snapshot_observer(out, grid, cfg.snapshot_interval));
    out.add_with("trace.csv", [&](std::ostream& o) { write_trace_csv(o, v.trace); });
    out.add_with("final.txt", [&](std::ostream& o) { write_snapshot(o, v.final_state, grid); });
    out.add("verdict.txt", verdict_text(v));
    return 0;
}

int run_certify(const RunConfig& cfg, Outputs& out) {
    const Scenario s = make_scenario(cfg);
    Certificate cert;
    if (!cfg.cert_trace.empty()) {
        const auto trace = read_sup_trace(cfg.cert_trace);
        TailSpec tail;
        tail.kind = cfg.cert_tail == "exact" ? TailKind::Exact
                    : cfg.cert_tail == "heuristic" ? TailKind::Heuristic
                                                   : TailKind::None;
        tail.D = cfg.cert_D > 0.0 ? cfg.cert_D : datum_tail_constant(s.init);
        const double alpha = s.reaction.alpha();
        cert = quench_certificate(estimate_I(trace, alpha, tail), s.reaction.M * s.reaction.c, alpha, cfg.cert_delta0,
                                  tail_label(tail.kind));
    } else {
        cert = datum_certificate(s, cfg.cert_horizon > 0.0 ? cfg.cert_horizon : cfg.horizon);
    }
    out.add_with("certificate.txt", [&](std::ostream& o) { write_certificate(o, cert); });
    return 0;
}

int run_sweep(const RunConfig& cfg, Outputs& out, unsigned workers) {
    if (cfg.sweep_values.empty()) throw ConfigError("key 'sweep.values': at least one value required");
    const Scenario base = make_scenario(cfg);
    SweepOptions opt;
    opt.workers = workers;
    opt.bisection_steps = cfg.sweep_bisection_steps;
    SweepResult r;
    if (cfg.sweep_param == "L") r = critical_length_scan(base, cfg.init.eta, cfg.sweep_values, opt);
    else if (cfg.sweep_param == "p") r = exponent_scan(base, cfg.sweep_values, cfg.sweep_c, opt);
    else if (cfg.sweep_param == "A") r = amplitude_scan(base, cfg.sweep_values, opt);
    else r = plateau_scan(base, cfg.sweep_values, cfg.sweep_amplitude, opt);
    out.add_with("sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, r); });
    for (const auto& p : r.points) {
        if (!p.by_design && classify(p.status) == Outcome::Undecided) return 2;
    }
    return 0;
}

}  // namespace

int run(const RunConfig& config, const std::string& subcommand, const RunOptions& options) {
    try {
        RunConfig cfg = config;
        cfg.mc.seed = cfg.seed;
        cfg.mc.workers = options.workers;
        Outputs out(cfg, subcommand, options.workers);
        int code = 0;
        if (subcommand == "solve") code = run_solve(cfg, out);
        else if (subcommand == "linear-solve") code = run_linear(cfg, out);
        else if (subcommand == "certify") code = run_certify(cfg, out);
        else if (subcommand == "mc-fk") {
            out.add("mc_fk.txt", mc_text(fk_phi(cfg.mc_t, cfg.mc_x, cfg.mc_y, cfg.init.L, cfg.flow_amplitude,
                                                make_flow(cfg), cfg.mc)));
        } else if (subcommand == "mc-plateau") {
            const auto r = plateau_confinement_prob(cfg.mc_t, cfg.mc_eps, cfg.mc_start_y, cfg.mc);
            std::ostringstream s;
            s.precision(17);
            s << mc_text(r.mc) << "series=" << r.series << '\n' << "bound=" << r.bound << '\n';
            out.add("mc_plateau.txt", s.str());
        } else if (subcommand == "mc-kernel") {
            const auto k = heat_kernel_profile(cfg.mc_t, cfg.flow_amplitude, make_flow(cfg), cfg.mc, cfg.mc_histogram,
                                               cfg.mc_y);
            out.add_with("histogram.csv", [&](std::ostream& o) { write_histogram_csv(o, k); });
            std::ostringstream s;
            s.precision(17);
            s << "fitted_C=" << k.fitted_C << '\n'
              << "mean=" << k.mean << '\n'
              << "mean_std_error=" << k.mean_std_error << '\n'
              << "n=" << k.n << '\n'
              << "widened=" << (k.widened ? "true" : "false") << '\n';
            out.add("kernel.txt", s.str());
        } else if (subcommand == "sweep") {
            code = run_sweep(cfg, out, options.workers);
        } else {
            throw ConfigError("unknown subcommand '" + subcommand + "'");
        }
        out.commit(options.out_dir);
        return code;
    } catch (const std::exception& e) {
        std::cerr << "quenchlab " << subcommand << ": " << e.what() << '\n';
        return 1;
    }
}

VerifyResult verify_outputs(const fs::path& manifest) {
    VerifyResult res;
    std::ifstream in(manifest);
    if (!in) {
        res.problems.push_back("missing manifest " + manifest.string());
        return res;
    }
    const fs::path dir = manifest.parent_path();
    std::string hash;
    std::size_t listed = 0;
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("config_hash=", 0) == 0) hash = line.substr(12);
        if (line.rfind("file=", 0) != 0) continue;
        ++listed;
        const auto sp = line.find(' ');
        const std::string name = line.substr(5, sp - 5);
        const std::string want = sp == std::string::npos ? "" : line.substr(sp + 1);
        const fs::path path = dir / name;
        if (!fs::exists(path)) {
            res.problems.push_back("missing " + name);
            continue;
        }
        const std::string body = read_file(path);
        if (git_blob_hash(body) != want) res.problems.push_back("hash mismatch " + name);
        else if (body.rfind("# config_hash=" + hash + "\n", 0) != 0) res.problems.push_back("config hash header " + name);
    }
    if (listed == 0) res.problems.push_back("manifest lists no files");
    res.ok = res.problems.empty();
    return res;
}

}  // namespace quenchlab
