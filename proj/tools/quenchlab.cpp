#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "quenchlab/errors.hpp"
#include "quenchlab/run.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quenchlab: quenching and propagation in shear-flow combustion models"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;

    const char* names[] = {"solve", "linear-solve", "certify", "mc-fk", "mc-plateau", "mc-kernel", "sweep"};
    for (const char* name : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "key = value config file");
        sub->add_option("--out", out_dir, "output directory (default $QUENCHLAB_OUT, then out.dir, then .)");
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    }
    auto* verify = app.add_subcommand("verify", "recompute output hashes listed in a manifest");
    verify->add_option("--out", out_dir, "run directory holding manifest.txt");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    const auto* chosen = app.get_subcommands().front();
    const std::string subcommand = chosen->get_name();
    const char* env_out = std::getenv("QUENCHLAB_OUT");

    if (subcommand == "verify") {
        const std::string dir = !out_dir.empty() ? out_dir : env_out ? env_out : ".";
        const auto res = quenchlab::verify_outputs(std::filesystem::path(dir) / "manifest.txt");
        for (const auto& p : res.problems) std::cerr << p << '\n';
        std::cout << (res.ok ? "verified" : "mismatch") << '\n';
        return res.ok ? 0 : 1;
    }

    quenchlab::RunConfig cfg;
    try {
        cfg = quenchlab::parse_config(config_path.empty() ? std::string() : slurp(config_path));
    } catch (const std::exception& e) {
        std::cerr << "config: " << e.what() << '\n';
        return 1;
    }
    if (seed) cfg.seed = *seed;

    quenchlab::RunOptions opt;
    opt.workers = workers;
    opt.out_dir = !out_dir.empty() ? out_dir : env_out ? env_out : !cfg.out_dir.empty() ? cfg.out_dir : ".";
    return quenchlab::run(cfg, subcommand, opt);
}
