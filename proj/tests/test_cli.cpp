#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "quenchlab/errors.hpp"
#include "quenchlab/run.hpp"

using namespace quenchlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("quenchlab_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kQuenchConfig = R"(
# small p = 4 datum on a coarse line
reaction.kind = powerlaw
reaction.p = 4
init.eta = 0.05
init.L = 0.5
domain.X = 150
domain.nx = 750
time.horizon = 1000
)";

int cli(const std::string& args) {
    const int status = std::system((std::string(QUENCHLAB_CLI) + " " + args + " 2>/dev/null >/dev/null").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("parse a power law") {
    const auto c = parse_config("reaction.kind = powerlaw\nreaction.p = 4\n");
    const auto r = make_reaction(c);
    CHECK(r.kind == ReactionKind::PowerLaw);
    CHECK(r.p == 4.0);
}

TEST_CASE("parse errors name the key and line") {
    const auto p = error_of("\n\nreaction.p = 0.5\n");
    CHECK(p.find("p must exceed 1") != std::string::npos);
    CHECK(p.find("line 3") != std::string::npos);
    CHECK(p.find("reaction.p") != std::string::npos);
    CHECK(error_of("reaction.p = 1\n").find("p must exceed 1") != std::string::npos);
    CHECK(error_of("domain.widht = 3\n").find("unknown key 'domain.widht'") != std::string::npos);
    CHECK(error_of("domain.nx = many\n").find("domain.nx") != std::string::npos);
    CHECK(error_of("domain.X = 1e\n").find("line 1") != std::string::npos);
    CHECK(error_of("flow.kind = vortex\n").find("expected one of") != std::string::npos);
    CHECK(error_of("seed = 1\nseed = 2\n").find("already set on line 1") != std::string::npos);
    CHECK(error_of("just words\n").find("expected 'key = value'") != std::string::npos);
    CHECK(error_of("domain.m = 1\ndomain.ny = 2\n").find("domain.ny") != std::string::npos);
}

TEST_CASE("empty config resolves to defaults") {
    const auto c = parse_config("");
    const auto text = resolved_text(c);
    for (const char* key : {"version = quenchlab-config-1", "seed = 1", "domain.X = 50", "reaction.p = 4",
                            "time.wallclock = 0", "mc.n_paths = 100000", "sweep.param = A", "out.dir = "}) {
        CHECK(text.find(key) != std::string::npos);
    }
    // Round trip: the resolved text parses to the same resolved text.
    CHECK(resolved_text(parse_config(text)) == text);
}

TEST_CASE("comments and plateau lists") {
    const auto c = parse_config("flow.kind = shear # trailing\nflow.plateaux = 0.5:0.3, 0.1:0.05\n");
    REQUIRE(c.flow_plateaux.size() == 2);
    CHECK(c.flow_plateaux[1].half_width == 0.05);
}

TEST_CASE("git blob hash") {
    // `git hash-object` of an empty blob and of "hello\n".
    CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("solve writes traces, certificates and a verifiable manifest") {
    const auto dir = scratch("solve");
    const auto cfg = parse_config(kQuenchConfig);
    REQUIRE(run(cfg, "solve", RunOptions{dir, 1}) == 0);
    const auto trace = slurp(dir / "trace.csv");
    const std::string header = "# config_hash=" + config_hash(cfg) + "\n";
    CHECK(trace.rfind(header + "t,sup,l1,front_left,front_right\n", 0) == 0);
    std::istringstream rows(trace);
    std::string line, last;
    while (std::getline(rows, line)) last = line;
    CHECK(std::stod(last.substr(last.find(',') + 1)) < 1e-3);
    CHECK(slurp(dir / "verdict.txt").find("status=QuenchedNumerical") != std::string::npos);
    CHECK(slurp(dir / "certificate.txt").find("valid=true") != std::string::npos);
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().filename() != "manifest.txt") CHECK(slurp(entry.path()).rfind(header, 0) == 0);
    }
    const auto manifest = slurp(dir / "manifest.txt");
    CHECK(manifest.find("config_hash=" + config_hash(cfg)) != std::string::npos);
    CHECK(manifest.find("seed=1\n") != std::string::npos);
    CHECK(manifest.find("config.reaction.p = 4") != std::string::npos);

    CHECK(verify_outputs(dir / "manifest.txt").ok);
    std::ofstream(dir / "trace.csv", std::ios::app) << "1,2,3,,\n";
    const auto edited = verify_outputs(dir / "manifest.txt");
    CHECK_FALSE(edited.ok);
    REQUIRE(edited.problems.size() == 1);
    CHECK(edited.problems[0] == "hash mismatch trace.csv");
    fs::remove(dir / "final.txt");
    const auto missing = verify_outputs(dir / "manifest.txt");
    CHECK(missing.problems.size() == 2);
    CHECK_FALSE(verify_outputs(dir / "nope.txt").ok);
}

TEST_CASE("snapshots at the configured cadence") {
    const auto dir = scratch("snap");
    auto cfg = parse_config(std::string(kQuenchConfig) + "time.snapshot_interval = 100\n");
    REQUIRE(run(cfg, "linear-solve", RunOptions{dir, 1}) == 0);
    CHECK(fs::exists(dir / "snapshot_0001.txt"));
    CHECK(fs::exists(dir / "snapshot_0009.txt"));
    CHECK(fs::exists(dir / "final.txt"));
}

TEST_CASE("certify from a completed linear trace") {
    const auto lin = scratch("lin");
    const auto cfg = parse_config(kQuenchConfig);
    REQUIRE(run(cfg, "linear-solve", RunOptions{lin, 1}) == 0);
    const auto dir = scratch("cert");
    const auto cc = parse_config(std::string(kQuenchConfig) + "cert.trace = " + (lin / "trace.csv").string() + "\n");
    REQUIRE(run(cc, "certify", RunOptions{dir, 1}) == 0);
    const auto rec = slurp(dir / "certificate.txt");
    CHECK(rec.find("kind=quench") != std::string::npos);
    CHECK(rec.find("valid=true") != std::string::npos);
    CHECK(rec.find("tail_method=exact") != std::string::npos);
}

TEST_CASE("reruns are byte identical") {
    const std::string text = "mc.n_paths = 3000\nmc.t = 1\nflow.kind = sine\nflow.amplitude = 2\n";
    const auto a = scratch("mc_a"), b = scratch("mc_b");
    REQUIRE(run(parse_config(text), "mc-fk", RunOptions{a, 2}) == 0);
    REQUIRE(run(parse_config(text), "mc-fk", RunOptions{b, 2}) == 0);
    CHECK(slurp(a / "manifest.txt") == slurp(b / "manifest.txt"));
    CHECK(slurp(a / "mc_fk.txt") == slurp(b / "mc_fk.txt"));
}

TEST_CASE("monte carlo subcommands") {
    const auto dir = scratch("mc_plateau");
    REQUIRE(run(parse_config("mc.n_paths = 2000\nmc.t = 0.5\nmc.eps = 0.5\n"), "mc-plateau", RunOptions{dir, 1}) == 0);
    CHECK(slurp(dir / "mc_plateau.txt").find("bound=") != std::string::npos);
    const auto k = scratch("mc_kernel");
    REQUIRE(run(parse_config("mc.n_paths = 20000\n"), "mc-kernel", RunOptions{k, 1}) == 0);
    CHECK(slurp(k / "histogram.csv").find("bin_center,density,count") != std::string::npos);
}

TEST_CASE("sweep exit codes") {
    const auto dir = scratch("sweep");
    const std::string base = std::string(kQuenchConfig) + "sweep.param = L\nsweep.values = 0.25, 0.5\n";
    CHECK(run(parse_config(base), "sweep", RunOptions{dir, 2}) == 0);
    CHECK(slurp(dir / "sweep.csv").find("L,0.25,QuenchedNumerical") != std::string::npos);
    const auto capped = scratch("sweep_cap");
    std::string slow = base;
    slow.replace(slow.find("domain.nx = 750"), 15, "domain.nx = 30000\ntime.wallclock = 0.001");
    CHECK(run(parse_config(slow), "sweep", RunOptions{capped, 1}) == 2);
    CHECK(run(parse_config("sweep.values = \n"), "sweep", RunOptions{scratch("sweep_empty"), 1}) == 1);
}

TEST_CASE("io failure exits 1") {
    const auto blocker = scratch("blocker");
    std::ofstream(blocker) << "x";
    CHECK(run(parse_config("mc.n_paths = 200\n"), "mc-fk", RunOptions{blocker / "sub", 1}) == 1);
    CHECK(run(parse_config(""), "explode", RunOptions{scratch("x"), 1}) == 1);
}

TEST_CASE("command line binary") {
    const auto dir = scratch("bin");
    fs::create_directories(dir);
    std::ofstream(dir / "run.cfg") << kQuenchConfig;
    std::ofstream(dir / "bad.cfg") << "reaction.p = 0.5\n";
    const std::string cfg = (dir / "run.cfg").string();
    CHECK(cli("solve --config " + cfg + " --out " + (dir / "a").string() + " --seed 7") == 0);
    CHECK(slurp(dir / "a" / "manifest.txt").find("seed=7\n") != std::string::npos);
    CHECK(cli("verify --out " + (dir / "a").string()) == 0);
    std::ofstream(dir / "a" / "verdict.txt", std::ios::app) << "tampered\n";
    CHECK(cli("verify --out " + (dir / "a").string()) == 1);
    CHECK(cli("solve --config " + (dir / "bad.cfg").string() + " --out " + (dir / "b").string()) == 1);
    CHECK(cli("mc-fk --config " + cfg + " --workers 0") == 1);
    const std::string env = "QUENCHLAB_OUT=" + (dir / "env").string() + " ";
    const int status = std::system((env + QUENCHLAB_CLI + " mc-plateau 2>/dev/null >/dev/null").c_str());
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(fs::exists(dir / "env" / "manifest.txt"));
}
