// Acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "property_suites.hpp"
#include "quenchlab/experiments.hpp"
#include "quenchlab/stochastic.hpp"

using namespace quenchlab;

namespace {

struct Result {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Linear solver against the exact heat solution.

double heat_gaussian(double x, double t, double w) {
    const double s = w * w + 4.0 * t;
    return std::sqrt(w * w / s) * std::exp(-x * x / s);
}

double heat_error(std::size_t nx, double dt) {
    GridConfig c;
    c.X = 50.0;
    c.nx = nx;
    c.dt = dt;
    const Grid g = build_grid(c, FlowProfile::zero(), zero_reaction());
    const auto v = linear_solve(initial_field(g, InitSpec{InitKind::Gaussian, 1.0, 1.0, 1.0}), FlowProfile::zero(), g,
                                1.0);
    double err = 0.0;
    for (std::size_t i = 0; i < g.nodes_x(); ++i) {
        err = std::max(err, std::abs(v.final_state.values[i] - heat_gaussian(g.x(i), 1.0, 1.0)));
    }
    return err;
}

Result linear_solver() {
    const auto t0 = Clock::now();
    const double coarse = heat_error(2000, 1e-3);
    const double fine = heat_error(4000, 5e-4);
    const double secs = seconds_since(t0);
    return {coarse < 1e-4 && coarse / fine >= 3.0 && secs < 30.0,
            fmt("error %.3g, refined %.3g, ratio %.2f, %.1f s", coarse, fine, coarse / fine, secs)};
}

// ---------------------------------------------------------------------------
// 2. Monte Carlo against the Gaussian CDF and the grid solve.

struct LinearSnapshot {
    Grid grid;
    Field field;
};

LinearSnapshot shear_linear(double A, std::size_t nx, std::size_t ny, double t) {
    GridConfig c;
    c.X = 15.0;
    c.nx = nx;
    c.m = 1;
    c.ny = ny;
    const auto flow = FlowProfile::sine(A, ny);
    const Grid g = build_grid(c, flow, zero_reaction());
    const auto v = linear_solve(initial_field(g, InitSpec{InitKind::Indicator, 1.0, 1.0}), flow, g, t);
    return {g, v.final_state};
}

double node_value(const LinearSnapshot& s, double x, double y) {
    const auto i = static_cast<std::size_t>(std::llround((x + s.grid.X) / s.grid.dx));
    const auto j = static_cast<std::size_t>(std::llround(y / s.grid.dy)) % s.grid.ny;
    return s.field.values[s.grid.index(i, j)];
}

Result feynman_kac() {
    PathSamplerConfig p;
    p.n_paths = 100000;
    p.seed = 20;
    p.workers = workers();
    const auto flow = FlowProfile::sine(1.0, 64);
    const auto free = fk_phi(1.0, 0.0, 0.0, 1.0, 0.0, flow, p);
    // X_1 ~ N(0, 2): P(|X| <= 1) = erf(1/2).
    const double oracle = std::erf(0.5);
    bool ok = std::abs(free.value - oracle) <= 3.0 * free.std_error && std::abs(oracle - 0.52050) < 5e-6;
    std::string detail = fmt("free %.5f vs %.5f (3se %.1e)", free.value, oracle, 3.0 * free.std_error);

    std::mt19937_64 rng(2);
    int bad = 0, probes = 0;
    double worst = 0.0;
    for (double A : {1.0, 4.0}) {
        const auto coarse = shear_linear(A, 600, 32, 1.0);
        const auto fine = shear_linear(A, 1200, 64, 1.0);
        for (int k = 0; k < 20; ++k, ++probes) {
            // Probes on nodes shared by both grids.
            const double x = -3.0 + 0.25 * static_cast<double>(rng() % 25);
            const double y = static_cast<double>(rng() % 32) / 32.0;
            p.stream_id = static_cast<std::uint64_t>(probes + 1);
            const auto mc = fk_phi(1.0, x, y, 1.0, A, flow, p);
            // Nodal sampling of the indicator makes the grid first order, so the
            // refined pair is extrapolated and their gap is the error estimate.
            const double gc = node_value(coarse, x, y), gf = node_value(fine, x, y);
            const double grid = 2.0 * gf - gc;
            const double grid_error = std::abs(gc - gf);
            const double tol = std::max(3.0 * mc.std_error, grid_error);
            const double gap = std::abs(mc.value - grid);
            worst = std::max(worst, gap / tol);
            if (gap > tol) ++bad;
        }
    }
    ok = ok && bad == 0;
    detail += fmt("; shear probes %d, outside tolerance %d, worst gap/tol %.2f", probes, bad, worst);
    return {ok, detail};
}

// ---------------------------------------------------------------------------
// 3. Phi <= pi^{-1/2} t^{-1/2} for L = 1.

Result phi_decay_bound() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto sine = FlowProfile::sine(1.0, 64);
    const auto plateau = build_shear_profile(ShearSpec{{Plateau{0.5, 0.3}}, 1.0}, 64);
    PathSamplerConfig p;
    p.n_paths = 20000;
    p.seed = 30;
    p.workers = workers();
    int violations = 0;
    double closest = -1.0;
    for (int k = 0; k < 200; ++k) {
        const double t = 0.25 + 3.75 * u(rng), x = 8.0 * u(rng) - 4.0, y = u(rng), A = 20.0 * u(rng);
        p.stream_id = static_cast<std::uint64_t>(k);
        const auto mc = fk_phi(t, x, y, 1.0, A, k % 2 ? plateau : sine, p);
        const double bound = 1.0 / std::sqrt(std::numbers::pi * t);
        if (mc.value > bound + 3.0 * mc.std_error) ++violations;
        closest = std::max(closest, mc.value - bound);
    }
    return {violations == 0, fmt("200 probes, %d violations, max(phi - bound) %.3g", violations, closest)};
}

// ---------------------------------------------------------------------------
// 4. Confinement: Monte Carlo, series and bound.

// Eigenfunction expansion on (-eps, eps) from the centre over time 2t, summed to
// a fixed 200 terms.
double confinement_oracle(double t, double eps) {
    const double pi = std::numbers::pi;
    double sum = 0.0;
    for (int n = 0; n < 200; ++n) {
        const double k = 2.0 * n + 1.0;
        sum += (n % 2 ? -4.0 : 4.0) / (k * pi) * std::exp(-2.0 * t * k * k * pi * pi / (8.0 * eps * eps));
    }
    return sum;
}

Result confinement() {
    PathSamplerConfig p;
    p.n_paths = 100000;
    p.seed = 40;
    p.workers = workers();
    bool ok = true;
    std::ostringstream detail;
    int idx = 0;
    for (double eps : {0.25, 0.5}) {
        for (double t : {0.1, 0.5, 1.0}) {
            p.stream_id = static_cast<std::uint64_t>(idx++);
            const auto r = plateau_confinement_prob(t, eps, 0.0, p);
            const double series = confinement_oracle(t, eps);
            const double bound = (4.0 / std::numbers::pi) * std::exp(-std::numbers::pi * std::numbers::pi * t / (4.0 * eps * eps));
            // Standard error of a Bernoulli mean at the exact probability.
            const double sigma = std::sqrt(series * (1.0 - series) / static_cast<double>(r.mc.n));
            const bool row = std::abs(r.series - series) <= 1e-12 && std::abs(r.bound - bound) <= 1e-15 * bound + 1e-300 &&
                             std::abs(r.mc.value - series) <= 3.0 * sigma && series <= bound;
            ok = ok && row;
            if (!row) detail << fmt("[eps %.2f t %.1f: mc %.4g series %.4g bound %.4g] ", eps, t, r.mc.value, series, bound);
        }
    }
    const double b = confinement_bound(0.5, 0.5);
    ok = ok && std::abs(b - 9.16e-3) < 5e-5;
    detail << fmt("bound(eps 0.5, t 0.5) = %.4e", b);
    return {ok, detail.str()};
}

// ---------------------------------------------------------------------------
// 5. Certificate soundness on random p > 3 configurations.

Result certificate_soundness() {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double root_pi = std::sqrt(std::numbers::pi);
    int accepted = 0, draws = 0, failures = 0;
    double worst_violation = -1.0;
    std::string first;
    while (accepted < 20 && draws < 200) {
        ++draws;
        const double p = 3.2 + 1.8 * u(rng), K = 0.5 + 4.5 * u(rng), mass = 0.01 + 0.05 * u(rng);
        const double L = 0.25 + 0.75 * u(rng);
        // Linear sup-norm is about mass / (2 sqrt(pi t)); t1 puts it at sqrt(3) 1e-3.
        const double t1 = std::pow(mass / (2.0 * root_pi * 1e-3), 2) / 3.0;
        const double horizon = 4.0 * t1;
        Scenario s;
        s.grid.X = std::ceil(10.0 * std::sqrt(horizon) + L);
        s.grid.nx = static_cast<std::size_t>(std::ceil(2.0 * s.grid.X / 0.2));
        s.reaction = power_law(K, p);
        s.init = InitSpec{InitKind::Indicator, mass / (2.0 * L), L};
        s.horizon = horizon;
        s.certify = false;
        const auto cert = datum_certificate(s, t1);
        if (!cert.valid) continue;
        ++accepted;
        const auto v = run_scenario(s);
        const auto env = lockstep_envelope(s, horizon, 10);
        worst_violation = std::max(worst_violation, env.max_violation);
        const bool ok = v.status == RunStatus::QuenchedNumerical && env.checks > 0 && !env.pole_reached &&
                        env.max_violation <= 1e-6;
        if (!ok && failures++ == 0) {
            first = fmt("p %.2f K %.2f mass %.3f: %s, violation %.2g", p, K, mass, to_string(v.status).c_str(),
                        env.max_violation);
        }
    }
    return {accepted == 20 && failures == 0,
            fmt("%d certified configurations from %d draws, %d counterexamples, max violation %.2g%s%s", accepted,
                draws, failures, worst_violation, first.empty() ? "" : "; first: ", first.c_str())};
}

// ---------------------------------------------------------------------------
// 6. Quench for p = 4, propagation for p = 2.

Result dichotomy() {
    Scenario s;
    s.grid.X = 250.0;
    s.grid.nx = 2500;
    s.init = InitSpec{InitKind::Indicator, 0.1, 0.5};
    s.horizon = 2000.0;
    s.certify = false;

    s.reaction = power_law(10.0, 4.0);
    auto t0 = Clock::now();
    const auto q = run_scenario(s);
    const auto cert = datum_certificate(s, 50.0);
    const double q_secs = seconds_since(t0);

    s.reaction = power_law(10.0, 2.0);
    s.horizon = 200.0;
    t0 = Clock::now();
    const auto pr = run_scenario(s);
    double speed = std::nan("");
    if (pr.status == RunStatus::PropagatingNumerical) speed = front_speed(pr, pr.end_time - 5.0, pr.end_time).speed;
    const double p_secs = seconds_since(t0);

    const bool ok = q.status == RunStatus::QuenchedNumerical && cert.valid && q_secs < 300.0 &&
                    pr.status == RunStatus::PropagatingNumerical && speed > 0.0 && p_secs < 300.0;
    return {ok, fmt("p=4: %s at t=%.0f, certificate %s (threshold %.3g), %.1f s; p=2: %s, speed %.3f, %.1f s",
                    to_string(q.status).c_str(), q.end_time, cert.valid ? "valid" : "invalid", cert.threshold, q_secs,
                    to_string(pr.status).c_str(), speed, p_secs)};
}

// ---------------------------------------------------------------------------
// 7. Quenching amplitude with and without a plateau.

Result quenching_amplitude() {
    Scenario s;
    s.grid.X = 300.0;
    s.grid.nx = 4000;
    s.grid.m = 1;
    s.grid.ny = 32;
    s.reaction = power_law(1.0, 4.0, 20.0);
    s.init = InitSpec{InitKind::Indicator, 1.0, 1.0};
    s.horizon = 40.0;
    s.restart_certificates = true;
    s.flow = FlowProfile::sine(1.0, 32);
    const std::vector<double> grid{0.0, 9.375, 18.75, 37.5, 75.0};
    const SweepOptions opts{workers(), 1};

    const auto sine = amplitude_scan(s, grid, opts);
    const bool top_quench = classify(sine.points.back().status) == Outcome::Quench;
    const bool zero_spreads = classify(sine.points.front().status) == Outcome::NoQuench;
    std::string bracket = "none";
    if (sine.bracket) bracket = fmt("(%g, %g)", sine.bracket->first, sine.bracket->second);

    int plateau_quench = 0;
    std::string plateau_rows;
    for (double A : grid) {
        const auto r = plateau_scan(s, {0.3}, A, SweepOptions{1, 0});
        const auto st = r.points.front().status;
        if (classify(st) != Outcome::NoQuench) ++plateau_quench;
        plateau_rows += fmt(" %g:%s", A, to_string(st).c_str());
    }
    const bool ok = sine.bracket && top_quench && zero_spreads && plateau_quench == 0;
    return {ok, fmt("sine bracket %s, top %s; plateau 0.3:%s", bracket.c_str(),
                    to_string(sine.points.back().status).c_str(), plateau_rows.c_str())};
}

// ---------------------------------------------------------------------------
// 8. Rescaling the coupling.

Result scaling() {
    Scenario s;
    s.grid.X = 40.0;
    s.grid.nx = 800;
    s.reaction = power_law(1.0, 2.0);
    s.init = InitSpec{InitKind::Gaussian, 1.0, 1.0, 2.0};
    s.horizon = 5.0;
    const auto r = scaling_check(s, 4.0);
    const bool ok = r.max_deviation <= r.budget && std::abs(r.width_ratio - 0.5) <= 0.05;
    return {ok, fmt("deviation %.3g (budget %.3g), width ratio %.4f", r.max_deviation, r.budget, r.width_ratio)};
}

// ---------------------------------------------------------------------------
// 9. Randomized invariants.

Result invariants() {
    constexpr int kCases = 100;
    const std::pair<const char*, std::function<suites::Outcome()>> list[] = {
        {"maximum principle", [] { return suites::maximum_principle(kCases); }},
        {"comparison", [] { return suites::comparison_principle(kCases); }},
        {"exp domination", [] { return suites::linear_domination(kCases); }},
        {"monotone sup", [] { return suites::monotone_linear_sup(kCases); }},
        {"reproducibility", [] { return suites::reproducibility(kCases); }},
    };
    bool ok = true;
    std::string detail;
    for (const auto& [name, run] : list) {
        const auto o = run();
        ok = ok && o.cases >= kCases && o.failures == 0;
        detail += fmt("%s%s %d/%d", detail.empty() ? "" : ", ", name, o.cases - o.failures, o.cases);
        if (o.failures) detail += " (" + o.first_failure + ")";
    }
    return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::pair<const char*, Result (*)()> criteria[] = {
        {"linear solver vs heat kernel", linear_solver},
        {"Feynman-Kac oracle agreement", feynman_kac},
        {"Phi decay bound", phi_decay_bound},
        {"plateau confinement triple check", confinement},
        {"certificate soundness suite", certificate_soundness},
        {"quench/propagation dichotomy", dichotomy},
        {"quenching amplitude", quenching_amplitude},
        {"coupling rescaling", scaling},
        {"invariant suites", invariants},
    };
    std::set<int> wanted;
    for (int k = 1; k < argc; ++k) wanted.insert(std::atoi(argv[k]));

    int failed = 0;
    for (int n = 1; n <= 9; ++n) {
        if (!wanted.empty() && !wanted.count(n)) continue;
        const auto t0 = Clock::now();
        Result r;
        try {
            r = criteria[n - 1].second();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        if (!r.pass) ++failed;
        std::printf("criterion %d %s: %s [%s] (%.1f s)\n", n, r.pass ? "PASS" : "FAIL", criteria[n - 1].first,
                    r.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
