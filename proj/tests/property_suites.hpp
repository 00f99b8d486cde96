#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "quenchlab/solver.hpp"
#include "quenchlab/stochastic.hpp"

namespace suites {

using namespace quenchlab;

struct Outcome {
    int cases = 0;
    int failures = 0;
    std::string first_failure;

    void fail(int n, const std::string& what) {
        if (failures++ == 0) first_failure = "case " + std::to_string(n) + ": " + what;
    }
};

struct Case {
    Grid grid;
    FlowProfile flow = FlowProfile::zero();
    ReactionSpec reaction = zero_reaction();
    Field datum;
};

inline FlowProfile random_flow(std::mt19937_64& rng, std::size_t ny) {
    std::uniform_real_distribution<double> amp(-6.0, 6.0);
    switch (rng() % 4) {
    case 0: return FlowProfile::zero();
    case 1: return FlowProfile::sine(amp(rng), ny);
    case 2: return build_shear_profile(ShearSpec{{Plateau{0.5, 0.2}}, amp(rng)}, ny);
    default: return FlowProfile::cellular(amp(rng), ny);
    }
}

inline ReactionSpec random_reaction(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (rng() % 3) {
    case 0: return power_law(0.5 + 4.0 * u(rng), 1.0 + 4.0 * u(rng), 0.5 + 2.0 * u(rng));
    case 1: return arrhenius(0.2 + u(rng), 1.0, 4.0, 0.5 + 4.0 * u(rng));
    default: return ignition(0.1 + 0.6 * u(rng), 0.5 + 2.0 * u(rng), 0.5 + 2.0 * u(rng));
    }
}

inline Case random_case(std::mt19937_64& rng, bool react) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Case c;
    GridConfig g;
    g.X = 2.0 + 8.0 * u(rng);
    g.nx = 32 + rng() % 96;
    g.m = static_cast<int>(rng() % 2);
    g.ny = g.m ? 8 : 1;
    g.safety = 0.3 + 0.7 * u(rng);
    c.flow = g.m ? random_flow(rng, 8) : FlowProfile::zero();
    c.reaction = react ? random_reaction(rng) : zero_reaction();
    c.grid = build_grid(g, c.flow, c.reaction);
    c.datum = initial_field(c.grid, InitSpec{InitKind::Zero});
    // Rough nodal noise on a random window: the hardest datum for a monotone scheme.
    const double lo = -g.X * u(rng), hi = g.X * u(rng), level = u(rng);
    for (std::size_t j = 0; j < c.grid.ny; ++j) {
        for (std::size_t i = 1; i < c.grid.nx; ++i) {
            const double x = c.grid.x(i);
            if (x >= lo && x <= hi) c.datum.values[c.grid.index(i, j)] = level * u(rng);
        }
    }
    return c;
}

inline constexpr int kSteps = 40;

// Linear steps stay within [min, max] of the previous field (1e-10).
inline Outcome maximum_principle(int cases, std::uint64_t seed = 101) {
    std::mt19937_64 rng(seed);
    Outcome out;
    for (int n = 0; n < cases; ++n, ++out.cases) {
        Case c = random_case(rng, false);
        Stepper s(c.grid, c.flow, c.reaction);
        Field f = c.datum;
        for (int k = 0; k < kSteps; ++k) {
            const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
            const double mn = std::min(*lo, 0.0), mx = std::max(*hi, 0.0);
            s.advance(f);
            const auto [lo2, hi2] = std::minmax_element(f.values.begin(), f.values.end());
            if (*lo2 < mn - 1e-10 || *hi2 > mx + 1e-10) {
                out.fail(n, "range left at step " + std::to_string(k));
                break;
            }
        }
    }
    return out;
}

// T0 <= T0' nodewise implies T <= T' + 1e-8 at every step.
inline Outcome comparison_principle(int cases, std::uint64_t seed = 202) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Outcome out;
    for (int n = 0; n < cases; ++n, ++out.cases) {
        Case c = random_case(rng, true);
        Field lo = c.datum, hi = c.datum;
        for (auto& v : hi.values) v = std::min(1.0, v + 0.3 * u(rng));
        for (std::size_t j = 0; j < c.grid.ny; ++j) {
            hi.values[c.grid.index(0, j)] = 0.0;
            hi.values[c.grid.index(c.grid.nx, j)] = 0.0;
        }
        Stepper s(c.grid, c.flow, c.reaction);
        bool ok = true;
        for (int k = 0; k < kSteps && ok; ++k) {
            s.advance(lo);
            s.advance(hi);
            for (std::size_t i = 0; i < lo.values.size() && ok; ++i) ok = lo.values[i] <= hi.values[i] + 1e-8;
        }
        if (!ok) out.fail(n, "order lost");
    }
    return out;
}

// ||T(t)|| <= e^{M d t} ||Phi(t)|| within 1e-6 relative.
inline Outcome linear_domination(int cases, std::uint64_t seed = 303) {
    std::mt19937_64 rng(seed);
    Outcome out;
    for (int n = 0; n < cases; ++n, ++out.cases) {
        Case c = random_case(rng, true);
        Stepper nl(c.grid, c.flow, c.reaction), lin(c.grid, c.flow, zero_reaction());
        Field T = c.datum, phi = c.datum;
        const double rate = c.reaction.M * c.reaction.d;
        for (int k = 0; k < kSteps; ++k) {
            nl.advance(T);
            lin.advance(phi);
            const double bound = std::exp(rate * T.time) * field_norms(phi, c.grid).sup;
            if (field_norms(T, c.grid).sup > bound * (1.0 + 1e-6)) {
                out.fail(n, "growth bound exceeded at step " + std::to_string(k));
                break;
            }
        }
    }
    return out;
}

// ||Phi(t)|| is nonincreasing.
inline Outcome monotone_linear_sup(int cases, std::uint64_t seed = 404) {
    std::mt19937_64 rng(seed);
    Outcome out;
    for (int n = 0; n < cases; ++n, ++out.cases) {
        Case c = random_case(rng, false);
        Stepper s(c.grid, c.flow, c.reaction);
        Field f = c.datum;
        double prev = field_norms(f, c.grid).sup;
        for (int k = 0; k < kSteps; ++k) {
            s.advance(f);
            const double now = field_norms(f, c.grid).sup;
            if (now > prev + 1e-12) {
                out.fail(n, "sup increased at step " + std::to_string(k));
                break;
            }
            prev = now;
        }
    }
    return out;
}

// Identical inputs give identical bits: solver reruns and Monte Carlo across worker counts.
inline Outcome reproducibility(int cases, std::uint64_t seed = 505) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto flow = FlowProfile::sine(1.0, 64);
    Outcome out;
    for (int n = 0; n < cases; ++n, ++out.cases) {
        Case c = random_case(rng, true);
        Field a = c.datum, b = c.datum;
        Stepper s1(c.grid, c.flow, c.reaction), s2(c.grid, c.flow, c.reaction);
        for (int k = 0; k < 20; ++k) {
            s1.advance(a);
            s2.advance(b);
        }
        PathSamplerConfig p;
        p.n_paths = 1500 + rng() % 2000;
        p.seed = rng();
        p.stream_id = rng() % 5;
        const double t = 0.2 + u(rng), x = 2.0 * u(rng) - 1.0, y = u(rng), A = 4.0 * u(rng);
        const auto m1 = fk_phi(t, x, y, 1.0, A, flow, p);
        p.workers = 2 + rng() % 3;
        const auto m2 = fk_phi(t, x, y, 1.0, A, flow, p);
        if (a.values != b.values) out.fail(n, "solver bits differ");
        else if (m1.value != m2.value || m1.n != m2.n) out.fail(n, "Monte Carlo bits differ across worker counts");
    }
    return out;
}

}  // namespace suites
