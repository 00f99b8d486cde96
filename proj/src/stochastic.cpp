#include "quenchlab/stochastic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>
#include <thread>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "quenchlab/errors.hpp"

namespace quenchlab {

namespace {

using Engine = std::mt19937_64;

Engine block_engine(std::uint64_t seed, std::uint64_t stream, std::size_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
    return Engine(seq);
}

// Runs `body(engine, paths)` per block and returns the per-block results in
// block order. Blocks are handed out dynamically, so thread scheduling never
// affects which random numbers a block sees.
template <class Result, class Body>
std::vector<Result> run_blocks(const PathSamplerConfig& cfg, Body body) {
    if (cfg.n_paths < 100) throw ConfigError("mc.n_paths must be at least 100");
    const std::size_t blocks = (cfg.n_paths + kPathBlock - 1) / kPathBlock;
    std::vector<Result> out(blocks);
    auto work = [&](std::size_t b) {
        Engine eng = block_engine(cfg.seed, cfg.stream_id, b);
        const std::size_t paths = std::min(kPathBlock, cfg.n_paths - b * kPathBlock);
        out[b] = body(eng, paths);
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(blocks)));
    if (workers == 1) {
        for (std::size_t b = 0; b < blocks; ++b) work(b);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t b = next++; b < blocks; b = next++) work(b);
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

McEstimate bernoulli(std::size_t hits, std::size_t n) {
    McEstimate e;
    e.n = n;
    e.value = static_cast<double>(hits) / static_cast<double>(n);
    e.std_error = std::sqrt(e.value * (1.0 - e.value) / static_cast<double>(n));
    return e;
}

std::size_t total(const std::vector<std::size_t>& parts) {
    std::size_t s = 0;
    for (auto p : parts) s += p;
    return s;
}

void require_shear(const FlowProfile& profile) {
    if (profile.kind() == FlowKind::Periodic2D) throw Unsupported("path estimators support shear and zero flows only");
}

// int_0^{2t} s(W_s) ds by the midpoint rule on n substeps, W started at y.
// Returns the integral and whether s stayed equal to s(y) at every midpoint.
struct DriftPath {
    double integral;
    bool stayed;
};

template <class Normal>
DriftPath drift_integral(Engine& eng, Normal& normal, const FlowProfile& profile, double y, double horizon,
                         std::size_t n, bool scaled) {
    const double ds = horizon / static_cast<double>(n);
    const double s_half = std::sqrt(0.5 * ds), s_full = std::sqrt(ds);
    const double home = scaled ? profile.shear(y) : profile.shape(y);
    double w = y + s_half * normal(eng);
    double sum = 0.0;
    bool stayed = true;
    for (std::size_t k = 0; k < n; ++k) {
        if (k) w += s_full * normal(eng);
        const double u = scaled ? profile.shear(w) : profile.shape(w);
        stayed = stayed && u == home;
        sum += u;
    }
    return {sum * ds, stayed};
}

std::size_t substeps(double horizon, double ds) { return std::max<std::size_t>(1, std::llround(std::ceil(horizon / ds - 1e-9))); }

}  // namespace

McEstimate fk_phi(double t, double x, double y, double L, double A, const FlowProfile& profile,
                  const PathSamplerConfig& sampler) {
    require_shear(profile);
    if (!(t > 0.0)) throw DomainError("fk_phi needs t > 0");
    if (!(L >= 0.0)) throw DomainError("fk_phi needs L >= 0");
    const double horizon = 2.0 * t;
    const std::size_t n = substeps(horizon, sampler.substep > 0.0 ? sampler.substep : t / 200.0);
    const bool flowing = A != 0.0 && profile.kind() == FlowKind::Shear;
    const double sx = std::sqrt(horizon);
    auto hits = run_blocks<std::size_t>(sampler, [&](Engine& eng, std::size_t paths) {
        boost::random::normal_distribution<double> normal;
        std::size_t h = 0;
        for (std::size_t p = 0; p < paths; ++p) {
            double drift = 0.0;
            if (flowing) drift = 0.5 * A * drift_integral(eng, normal, profile, y, horizon, n, false).integral;
            const double end = x + sx * normal(eng) + drift;
            if (end >= -L && end <= L) ++h;
        }
        return h;
    });
    return bernoulli(total(hits), sampler.n_paths);
}

McEstimate drift_window_prob(double t, double y, double a, double eps, const FlowProfile& profile,
                             const PathSamplerConfig& sampler) {
    require_shear(profile);
    if (!(t > 0.0) || !(eps > 0.0)) throw DomainError("drift_window_prob needs t > 0 and eps > 0");
    const double horizon = 2.0 * t;
    const std::size_t n = substeps(horizon, sampler.substep > 0.0 ? sampler.substep : t / 200.0);
    auto hits = run_blocks<std::size_t>(sampler, [&](Engine& eng, std::size_t paths) {
        boost::random::normal_distribution<double> normal;
        std::size_t h = 0;
        for (std::size_t p = 0; p < paths; ++p) {
            const auto d = drift_integral(eng, normal, profile, y, horizon, n, true);
            if (!d.stayed && d.integral >= a && d.integral <= a + eps) ++h;
        }
        return h;
    });
    return bernoulli(total(hits), sampler.n_paths);
}

double confinement_series(double t, double eps) {
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    if (t <= 0.0) return 1.0;
    const double pi = std::numbers::pi;
    double sum = 0.0;
    for (int n = 0;; ++n) {
        const double k = 2.0 * n + 1.0;
        const double term = 4.0 / (k * pi) * std::exp(-2.0 * t * k * k * pi * pi / (8.0 * eps * eps));
        if (term < 1e-16 && n > 0) break;
        sum += (n % 2 == 0) ? term : -term;
        if (term == 0.0) break;
    }
    return sum;
}

double confinement_bound(double t, double eps) {
    const double pi = std::numbers::pi;
    return 4.0 / pi * std::exp(-pi * pi * t / (4.0 * eps * eps));
}

ConfinementResult plateau_confinement_prob(double t, double eps, double start_y, const PathSamplerConfig& sampler) {
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    if (!(std::abs(start_y) < eps)) throw DomainError("start_y must lie inside (-eps, eps)");
    if (t < 0.0) throw DomainError("t must be nonnegative");
    ConfinementResult res;
    res.bound = confinement_bound(t, eps);
    res.series = confinement_series(t, eps);
    if (t == 0.0) {
        res.mc = McEstimate{1.0, 0.0, sampler.n_paths};
        return res;
    }
    const double horizon = 2.0 * t;
    const std::size_t n = substeps(horizon, sampler.substep > 0.0 ? sampler.substep : std::min(eps * eps / 25.0, t / 200.0));
    const double ds = horizon / static_cast<double>(n);
    const double sd = std::sqrt(ds);
    auto hits = run_blocks<std::size_t>(sampler, [&](Engine& eng, std::size_t paths) {
        boost::random::normal_distribution<double> normal;
        boost::random::uniform_01<double> uniform;
        std::size_t h = 0;
        for (std::size_t p = 0; p < paths; ++p) {
            double w0 = start_y;
            bool inside = true;
            for (std::size_t k = 0; k < n && inside; ++k) {
                const double w1 = w0 + sd * normal(eng);
                if (std::abs(w1) >= eps) {
                    inside = false;
                    break;
                }
                const double cross = std::exp(-2.0 * (eps - w0) * (eps - w1) / ds) +
                                     std::exp(-2.0 * (eps + w0) * (eps + w1) / ds);
                if (uniform(eng) < cross) inside = false;
                w0 = w1;
            }
            if (inside) ++h;
        }
        return h;
    });
    res.mc = bernoulli(total(hits), sampler.n_paths);
    return res;
}

double fit_kernel_constant(double t, const std::vector<double>& r, const std::vector<double>& k) {
    const double st = std::sqrt(t);
    auto holds = [&](double C) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double q = r[i] * r[i] / t;
            const double lower = std::exp(-C * q) / (C * st);
            const double upper = C * std::exp(-q / C) / st;
            if (k[i] < lower || k[i] > upper) return false;
        }
        return true;
    };
    double lo = 1.0, hi = 1e6;
    if (holds(lo)) return lo;
    if (!holds(hi)) return hi;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (holds(mid) ? hi : lo) = mid;
    }
    return hi;
}

KernelProfile heat_kernel_profile(double t, double A, const FlowProfile& profile, const PathSamplerConfig& sampler,
                                  const HistogramSpec& spec, double y0) {
    require_shear(profile);
    if (!(t > 0.0)) throw DomainError("heat_kernel_profile needs t > 0");
    if (spec.bins < 3) throw ConfigError("histogram needs at least 3 bins");
    const double horizon = 2.0 * t;
    const double sigma = std::sqrt(horizon);
    const double half = spec.half_range > 0.0 ? spec.half_range : 8.0 * sigma;
    const bool flowing = A != 0.0 && profile.kind() == FlowKind::Shear;
    double shape_mean = 0.0;
    if (profile.kind() == FlowKind::Shear) {
        for (double v : profile.shape_samples()) shape_mean += v;
        shape_mean /= static_cast<double>(profile.ny());
    }
    const double bbar = A * shape_mean;
    const std::size_t n = substeps(horizon, sampler.substep > 0.0 ? sampler.substep : t / 200.0);
    const double width = 2.0 * half / static_cast<double>(spec.bins);

    struct Part {
        std::vector<std::size_t> counts;
        double sum = 0.0, sum2 = 0.0;
    };
    auto parts = run_blocks<Part>(sampler, [&](Engine& eng, std::size_t paths) {
        boost::random::normal_distribution<double> normal;
        Part part;
        part.counts.assign(spec.bins, 0);
        for (std::size_t p = 0; p < paths; ++p) {
            double drift = 0.0;
            if (flowing) drift = 0.5 * A * drift_integral(eng, normal, profile, y0, horizon, n, false).integral;
            const double r = sigma * normal(eng) + drift - bbar * t;
            part.sum += r;
            part.sum2 += r * r;
            const double pos = (r + half) / width;
            if (pos >= 0.0 && pos < static_cast<double>(spec.bins)) ++part.counts[static_cast<std::size_t>(pos)];
        }
        return part;
    });

    KernelProfile out;
    out.n = sampler.n_paths;
    std::vector<std::size_t> counts(spec.bins, 0);
    double sum = 0.0, sum2 = 0.0;
    for (const auto& p : parts) {
        for (std::size_t b = 0; b < spec.bins; ++b) counts[b] += p.counts[b];
        sum += p.sum;
        sum2 += p.sum2;
    }
    const double nn = static_cast<double>(out.n);
    out.mean = sum / nn;
    out.mean_std_error = std::sqrt(std::max(sum2 / nn - out.mean * out.mean, 0.0) / nn);

    // Merge neighbouring bins until enough of them carry statistics.
    double w = width;
    auto usable = [&](const std::vector<std::size_t>& c) {
        return std::count_if(c.begin(), c.end(), [&](std::size_t v) { return v >= spec.min_count; });
    };
    while (usable(counts) < 3 && counts.size() >= 6) {
        std::vector<std::size_t> merged(counts.size() / 2, 0);
        for (std::size_t b = 0; b < merged.size() * 2; ++b) merged[b / 2] += counts[b];
        counts = std::move(merged);
        w *= 2.0;
        out.widened = true;
    }
    if (out.widened) std::cerr << "warning: kernel histogram bins widened to " << w << " for lack of counts\n";

    out.bin_width = w;
    out.counts = counts;
    std::vector<double> fit_r, fit_k;
    for (std::size_t b = 0; b < counts.size(); ++b) {
        const double c = -half + (static_cast<double>(b) + 0.5) * w;
        const double dens = static_cast<double>(counts[b]) / (nn * w);
        out.centers.push_back(c);
        out.density.push_back(dens);
        if (counts[b] >= spec.min_count && std::abs(c) <= spec.fit_sigmas * sigma) {
            fit_r.push_back(c);
            fit_k.push_back(dens);
        }
    }
    out.fitted_C = fit_r.empty() ? 0.0 : fit_kernel_constant(t, fit_r, fit_k);
    return out;
}

void write_histogram_csv(std::ostream& out, const KernelProfile& profile) {
    const auto prec = out.precision(12);
    out << "bin_center,density,count\n";
    for (std::size_t b = 0; b < profile.centers.size(); ++b) {
        out << profile.centers[b] << ',' << profile.density[b] << ',' << profile.counts[b] << '\n';
    }
    out.precision(prec);
}

}  // namespace quenchlab
