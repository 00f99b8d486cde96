#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "quenchlab/model.hpp"

namespace quenchlab {

/// Paths are simulated in fixed blocks of kPathBlock, each with its own
/// mt19937_64 seeded from (seed, stream_id, block index). Blocks are reduced
/// in index order, so estimates do not depend on the worker count.
inline constexpr std::size_t kPathBlock = 1024;

struct PathSamplerConfig {
    std::size_t n_paths = 100000;
    double substep = 0.0;        ///< 0: estimator default
    std::uint64_t seed = 1;
    std::uint64_t stream_id = 0;
    unsigned workers = 1;
};

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;  ///< sqrt(value (1 - value) / n) for Bernoulli estimators
    std::size_t n = 0;
};

/// Phi(t,x,y) for the datum chi_[-L,L] under u = A s(y), as the probability
/// that x + W^x_{2t} + (A/2) int_0^{2t} s(W^y_s) ds lands in [-L,L].
/// The drift integral uses the midpoint rule with W^y sampled exactly at the
/// midpoints (default substep t/200). Throws Unsupported for cellular flows.
McEstimate fk_phi(double t, double x, double y, double L, double A, const FlowProfile& profile,
                  const PathSamplerConfig& sampler);

/// P(int_0^{2t} u(W^y_s) ds in [a, a+eps]) with the plateau atom removed:
/// paths whose sampled u never leaves u(y) are not counted.
McEstimate drift_window_prob(double t, double y, double a, double eps, const FlowProfile& profile,
                             const PathSamplerConfig& sampler);

struct ConfinementResult {
    McEstimate mc;
    double series = 0.0;  ///< exact for start_y = 0
    double bound = 0.0;
};

/// Probability that W started at start_y stays in (-eps, eps) on [0, 2t].
/// Exits are detected per substep (default min(eps^2/25, t/200)) with the
/// Brownian-bridge crossing probability. Throws DomainError if |start_y| >= eps.
ConfinementResult plateau_confinement_prob(double t, double eps, double start_y, const PathSamplerConfig& sampler);

/// sum_n 4 (-1)^n / ((2n+1) pi) exp(-2t (2n+1)^2 pi^2 / (8 eps^2)), truncated
/// once terms fall below 1e-16 (1 at t = 0).
double confinement_series(double t, double eps);
/// (4/pi) exp(-pi^2 t / (4 eps^2)).
double confinement_bound(double t, double eps);

struct HistogramSpec {
    std::size_t bins = 81;
    double half_range = 0.0;     ///< 0: 8 sqrt(2t)
    std::size_t min_count = 100; ///< bins used in the constant fit
    double fit_sigmas = 6.0;     ///< ignore bins beyond this many sqrt(2t)
};

struct KernelProfile {
    std::vector<double> centers;  ///< r = X_t - x - bbar t
    std::vector<double> density;
    std::vector<std::size_t> counts;
    double bin_width = 0.0;
    double fitted_C = 0.0;        ///< smallest C >= 1 with both Gaussian envelopes on the fitted bins
    double mean = 0.0;
    double mean_std_error = 0.0;
    std::size_t n = 0;
    bool widened = false;         ///< bins were merged for lack of counts
};

/// Endpoint histogram of the x-process started at (x, y) = (0, y0), centred
/// on the effective drift. Throws Unsupported for cellular flows.
KernelProfile heat_kernel_profile(double t, double A, const FlowProfile& profile, const PathSamplerConfig& sampler,
                                  const HistogramSpec& spec = {}, double y0 = 0.0);

/// Smallest C in [1, 1e6] with C^-1 t^-1/2 e^{-C r^2/t} <= k(r) <= C t^-1/2 e^{-r^2/(C t)}
/// at every (r, k) pair; used for both sampled and exact profiles.
double fit_kernel_constant(double t, const std::vector<double>& r, const std::vector<double>& k);

/// `bin_center,density,count`.
void write_histogram_csv(std::ostream& out, const KernelProfile& profile);

}  // namespace quenchlab
