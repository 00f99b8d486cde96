#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "quenchlab/certificates.hpp"
#include "quenchlab/model.hpp"
#include "quenchlab/solver.hpp"

namespace quenchlab {

/// Everything one solve needs.
struct Scenario {
    GridConfig grid;
    FlowProfile flow = FlowProfile::zero();
    ReactionSpec reaction = power_law(1.0, 4.0);
    InitSpec init;
    double horizon = 100.0;
    Detectors detectors;
    /// Stop early on a valid restart certificate (zero and shear flows).
    bool restart_certificates = false;
    /// Attempt a datum certificate for quenched verdicts.
    bool certify = true;
    /// Linear-trace length for datum certificates; 0 uses horizon / 4.
    double cert_horizon = 0.0;
};

Grid scenario_grid(const Scenario& s);

/// Meier certificate for T0 = Phi0 (delta0 = 1): linear solve to t1, left
/// Riemann sum of the sup trace plus the analytic tail. Throws
/// TailDivergent for alpha <= 2 and Unsupported for cellular flows.
Certificate datum_certificate(const Scenario& s, double t1);

/// Certifier for Detectors: treats the current state as a new datum and
/// bounds its linear sup-norm by min(s, D t^{-1/2}).
std::function<std::optional<Certificate>(const Field&, const Grid&)> restart_certifier(const ReactionSpec& reaction);

RunVerdict run_scenario(const Scenario& s, const StepObserver& observer = {});

struct SpeedFit {
    double speed = 0.0;
    double residual = 0.0;  ///< rms deviation from the fitted line
};

/// Least-squares slope of the right front (comoving frame) over [t0, t1].
/// Throws DomainError when a front is undefined inside the window.
SpeedFit front_speed(const RunVerdict& verdict, double t0, double t1);

enum class Outcome { Quench, NoQuench, Undecided };

Outcome classify(RunStatus status);
std::string to_string(Outcome outcome);

struct SweepPoint {
    double value = 0.0;
    RunStatus status = RunStatus::Undecided;
    bool by_design = false;      ///< not run (critical case)
    double sup_final = 0.0;
    double front_speed = 0.0;    ///< NaN unless propagating
    std::optional<Certificate> certificate;
    double end_time = 0.0;
};

struct SweepResult {
    std::string parameter;
    std::vector<SweepPoint> points;                    ///< sorted by value
    std::optional<std::pair<double, double>> bracket;  ///< adjacent decided values with differing outcomes
    std::vector<std::pair<double, double>> flips;
    bool monotone = true;
};

struct SweepOptions {
    unsigned workers = 1;
    int bisection_steps = 6;
};

/// Builds the scenario for one sweep value; nullopt marks a value that is
/// reported Undecided by design without a run.
using ScenarioFactory = std::function<std::optional<Scenario>(double)>;

/// Runs every value (in parallel), then bisects a single quench/no-quench
/// flip. Undecided points are skipped when locating flips; bisection stops
/// at the first undecided midpoint.
SweepResult sweep(const std::string& parameter, std::vector<double> values, const ScenarioFactory& make,
                  const SweepOptions& options = {});

SweepPoint evaluate(const Scenario& s, double value);

SweepResult critical_length_scan(const Scenario& base, double eta, const std::vector<double>& L_grid,
                                 const SweepOptions& options = {});
/// p = 3 points are reported Undecided without running.
SweepResult exponent_scan(const Scenario& base, const std::vector<double>& p_grid, double c,
                          const SweepOptions& options = {});
SweepResult amplitude_scan(const Scenario& base, const std::vector<double>& A_grid, const SweepOptions& options = {});
SweepResult plateau_scan(const Scenario& base, const std::vector<double>& halfwidth_grid, double A,
                         const SweepOptions& options = {});

struct ScalingReport {
    double max_deviation = 0.0;
    double budget = 0.0;        ///< 5 (dx^2 + dt) of the coarser run
    double width_ratio = 0.0;   ///< front width at M * factor over front width at M
};

/// Solves at coupling M * factor on (dx, dt) and at M on (sqrt(factor) dx,
/// factor dt) with the datum stretched, so nodes coincide after rescaling.
/// Zero flow and m = 0 only.
ScalingReport scaling_check(const Scenario& base, double factor);

/// Distance between the 0.9 and 0.1 crossings of the right front.
double front_width(const Field& field, const Grid& grid);

struct EnvelopeReport {
    double max_violation = 0.0;  ///< max of T - delta(t) Phi over checked nodes
    double worst_time = 0.0;
    std::size_t checks = 0;
    RunStatus status = RunStatus::Undecided;
    double end_time = 0.0;
    bool pole_reached = false;
};

/// Steps the nonlinear and linear problems from the same datum in lockstep
/// and compares T with delta(t) Phi every `check_every` steps.
EnvelopeReport lockstep_envelope(const Scenario& s, double horizon, std::size_t check_every = 10);

/// `param,value,status,sup_final,front_speed,cert_valid,cert_threshold`.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

}  // namespace quenchlab
