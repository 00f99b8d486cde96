#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "quenchlab/certificates.hpp"
#include "quenchlab/model.hpp"

namespace quenchlab {

struct GridConfig {
    double X = 50.0;         ///< domain is [-X, X] (x T when m = 1)
    std::size_t nx = 1000;   ///< cells in x; nx + 1 nodes including the Dirichlet ends
    int m = 0;               ///< 1 when the torus factor is present
    std::size_t ny = 1;      ///< nodes on the unit torus (m = 1)
    double dt = 0.0;         ///< 0 selects the largest step allowed by the stability contract
    double safety = 0.8;
};

/// Uniform node grid on [-X,X] (x the unit torus). Values are stored row-major
/// with one row per y node: index(i, j) = j * (nx + 1) + i.
struct Grid {
    double X = 0.0;
    std::size_t nx = 0;
    int m = 0;
    std::size_t ny = 1;
    double dx = 0.0;
    double dy = 1.0;
    double dt = 0.0;

    [[nodiscard]] std::size_t nodes_x() const noexcept { return nx + 1; }
    [[nodiscard]] std::size_t size() const noexcept { return (nx + 1) * ny; }
    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * (nx + 1) + i; }
    [[nodiscard]] double x(std::size_t i) const noexcept { return -X + static_cast<double>(i) * dx; }
    [[nodiscard]] double y(std::size_t j) const noexcept { return static_cast<double>(j) * dy; }
};

/// Grid with dt = cfg.dt, or safety * dx^2 when cfg.dt == 0.
Grid build_grid(const GridConfig& cfg);
/// Grid whose dt obeys the full stability contract for this flow/reaction.
/// A requested cfg.dt larger than the contract is a ConfigError.
Grid build_grid(const GridConfig& cfg, const FlowProfile& flow, const ReactionSpec& reaction);
/// min(CFL, 0.5 / reaction stiffness, dx^2), before the safety factor.
double stability_bound(const Grid& grid, const FlowProfile& flow, const ReactionSpec& reaction);

struct Field {
    std::vector<double> values;
    double time = 0.0;
};

enum class InitKind { Zero, Indicator, Gaussian, Constant };

/// eta * chi_[-L,L](x), eta * exp(-x^2 / width^2), or eta everywhere (interior).
struct InitSpec {
    InitKind kind = InitKind::Indicator;
    double eta = 1.0;
    double L = 1.0;
    double width = 1.0;
};

Field initial_field(const Grid& grid, const InitSpec& init);

/// sup_y int T0(x,y) dx / (2 sqrt(pi)) for the analytic datum: the constant D
/// in Phi(t) <= D t^{-1/2} for zero and shear flows.
double datum_tail_constant(const InitSpec& init);
/// The same constant from a field by cell quadrature.
double field_tail_constant(const Field& field, const Grid& grid);

struct Norms {
    double sup = 0.0;
    double l1 = 0.0;
};

Norms field_norms(const Field& field, const Grid& grid);

/// Row maximum T-hat(x_i) = max_y T(x_i, y).
std::vector<double> row_maximum(const Field& field, const Grid& grid);

struct Fronts {
    double left = 0.0;   ///< NaN when no node reaches 1/2
    double right = 0.0;
};

/// Outermost crossings of T-hat = 1/2, linearly interpolated between nodes.
Fronts front_positions(const Field& field, const Grid& grid);

/// One operator-split time integrator for T_t = Lap T + u.grad T + M f(T).
///
/// Each step is Strang split: half-step diffusion, full upwind advection,
/// full RK4 reaction, half-step diffusion. Diffusion is theta-weighted per
/// direction with theta = max(1/2, 1 - h^2/(2 tau)): Crank-Nicolson whenever
/// that is monotone, damped toward backward Euler otherwise, so the scheme
/// always respects the discrete maximum principle. Factorisations are cached.
class Stepper {
public:
    Stepper(const Grid& grid, const FlowProfile& flow, const ReactionSpec& reaction);

    /// Advance by grid.dt; throws StabilityError when the sup-norm grows
    /// beyond exp(M d dt).
    void advance(Field& field);

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] const ReactionSpec& reaction() const noexcept { return reaction_; }
    [[nodiscard]] double theta_x() const noexcept { return theta_x_; }
    [[nodiscard]] double theta_y() const noexcept { return theta_y_; }

private:
    void diffuse_half(std::vector<double>& v);
    void diffuse_x(std::vector<double>& v);
    void diffuse_y(std::vector<double>& v);
    void advect(std::vector<double>& v);
    void react(std::vector<double>& v) const;

    Grid grid_;
    ReactionSpec reaction_;
    FlowKind flow_kind_;
    bool has_flow_ = false;
    bool has_reaction_ = false;

    // x: Dirichlet tridiagonal on interior nodes 1..nx-1
    double theta_x_ = 0.5;
    double ax_ = 0.0, ex_ = 0.0;
    std::vector<double> cpx_, invx_;

    // y: periodic tridiagonal (Sherman-Morrison)
    double theta_y_ = 0.5;
    double ay_ = 0.0, ey_ = 0.0;
    double gamma_y_ = 0.0, corr_den_ = 1.0;
    std::vector<double> cpy_, invy_, zy_;

    std::vector<double> row_u_;    // shear velocity per row
    std::vector<double> face_ux_;  // Periodic2D: face (i+1/2, j)
    std::vector<double> face_uy_;  // Periodic2D: face (i, j+1/2)

    std::vector<double> scratch_;
    std::vector<double> line_;
};

/// One step from a copy of `field` (builds a fresh Stepper).
Field step(const Field& field, const FlowProfile& flow, const ReactionSpec& reaction, const Grid& grid);

enum class RunStatus { QuenchedNumerical, QuenchedCertified, PropagatingNumerical, Undecided, DomainTooSmall };

std::string to_string(RunStatus status);

struct TracePoint {
    double t = 0.0;
    double sup = 0.0;
    double l1 = 0.0;
    double front_left = 0.0;   ///< NaN when undefined or within the boundary margin
    double front_right = 0.0;
};

enum class PropagationProbe {
    AllRows,  ///< min over the ball of T(t, x, y) over every y
    AnyRow,   ///< min over the ball of max_y T(t, x, y)
};

/// Verdict heuristics for `solve`. The thresholds are numerical conventions,
/// not the asymptotic statements they imitate.
struct Detectors {
    double quench_sup = 1e-3;
    double min_quench_time = 1.0;
    double occupancy = 0.9;
    double gamma = 0.1;            ///< ball radius grows like gamma * t
    double window = 5.0;           ///< sustained-propagation window
    PropagationProbe probe = PropagationProbe::AllRows;
    double boundary_tol = 1e-8;
    double boundary_margin_cells = 5.0;
    double trace_interval = 0.0;   ///< 0: about 4000 samples per horizon
    double wallclock_seconds = 0.0;  ///< 0: unlimited
    bool early_exit = true;

    /// Optional restart certificate evaluated on the current state; a valid
    /// Quench certificate stops the run with QuenchedCertified.
    std::function<std::optional<Certificate>(const Field&, const Grid&)> certifier;
    double certify_interval = 0.0;  ///< 0: at every trace point
};

struct RunVerdict {
    RunStatus status = RunStatus::Undecided;
    std::vector<TracePoint> trace;
    double drift = 0.0;  ///< b-bar of the flow; fronts are reported in the lab frame
    double dx = 0.0;
    double end_time = 0.0;
    bool boundary_touched = false;
    bool wallclock_hit = false;
    std::optional<Certificate> certificate;
    Field final_state;
};

using StepObserver = std::function<void(const Field&)>;

/// Steps to `horizon` or an early verdict:
///   QuenchedNumerical    sup < quench_sup and non-increasing over the last
///                        10% of elapsed time (t >= min_quench_time unless T = 0)
///   QuenchedCertified    `certifier` returned a valid certificate
///   PropagatingNumerical min over |x + b t| <= gamma t exceeds `occupancy`
///                        for `window` while both fronts advance
///   DomainTooSmall       a boundary-adjacent value exceeded boundary_tol and no
///                        propagation was seen (quench claims are then unsound)
/// Dirichlet truncation makes the computed field a subsolution, so a
/// propagation verdict stays valid after the boundary is touched.
RunVerdict solve(const Field& initial, const FlowProfile& flow, const ReactionSpec& reaction, const Grid& grid,
                 double horizon, const Detectors& detectors, const StepObserver& observer = {});

/// f = 0 run to the horizon with no early exit.
RunVerdict linear_solve(const Field& initial, const FlowProfile& flow, const Grid& grid, double horizon,
                        double trace_interval = 0.0, const StepObserver& observer = {});

/// `t nx ny dx dy X m` header, then one whitespace-separated row per y node.
void write_snapshot(std::ostream& out, const Field& field, const Grid& grid);
/// Parses a snapshot (lines starting with '#' are skipped). dt is left 0.
std::pair<Field, Grid> read_snapshot(std::istream& in);
/// CSV with columns t,sup,l1,front_left,front_right.
void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace);

}  // namespace quenchlab
