#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace quenchlab {

// ---------------------------------------------------------------------------
// Reactions
// ---------------------------------------------------------------------------

enum class ReactionKind { PowerLaw, Arrhenius, Ignition };

/// A combustion-type nonlinearity f on [0,1] with its coupling and the
/// constants that describe its behaviour near T = 0.
///
/// Families (all vanish at 0 and 1):
///   PowerLaw   f = c T^p (1-T)
///   Arrhenius  f = exp(-arr_c/T) (1-T)
///   Ignition   f = kappa (T-theta0)_+ (1-T),  kappa = c/(1-theta0)^2,
///              so that max f = c/4 like the Fisher-KPP member c T (1-T).
///
/// (c, p, theta) double as the declared envelope f <= c T^p (or >=) on
/// [0, theta]. d is the cached bound sup f(T)/T; slope is sup |f'|.
/// Instances come from the factory functions below, which validate and
/// fill in d and slope.
struct ReactionSpec {
    ReactionKind kind = ReactionKind::PowerLaw;
    double c = 1.0;
    double p = 4.0;
    double arr_c = 1.0;
    double theta0 = 0.25;
    double theta = 1.0;
    double M = 1.0;
    double d = 0.0;
    double slope = 0.0;

    [[nodiscard]] bool is_zero() const noexcept { return M == 0.0 || (kind != ReactionKind::Arrhenius && c == 0.0); }
    /// alpha in f <= c T^{1+alpha}.
    [[nodiscard]] double alpha() const noexcept { return p - 1.0; }
};

/// PowerLaw member. p >= 1 (p = 1 is Fisher-KPP); c = 0 gives f = 0.
ReactionSpec power_law(double c, double p, double M = 1.0, double theta = 1.0);
/// Arrhenius member with a declared envelope (c, p) valid on [0, theta].
ReactionSpec arrhenius(double arr_c, double env_c, double env_p, double M = 1.0, double theta = 1.0);
/// Ignition-cutoff member; its envelope is the trivial one below theta0.
ReactionSpec ignition(double theta0, double c, double M = 1.0);
/// f = 0 (linear problem).
ReactionSpec zero_reaction();

/// f(T) for T in [0,1]; throws DomainError outside. Does not include M.
double eval_reaction(const ReactionSpec& spec, double T);

/// f(T) with T clamped into [0,1]; used inside time integrators where
/// intermediate stages may step marginally outside.
double reaction_rate(const ReactionSpec& spec, double T) noexcept;

/// sup_{T in (0,1]} f(T)/T, accurate to ~1e-12.
double reaction_lipschitz(const ReactionSpec& spec);

/// sup_{T in [0,1]} |f'(T)| estimated from dense difference quotients.
double reaction_slope_bound(const ReactionSpec& spec);

enum class EnvelopeDirection { Upper, Lower };

struct Envelope {
    double c = 1.0;
    double p = 4.0;
    double theta = 1.0;
};

struct EnvelopeCheck {
    bool ok = true;
    std::optional<double> witness;  ///< first violating T
};

/// Dense-sampling check (10^4 points, tolerance 1e-12) of f <= c T^p
/// (Upper) or f >= c T^p (Lower) on [0, theta].
EnvelopeCheck reaction_envelope_check(const ReactionSpec& spec, EnvelopeDirection direction,
                                      const Envelope& envelope);
/// Same, against the envelope declared in the spec itself.
EnvelopeCheck reaction_envelope_check(const ReactionSpec& spec, EnvelopeDirection direction);

std::string to_string(ReactionKind kind);

// ---------------------------------------------------------------------------
// Flows
// ---------------------------------------------------------------------------

enum class FlowKind { Zero, Shear, Periodic2D };

/// Interval on the unit torus where a shear profile is constant.
struct Plateau {
    double center = 0.5;
    double half_width = 0.0;
};

/// Plateau request for build_shear_profile. An empty list yields sin(2 pi y).
struct ShearSpec {
    std::vector<Plateau> plateaux;
    double amplitude = 1.0;
};

/// Flow on the cylinder R x T (period 1 in y).
///
/// Shear flows are u = (A s(y), 0) for a unit shape s, which can be evaluated
/// anywhere on the torus (Monte Carlo needs that) and is also tabulated on a
/// grid of `ny` points. Periodic2D is the cellular flow with stream function
/// psi = (A / 2 pi) sin(2 pi x) sin(2 pi y); velocities are derived from psi
/// at cell corners, so the discrete divergence vanishes identically.
class FlowProfile {
public:
    static FlowProfile zero();
    /// A sin(2 pi y) + offset, tabulated on ny points.
    static FlowProfile sine(double amplitude, std::size_t ny, double offset = 0.0);
    /// Whole torus is one plateau with value u0.
    static FlowProfile constant(double u0, std::size_t ny);
    /// Shear from tabulated unit-shape samples on y_j = j/ny (periodic
    /// linear interpolation between samples).
    static FlowProfile tabulated(std::vector<double> shape_samples, double amplitude);
    static FlowProfile cellular(double amplitude, std::size_t cells_per_unit = 32);

    [[nodiscard]] FlowKind kind() const noexcept { return kind_; }
    [[nodiscard]] double amplitude() const noexcept { return amplitude_; }
    [[nodiscard]] FlowProfile with_amplitude(double amplitude) const;

    /// Unit shape s(y), periodic in y.
    [[nodiscard]] double shape(double y) const;
    /// x-velocity A s(y) for shear flows, 0 for Zero.
    [[nodiscard]] double shear(double y) const { return amplitude_ * shape(y); }
    /// Cellular stream function (Periodic2D only).
    [[nodiscard]] double stream(double x, double y) const;

    /// Samples of the velocity on the profile's own grid (A times shape).
    [[nodiscard]] std::vector<double> samples() const;
    [[nodiscard]] std::span<const double> shape_samples() const noexcept { return shape_samples_; }
    [[nodiscard]] std::size_t ny() const noexcept { return shape_samples_.size(); }

    /// Requested/known plateaux (empty for plateau-free shapes).
    [[nodiscard]] const std::vector<Plateau>& plateaux() const noexcept { return plateaux_; }
    /// Plateau whose interior contains y, if any.
    [[nodiscard]] std::optional<Plateau> plateau_containing(double y) const;

    /// Largest |velocity component|, used for the CFL bound.
    [[nodiscard]] double max_speed() const;

    /// Grid mean of the x-velocity (and y-velocity for Periodic2D).
    [[nodiscard]] double mean() const noexcept { return amplitude_ * shape_mean_; }
    [[nodiscard]] double mean_y() const noexcept { return 0.0; }

    /// Max |discrete divergence| of the corner-stream-function velocities on
    /// the profile's cell grid (Periodic2D), else 0.
    [[nodiscard]] double max_divergence() const;

    /// Two-column CSV `y,u` of the samples.
    void write_csv(std::ostream& out) const;

    friend FlowProfile build_shear_profile(const ShearSpec& spec, std::size_t ny);

private:
    enum class Shape { None, Sine, Hermite, Tabulated, Constant, Cellular };

    struct Segment {
        double y0, y1, v0, v1;
    };

    FlowKind kind_ = FlowKind::Zero;
    Shape shape_ = Shape::None;
    double amplitude_ = 0.0;
    double offset_ = 0.0;      // subtracted from the raw shape
    double raw_offset_ = 0.0;  // added (sine + offset)
    double origin_ = 0.0;      // Hermite segments start here
    std::vector<Segment> segments_;
    std::vector<double> shape_samples_;
    std::vector<Plateau> plateaux_;
    double shape_mean_ = 0.0;

    [[nodiscard]] double raw_shape(double y) const;
    void tabulate(std::size_t ny);
};

/// Mean-zero shear profile realising exactly the requested plateaux (value 0
/// on every plateau), joined by cubic Hermite pieces with zero end slopes: in
/// each gap the profile rises to +1 at one third, falls to -1 at two thirds
/// and returns to 0, so it is C^1 and strictly monotone between knots.
/// Throws ConfigError for overlapping plateaux or ones that fill the torus.
FlowProfile build_shear_profile(const ShearSpec& spec, std::size_t ny);

/// Maximal runs of constant samples (to 1e-12) on a periodic table, as
/// (center, half-width) with edges at the outermost constant samples.
std::vector<Plateau> detect_plateaux(std::span<const double> samples, double tolerance = 1e-12);

/// b-bar: grid average of u (x-component).
double effective_drift(const FlowProfile& profile);

std::string to_string(FlowKind kind);

}  // namespace quenchlab
