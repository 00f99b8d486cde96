#include "quenchlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "quenchlab/errors.hpp"

namespace quenchlab {

namespace {

constexpr std::size_t kDenseSamples = 10000;
constexpr double kEnvelopeTolerance = 1e-12;

// T^p with cheap paths for the integer exponents the experiments use.
inline double power(double T, double p) noexcept {
    if (p == 1.0) return T;
    if (p == 2.0) return T * T;
    if (p == 3.0) return T * T * T;
    if (p == 4.0) {
        const double t2 = T * T;
        return t2 * t2;
    }
    if (p == 5.0) {
        const double t2 = T * T;
        return t2 * t2 * T;
    }
    return std::pow(T, p);
}

// f(T)/T, extended continuously to T = 0.
double ratio(const ReactionSpec& spec, double T) {
    if (T <= 0.0) {
        if (spec.kind == ReactionKind::PowerLaw && spec.p == 1.0) return spec.c;
        return 0.0;
    }
    return reaction_rate(spec, T) / T;
}

void check_finite_positive(double v, const char* what) {
    if (!std::isfinite(v) || v <= 0.0) {
        throw ConfigError(std::string(what) + " must be positive and finite");
    }
}

ReactionSpec finish(ReactionSpec spec) {
    if (!std::isfinite(spec.M) || spec.M < 0.0) throw ConfigError("M must be nonnegative");
    if (!(spec.theta > 0.0 && spec.theta <= 1.0)) throw ConfigError("theta must lie in (0,1]");
    spec.d = reaction_lipschitz(spec);
    spec.slope = reaction_slope_bound(spec);
    return spec;
}

double frac(double y) noexcept {
    double z = y - std::floor(y);
    return z >= 1.0 ? 0.0 : z;
}

}  // namespace

ReactionSpec power_law(double c, double p, double M, double theta) {
    if (!std::isfinite(c) || c < 0.0) throw ConfigError("c must be nonnegative");
    if (!std::isfinite(p) || p < 1.0) throw ConfigError("p must exceed 1");
    ReactionSpec spec;
    spec.kind = ReactionKind::PowerLaw;
    spec.c = c;
    spec.p = p;
    spec.M = M;
    spec.theta = theta;
    return finish(spec);
}

ReactionSpec arrhenius(double arr_c, double env_c, double env_p, double M, double theta) {
    check_finite_positive(arr_c, "arr_c");
    if (!std::isfinite(env_c) || env_c < 0.0) throw ConfigError("c must be nonnegative");
    if (!std::isfinite(env_p) || env_p < 1.0) throw ConfigError("p must exceed 1");
    ReactionSpec spec;
    spec.kind = ReactionKind::Arrhenius;
    spec.arr_c = arr_c;
    spec.c = env_c;
    spec.p = env_p;
    spec.M = M;
    spec.theta = theta;
    return finish(spec);
}

ReactionSpec ignition(double theta0, double c, double M) {
    if (!(theta0 > 0.0 && theta0 < 1.0)) throw ConfigError("theta0 must lie in (0,1)");
    if (!std::isfinite(c) || c < 0.0) throw ConfigError("c must be nonnegative");
    ReactionSpec spec;
    spec.kind = ReactionKind::Ignition;
    spec.theta0 = theta0;
    spec.c = c;
    // Below theta0 the reaction vanishes, so any power envelope holds there.
    spec.p = 4.0;
    spec.theta = theta0;
    spec.M = M;
    return finish(spec);
}

ReactionSpec zero_reaction() { return power_law(0.0, 2.0, 0.0); }

double reaction_rate(const ReactionSpec& spec, double T) noexcept {
    if (T <= 0.0 || T >= 1.0) return 0.0;
    switch (spec.kind) {
    case ReactionKind::PowerLaw:
        return spec.c * power(T, spec.p) * (1.0 - T);
    case ReactionKind::Arrhenius:
        return std::exp(-spec.arr_c / T) * (1.0 - T);
    case ReactionKind::Ignition: {
        if (T <= spec.theta0) return 0.0;
        const double w = 1.0 - spec.theta0;
        return spec.c / (w * w) * (T - spec.theta0) * (1.0 - T);
    }
    }
    return 0.0;
}

double eval_reaction(const ReactionSpec& spec, double T) {
    if (!(T >= 0.0 && T <= 1.0)) {
        std::ostringstream msg;
        msg << "reaction evaluated outside [0,1] at T=" << T;
        throw DomainError(msg.str());
    }
    return reaction_rate(spec, T);
}

double reaction_lipschitz(const ReactionSpec& spec) {
    const double h = 1.0 / static_cast<double>(kDenseSamples);
    std::size_t best_k = 0;
    double best = ratio(spec, 0.0);
    for (std::size_t k = 1; k <= kDenseSamples; ++k) {
        const double v = ratio(spec, static_cast<double>(k) * h);
        if (v > best) {
            best = v;
            best_k = k;
        }
    }
    if (best <= 0.0) return 0.0;
    const double lo = std::max(static_cast<double>(best_k) - 1.0, 0.0) * h;
    const double hi = std::min(static_cast<double>(best_k) + 1.0, static_cast<double>(kDenseSamples)) * h;
    auto neg = [&](double T) { return -ratio(spec, T); };
    const auto [arg, val] = boost::math::tools::brent_find_minima(neg, std::max(lo, 1e-300), hi, 40);
    (void)arg;
    return std::max(best, -val);
}

double reaction_slope_bound(const ReactionSpec& spec) {
    const double h = 1.0 / static_cast<double>(kDenseSamples);
    double best = 0.0;
    double prev = reaction_rate(spec, 0.0);
    for (std::size_t k = 1; k <= kDenseSamples; ++k) {
        const double cur = reaction_rate(spec, static_cast<double>(k) * h);
        best = std::max(best, std::abs(cur - prev) / h);
        prev = cur;
    }
    return best;
}

EnvelopeCheck reaction_envelope_check(const ReactionSpec& spec, EnvelopeDirection direction,
                                      const Envelope& envelope) {
    EnvelopeCheck result;
    const std::size_t n = kDenseSamples;
    for (std::size_t k = 0; k < n; ++k) {
        const double T = envelope.theta * static_cast<double>(k) / static_cast<double>(n - 1);
        const double f = reaction_rate(spec, T);
        const double bound = envelope.c * power(T, envelope.p);
        const bool violated = direction == EnvelopeDirection::Upper ? f > bound + kEnvelopeTolerance
                                                                    : f < bound - kEnvelopeTolerance;
        if (violated) {
            result.ok = false;
            result.witness = T;
            return result;
        }
    }
    return result;
}

EnvelopeCheck reaction_envelope_check(const ReactionSpec& spec, EnvelopeDirection direction) {
    return reaction_envelope_check(spec, direction, Envelope{spec.c, spec.p, spec.theta});
}

std::string to_string(ReactionKind kind) {
    switch (kind) {
    case ReactionKind::PowerLaw: return "powerlaw";
    case ReactionKind::Arrhenius: return "arrhenius";
    case ReactionKind::Ignition: return "ignition";
    }
    return "?";
}

// ---------------------------------------------------------------------------

FlowProfile FlowProfile::zero() { return FlowProfile{}; }

FlowProfile FlowProfile::sine(double amplitude, std::size_t ny, double offset) {
    FlowProfile f;
    f.kind_ = FlowKind::Shear;
    f.shape_ = Shape::Sine;
    f.amplitude_ = amplitude;
    f.raw_offset_ = offset;
    f.tabulate(ny);
    return f;
}

FlowProfile FlowProfile::constant(double u0, std::size_t ny) {
    FlowProfile f;
    f.kind_ = FlowKind::Shear;
    f.shape_ = Shape::Constant;
    f.amplitude_ = u0;
    f.plateaux_ = {Plateau{0.5, 0.5}};
    f.tabulate(ny);
    return f;
}

FlowProfile FlowProfile::tabulated(std::vector<double> shape_samples, double amplitude) {
    if (shape_samples.size() < 2) throw ConfigError("tabulated profile needs at least two samples");
    FlowProfile f;
    f.kind_ = FlowKind::Shear;
    f.shape_ = Shape::Tabulated;
    f.amplitude_ = amplitude;
    f.shape_samples_ = std::move(shape_samples);
    double sum = 0.0;
    for (double v : f.shape_samples_) sum += v;
    f.shape_mean_ = sum / static_cast<double>(f.shape_samples_.size());
    f.plateaux_ = detect_plateaux(f.shape_samples_);
    return f;
}

FlowProfile FlowProfile::cellular(double amplitude, std::size_t cells_per_unit) {
    if (cells_per_unit < 4) throw ConfigError("cellular flow needs at least 4 cells per unit");
    FlowProfile f;
    f.kind_ = FlowKind::Periodic2D;
    f.shape_ = Shape::Cellular;
    f.amplitude_ = amplitude;
    f.shape_samples_.assign(cells_per_unit, 0.0);
    f.shape_mean_ = 0.0;
    return f;
}

FlowProfile FlowProfile::with_amplitude(double amplitude) const {
    FlowProfile f = *this;
    f.amplitude_ = amplitude;
    return f;
}

double FlowProfile::raw_shape(double y) const {
    switch (shape_) {
    case Shape::None:
    case Shape::Cellular:
        return 0.0;
    case Shape::Constant:
        return 1.0;
    case Shape::Sine:
        return std::sin(2.0 * std::numbers::pi * y) + raw_offset_;
    case Shape::Tabulated: {
        const auto n = shape_samples_.size();
        const double z = frac(y) * static_cast<double>(n);
        const auto j = std::min(static_cast<std::size_t>(z), n - 1);
        const double w = z - static_cast<double>(j);
        return (1.0 - w) * shape_samples_[j] + w * shape_samples_[(j + 1) % n];
    }
    case Shape::Hermite: {
        const double z = frac(y - origin_);
        auto it = std::upper_bound(segments_.begin(), segments_.end(), z,
                                   [](double v, const Segment& s) { return v < s.y0; });
        const Segment& s = it == segments_.begin() ? segments_.front() : *std::prev(it);
        const double len = s.y1 - s.y0;
        if (s.v0 == s.v1 || len <= 0.0) return s.v0;
        const double r = std::clamp((z - s.y0) / len, 0.0, 1.0);
        return s.v0 + (s.v1 - s.v0) * r * r * (3.0 - 2.0 * r);
    }
    }
    return 0.0;
}

double FlowProfile::shape(double y) const {
    if (shape_ == Shape::Tabulated) return raw_shape(y);
    return raw_shape(y) - offset_;
}

double FlowProfile::stream(double x, double y) const {
    if (kind_ != FlowKind::Periodic2D) return 0.0;
    const double k = 2.0 * std::numbers::pi;
    return amplitude_ / k * std::sin(k * x) * std::sin(k * y);
}

void FlowProfile::tabulate(std::size_t ny) {
    if (ny < 2) throw ConfigError("profile needs at least two samples");
    shape_samples_.resize(ny);
    offset_ = 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
        shape_samples_[j] = raw_shape(static_cast<double>(j) / static_cast<double>(ny));
        sum += shape_samples_[j];
    }
    if (shape_ == Shape::Hermite) {
        // Renormalise to grid mean zero; plateaux stay constant.
        offset_ = sum / static_cast<double>(ny);
        sum = 0.0;
        for (auto& v : shape_samples_) {
            v -= offset_;
            sum += v;
        }
    }
    shape_mean_ = sum / static_cast<double>(ny);
}

std::vector<double> FlowProfile::samples() const {
    std::vector<double> out(shape_samples_.size());
    if (kind_ == FlowKind::Periodic2D) return out;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = amplitude_ * shape_samples_[j];
    return out;
}

std::optional<Plateau> FlowProfile::plateau_containing(double y) const {
    const double z = frac(y);
    for (const auto& p : plateaux_) {
        if (p.half_width >= 0.5) return p;
        double dist = std::abs(z - frac(p.center));
        dist = std::min(dist, 1.0 - dist);
        if (dist < p.half_width) return p;
    }
    return std::nullopt;
}

double FlowProfile::max_speed() const {
    switch (kind_) {
    case FlowKind::Zero: return 0.0;
    case FlowKind::Periodic2D: return std::abs(amplitude_);
    case FlowKind::Shear: break;
    }
    double m = 0.0;
    for (double v : shape_samples_) m = std::max(m, std::abs(v));
    if (shape_ == Shape::Sine) m = std::max(m, 1.0 + std::abs(raw_offset_));
    if (shape_ == Shape::Hermite) m = std::max(m, 1.0 + std::abs(offset_));
    return std::abs(amplitude_) * m;
}

double FlowProfile::max_divergence() const {
    if (kind_ != FlowKind::Periodic2D) return 0.0;
    const auto n = shape_samples_.size();
    const double h = 1.0 / static_cast<double>(n);
    // Velocities on cell faces from psi at corners; divergence per cell.
    auto psi = [&](std::size_t i, std::size_t j) {
        return stream(static_cast<double>(i % n) * h, static_cast<double>(j % n) * h);
    };
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double ux_r = (psi(i + 1, j + 1) - psi(i + 1, j)) / h;
            const double ux_l = (psi(i, j + 1) - psi(i, j)) / h;
            const double uy_t = -(psi(i + 1, j + 1) - psi(i, j + 1)) / h;
            const double uy_b = -(psi(i + 1, j) - psi(i, j)) / h;
            worst = std::max(worst, std::abs((ux_r - ux_l) / h + (uy_t - uy_b) / h));
        }
    }
    return worst;
}

void FlowProfile::write_csv(std::ostream& out) const {
    out << "y,u\n";
    const auto u = samples();
    const auto n = u.size();
    out.precision(17);
    for (std::size_t j = 0; j < n; ++j) {
        out << static_cast<double>(j) / static_cast<double>(n) << ',' << u[j] << '\n';
    }
}

FlowProfile build_shear_profile(const ShearSpec& spec, std::size_t ny) {
    if (spec.plateaux.empty()) return FlowProfile::sine(spec.amplitude, ny);

    std::vector<Plateau> req = spec.plateaux;
    double total = 0.0;
    for (auto& p : req) {
        if (!(p.half_width > 0.0) || !std::isfinite(p.center)) {
            throw ConfigError("plateau half-width must be positive");
        }
        p.center = frac(p.center);
        total += 2.0 * p.half_width;
    }
    if (total >= 1.0) throw ConfigError("plateaux do not fit in the torus");
    std::sort(req.begin(), req.end(), [](const Plateau& a, const Plateau& b) { return a.center < b.center; });
    for (std::size_t i = 0; i < req.size(); ++i) {
        const auto& a = req[i];
        const auto& b = req[(i + 1) % req.size()];
        double gap = b.center - a.center;
        if (i + 1 == req.size()) gap += 1.0;
        if (gap - a.half_width - b.half_width <= 0.0) throw ConfigError("overlapping plateau requests");
    }

    FlowProfile f;
    f.kind_ = FlowKind::Shear;
    f.shape_ = FlowProfile::Shape::Hermite;
    f.amplitude_ = spec.amplitude;
    f.origin_ = req.front().center - req.front().half_width;
    double z = 0.0;
    for (std::size_t i = 0; i < req.size(); ++i) {
        const auto& a = req[i];
        const double z_end = z + 2.0 * a.half_width;
        f.segments_.push_back({z, z_end, 0.0, 0.0});
        double next_start = 1.0;
        if (i + 1 < req.size()) next_start = frac(req[i + 1].center - req[i + 1].half_width - f.origin_);
        const double g = (next_start - z_end) / 3.0;
        f.segments_.push_back({z_end, z_end + g, 0.0, 1.0});
        f.segments_.push_back({z_end + g, z_end + 2.0 * g, 1.0, -1.0});
        f.segments_.push_back({z_end + 2.0 * g, next_start, -1.0, 0.0});
        z = next_start;
    }
    f.plateaux_ = req;
    f.tabulate(ny);
    return f;
}

std::vector<Plateau> detect_plateaux(std::span<const double> samples, double tolerance) {
    const std::size_t n = samples.size();
    std::vector<Plateau> out;
    if (n < 2) return out;
    auto same = [&](std::size_t j) {
        const double a = samples[j];
        const double b = samples[(j + 1) % n];
        return std::abs(a - b) <= tolerance * std::max(1.0, std::abs(a));
    };
    std::size_t start = n;
    for (std::size_t j = 0; j < n; ++j) {
        if (!same(j)) {
            start = (j + 1) % n;
            break;
        }
    }
    if (start == n) return {Plateau{0.5, 0.5}};
    const double dy = 1.0 / static_cast<double>(n);
    std::size_t k = 0;
    while (k < n) {
        const std::size_t j = (start + k) % n;
        if (!same(j)) {
            ++k;
            continue;
        }
        std::size_t run = 0;
        while (k + run < n && same((start + k + run) % n)) ++run;
        // Edges j .. j+run are all equal: run+1 samples spanning run*dy.
        const double first = static_cast<double>(j) * dy;
        const double width = static_cast<double>(run) * dy;
        out.push_back(Plateau{frac(first + 0.5 * width), 0.5 * width});
        k += run;
    }
    std::sort(out.begin(), out.end(), [](const Plateau& a, const Plateau& b) { return a.center < b.center; });
    return out;
}

double effective_drift(const FlowProfile& profile) { return profile.mean(); }

std::string to_string(FlowKind kind) {
    switch (kind) {
    case FlowKind::Zero: return "zero";
    case FlowKind::Shear: return "shear";
    case FlowKind::Periodic2D: return "periodic2d";
    }
    return "?";
}

}  // namespace quenchlab
