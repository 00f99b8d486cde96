#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace quenchlab {

enum class CertificateKind { Quench, Blowup };

/// Outcome of Meier's comparison argument for a datum T0 = delta0 * Phi0.
///
/// Quench: valid iff delta0 < (c alpha I_upper)^{-1/alpha}, with I_upper an
/// upper bound on int_0^inf ||Phi(t)||^alpha dt.
/// Blowup: valid iff delta0 > (c alpha J_lower)^{-1/alpha}, with J_lower a
/// lower bound on sup t Phi^alpha.
struct Certificate {
    CertificateKind kind = CertificateKind::Quench;
    double alpha = 0.0;
    double c = 0.0;
    double delta0 = 1.0;
    double estimate = 0.0;   ///< I_upper (Quench) or J_lower (Blowup)
    double threshold = 0.0;  ///< may be +inf
    bool valid = false;
    std::string tail_method;
};

/// Sample of the linear sup-norm trace ||Phi(t)||_inf.
struct SupSample {
    double t = 0.0;
    double sup = 0.0;
};

/// Sample Phi(t, x) used for blowup witnesses.
struct PhiSample {
    double t = 0.0;
    double phi = 0.0;
};

enum class TailKind {
    None,        ///< integrate the trace only (finite horizon)
    Exact,       ///< Phi <= D t^{-1/2}, D = sup_y int Phi0 dx / (2 sqrt(pi)); zero and shear flows
    Heuristic,   ///< D from a fitted kernel constant, already inflated by the caller
};

struct TailSpec {
    TailKind kind = TailKind::None;
    double D = 0.0;
};

std::string tail_label(TailKind kind);

/// Upper bound on I = int_0^inf ||Phi||^alpha.
///
/// The trace is non-increasing (maximum principle), so the left-endpoint sum
/// over [0, t1] bounds the measured part from above for any sampling. Beyond
/// t1 the integrand is at most min(||Phi(t1)||, D t^{-1/2})^alpha, integrated
/// in closed form. Throws TailDivergent when a tail is requested with
/// alpha <= 2.
double estimate_I(std::span<const SupSample> trace, double alpha, const TailSpec& tail);

/// int_{t1}^inf min(s, D t^{-1/2})^alpha dt (alpha > 2).
double tail_integral(double s, double D, double alpha, double t1);

Certificate quench_certificate(double I_upper, double c, double alpha, double delta0,
                               std::string tail_method = "exact");

/// J_lower = max t phi^alpha over the samples. Throws ConfigError when empty.
Certificate blowup_witness(std::span<const PhiSample> samples, double c, double alpha, double delta0);

struct EnvelopeSeries {
    std::vector<double> t;
    std::vector<double> delta;
    std::optional<double> blowup_time;  ///< set when delta(t) reaches its pole in range
};

/// delta(t) = (delta0^-alpha - c alpha int_0^t ||Phi||^alpha)^{-1/alpha} at the
/// trace times (left-endpoint integral, so delta is over- rather than
/// under-estimated). Stops at the pole.
EnvelopeSeries supersolution_envelope(std::span<const SupSample> trace, double c, double alpha, double delta0);

/// w(t, phi) = (phi^-alpha - c alpha t)^{-1/alpha}; nullopt marks blowup.
std::optional<double> subsolution_value(double phi, double c, double alpha, double t);

/// Flat key=value record.
void write_certificate(std::ostream& out, const Certificate& cert);

std::string to_string(CertificateKind kind);

}  // namespace quenchlab
