#include "quenchlab/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "quenchlab/errors.hpp"

namespace quenchlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double threshold_for(double c, double alpha, double estimate) {
    const double base = c * alpha * estimate;
    if (!(base > 0.0)) return kInf;
    return std::pow(base, -1.0 / alpha);
}
}  // namespace

std::string tail_label(TailKind kind) {
    switch (kind) {
    case TailKind::None: return "none";
    case TailKind::Exact: return "exact";
    case TailKind::Heuristic: return "heuristic-tail";
    }
    return "?";
}

double tail_integral(double s, double D, double alpha, double t1) {
    if (!(alpha > 2.0)) throw TailDivergent("tail integral of t^{-alpha/2} diverges for alpha <= 2");
    if (D <= 0.0 || s <= 0.0) return 0.0;
    const double k = 0.5 * alpha - 1.0;
    const double crossover = (D / s) * (D / s);  // D t^{-1/2} = s
    auto power_tail = [&](double from) { return std::pow(D, alpha) * std::pow(from, -k) / k; };
    if (crossover <= t1) return power_tail(t1);
    return std::pow(s, alpha) * (crossover - t1) + power_tail(crossover);
}

double estimate_I(std::span<const SupSample> trace, double alpha, const TailSpec& tail) {
    if (tail.kind != TailKind::None && !(alpha > 2.0)) {
        throw TailDivergent("alpha <= 2: the t^{-alpha/2} tail is not integrable");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
        const double dt = trace[k + 1].t - trace[k].t;
        sum += std::pow(std::max(trace[k].sup, 0.0), alpha) * dt;
    }
    if (tail.kind == TailKind::None) return sum;
    const double t1 = trace.empty() ? 0.0 : trace.back().t;
    const double s = trace.empty() ? kInf : trace.back().sup;
    if (t1 <= 0.0 && !std::isfinite(s)) {
        throw TailDivergent("tail from t = 0 needs a sup-norm bound");
    }
    return sum + tail_integral(s, tail.D, alpha, t1);
}

Certificate quench_certificate(double I_upper, double c, double alpha, double delta0, std::string tail_method) {
    Certificate cert;
    cert.kind = CertificateKind::Quench;
    cert.alpha = alpha;
    cert.c = c;
    cert.delta0 = delta0;
    cert.estimate = I_upper;
    cert.threshold = threshold_for(c, alpha, I_upper);
    cert.valid = std::isfinite(I_upper) && delta0 >= 0.0 && delta0 < cert.threshold;
    cert.tail_method = std::move(tail_method);
    return cert;
}

Certificate blowup_witness(std::span<const PhiSample> samples, double c, double alpha, double delta0) {
    if (samples.empty()) throw ConfigError("blowup witness needs at least one sample");
    double J = 0.0;
    for (const auto& s : samples) J = std::max(J, s.t * std::pow(std::max(s.phi, 0.0), alpha));
    Certificate cert;
    cert.kind = CertificateKind::Blowup;
    cert.alpha = alpha;
    cert.c = c;
    cert.delta0 = delta0;
    cert.estimate = J;
    cert.threshold = threshold_for(c, alpha, J);
    cert.valid = delta0 > cert.threshold;
    cert.tail_method = "none";
    return cert;
}

EnvelopeSeries supersolution_envelope(std::span<const SupSample> trace, double c, double alpha, double delta0) {
    EnvelopeSeries out;
    if (trace.empty()) return out;
    if (delta0 <= 0.0) {
        for (const auto& s : trace) {
            out.t.push_back(s.t);
            out.delta.push_back(0.0);
        }
        return out;
    }
    const double base = std::pow(delta0, -alpha);
    double integral = 0.0;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        if (k > 0) {
            const double dt = trace[k].t - trace[k - 1].t;
            const double rate = c * alpha * std::pow(std::max(trace[k - 1].sup, 0.0), alpha);
            const double next = integral + std::pow(std::max(trace[k - 1].sup, 0.0), alpha) * dt;
            if (base - c * alpha * next <= 0.0) {
                // Pole inside this interval; the integrand is constant there.
                const double remaining = base - c * alpha * integral;
                out.blowup_time = trace[k - 1].t + (rate > 0.0 ? remaining / rate : 0.0);
                return out;
            }
            integral = next;
        }
        out.t.push_back(trace[k].t);
        out.delta.push_back(std::pow(base - c * alpha * integral, -1.0 / alpha));
    }
    return out;
}

std::optional<double> subsolution_value(double phi, double c, double alpha, double t) {
    if (phi <= 0.0) return 0.0;
    const double base = std::pow(phi, -alpha) - c * alpha * t;
    if (base <= 0.0) return std::nullopt;
    return std::pow(base, -1.0 / alpha);
}

std::string to_string(CertificateKind kind) { return kind == CertificateKind::Quench ? "quench" : "blowup"; }

void write_certificate(std::ostream& out, const Certificate& cert) {
    const auto prec = out.precision(17);
    out << "kind=" << to_string(cert.kind) << '\n'
        << "alpha=" << cert.alpha << '\n'
        << "c=" << cert.c << '\n'
        << "delta0=" << cert.delta0 << '\n'
        << (cert.kind == CertificateKind::Quench ? "I_upper=" : "J_lower=") << cert.estimate << '\n'
        << "threshold=" << cert.threshold << '\n'
        << "valid=" << (cert.valid ? "true" : "false") << '\n'
        << "tail_method=" << cert.tail_method << '\n';
    out.precision(prec);
}

}  // namespace quenchlab
