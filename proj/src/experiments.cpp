#include "quenchlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "quenchlab/errors.hpp"

namespace quenchlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool envelope_holds(const ReactionSpec& r) {
    return r.alpha() > 0.0 && reaction_envelope_check(r, EnvelopeDirection::Upper).ok;
}

// Largest multiplier delta(t) can reach when c alpha I < 1.
double delta_limit(double c, double alpha, double I) {
    const double base = 1.0 - c * alpha * I;
    return base > 0.0 ? std::pow(base, -1.0 / alpha) : std::numeric_limits<double>::infinity();
}

// Meier's argument needs f <= c T^p only where the supersolution lives.
void restrict_to_theta(Certificate& cert, const ReactionSpec& r, double sup0) {
    if (r.theta >= 1.0 || !cert.valid) return;
    if (delta_limit(cert.c, cert.alpha, cert.estimate) * sup0 > r.theta) {
        cert.valid = false;
        cert.tail_method += ";exceeds-theta";
    }
}

template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

Grid scenario_grid(const Scenario& s) { return build_grid(s.grid, s.flow, s.reaction); }

Certificate datum_certificate(const Scenario& s, double t1) {
    if (s.flow.kind() == FlowKind::Periodic2D) throw Unsupported("no exact tail constant for cellular flows");
    const ReactionSpec& r = s.reaction;
    const double alpha = r.alpha();
    const double c = r.M * r.c;
    if (!(alpha > 2.0)) throw TailDivergent("alpha <= 2: no quench certificate from the t^{-1/2} tail");
    const Grid grid = scenario_grid(s);
    const Field datum = initial_field(grid, s.init);
    const double sup0 = field_norms(datum, grid).sup;
    const RunVerdict lin = linear_solve(datum, s.flow, grid, t1);
    std::vector<SupSample> trace;
    trace.reserve(lin.trace.size());
    for (const auto& p : lin.trace) trace.push_back({p.t, p.sup});
    const double D = std::max(datum_tail_constant(s.init), field_tail_constant(datum, grid));
    Certificate cert = quench_certificate(estimate_I(trace, alpha, {TailKind::Exact, D}), c, alpha, 1.0, "exact");
    if (!envelope_holds(r)) {
        cert.valid = false;
        cert.tail_method += ";envelope-failed";
    }
    if (lin.boundary_touched) {
        // A truncated linear solve underestimates Phi.
        cert.valid = false;
        cert.tail_method += ";domain-too-small";
    }
    restrict_to_theta(cert, r, sup0);
    return cert;
}

std::function<std::optional<Certificate>(const Field&, const Grid&)> restart_certifier(const ReactionSpec& reaction) {
    if (!(reaction.alpha() > 2.0) || !envelope_holds(reaction)) return {};
    const double alpha = reaction.alpha();
    const double c = reaction.M * reaction.c;
    return [reaction, alpha, c](const Field& state, const Grid& grid) -> std::optional<Certificate> {
        const double sup = field_norms(state, grid).sup;
        const double D = field_tail_constant(state, grid);
        Certificate cert = quench_certificate(tail_integral(sup, D, alpha, 0.0), c, alpha, 1.0, "restart-exact");
        restrict_to_theta(cert, reaction, sup);
        return cert;
    };
}

RunVerdict run_scenario(const Scenario& s, const StepObserver& observer) {
    const Grid grid = scenario_grid(s);
    Detectors det = s.detectors;
    if (s.restart_certificates && s.flow.kind() != FlowKind::Periodic2D && !det.certifier) {
        det.certifier = restart_certifier(s.reaction);
    }
    return solve(initial_field(grid, s.init), s.flow, s.reaction, grid, s.horizon, det, observer);
}

SpeedFit front_speed(const RunVerdict& verdict, double t0, double t1) {
    std::vector<double> ts, xs;
    for (const auto& p : verdict.trace) {
        if (p.t < t0 || p.t > t1) continue;
        if (std::isnan(p.front_right)) throw DomainError("front undefined inside the fit window");
        ts.push_back(p.t);
        xs.push_back(p.front_right + verdict.drift * p.t);
    }
    if (ts.size() < 2) throw DomainError("fit window holds fewer than two trace points");
    const double n = static_cast<double>(ts.size());
    double mt = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        mt += ts[i];
        mx += xs[i];
    }
    mt /= n;
    mx /= n;
    double stt = 0.0, stx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        stt += (ts[i] - mt) * (ts[i] - mt);
        stx += (ts[i] - mt) * (xs[i] - mx);
    }
    SpeedFit fit;
    fit.speed = stt > 0.0 ? stx / stt : 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double e = xs[i] - (mx + fit.speed * (ts[i] - mt));
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

Outcome classify(RunStatus status) {
    switch (status) {
    case RunStatus::QuenchedNumerical:
    case RunStatus::QuenchedCertified: return Outcome::Quench;
    case RunStatus::PropagatingNumerical: return Outcome::NoQuench;
    default: return Outcome::Undecided;
    }
}

std::string to_string(Outcome outcome) {
    switch (outcome) {
    case Outcome::Quench: return "quench";
    case Outcome::NoQuench: return "no-quench";
    case Outcome::Undecided: return "undecided";
    }
    return "?";
}

SweepPoint evaluate(const Scenario& s, double value) {
    SweepPoint pt;
    pt.value = value;
    const RunVerdict v = run_scenario(s);
    pt.status = v.status;
    pt.end_time = v.end_time;
    pt.sup_final = v.trace.empty() ? 0.0 : v.trace.back().sup;
    pt.front_speed = kNaN;
    if (v.status == RunStatus::PropagatingNumerical) {
        try {
            pt.front_speed = front_speed(v, v.end_time - s.detectors.window, v.end_time).speed;
        } catch (const DomainError&) {
        }
    }
    pt.certificate = v.certificate;
    if (!pt.certificate && s.certify && classify(v.status) == Outcome::Quench && envelope_holds(s.reaction) &&
        s.reaction.alpha() > 2.0 && s.flow.kind() != FlowKind::Periodic2D) {
        pt.certificate = datum_certificate(s, s.cert_horizon > 0.0 ? s.cert_horizon : s.horizon / 4.0);
    }
    return pt;
}

SweepResult sweep(const std::string& parameter, std::vector<double> values, const ScenarioFactory& make,
                  const SweepOptions& options) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    SweepResult res;
    res.parameter = parameter;
    res.points.resize(values.size());

    auto run_one = [&](double value) {
        if (auto s = make(value)) return evaluate(*s, value);
        SweepPoint pt;
        pt.value = value;
        pt.by_design = true;
        pt.front_speed = kNaN;
        return pt;
    };
    parallel_for(values.size(), options.workers, [&](std::size_t i) { res.points[i] = run_one(values[i]); });

    auto locate_flips = [&] {
        res.flips.clear();
        const SweepPoint* prev = nullptr;
        for (const auto& p : res.points) {
            const Outcome o = classify(p.status);
            if (o == Outcome::Undecided) continue;
            if (prev && classify(prev->status) != o) res.flips.emplace_back(prev->value, p.value);
            prev = &p;
        }
        res.monotone = res.flips.size() <= 1;
        res.bracket.reset();
        if (res.flips.size() == 1) res.bracket = res.flips.front();
    };
    locate_flips();
    if (!res.bracket) return res;

    auto outcome_at = [&](double v) {
        for (const auto& p : res.points) {
            if (p.value == v) return classify(p.status);
        }
        return Outcome::Undecided;
    };
    double lo = res.bracket->first, hi = res.bracket->second;
    const Outcome lo_outcome = outcome_at(lo);
    for (int step = 0; step < options.bisection_steps; ++step) {
        const double mid = 0.5 * (lo + hi);
        SweepPoint pt = run_one(mid);
        const Outcome o = classify(pt.status);
        res.points.insert(std::upper_bound(res.points.begin(), res.points.end(), mid,
                                           [](double v, const SweepPoint& p) { return v < p.value; }),
                          pt);
        if (o == Outcome::Undecided) break;
        (o == lo_outcome ? lo : hi) = mid;
    }
    locate_flips();
    return res;
}

SweepResult critical_length_scan(const Scenario& base, double eta, const std::vector<double>& L_grid,
                                 const SweepOptions& options) {
    return sweep("L", L_grid, [&](double L) -> std::optional<Scenario> {
        Scenario s = base;
        s.init = InitSpec{InitKind::Indicator, eta, L, base.init.width};
        return s;
    }, options);
}

SweepResult exponent_scan(const Scenario& base, const std::vector<double>& p_grid, double c,
                          const SweepOptions& options) {
    return sweep("p", p_grid, [&](double p) -> std::optional<Scenario> {
        if (std::abs(p - 3.0) < 1e-12) return std::nullopt;
        Scenario s = base;
        s.reaction = power_law(c, p, base.reaction.M, base.reaction.theta);
        return s;
    }, options);
}

SweepResult amplitude_scan(const Scenario& base, const std::vector<double>& A_grid, const SweepOptions& options) {
    return sweep("A", A_grid, [&](double A) -> std::optional<Scenario> {
        Scenario s = base;
        s.flow = base.flow.with_amplitude(A);
        return s;
    }, options);
}

SweepResult plateau_scan(const Scenario& base, const std::vector<double>& halfwidth_grid, double A,
                         const SweepOptions& options) {
    return sweep("halfwidth", halfwidth_grid, [&](double hw) -> std::optional<Scenario> {
        Scenario s = base;
        ShearSpec spec;
        spec.amplitude = A;
        if (hw > 0.0) spec.plateaux.push_back(Plateau{0.5, hw});
        s.flow = build_shear_profile(spec, base.grid.ny);
        return s;
    }, options);
}

double front_width(const Field& field, const Grid& grid) {
    const auto hat = row_maximum(field, grid);
    auto crossing = [&](double level) {
        for (std::size_t i = hat.size() - 1; i-- > 0;) {
            if (hat[i] >= level && hat[i + 1] < level) {
                return grid.x(i) + grid.dx * (hat[i] - level) / (hat[i] - hat[i + 1]);
            }
        }
        return kNaN;
    };
    return crossing(0.1) - crossing(0.9);
}

ScalingReport scaling_check(const Scenario& base, double factor) {
    if (!(factor > 0.0)) throw ConfigError("scaling factor must be positive");
    if (base.flow.kind() != FlowKind::Zero || base.grid.m != 0) {
        throw ConfigError("scaling_check needs zero flow on the line (m = 0)");
    }
    const double stretch = std::sqrt(factor);

    ReactionSpec ra = base.reaction;
    ra.M *= factor;
    GridConfig ca = base.grid;
    const Grid ga = build_grid(ca, base.flow, ra);

    GridConfig cb = base.grid;
    cb.X *= stretch;
    cb.dt = ga.dt * factor;
    const Grid gb = build_grid(cb);

    InitSpec ib = base.init;
    ib.L *= stretch;
    ib.width *= stretch;

    Field fa = initial_field(ga, base.init);
    Field fb = initial_field(gb, ib);
    Stepper sa(ga, base.flow, ra);
    Stepper sb(gb, base.flow, base.reaction);
    const auto steps = static_cast<std::size_t>(std::llround(base.horizon / ga.dt));
    for (std::size_t k = 0; k < steps; ++k) {
        sa.advance(fa);
        sb.advance(fb);
    }
    ScalingReport rep;
    for (std::size_t i = 0; i < fa.values.size(); ++i) {
        rep.max_deviation = std::max(rep.max_deviation, std::abs(fa.values[i] - fb.values[i]));
    }
    rep.budget = 5.0 * (gb.dx * gb.dx + gb.dt);
    rep.width_ratio = front_width(fa, ga) / front_width(fb, gb);
    return rep;
}

EnvelopeReport lockstep_envelope(const Scenario& s, double horizon, std::size_t check_every) {
    const ReactionSpec& r = s.reaction;
    const double alpha = r.alpha();
    const double c = r.M * r.c;
    const Grid grid = scenario_grid(s);
    Stepper nonlinear(grid, s.flow, r);
    Stepper linear(grid, s.flow, zero_reaction());
    Field T = initial_field(grid, s.init);
    Field phi = T;
    EnvelopeReport rep;
    rep.max_violation = -std::numeric_limits<double>::infinity();
    double integral = 0.0;
    double phi_sup = field_norms(phi, grid).sup;
    std::size_t k = 0;
    const double eps = 1e-9 * grid.dt;
    while (T.time + eps < horizon) {
        nonlinear.advance(T);
        linear.advance(phi);
        // Left endpoint: ||Phi|| is nonincreasing, so this over-estimates delta.
        integral += std::pow(phi_sup, alpha) * grid.dt;
        phi_sup = field_norms(phi, grid).sup;
        const double base = 1.0 - c * alpha * integral;
        if (base <= 0.0) {
            rep.pole_reached = true;
            break;
        }
        ++k;
        if (k % check_every == 0) {
            const double delta = std::pow(base, -1.0 / alpha);
            for (std::size_t i = 0; i < T.values.size(); ++i) {
                const double v = T.values[i] - delta * phi.values[i];
                if (v > rep.max_violation) {
                    rep.max_violation = v;
                    rep.worst_time = T.time;
                }
            }
            ++rep.checks;
        }
    }
    rep.end_time = T.time;
    const double sup = field_norms(T, grid).sup;
    rep.status = sup < s.detectors.quench_sup ? RunStatus::QuenchedNumerical : RunStatus::Undecided;
    return rep;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    const auto prec = out.precision(12);
    out << "param,value,status,sup_final,front_speed,cert_valid,cert_threshold\n";
    for (const auto& p : result.points) {
        out << result.parameter << ',' << p.value << ',' << (p.by_design ? "UndecidedByDesign" : to_string(p.status))
            << ',' << p.sup_final << ',';
        if (!std::isnan(p.front_speed)) out << p.front_speed;
        out << ',';
        if (p.certificate) out << (p.certificate->valid ? "true" : "false");
        out << ',';
        if (p.certificate) out << p.certificate->threshold;
        out << '\n';
    }
    out.precision(prec);
}

}  // namespace quenchlab
