#include "quenchlab/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "quenchlab/errors.hpp"

namespace quenchlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kGrowthTolerance = 1e-9;

bool is_shear(const FlowProfile& flow) { return flow.kind() == FlowKind::Shear; }

void validate_flow(const Grid& grid, const FlowProfile& flow) {
    if (flow.kind() != FlowKind::Zero && grid.m != 1) {
        throw ConfigError("flow." + to_string(flow.kind()) + " needs domain.m = 1");
    }
}

// Velocity of row j (x-component), on the grid's own y nodes.
std::vector<double> row_velocity(const Grid& grid, const FlowProfile& flow) {
    std::vector<double> u(grid.ny, 0.0);
    if (!is_shear(flow)) return u;
    if (flow.ny() == grid.ny) return flow.samples();
    for (std::size_t j = 0; j < grid.ny; ++j) u[j] = flow.shear(grid.y(j));
    return u;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

Grid build_grid(const GridConfig& cfg) {
    if (!(cfg.X > 0.0) || !std::isfinite(cfg.X)) throw ConfigError("domain.X must be positive");
    if (cfg.nx < 2) throw ConfigError("domain.nx must be at least 2");
    if (cfg.m != 0 && cfg.m != 1) throw ConfigError("domain.m must be 0 or 1");
    if (cfg.m == 1 && cfg.ny < 4) throw ConfigError("domain.ny must be at least 4 when m = 1");
    if (!(cfg.safety > 0.0 && cfg.safety <= 1.0)) throw ConfigError("time.safety must lie in (0,1]");
    if (cfg.dt < 0.0 || !std::isfinite(cfg.dt)) throw ConfigError("time.dt must be nonnegative");
    Grid g;
    g.X = cfg.X;
    g.nx = cfg.nx;
    g.m = cfg.m;
    g.ny = cfg.m == 1 ? cfg.ny : 1;
    g.dx = 2.0 * cfg.X / static_cast<double>(cfg.nx);
    g.dy = cfg.m == 1 ? 1.0 / static_cast<double>(g.ny) : 1.0;
    g.dt = cfg.dt > 0.0 ? cfg.dt : cfg.safety * g.dx * g.dx;
    return g;
}

double stability_bound(const Grid& grid, const FlowProfile& flow, const ReactionSpec& reaction) {
    validate_flow(grid, flow);
    double bound = grid.dx * grid.dx;
    const double A = std::abs(flow.amplitude());
    if (flow.kind() == FlowKind::Shear) {
        double umax = 0.0;
        for (double v : row_velocity(grid, flow)) umax = std::max(umax, std::abs(v));
        if (umax > 0.0) bound = std::min(bound, grid.dx / umax);
    } else if (flow.kind() == FlowKind::Periodic2D && A > 0.0) {
        bound = std::min(bound, 1.0 / (A * (1.0 / grid.dx + 1.0 / grid.dy)));
    }
    if (!reaction.is_zero()) {
        const double stiff = reaction.M * std::max(reaction.d, reaction.slope);
        if (stiff > 0.0) bound = std::min(bound, 0.5 / stiff);
    }
    return bound;
}

Grid build_grid(const GridConfig& cfg, const FlowProfile& flow, const ReactionSpec& reaction) {
    Grid g = build_grid(GridConfig{cfg.X, cfg.nx, cfg.m, cfg.ny, 0.0, cfg.safety});
    const double limit = cfg.safety * stability_bound(g, flow, reaction);
    if (cfg.dt > 0.0) {
        if (cfg.dt > limit * (1.0 + 1e-12)) {
            std::ostringstream msg;
            msg << "time.dt = " << cfg.dt << " exceeds the stability limit " << limit;
            throw ConfigError(msg.str());
        }
        g.dt = cfg.dt;
    } else {
        g.dt = limit;
    }
    return g;
}

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

Field initial_field(const Grid& grid, const InitSpec& init) {
    if (!std::isfinite(init.eta) || init.eta < 0.0) throw ConfigError("init.eta must be nonnegative");
    Field f;
    f.values.assign(grid.size(), 0.0);
    const std::size_t nxn = grid.nodes_x();
    std::vector<double> row(nxn, 0.0);
    for (std::size_t i = 1; i + 1 < nxn; ++i) {
        const double x = grid.x(i);
        switch (init.kind) {
        case InitKind::Zero: break;
        case InitKind::Indicator:
            if (std::abs(x) <= init.L * (1.0 + 1e-12)) row[i] = init.eta;
            break;
        case InitKind::Gaussian:
            row[i] = init.eta * std::exp(-(x * x) / (init.width * init.width));
            break;
        case InitKind::Constant: row[i] = init.eta; break;
        }
    }
    for (std::size_t j = 0; j < grid.ny; ++j) std::copy(row.begin(), row.end(), f.values.begin() + j * nxn);
    return f;
}

double datum_tail_constant(const InitSpec& init) {
    switch (init.kind) {
    case InitKind::Zero: return 0.0;
    case InitKind::Indicator: return init.eta * init.L / std::sqrt(std::numbers::pi);
    case InitKind::Gaussian: return 0.5 * init.eta * init.width;
    case InitKind::Constant: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

double field_tail_constant(const Field& field, const Grid& grid) {
    const std::size_t nxn = grid.nodes_x();
    double best = 0.0;
    for (std::size_t j = 0; j < grid.ny; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < nxn; ++i) s += std::max(field.values[j * nxn + i], 0.0);
        best = std::max(best, s * grid.dx);
    }
    return best / (2.0 * std::sqrt(std::numbers::pi));
}

Norms field_norms(const Field& field, const Grid& grid) {
    Norms n;
    double sum = 0.0;
    for (double v : field.values) {
        n.sup = std::max(n.sup, std::abs(v));
        sum += v;
    }
    n.l1 = sum * grid.dx * grid.dy;
    return n;
}

std::vector<double> row_maximum(const Field& field, const Grid& grid) {
    const std::size_t nxn = grid.nodes_x();
    std::vector<double> hat(field.values.begin(), field.values.begin() + static_cast<std::ptrdiff_t>(nxn));
    for (std::size_t j = 1; j < grid.ny; ++j) {
        const double* row = field.values.data() + j * nxn;
        for (std::size_t i = 0; i < nxn; ++i) hat[i] = std::max(hat[i], row[i]);
    }
    return hat;
}

Fronts front_positions(const Field& field, const Grid& grid) {
    const auto hat = row_maximum(field, grid);
    Fronts fr{kNaN, kNaN};
    const std::size_t n = hat.size();
    for (std::size_t i = n; i-- > 0;) {
        if (hat[i] >= 0.5) {
            fr.right = grid.x(i);
            if (i + 1 < n && hat[i] > hat[i + 1]) fr.right += grid.dx * (hat[i] - 0.5) / (hat[i] - hat[i + 1]);
            break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (hat[i] >= 0.5) {
            fr.left = grid.x(i);
            if (i > 0 && hat[i] > hat[i - 1]) fr.left -= grid.dx * (hat[i] - 0.5) / (hat[i] - hat[i - 1]);
            break;
        }
    }
    return fr;
}

// ---------------------------------------------------------------------------
// Stepper
// ---------------------------------------------------------------------------

Stepper::Stepper(const Grid& grid, const FlowProfile& flow, const ReactionSpec& reaction)
    : grid_(grid), reaction_(reaction), flow_kind_(flow.kind()) {
    validate_flow(grid, flow);
    if (!(grid.dt > 0.0)) throw ConfigError("time step must be positive");
    has_reaction_ = !reaction.is_zero();
    has_flow_ = flow.kind() != FlowKind::Zero && flow.amplitude() != 0.0;

    const double tau = 0.5 * grid.dt;

    // x: (1 + 2 r theta) on the diagonal, -r theta off it, interior nodes only.
    const double rx = tau / (grid.dx * grid.dx);
    theta_x_ = std::max(0.5, 1.0 - grid.dx * grid.dx / (2.0 * tau));
    ax_ = rx * theta_x_;
    ex_ = rx * (1.0 - theta_x_);
    const std::size_t n = grid.nx - 1;
    cpx_.resize(n);
    invx_.resize(n);
    {
        const double diag = 1.0 + 2.0 * ax_;
        double prev = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double m = diag - (k == 0 ? 0.0 : -ax_ * prev);
            invx_[k] = 1.0 / m;
            cpx_[k] = -ax_ * invx_[k];
            prev = cpx_[k];
        }
    }

    if (grid.m == 1) {
        const double ry = tau / (grid.dy * grid.dy);
        theta_y_ = std::max(0.5, 1.0 - grid.dy * grid.dy / (2.0 * tau));
        ay_ = ry * theta_y_;
        ey_ = ry * (1.0 - theta_y_);
        const std::size_t ny = grid.ny;
        const double diag = 1.0 + 2.0 * ay_;
        const double off = -ay_;
        gamma_y_ = -diag;
        std::vector<double> d(ny, diag);
        d.front() -= gamma_y_;
        d.back() -= off * off / gamma_y_;
        cpy_.resize(ny);
        invy_.resize(ny);
        double prev = 0.0;
        for (std::size_t k = 0; k < ny; ++k) {
            const double m = d[k] - (k == 0 ? 0.0 : off * prev);
            invy_[k] = 1.0 / m;
            cpy_[k] = off * invy_[k];
            prev = cpy_[k];
        }
        // z solves the modified system against u = (gamma, 0, ..., 0, off).
        zy_.assign(ny, 0.0);
        zy_.front() = gamma_y_;
        zy_.back() = off;
        zy_[0] *= invy_[0];
        for (std::size_t k = 1; k < ny; ++k) zy_[k] = (zy_[k] - off * zy_[k - 1]) * invy_[k];
        for (std::size_t k = ny - 1; k-- > 0;) zy_[k] -= cpy_[k] * zy_[k + 1];
        corr_den_ = 1.0 + zy_.front() + off * zy_.back() / gamma_y_;
    }

    if (has_flow_) {
        if (flow.kind() == FlowKind::Shear) {
            row_u_ = row_velocity(grid, flow);
        } else {
            // Face velocities from psi at cell corners; u = (psi_y, -psi_x).
            const std::size_t nxn = grid.nodes_x();
            const double hx = 0.5 * grid.dx, hy = 0.5 * grid.dy;
            face_ux_.assign(grid.size(), 0.0);  // face (i+1/2, j)
            face_uy_.assign(grid.size(), 0.0);  // face (i, j+1/2)
            for (std::size_t j = 0; j < grid.ny; ++j) {
                const double y = grid.y(j);
                for (std::size_t i = 0; i < nxn; ++i) {
                    const double x = grid.x(i);
                    face_ux_[j * nxn + i] = (flow.stream(x + hx, y + hy) - flow.stream(x + hx, y - hy)) / grid.dy;
                    face_uy_[j * nxn + i] = -(flow.stream(x + hx, y + hy) - flow.stream(x - hx, y + hy)) / grid.dx;
                }
            }
        }
    }
    scratch_.resize(grid.size());
    line_.resize(grid.nodes_x());
}

void Stepper::diffuse_x(std::vector<double>& v) {
    // Rows are solved in groups so the serial Thomas recurrences of
    // independent rows overlap.
    constexpr std::size_t kGroup = 8;
    const std::size_t nxn = grid_.nodes_x();
    const std::size_t n = grid_.nx - 1;
    for (std::size_t j0 = 0; j0 < grid_.ny; j0 += kGroup) {
        const std::size_t g = std::min(kGroup, grid_.ny - j0);
        double* rows[kGroup];
        double* work[kGroup];
        for (std::size_t b = 0; b < g; ++b) {
            rows[b] = v.data() + (j0 + b) * nxn;
            work[b] = scratch_.data() + (j0 + b) * nxn;
            // right-hand side (I + (1-theta) tau D) v, Dirichlet zeros at both ends
            const double* r = rows[b];
            double* w = work[b];
            for (std::size_t i = 1; i <= n; ++i) w[i] = r[i] + ex_ * (r[i - 1] - 2.0 * r[i] + r[i + 1]);
        }
        for (std::size_t b = 0; b < g; ++b) work[b][1] *= invx_[0];
        for (std::size_t k = 1; k < n; ++k) {
            const double inv = invx_[k];
            for (std::size_t b = 0; b < g; ++b) work[b][k + 1] = (work[b][k + 1] + ax_ * work[b][k]) * inv;
        }
        for (std::size_t k = n - 1; k-- > 0;) {
            const double cp = cpx_[k];
            for (std::size_t b = 0; b < g; ++b) work[b][k + 1] -= cp * work[b][k + 2];
        }
        for (std::size_t b = 0; b < g; ++b) {
            rows[b][0] = 0.0;
            rows[b][nxn - 1] = 0.0;
            std::copy(work[b] + 1, work[b] + 1 + n, rows[b] + 1);
        }
    }
}

void Stepper::diffuse_y(std::vector<double>& v) {
    const std::size_t nxn = grid_.nodes_x();
    const std::size_t ny = grid_.ny;
    const double off = -ay_;
    auto row = [&](std::vector<double>& a, std::size_t j) { return a.data() + j * nxn; };
    // Right-hand side into scratch_, one whole row at a time.
    for (std::size_t j = 0; j < ny; ++j) {
        const double* dn = row(v, (j + ny - 1) % ny);
        const double* c = row(v, j);
        const double* up = row(v, (j + 1) % ny);
        double* r = row(scratch_, j);
        for (std::size_t i = 0; i < nxn; ++i) r[i] = c[i] + ey_ * (dn[i] - 2.0 * c[i] + up[i]);
    }
    // Forward and backward sweeps of the modified tridiagonal system.
    {
        double* r0 = row(scratch_, 0);
        for (std::size_t i = 0; i < nxn; ++i) r0[i] *= invy_[0];
    }
    for (std::size_t j = 1; j < ny; ++j) {
        const double* p = row(scratch_, j - 1);
        double* r = row(scratch_, j);
        const double inv = invy_[j];
        for (std::size_t i = 0; i < nxn; ++i) r[i] = (r[i] - off * p[i]) * inv;
    }
    for (std::size_t j = ny - 1; j-- > 0;) {
        const double* nx = row(scratch_, j + 1);
        double* r = row(scratch_, j);
        const double cp = cpy_[j];
        for (std::size_t i = 0; i < nxn; ++i) r[i] -= cp * nx[i];
    }
    // Sherman-Morrison correction.
    const double* first = row(scratch_, 0);
    const double* last = row(scratch_, ny - 1);
    for (std::size_t i = 0; i < nxn; ++i) line_[i] = (first[i] + off * last[i] / gamma_y_) / corr_den_;
    for (std::size_t j = 0; j < ny; ++j) {
        const double* r = row(scratch_, j);
        double* out = row(v, j);
        const double z = zy_[j];
        for (std::size_t i = 0; i < nxn; ++i) out[i] = r[i] - line_[i] * z;
    }
    // Keep the Dirichlet columns exact.
    for (std::size_t j = 0; j < ny; ++j) {
        row(v, j)[0] = 0.0;
        row(v, j)[nxn - 1] = 0.0;
    }
}

void Stepper::diffuse_half(std::vector<double>& v) {
    diffuse_x(v);
    if (grid_.m == 1) diffuse_y(v);
}

void Stepper::advect(std::vector<double>& v) {
    const std::size_t nxn = grid_.nodes_x();
    const double dt = grid_.dt;
    if (flow_kind_ == FlowKind::Shear) {
        // T_t = u T_x: information travels from the side u points to.
        for (std::size_t j = 0; j < grid_.ny; ++j) {
            const double c = row_u_[j] * dt / grid_.dx;
            if (c == 0.0) continue;
            double* row = v.data() + j * nxn;
            std::copy(row, row + nxn, line_.begin());
            if (c > 0.0) {
                for (std::size_t i = 1; i + 1 < nxn; ++i) row[i] = line_[i] + c * (line_[i + 1] - line_[i]);
            } else {
                for (std::size_t i = 1; i + 1 < nxn; ++i) row[i] = line_[i] + c * (line_[i] - line_[i - 1]);
            }
        }
        return;
    }
    // Periodic2D: T_t = div(u T) with upwind face fluxes; transport velocity is -u.
    std::copy(v.begin(), v.end(), scratch_.begin());
    const std::size_t ny = grid_.ny;
    const double lx = dt / grid_.dx, ly = dt / grid_.dy;
    auto flux = [](double w, double left, double right) { return w > 0.0 ? w * left : w * right; };
    for (std::size_t j = 0; j < ny; ++j) {
        const std::size_t jd = (j + ny - 1) % ny, ju = (j + 1) % ny;
        const double* c = scratch_.data() + j * nxn;
        const double* dn = scratch_.data() + jd * nxn;
        const double* up = scratch_.data() + ju * nxn;
        const double* fx = face_ux_.data() + j * nxn;
        const double* fy_here = face_uy_.data() + j * nxn;
        const double* fy_below = face_uy_.data() + jd * nxn;
        double* out = v.data() + j * nxn;
        for (std::size_t i = 1; i + 1 < nxn; ++i) {
            const double east = flux(-fx[i], c[i], c[i + 1]);
            const double west = flux(-fx[i - 1], c[i - 1], c[i]);
            const double north = flux(-fy_here[i], c[i], up[i]);
            const double south = flux(-fy_below[i], dn[i], c[i]);
            out[i] = c[i] - lx * (east - west) - ly * (north - south);
        }
    }
}

namespace {

template <class Rate>
void rk4_all(std::vector<double>& v, double h, Rate rate) {
    // Branch-free so the loop vectorises; f(0) = f(1) = 0 leaves 0 and 1 fixed.
    const std::size_t n = v.size();
    double* a = v.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double y = a[i];
        const double k1 = rate(y);
        const double k2 = rate(y + 0.5 * h * k1);
        const double k3 = rate(y + 0.5 * h * k2);
        const double k4 = rate(y + h * k3);
        const double next = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const bool live = (y > 0.0) & (y < 1.0);
        a[i] = live ? next : y;
    }
}

}  // namespace

void Stepper::react(std::vector<double>& v) const {
    const double h = grid_.dt * reaction_.M;
    const ReactionSpec& r = reaction_;
    // Stage values are clamped into [0,1], where f is defined.
    if (r.kind == ReactionKind::PowerLaw && (r.p == 2.0 || r.p == 4.0)) {
        const double c = r.c;
        if (r.p == 4.0) {
            rk4_all(v, h, [c](double y) {
                y = std::min(std::max(y, 0.0), 1.0);
                const double y2 = y * y;
                return c * y2 * y2 * (1.0 - y);
            });
        } else {
            rk4_all(v, h, [c](double y) {
                y = std::min(std::max(y, 0.0), 1.0);
                return c * y * y * (1.0 - y);
            });
        }
        return;
    }
    rk4_all(v, h, [&r](double y) { return reaction_rate(r, y); });
}

void Stepper::advance(Field& field) {
    auto& v = field.values;
    if (v.size() != grid_.size()) throw ConfigError("field does not match the grid");
    double before = 0.0;
    for (double a : v) before = std::max(before, std::abs(a));

    diffuse_half(v);
    if (has_flow_) advect(v);
    if (has_reaction_) react(v);
    if (grid_.m == 1) diffuse_y(v);
    diffuse_x(v);
    field.time += grid_.dt;

    double after = 0.0;
    for (double a : v) {
        if (!std::isfinite(a)) throw StabilityError("non-finite value after step at t=" + std::to_string(field.time));
        after = std::max(after, std::abs(a));
    }
    const double growth = has_reaction_ ? std::exp(reaction_.M * reaction_.d * grid_.dt) : 1.0;
    if (after > before * growth * (1.0 + kGrowthTolerance) + 1e-300) {
        std::ostringstream msg;
        msg << "sup-norm grew from " << before << " to " << after << " at t=" << field.time
            << " (allowed factor " << growth << ")";
        throw StabilityError(msg.str());
    }
}

Field step(const Field& field, const FlowProfile& flow, const ReactionSpec& reaction, const Grid& grid) {
    Stepper stepper(grid, flow, reaction);
    Field out = field;
    stepper.advance(out);
    return out;
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

std::string to_string(RunStatus status) {
    switch (status) {
    case RunStatus::QuenchedNumerical: return "QuenchedNumerical";
    case RunStatus::QuenchedCertified: return "QuenchedCertified";
    case RunStatus::PropagatingNumerical: return "PropagatingNumerical";
    case RunStatus::Undecided: return "Undecided";
    case RunStatus::DomainTooSmall: return "DomainTooSmall";
    }
    return "?";
}

namespace {

bool touches_boundary(const Field& field, const Grid& grid, double tol) {
    const std::size_t nxn = grid.nodes_x();
    for (std::size_t j = 0; j < grid.ny; ++j) {
        if (std::abs(field.values[j * nxn + 1]) > tol || std::abs(field.values[j * nxn + nxn - 2]) > tol) return true;
    }
    return false;
}

// Minimum over |x + drift t| <= radius of the probed temperature.
double ball_minimum(const Field& field, const Grid& grid, double center, double radius, PropagationProbe probe) {
    const std::size_t nxn = grid.nodes_x();
    radius = std::max(radius, grid.dx);
    const double lo = center - radius, hi = center + radius;
    const auto i0 = static_cast<std::size_t>(std::clamp(std::ceil((lo + grid.X) / grid.dx), 0.0, double(nxn - 1)));
    const auto i1 = static_cast<std::size_t>(std::clamp(std::floor((hi + grid.X) / grid.dx), 0.0, double(nxn - 1)));
    if (i0 > i1) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = i0; i <= i1; ++i) {
        double v = probe == PropagationProbe::AnyRow ? -std::numeric_limits<double>::infinity()
                                                      : std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < grid.ny; ++j) {
            const double a = field.values[j * nxn + i];
            v = probe == PropagationProbe::AnyRow ? std::max(v, a) : std::min(v, a);
        }
        best = std::min(best, v);
    }
    return best;
}

struct Run {
    const Grid& grid;
    const Detectors& det;
    double drift;
    std::vector<TracePoint> trace;
    double occupied_since = kNaN;

    TracePoint sample(const Field& f) const {
        const Norms n = field_norms(f, grid);
        Fronts fr = front_positions(f, grid);
        const double margin = det.boundary_margin_cells * grid.dx;
        if (!(fr.right < grid.X - margin)) fr.right = kNaN;
        if (!(fr.left > -grid.X + margin)) fr.left = kNaN;
        return {f.time, n.sup, n.l1, fr.left, fr.right};
    }

    bool quenched() const {
        const TracePoint& last = trace.back();
        if (last.sup == 0.0) return true;
        if (last.sup >= det.quench_sup || last.t < det.min_quench_time) return false;
        const double from = 0.9 * last.t;
        std::size_t count = 0;
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& p : trace) {
            if (p.t < from) continue;
            if (p.sup > prev) return false;
            prev = p.sup;
            ++count;
        }
        return count >= 2;
    }

    // Occupancy held continuously for `window` and both comoving fronts
    // advanced monotonically (to half a cell) by at least two cells.
    bool propagating(const Field& f) {
        const double t = f.time;
        const double occ = ball_minimum(f, grid, -drift * t, det.gamma * t, det.probe);
        const TracePoint& last = trace.back();
        if (!(occ > det.occupancy) || std::isnan(last.front_left) || std::isnan(last.front_right)) {
            occupied_since = kNaN;
            return false;
        }
        if (std::isnan(occupied_since)) occupied_since = t;
        if (t - occupied_since < det.window) return false;
        const double slack = 0.5 * grid.dx;
        double l0 = kNaN, r0 = kNaN, lp = kNaN, rp = kNaN;
        for (const auto& p : trace) {
            if (p.t < occupied_since) continue;
            const double l = p.front_left + drift * p.t, r = p.front_right + drift * p.t;
            if (std::isnan(l0)) {
                l0 = lp = l;
                r0 = rp = r;
                continue;
            }
            if (l > lp + slack || r < rp - slack) return false;
            lp = l;
            rp = r;
        }
        return (l0 - lp) >= 2.0 * grid.dx && (rp - r0) >= 2.0 * grid.dx;
    }
};

RunVerdict run_loop(const Field& initial, const FlowProfile& flow, const ReactionSpec& reaction, const Grid& grid,
                    double horizon, const Detectors& det, bool decide, const StepObserver& observer) {
    if (initial.values.size() != grid.size()) throw ConfigError("initial field does not match the grid");
    if (!(horizon >= 0.0)) throw ConfigError("time.horizon must be nonnegative");
    Stepper stepper(grid, flow, reaction);
    const auto clock_start = std::chrono::steady_clock::now();

    RunVerdict verdict;
    verdict.drift = effective_drift(flow);
    verdict.dx = grid.dx;
    Run run{grid, det, verdict.drift, {}, kNaN};

    Field field = initial;
    const double interval = det.trace_interval > 0.0 ? det.trace_interval : std::max(horizon / 4000.0, grid.dt);
    const double cert_interval = det.certify_interval > 0.0 ? det.certify_interval : interval;
    run.trace.push_back(run.sample(field));
    bool touched = touches_boundary(field, grid, det.boundary_tol);
    double next_trace = field.time + interval;
    double next_cert = field.time;
    bool decided = false;
    std::optional<RunStatus> first_decision;

    auto decide_now = [&]() -> std::optional<RunStatus> {
        if (!decide) return std::nullopt;
        if (run.propagating(field)) return RunStatus::PropagatingNumerical;
        if (run.quenched()) return touched ? RunStatus::DomainTooSmall : RunStatus::QuenchedNumerical;
        if (det.certifier && !touched && field.time >= next_cert) {
            next_cert = field.time + cert_interval;
            if (auto cert = det.certifier(field, grid); cert && cert->kind == CertificateKind::Quench && cert->valid) {
                verdict.certificate = cert;
                return RunStatus::QuenchedCertified;
            }
        }
        return std::nullopt;
    };

    if (auto s = decide_now(); s && det.early_exit) {
        verdict.status = *s;
        decided = true;
    } else if (s) {
        first_decision = s;
    }

    const double eps = 1e-9 * grid.dt;
    while (!decided && field.time + eps < horizon) {
        stepper.advance(field);
        if (observer) observer(field);
        if (!touched && touches_boundary(field, grid, det.boundary_tol)) touched = true;
        const bool at_end = field.time + eps >= horizon;
        if (field.time + eps >= next_trace || at_end) {
            run.trace.push_back(run.sample(field));
            next_trace += interval;
            while (next_trace <= field.time + eps) next_trace += interval;
            if (auto s = decide_now()) {
                if (det.early_exit) {
                    verdict.status = *s;
                    decided = true;
                } else if (!first_decision) {
                    first_decision = s;
                }
            }
            if (!decided && det.wallclock_seconds > 0.0) {
                const std::chrono::duration<double> used = std::chrono::steady_clock::now() - clock_start;
                if (used.count() > det.wallclock_seconds) {
                    verdict.wallclock_hit = true;
                    break;
                }
            }
        }
    }

    if (!decided) {
        if (first_decision) {
            verdict.status = *first_decision;
        } else {
            verdict.status = touched ? RunStatus::DomainTooSmall : RunStatus::Undecided;
        }
        if (verdict.status == RunStatus::QuenchedNumerical && touched) verdict.status = RunStatus::DomainTooSmall;
    }
    verdict.boundary_touched = touched;
    verdict.end_time = field.time;
    verdict.trace = std::move(run.trace);
    verdict.final_state = std::move(field);
    return verdict;
}

}  // namespace

RunVerdict solve(const Field& initial, const FlowProfile& flow, const ReactionSpec& reaction, const Grid& grid,
                 double horizon, const Detectors& detectors, const StepObserver& observer) {
    return run_loop(initial, flow, reaction, grid, horizon, detectors, true, observer);
}

RunVerdict linear_solve(const Field& initial, const FlowProfile& flow, const Grid& grid, double horizon,
                        double trace_interval, const StepObserver& observer) {
    Detectors det;
    det.trace_interval = trace_interval;
    det.early_exit = false;
    return run_loop(initial, flow, zero_reaction(), grid, horizon, det, false, observer);
}

// ---------------------------------------------------------------------------
// I/O
// ---------------------------------------------------------------------------

void write_snapshot(std::ostream& out, const Field& field, const Grid& grid) {
    const auto prec = out.precision(17);
    out << "# t nx ny dx dy X m\n";
    out << field.time << ' ' << grid.nx << ' ' << grid.ny << ' ' << grid.dx << ' ' << grid.dy << ' ' << grid.X << ' '
        << grid.m << '\n';
    const std::size_t nxn = grid.nodes_x();
    for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < nxn; ++i) {
            if (i) out << ' ';
            out << field.values[j * nxn + i];
        }
        out << '\n';
    }
    out.precision(prec);
}

std::pair<Field, Grid> read_snapshot(std::istream& in) {
    std::string line;
    std::ostringstream body;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '#') continue;
        body << line << '\n';
    }
    std::istringstream s(body.str());
    Field f;
    Grid g;
    if (!(s >> f.time >> g.nx >> g.ny >> g.dx >> g.dy >> g.X >> g.m)) throw ConfigError("snapshot header unreadable");
    f.values.resize(g.size());
    for (auto& v : f.values) {
        if (!(s >> v)) throw ConfigError("snapshot truncated");
    }
    return {std::move(f), g};
}

void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace) {
    const auto prec = out.precision(12);
    out << "t,sup,l1,front_left,front_right\n";
    for (const auto& p : trace) {
        out << p.t << ',' << p.sup << ',' << p.l1 << ',';
        if (!std::isnan(p.front_left)) out << p.front_left;
        out << ',';
        if (!std::isnan(p.front_right)) out << p.front_right;
        out << '\n';
    }
    out.precision(prec);
}

}  // namespace quenchlab
