#include "quenchlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "quenchlab/errors.hpp"

namespace quenchlab {

namespace {

struct Key {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_real(const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw ConfigError("expected a real number, got '" + v + "'");
    }
    return out;
}

std::uint64_t to_unsigned(const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw ConfigError("expected a nonnegative integer, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

std::string fmt(bool v) { return v ? "true" : "false"; }

std::string one_of(const std::string& v, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed) {
        if (v == a) return v;
    }
    std::string msg = "expected one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw ConfigError(msg + ", got '" + v + "'");
}

std::vector<std::string> split(const std::string& v, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

Key real(double RunConfig::*field, std::function<void(double)> check = {}) {
    return {[field, check](RunConfig& c, const std::string& v) {
                const double x = to_real(v);
                if (check) check(x);
                c.*field = x;
            },
            [field](const RunConfig& c) { return fmt(c.*field); }};
}

template <class Sub>
Key real_in(Sub RunConfig::*sub, double Sub::*field, std::function<void(double)> check = {}) {
    return {[sub, field, check](RunConfig& c, const std::string& v) {
                const double x = to_real(v);
                if (check) check(x);
                c.*sub.*field = x;
            },
            [sub, field](const RunConfig& c) { return fmt(c.*sub.*field); }};
}

template <class Sub, class T>
Key count_in(Sub RunConfig::*sub, T Sub::*field, std::uint64_t min = 0) {
    return {[sub, field, min](RunConfig& c, const std::string& v) {
                const auto x = to_unsigned(v);
                if (x < min) throw ConfigError("must be at least " + std::to_string(min));
                c.*sub.*field = static_cast<T>(x);
            },
            [sub, field](const RunConfig& c) { return std::to_string(c.*sub.*field); }};
}

Key text(std::string RunConfig::*field, std::initializer_list<const char*> allowed) {
    std::vector<const char*> list(allowed);
    return {[field, list](RunConfig& c, const std::string& v) {
                if (std::find_if(list.begin(), list.end(), [&](const char* a) { return v == a; }) == list.end()) {
                    std::string msg = "expected one of";
                    for (const char* a : list) msg += std::string(" ") + a;
                    throw ConfigError(msg + ", got '" + v + "'");
                }
                c.*field = v;
            },
            [field](const RunConfig& c) { return c.*field; }};
}

void positive(double x) {
    if (!(x > 0.0)) throw ConfigError("must be positive");
}
void nonnegative(double x) {
    if (x < 0.0) throw ConfigError("must be nonnegative");
}

const std::map<std::string, Key>& keys() {
    static const std::map<std::string, Key> table = [] {
        std::map<std::string, Key> k;
        k["version"] = {[](RunConfig& c, const std::string& v) {
                            if (v != kConfigVersion) throw ConfigError(std::string("unsupported schema, expected ") + kConfigVersion);
                            c.version = v;
                        },
                        [](const RunConfig& c) { return c.version; }};
        k["seed"] = {[](RunConfig& c, const std::string& v) { c.seed = to_unsigned(v); },
                     [](const RunConfig& c) { return std::to_string(c.seed); }};

        k["domain.X"] = real_in(&RunConfig::grid, &GridConfig::X, positive);
        k["domain.nx"] = count_in(&RunConfig::grid, &GridConfig::nx, 2);
        k["domain.m"] = {[](RunConfig& c, const std::string& v) {
                             const auto m = to_unsigned(v);
                             if (m > 1) throw ConfigError("must be 0 or 1");
                             c.grid.m = static_cast<int>(m);
                         },
                         [](const RunConfig& c) { return std::to_string(c.grid.m); }};
        k["domain.ny"] = count_in(&RunConfig::grid, &GridConfig::ny, 1);

        k["flow.kind"] = text(&RunConfig::flow_kind, {"zero", "sine", "constant", "shear", "cellular"});
        k["flow.amplitude"] = real(&RunConfig::flow_amplitude);
        k["flow.offset"] = real(&RunConfig::flow_offset);
        k["flow.plateaux"] = {[](RunConfig& c, const std::string& v) {
                                  c.flow_plateaux.clear();
                                  for (const auto& item : split(v, ',')) {
                                      const auto parts = split(item, ':');
                                      if (parts.size() != 2) throw ConfigError("expected center:half_width pairs");
                                      c.flow_plateaux.push_back(Plateau{to_real(parts[0]), to_real(parts[1])});
                                  }
                              },
                              [](const RunConfig& c) {
                                  std::string s;
                                  for (const auto& p : c.flow_plateaux) {
                                      if (!s.empty()) s += ",";
                                      s += fmt(p.center) + ":" + fmt(p.half_width);
                                  }
                                  return s;
                              }};
        k["flow.cells"] = {[](RunConfig& c, const std::string& v) {
                               const auto n = to_unsigned(v);
                               if (n < 4) throw ConfigError("must be at least 4");
                               c.flow_cells = n;
                           },
                           [](const RunConfig& c) { return std::to_string(c.flow_cells); }};

        k["reaction.kind"] = text(&RunConfig::reaction_kind, {"powerlaw", "arrhenius", "ignition", "zero"});
        k["reaction.c"] = real(&RunConfig::reaction_c, nonnegative);
        k["reaction.p"] = real(&RunConfig::reaction_p, [](double p) {
            if (!(p > 1.0)) throw ConfigError("p must exceed 1");
        });
        k["reaction.M"] = real(&RunConfig::reaction_M, nonnegative);
        k["reaction.theta"] = real(&RunConfig::reaction_theta, [](double t) {
            if (!(t > 0.0 && t <= 1.0)) throw ConfigError("theta must lie in (0,1]");
        });
        k["reaction.arr_c"] = real(&RunConfig::reaction_arr_c, nonnegative);
        k["reaction.theta0"] = real(&RunConfig::reaction_theta0, [](double t) {
            if (!(t > 0.0 && t < 1.0)) throw ConfigError("theta0 must lie in (0,1)");
        });

        k["init.kind"] = {[](RunConfig& c, const std::string& v) {
                              const auto s = one_of(v, {"indicator", "gaussian", "constant", "zero"});
                              c.init.kind = s == "indicator" ? InitKind::Indicator
                                            : s == "gaussian" ? InitKind::Gaussian
                                            : s == "constant" ? InitKind::Constant
                                                              : InitKind::Zero;
                          },
                          [](const RunConfig& c) {
                              switch (c.init.kind) {
                              case InitKind::Indicator: return std::string("indicator");
                              case InitKind::Gaussian: return std::string("gaussian");
                              case InitKind::Constant: return std::string("constant");
                              case InitKind::Zero: break;
                              }
                              return std::string("zero");
                          }};
        k["init.eta"] = real_in(&RunConfig::init, &InitSpec::eta, [](double e) {
            if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("eta must lie in [0,1]");
        });
        k["init.L"] = real_in(&RunConfig::init, &InitSpec::L, positive);
        k["init.width"] = real_in(&RunConfig::init, &InitSpec::width, positive);

        k["time.horizon"] = real(&RunConfig::horizon, positive);
        k["time.dt"] = real_in(&RunConfig::grid, &GridConfig::dt, nonnegative);
        k["time.safety"] = real_in(&RunConfig::grid, &GridConfig::safety, [](double s) {
            if (!(s > 0.0 && s <= 1.0)) throw ConfigError("safety must lie in (0,1]");
        });
        k["time.trace_interval"] = real_in(&RunConfig::detectors, &Detectors::trace_interval, nonnegative);
        k["time.snapshot_interval"] = real(&RunConfig::snapshot_interval, nonnegative);
        k["time.wallclock"] = real(&RunConfig::wallclock_seconds, nonnegative);
        k["time.cert_horizon"] = real(&RunConfig::cert_horizon, nonnegative);

        k["detect.quench_sup"] = real_in(&RunConfig::detectors, &Detectors::quench_sup, positive);
        k["detect.min_quench_time"] = real_in(&RunConfig::detectors, &Detectors::min_quench_time, nonnegative);
        k["detect.occupancy"] = real_in(&RunConfig::detectors, &Detectors::occupancy, [](double o) {
            if (!(o > 0.0 && o < 1.0)) throw ConfigError("occupancy must lie in (0,1)");
        });
        k["detect.gamma"] = real_in(&RunConfig::detectors, &Detectors::gamma, positive);
        k["detect.window"] = real_in(&RunConfig::detectors, &Detectors::window, positive);
        k["detect.boundary_tol"] = real_in(&RunConfig::detectors, &Detectors::boundary_tol, positive);
        k["detect.probe"] = {[](RunConfig& c, const std::string& v) {
                                 c.detectors.probe = one_of(v, {"all", "any"}) == "all" ? PropagationProbe::AllRows
                                                                                         : PropagationProbe::AnyRow;
                             },
                             [](const RunConfig& c) {
                                 return std::string(c.detectors.probe == PropagationProbe::AllRows ? "all" : "any");
                             }};
        k["detect.early_exit"] = {[](RunConfig& c, const std::string& v) { c.detectors.early_exit = to_bool(v); },
                                  [](const RunConfig& c) { return fmt(c.detectors.early_exit); }};

        k["cert.restart"] = {[](RunConfig& c, const std::string& v) { c.cert_restart = to_bool(v); },
                             [](const RunConfig& c) { return fmt(c.cert_restart); }};
        k["cert.trace"] = {[](RunConfig& c, const std::string& v) { c.cert_trace = v; },
                           [](const RunConfig& c) { return c.cert_trace; }};
        k["cert.tail"] = text(&RunConfig::cert_tail, {"exact", "heuristic", "none"});
        k["cert.D"] = real(&RunConfig::cert_D, nonnegative);
        k["cert.delta0"] = real(&RunConfig::cert_delta0, nonnegative);

        k["mc.n_paths"] = count_in(&RunConfig::mc, &PathSamplerConfig::n_paths, 100);
        k["mc.substep"] = real_in(&RunConfig::mc, &PathSamplerConfig::substep, nonnegative);
        k["mc.stream"] = count_in(&RunConfig::mc, &PathSamplerConfig::stream_id);
        k["mc.t"] = real(&RunConfig::mc_t, positive);
        k["mc.x"] = real(&RunConfig::mc_x);
        k["mc.y"] = real(&RunConfig::mc_y);
        k["mc.eps"] = real(&RunConfig::mc_eps, positive);
        k["mc.start_y"] = real(&RunConfig::mc_start_y);
        k["mc.bins"] = count_in(&RunConfig::mc_histogram, &HistogramSpec::bins, 3);
        k["mc.half_range"] = real_in(&RunConfig::mc_histogram, &HistogramSpec::half_range, nonnegative);

        k["sweep.param"] = text(&RunConfig::sweep_param, {"L", "p", "A", "halfwidth"});
        k["sweep.values"] = {[](RunConfig& c, const std::string& v) {
                                 c.sweep_values.clear();
                                 for (const auto& item : split(v, ',')) c.sweep_values.push_back(to_real(item));
                             },
                             [](const RunConfig& c) {
                                 std::string s;
                                 for (double x : c.sweep_values) s += (s.empty() ? "" : ",") + fmt(x);
                                 return s;
                             }};
        k["sweep.bisection_steps"] = {[](RunConfig& c, const std::string& v) {
                                          c.sweep_bisection_steps = static_cast<int>(to_unsigned(v));
                                      },
                                      [](const RunConfig& c) { return std::to_string(c.sweep_bisection_steps); }};
        k["sweep.c"] = real(&RunConfig::sweep_c, nonnegative);
        k["sweep.amplitude"] = real(&RunConfig::sweep_amplitude);

        k["out.dir"] = {[](RunConfig& c, const std::string& v) { c.out_dir = v; },
                        [](const RunConfig& c) { return c.out_dir; }};
        return k;
    }();
    return table;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto where = "line " + std::to_string(lineno);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = trim(std::string_view(line).substr(eq + 1));
        const auto it = keys().find(key);
        if (it == keys().end()) throw ConfigError(where + ": unknown key '" + key + "'");
        if (auto [prev, fresh] = seen.emplace(key, lineno); !fresh) {
            throw ConfigError(where + ": key '" + key + "' already set on line " + std::to_string(prev->second));
        }
        try {
            it->second.set(cfg, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": key '" + key + "': " + e.what());
        }
    }
    if (cfg.grid.m == 0) cfg.grid.ny = 1;
    if (cfg.grid.m == 1 && cfg.grid.ny < 4) throw ConfigError("key 'domain.ny': needs at least 4 nodes when domain.m = 1");
    return cfg;
}

std::string resolved_text(const RunConfig& config) {
    std::string out;
    for (const auto& [name, key] : keys()) out += name + " = " + key.get(config) + "\n";
    return out;
}

FlowProfile make_flow(const RunConfig& c) {
    const std::size_t ny = c.grid.m == 1 ? c.grid.ny : std::max<std::size_t>(c.grid.ny, 64);
    if (c.flow_kind == "zero") return FlowProfile::zero();
    if (c.flow_kind == "sine") return FlowProfile::sine(c.flow_amplitude, ny, c.flow_offset);
    if (c.flow_kind == "constant") return FlowProfile::constant(c.flow_amplitude, ny);
    if (c.flow_kind == "cellular") return FlowProfile::cellular(c.flow_amplitude, c.flow_cells);
    ShearSpec spec;
    spec.amplitude = c.flow_amplitude;
    spec.plateaux = c.flow_plateaux;
    return build_shear_profile(spec, ny);
}

ReactionSpec make_reaction(const RunConfig& c) {
    if (c.reaction_kind == "powerlaw") return power_law(c.reaction_c, c.reaction_p, c.reaction_M, c.reaction_theta);
    if (c.reaction_kind == "arrhenius") {
        return arrhenius(c.reaction_arr_c, c.reaction_c, c.reaction_p, c.reaction_M, c.reaction_theta);
    }
    if (c.reaction_kind == "ignition") return ignition(c.reaction_theta0, c.reaction_c, c.reaction_M);
    return zero_reaction();
}

Scenario make_scenario(const RunConfig& c) {
    Scenario s;
    s.grid = c.grid;
    s.flow = make_flow(c);
    s.reaction = make_reaction(c);
    s.init = c.init;
    s.horizon = c.horizon;
    s.detectors = c.detectors;
    s.detectors.wallclock_seconds = c.wallclock_seconds;
    s.restart_certificates = c.cert_restart;
    s.cert_horizon = c.cert_horizon;
    return s;
}

}  // namespace quenchlab
