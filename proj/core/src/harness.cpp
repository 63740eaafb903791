#include "roughflow/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace roughflow {

// ---- config -------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& tok) {
  const auto slash = tok.find('/');
  if (slash != std::string::npos) {
    const double num = std::stod(tok.substr(0, slash));
    const double den = std::stod(tok.substr(slash + 1));
    if (den == 0) throw ConfigError("zero denominator in '" + tok + "'");
    return num / den;
  }
  return std::stod(tok);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    cfg.kv[key] = val;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

std::string Config::get_str(const std::string& key, const std::string& dflt) const {
  const auto it = kv.find(key);
  return it == kv.end() ? dflt : it->second;
}

double Config::get_double(const std::string& key, double dflt) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return dflt;
  try {
    return parse_number(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + it->second + "'");
  }
}

int Config::get_int(const std::string& key, int dflt) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return dflt;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + it->second + "'");
  }
}

bool Config::get_bool(const std::string& key, bool dflt) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return dflt;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected boolean, got '" + v + "'");
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::vector<double>& dflt) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return dflt;
  std::vector<double> out;
  std::istringstream in(it->second);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(parse_number(tok));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': cannot parse '" + tok + "'");
    }
  }
  return out;
}

// ---- rate fitting -------------------------------------------------------------

RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<std::pair<double, double>> logs;
  for (const auto& [eps, err] : pairs) {
    if (eps <= 0) throw ConfigError("fit_rate: eps must be positive");
    if (err <= 0) continue;  // solver floor: excluded from the fit
    logs.emplace_back(std::log(eps), std::log(err));
  }
  RateFit fit;
  fit.points_used = static_cast<int>(logs.size());
  if (logs.size() < 2) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : logs) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(logs.size());
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - fit.slope * sx) / n;
  double ss = 0;
  for (const auto& [x, y] : logs) {
    const double r = y - (fit.slope * x + icpt);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

// ---- experiment config ----------------------------------------------------------

ExperimentConfig ExperimentConfig::from(const Config& cfg) {
  ExperimentConfig e;
  e.inner_radius = cfg.get_double("inner_radius", e.inner_radius);
  e.outer_radius = cfg.get_double("outer_radius", e.outer_radius);
  e.profile_kind = cfg.get_str("profile", e.profile_kind);
  e.amplitude = cfg.get_double("amplitude", e.amplitude);
  e.outer_velocity = cfg.get_double("outer_velocity", e.outer_velocity);
  e.cell_resolution = cfg.get_int("cell_resolution", e.cell_resolution);
  e.richardson_resolution = cfg.get_int("richardson_resolution", e.richardson_resolution);
  e.phase_count = cfg.get_int("phase_count", e.phase_count);
  e.cell_depth = cfg.get_double("cell_depth", e.cell_depth);
  e.tolerance = cfg.get_double("tolerance", e.tolerance);
  e.eps_list = cfg.get_double_list("eps_list", e.eps_list);
  e.cells_per_period = cfg.get_int("cells_per_period", e.cells_per_period);
  e.radial_cells = cfg.get_int("radial_cells", e.radial_cells);
  e.wall_spacing_divisor = cfg.get_double("wall_spacing_divisor", e.wall_spacing_divisor);
  e.build_corrector = cfg.get_bool("build_corrector", e.build_corrector);
  e.quad_na = cfg.get_int("quad_na", e.quad_na);
  e.quad_ns = cfg.get_int("quad_ns", e.quad_ns);
  e.quad_wall_divisor = cfg.get_double("quad_wall_divisor", e.quad_wall_divisor);
  e.out_dir = cfg.get_str("out_dir", e.out_dir);
  e.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<int>(e.seed)));
  e.threads = cfg.get_int("threads", e.threads);
  e.validate();
  return e;
}

void ExperimentConfig::validate() const {
  if (!(inner_radius > 0) || !(outer_radius > inner_radius))
    throw ConfigError("invalid annulus radii");
  if (profile_kind != "cosine" && profile_kind != "constant" && profile_kind != "two_scale")
    throw ConfigError("unknown profile kind '" + profile_kind + "'");
  if (eps_list.empty()) throw ConfigError("eps_list is empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (eps_list[i] <= 0) throw ConfigError("eps values must be positive");
    if (i > 0 && std::abs(eps_list[i - 1] / eps_list[i] - 2.0) > 1e-9)
      throw ConfigError("eps_list must decrease by exact factors of 2");
  }
  if (cells_per_period < 8)
    throw ConfigError("grid density rule requires >= 8 cells per roughness period");
  if (cell_resolution < 8) throw ConfigError("cell_resolution too small");
  if (phase_count < 1) throw ConfigError("phase_count must be >= 1");
  if (radial_cells < 8) throw ConfigError("radial_cells too small");
  if (quad_na < 4 || quad_ns < 4) throw ConfigError("norm quadrature too coarse");
}

// ---- slip constant --------------------------------------------------------------

namespace {

RoughnessProfile shifted_profile(const RoughnessProfile& base, double phase) {
  RoughnessProfile p = base;
  auto h = base.height;
  p.height = [h, phase](const Vec& slow, const Vec& fast) {
    Vec g = fast;
    g(0) += phase;
    return h(slow, g);
  };
  if (base.d_height_dfast1) {
    auto dh = base.d_height_dfast1;
    p.d_height_dfast1 = [dh, phase](const Vec& slow, const Vec& fast) {
      Vec g = fast;
      g(0) += phase;
      return dh(slow, g);
    };
  }
  return p;
}

double phase_averaged_c(const CellCoefficients& coeffs, const RoughnessProfile& profile,
                        int n, int phases, double tol) {
  double sum = 0;
  for (int j = 0; j < phases; ++j) {
    CellProblemSpec cs;
    cs.coeffs = coeffs;
    cs.profile = phases > 1
                     ? shifted_profile(profile, (j + 0.5) / (phases * double(n)))
                     : profile;
    cs.resolution = n;
    cs.tolerance = tol;
    cs.jump_vector = Vec::Zero(coeffs.dim);
    cs.jump_vector(0) = 1.0;  // tangential leg
    sum += solve_cell(cs).bl_constant(0);
  }
  return sum / phases;
}

}  // namespace

double extrapolated_slip_constant(const CellCoefficients& coeffs,
                                  const RoughnessProfile& profile, int n_lo,
                                  int n_hi, int phases, double tolerance) {
  const double c_lo = phase_averaged_c(coeffs, profile, n_lo, phases, tolerance);
  if (n_hi <= 0 || n_hi == n_lo) return c_lo;
  const double c_hi = phase_averaged_c(coeffs, profile, n_hi, phases, tolerance);
  const double r = double(n_hi) / double(n_lo);
  return c_hi + (c_hi - c_lo) / (r * r - 1.0);  // second order after phase averaging
}

// ---- pipeline -------------------------------------------------------------------

ConvergenceReport run_pipeline(const ExperimentConfig& config) {
  config.validate();
  ConvergenceReport report;

  RoughnessProfile profile;
  if (config.profile_kind == "cosine")
    profile = make_cosine_profile(config.amplitude);
  else if (config.profile_kind == "constant")
    profile = make_constant_profile(config.amplitude);
  else
    profile = make_two_scale_profile(config.amplitude);

  if (config.outer_velocity == 0.0) {
    // zero data: every solve vanishes; errors are vacuous
    report.degenerate = true;
    for (double eps : config.eps_list) {
      ConvergenceRow row;
      row.eps = eps;
      report.rows.push_back(row);
    }
    return report;
  }

  // stage 1: cell solves at the wall base point -> slip constant + fluctuations
  SurfacePatch patch;
  patch.chart = make_circle_chart(config.inner_radius);
  const CellCoefficients coeffs =
      metric_matrices(patch, Eigen::VectorXd::Constant(1, 0.5));
  report.slip_constant = extrapolated_slip_constant(
      coeffs, profile, config.cell_resolution, config.richardson_resolution,
      config.phase_count, config.tolerance);

  CellProblemSpec cs;
  cs.coeffs = coeffs;
  cs.profile = profile;
  cs.resolution = config.cell_resolution;
  cs.tolerance = config.tolerance;
  if (config.cell_depth > 0) cs.truncation_depth = config.cell_depth;
  cs.jump_vector = Eigen::Vector2d(1, 0);
  const CellSolution beta_tau = solve_cell(cs);
  cs.jump_vector = Eigen::Vector2d(0, 1);
  const CellSolution beta_nu = solve_cell(cs);

  // stage 2+3: per-eps macro solves and norms
  const double uout = config.outer_velocity;
  for (double eps : config.eps_list) {
    const auto t0 = std::chrono::steady_clock::now();
    ConvergenceRow row;

    AnnulusDomain dom =
        build_rough_annulus(config.inner_radius, config.outer_radius, eps, profile,
                            config.cells_per_period);
    row.eps = dom.eps;

    MacroProblemSpec rough_spec;
    rough_spec.domain = dom;
    rough_spec.variant = MacroVariant::Rough;
    rough_spec.radial_cells = config.radial_cells;
    rough_spec.wall_spacing = dom.eps / config.wall_spacing_divisor;
    rough_spec.outer_u_theta = [uout](double) { return uout; };
    rough_spec.tolerance = config.tolerance;
    const MacroSolution rough = solve_macro(rough_spec);

    MacroProblemSpec smooth_spec = rough_spec;
    smooth_spec.variant = MacroVariant::Dirichlet;
    smooth_spec.angular_cells = 8;  // data is rotation-invariant
    const MacroSolution dirichlet = solve_macro(smooth_spec);

    MacroProblemSpec navier_spec = smooth_spec;
    navier_spec.variant = MacroVariant::Navier;
    navier_spec.use_constant_slip = true;
    navier_spec.constant_slip = report.slip_constant;
    const MacroSolution navier = solve_macro(navier_spec);

    NormQuadrature quad;
    quad.na = config.quad_na;
    quad.ns = config.quad_ns;
    quad.wall_spacing = dom.eps / config.quad_wall_divisor;
    const double r_lo = config.inner_radius, r_hi = config.outer_radius;

    row.dirichlet = error_norms(sampler(rough), sampler(dirichlet), r_lo, r_hi, quad);
    row.navier = error_norms(sampler(rough), sampler(navier), r_lo, r_hi, quad);

    if (config.build_corrector) {
      CorrectorBundle bundle = build_correctors(dirichlet, beta_tau, beta_nu);
      // re-anchor the auxiliary solve on the extrapolated constant (the
      // bundle's default uses the raw single-solve constant)
      bundle.slip_coefficient = report.slip_constant;
      MacroProblemSpec eta_spec = smooth_spec;
      eta_spec.variant = MacroVariant::Corrector;
      const double c = report.slip_constant;
      const WallTraces traces = bundle.traces;
      eta_spec.inner_u_theta = [c, traces](double th) { return c * traces.chi1_at(th); };
      eta_spec.outer_u_theta = [](double) { return 0.0; };
      bundle.eta = solve_macro(eta_spec);

      FieldSampler aug;
      aug.period = rough.grid.P;
      aug.n_sectors = rough.grid.n_sectors;
      aug.vel = [bundle](double th, double r) { return bundle.augmented(th, r); };
      row.corrector = error_norms(sampler(rough), aug, r_lo, r_hi, quad);
      FieldSampler osc;
      osc.period = rough.grid.P;
      osc.n_sectors = rough.grid.n_sectors;
      osc.vel = [bundle](double th, double r) { return bundle.eta_eps(th, r); };
      row.eta = field_norms(osc, r_lo, r_hi, quad);
      if (!(row.corrector.l2 < row.dirichlet.l2))
        report.corrector_below_dirichlet = false;
    }

    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.rows.push_back(row);
  }

  // stage 4: rate fits and verdicts
  auto series = [&](auto pick) {
    std::vector<std::pair<double, double>> s;
    for (const auto& r : report.rows) s.emplace_back(r.eps, pick(r));
    return s;
  };
  auto add_verdict = [&](const std::string& name, const RateFit& fit, double target,
                         double tol) {
    RateVerdict v;
    v.name = name;
    v.slope = fit.slope;
    v.residual = fit.residual;
    v.target = target;
    v.tolerance = tol;
    v.pass = fit.points_used >= 3 && std::abs(fit.slope - target) <= tol;
    report.verdicts.push_back(v);
  };

  add_verdict("dirichlet_h1", fit_rate(series([](const ConvergenceRow& r) {
                return r.dirichlet.h1semi;
              })),
              0.5, 0.15);
  add_verdict("dirichlet_l2", fit_rate(series([](const ConvergenceRow& r) {
                return r.dirichlet.l2;
              })),
              1.0, 0.25);
  add_verdict("navier_l2",
              fit_rate(series([](const ConvergenceRow& r) { return r.navier.l2; })),
              1.5, 0.25);
  add_verdict("navier_w11",
              fit_rate(series([](const ConvergenceRow& r) { return r.navier.w11; })),
              1.0, 0.25);
  if (config.build_corrector) {
    add_verdict("corrector_l2", fit_rate(series([](const ConvergenceRow& r) {
                  return r.corrector.l2;
                })),
                1.5, 0.25);
    add_verdict("eta_l2",
                fit_rate(series([](const ConvergenceRow& r) { return r.eta.l2; })),
                1.5, 0.25);
    add_verdict("eta_w11",
                fit_rate(series([](const ConvergenceRow& r) { return r.eta.w11; })),
                1.0, 0.25);
  }
  return report;
}

}  // namespace roughflow
