// Command-line harness: cell solves, slip-field assembly, macro solves,
// convergence sweeps, the divergence-lab constant study, and the Fourier-mode
// oracle cross-check. Subcommands share a key=value config file plus a few
// direct flags; outputs are CSV tables, a JSON summary, and optional SVG
// log-log plots.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <roughflow/divergence_lab.hpp>
#include <roughflow/harness.hpp>
#include <roughflow/report.hpp>
#include <roughflow/slip_field.hpp>

using namespace roughflow;

namespace {

struct Cli {
  std::string subcommand;
  Config config;
  std::string out_dir = ".";
  std::uint64_t seed = 42;
  int threads = 1;
  std::map<std::string, std::string> flags;  // remaining --key value pairs
};

[[noreturn]] void usage(int code) {
  std::cout <<
      "usage: roughflow <subcommand> [--config FILE] [--out DIR] [--threads N]\n"
      "                 [--seed S] [subcommand flags]\n"
      "\n"
      "subcommands:\n"
      "  cell          solve one boundary-layer cell problem\n"
      "                  flags: --resolution N --amplitude A --jump tau|nu\n"
      "  slip-field    sample the slip-coefficient field along the wall\n"
      "                  flags: --samples N --resolution N\n"
      "  macro         one macro solve on the rough annulus\n"
      "                  flags: --variant rough|dirichlet|navier|corrector --eps VALUE\n"
      "  converge      full wall-law convergence sweep (rates + verdicts)\n"
      "  divbench      divergence-splitting constant study\n"
      "                  flags: --eps-list 1/8,1/16,1/32 --q 2\n"
      "  oracle-check  Fourier-mode reconstruction cross-check of a cell solve\n"
      "\n"
      "config file: key = value lines; see configs/ for annotated examples.\n";
  std::exit(code);
}

Cli parse_cli(int argc, char** argv) {
  if (argc < 2) usage(1);
  Cli cli;
  cli.subcommand = argv[1];
  if (cli.subcommand == "-h" || cli.subcommand == "--help") usage(0);
  for (int i = 2; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg.rfind("--", 0) != 0) {
      std::cerr << "unexpected argument '" << arg << "'\n";
      usage(1);
    }
    arg = arg.substr(2);
    if (i + 1 >= argc) {
      std::cerr << "flag --" << arg << " needs a value\n";
      usage(1);
    }
    const std::string val = argv[++i];
    if (arg == "config")
      cli.config = Config::parse_file(val);
    else if (arg == "out")
      cli.out_dir = val;
    else if (arg == "seed")
      cli.seed = std::stoull(val);
    else if (arg == "threads")
      cli.threads = std::stoi(val);
    else
      cli.flags[arg] = val;
  }
  // direct flags override config-file keys of the same name
  for (const auto& [k, v] : cli.flags) {
    std::string key = k;
    for (auto& ch : key)
      if (ch == '-') ch = '_';
    cli.config.kv[key] = v;
  }
  cli.config.kv["seed"] = std::to_string(cli.seed);
  cli.config.kv["threads"] = std::to_string(cli.threads);
  std::filesystem::create_directories(cli.out_dir);
  return cli;
}

RoughnessProfile profile_from(const Config& cfg) {
  const std::string kind = cfg.get_str("profile", "cosine");
  const double amp = cfg.get_double("amplitude", 0.25);
  if (kind == "cosine") return make_cosine_profile(amp);
  if (kind == "constant") return make_constant_profile(amp);
  if (kind == "two_scale") return make_two_scale_profile(amp);
  throw ConfigError("unknown profile '" + kind + "'");
}

CellCoefficients coeffs_from(const Config& cfg) {
  SurfacePatch patch;
  patch.chart = make_circle_chart(cfg.get_double("inner_radius", 1.0));
  return metric_matrices(patch, Eigen::VectorXd::Constant(1, 0.5));
}

int run_cell(const Cli& cli) {
  CellProblemSpec spec;
  spec.coeffs = coeffs_from(cli.config);
  spec.profile = profile_from(cli.config);
  spec.resolution = cli.config.get_int("resolution", 64);
  spec.tolerance = cli.config.get_double("tolerance", 1e-10);
  const double depth = cli.config.get_double("cell_depth", 0.0);
  if (depth > 0) spec.truncation_depth = depth;
  const std::string jump = cli.config.get_str("jump", "tau");
  spec.jump_vector = Eigen::Vector2d(jump == "nu" ? 0 : 1, jump == "nu" ? 1 : 0);

  const CellSolution sol = solve_cell(spec);
  const DecayFit decay = decay_fit(sol);

  std::ofstream csv(cli.out_dir + "/cell_decay.csv");
  csv << "y,fluctuation_l2\n";
  for (const auto& [y, v] : sol.decay_samples) csv << y << ',' << v << '\n';

  std::ofstream json(cli.out_dir + "/cell.json");
  json << "{\n  \"bl_constant\": [" << format_double(sol.bl_constant(0)) << ", "
       << format_double(sol.bl_constant(1)) << "],\n"
       << "  \"divergence_residual\": " << format_double(sol.divergence_residual)
       << ",\n  \"momentum_residual\": " << format_double(sol.momentum_residual)
       << ",\n  \"decay_rate\": " << format_double(decay.rate)
       << ",\n  \"decay_rate_bound\": " << format_double(decay_rate_bound(spec.coeffs))
       << ",\n  \"solver\": \"" << sol.stats.method << "\"\n}\n";
  std::cout << "c^bl = (" << sol.bl_constant(0) << ", " << sol.bl_constant(1)
            << "), decay rate " << decay.rate << " (bound "
            << decay_rate_bound(spec.coeffs) << ")\n";
  return 0;
}

int run_slip_field(const Cli& cli) {
  const double radius = cli.config.get_double("inner_radius", 1.0);
  SlipFieldConfig fc;
  fc.sample_count = cli.config.get_int("samples", 8);
  fc.cell_resolution = cli.config.get_int("resolution", 48);
  fc.interpolation_order = cli.config.get_int("interpolation_order", 3);

  PatchCoverage cov;
  cov.patch.chart = make_circle_chart(radius);
  cov.lo = 0.0;
  cov.hi = 2 * M_PI;
  const SlipField field =
      assemble_slip_field({cov}, profile_from(cli.config), 2 * M_PI, fc);

  std::ofstream csv(cli.out_dir + "/slip_field.csv");
  csv << "param,c11\n";
  for (const auto& s : field.samples) csv << s.param << ',' << s.matrix(0, 0) << '\n';

  const double margin = negdef_scan(field, 64);
  const double frame_err = rotate_frame_check(field, M_PI);
  std::ofstream json(cli.out_dir + "/slip_field.json");
  json << "{\n  \"samples\": " << field.samples.size()
       << ",\n  \"negdef_margin\": " << format_double(margin)
       << ",\n  \"frame_invariance_error\": " << format_double(frame_err) << "\n}\n";
  std::cout << "slip field: " << field.samples.size() << " samples, negdef margin "
            << margin << ", frame check " << frame_err << "\n";
  return 0;
}

MacroVariant variant_from(const std::string& name) {
  if (name == "rough") return MacroVariant::Rough;
  if (name == "dirichlet") return MacroVariant::Dirichlet;
  if (name == "navier") return MacroVariant::Navier;
  if (name == "corrector") return MacroVariant::Corrector;
  throw ConfigError("unknown macro variant '" + name + "'");
}

int run_macro(const Cli& cli) {
  const Config& cfg = cli.config;
  const double eps = cfg.get_double("eps", 1.0 / 32);
  const RoughnessProfile prof = profile_from(cfg);
  const AnnulusDomain dom =
      build_rough_annulus(cfg.get_double("inner_radius", 1.0),
                          cfg.get_double("outer_radius", 2.0), eps, prof,
                          cfg.get_int("cells_per_period", 64));

  MacroProblemSpec spec;
  spec.domain = dom;
  spec.variant = variant_from(cfg.get_str("variant", "rough"));
  spec.radial_cells = cfg.get_int("radial_cells", 192);
  spec.wall_spacing = dom.eps > 0 ? dom.eps / cfg.get_double("wall_spacing_divisor", 64)
                                  : 0.0;
  if (spec.variant != MacroVariant::Rough) spec.angular_cells = cfg.get_int("angular_cells", 8);
  if (spec.variant == MacroVariant::Navier) {
    spec.use_constant_slip = true;
    spec.constant_slip = cfg.get_double("constant_slip", 0.0);
    if (spec.constant_slip == 0.0) {
      const CellCoefficients cc = coeffs_from(cfg);
      spec.constant_slip = extrapolated_slip_constant(
          cc, prof, cfg.get_int("cell_resolution", 64), 0, 1);
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const MacroSolution sol = solve_macro(spec);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ofstream csv(cli.out_dir + "/macro_field.csv");
  csv << "theta,r,u_r,u_theta,p\n";
  for (int k = 0; k < sol.grid.ns; ++k)
    for (int i = 0; i < sol.grid.na; ++i) {
      const double a = sol.grid.a_p(i), s = sol.grid.s_p(k);
      const double r = sol.grid.m(a, s);
      const Eigen::Vector2d vel = sol.velocity_polar(a, r);
      csv << a << ',' << r << ',' << vel(0) << ',' << vel(1) << ','
          << sol.pressure_at(a, r) << '\n';
    }

  std::ofstream json(cli.out_dir + "/macro.json");
  json << "{\n  \"variant\": \"" << cfg.get_str("variant", "rough")
       << "\",\n  \"eps\": " << format_double(dom.eps)
       << ",\n  \"unknowns\": " << (sol.grid.na * (3 * sol.grid.ns + 1) + 1)
       << ",\n  \"divergence_residual\": " << format_double(sol.divergence_residual)
       << ",\n  \"solver\": \"" << sol.stats.method
       << "\",\n  \"relative_residual\": " << format_double(sol.stats.relative_residual)
       << ",\n  \"wall_time_s\": " << format_double(secs) << "\n}\n";
  std::cout << "macro " << cfg.get_str("variant", "rough") << " eps=" << dom.eps
            << ": residual " << sol.stats.relative_residual << " in " << secs << " s\n";
  return 0;
}

int run_converge(const Cli& cli) {
  const ExperimentConfig ec = ExperimentConfig::from(cli.config);
  const ConvergenceReport report = run_pipeline(ec);
  write_convergence_csv(report, cli.out_dir + "/convergence.csv");
  write_convergence_json(report, cli.out_dir + "/convergence.json");

  std::vector<PlotSeries> series(3);
  series[0].label = "dirichlet L2";
  series[1].label = "navier L2";
  series[2].label = "corrector L2";
  for (const auto& r : report.rows) {
    series[0].points.emplace_back(r.eps, r.dirichlet.l2);
    series[1].points.emplace_back(r.eps, r.navier.l2);
    series[2].points.emplace_back(r.eps, r.corrector.l2);
  }
  write_loglog_svg(series, "wall-law convergence", cli.out_dir + "/convergence.svg");

  if (report.degenerate) {
    std::cout << "degenerate: skipped (zero data)\n";
    return 0;
  }
  bool all = report.corrector_below_dirichlet;
  std::cout << "slip constant " << report.slip_constant << "\n";
  for (const auto& v : report.verdicts) {
    std::cout << v.name << ": rate " << v.slope << " (target " << v.target << " +- "
              << v.tolerance << ") " << (v.pass ? "pass" : "FAIL") << "\n";
    all = all && v.pass;
  }
  std::cout << "corrector below dirichlet at every eps: "
            << (report.corrector_below_dirichlet ? "yes" : "NO") << "\n";
  return all ? 0 : 2;
}

int run_divbench(const Cli& cli) {
  std::vector<double> eps_list = cli.config.get_double_list(
      "eps_list", {1.0 / 8, 1.0 / 16, 1.0 / 32});
  const auto rows = constant_study(eps_list, cli.seed);
  write_constant_study_csv(rows, cli.out_dir + "/divbench.csv");
  write_constant_study_json(rows, cli.out_dir + "/divbench.json");
  for (const auto& r : rows)
    std::cout << "eps=" << r.eps << " m=" << r.m << " global ratio " << r.global_ratio
              << " (envelope " << r.envelope << ")\n";
  return 0;
}

int run_oracle_check(const Cli& cli) {
  CellProblemSpec spec;
  spec.coeffs = coeffs_from(cli.config);
  spec.profile = profile_from(cli.config);
  spec.resolution = cli.config.get_int("resolution", 64);
  spec.jump_vector = Eigen::Vector2d(1, 0);
  const CellSolution sol = solve_cell(spec);
  const ModeOracleErrors err = mode_oracle_errors(sol, -1.0);
  std::ofstream json(cli.out_dir + "/oracle.json");
  json << "{\n  \"velocity_rel_l2\": " << format_double(err.velocity_rel_l2)
       << ",\n  \"fluctuation_rel_l2\": " << format_double(err.fluctuation_rel_l2)
       << ",\n  \"pressure_abs_l2\": " << format_double(err.pressure_abs_l2) << "\n}\n";
  std::cout << "mode oracle: velocity rel L2 " << err.velocity_rel_l2
            << ", fluctuation rel L2 " << err.fluctuation_rel_l2 << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    const Cli cli = parse_cli(argc, argv);
    if (cli.subcommand == "cell") return run_cell(cli);
    if (cli.subcommand == "slip-field") return run_slip_field(cli);
    if (cli.subcommand == "macro") return run_macro(cli);
    if (cli.subcommand == "converge") return run_converge(cli);
    if (cli.subcommand == "divbench") return run_divbench(cli);
    if (cli.subcommand == "oracle-check") return run_oracle_check(cli);
    std::cerr << "unknown subcommand '" << cli.subcommand << "'\n";
    usage(1);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
