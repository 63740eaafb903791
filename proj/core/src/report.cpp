#include "roughflow/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace roughflow {

std::string format_double(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out.imbue(std::locale::classic());
  return out;
}

}  // namespace

void write_convergence_csv(const ConvergenceReport& report, const std::string& path) {
  auto out = open_out(path);
  out << "eps,dirichlet_l2,dirichlet_h1semi,dirichlet_w11,"
         "navier_l2,navier_h1semi,navier_w11,"
         "corrector_l2,corrector_h1semi,corrector_w11,"
         "eta_l2,eta_h1semi,eta_w11,wall_time_s\n";
  out << std::setprecision(12);
  for (const auto& r : report.rows) {
    out << r.eps << ',' << r.dirichlet.l2 << ',' << r.dirichlet.h1semi << ','
        << r.dirichlet.w11 << ',' << r.navier.l2 << ',' << r.navier.h1semi << ','
        << r.navier.w11 << ',' << r.corrector.l2 << ',' << r.corrector.h1semi << ','
        << r.corrector.w11 << ',' << r.eta.l2 << ',' << r.eta.h1semi << ','
        << r.eta.w11 << ',' << r.wall_time_s << '\n';
  }
}

void write_convergence_json(const ConvergenceReport& report, const std::string& path) {
  auto out = open_out(path);
  out << "{\n";
  out << "  \"degenerate\": " << (report.degenerate ? "true" : "false") << ",\n";
  out << "  \"slip_constant\": " << format_double(report.slip_constant) << ",\n";
  out << "  \"corrector_below_dirichlet\": "
      << (report.corrector_below_dirichlet ? "true" : "false") << ",\n";
  out << "  \"rows\": [\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    out << "    {\"eps\": " << format_double(r.eps)
        << ", \"dirichlet\": {\"l2\": " << format_double(r.dirichlet.l2)
        << ", \"h1semi\": " << format_double(r.dirichlet.h1semi)
        << ", \"w11\": " << format_double(r.dirichlet.w11) << "}"
        << ", \"navier\": {\"l2\": " << format_double(r.navier.l2)
        << ", \"h1semi\": " << format_double(r.navier.h1semi)
        << ", \"w11\": " << format_double(r.navier.w11) << "}"
        << ", \"corrector\": {\"l2\": " << format_double(r.corrector.l2)
        << ", \"h1semi\": " << format_double(r.corrector.h1semi)
        << ", \"w11\": " << format_double(r.corrector.w11) << "}"
        << ", \"eta\": {\"l2\": " << format_double(r.eta.l2)
        << ", \"h1semi\": " << format_double(r.eta.h1semi)
        << ", \"w11\": " << format_double(r.eta.w11) << "}"
        << ", \"wall_time_s\": " << format_double(r.wall_time_s) << "}"
        << (i + 1 < report.rows.size() ? "," : "") << "\n";
  }
  out << "  ],\n";
  out << "  \"verdicts\": [\n";
  for (std::size_t i = 0; i < report.verdicts.size(); ++i) {
    const auto& v = report.verdicts[i];
    out << "    {\"name\": \"" << v.name << "\", \"slope\": " << format_double(v.slope)
        << ", \"residual\": " << format_double(v.residual)
        << ", \"target\": " << format_double(v.target)
        << ", \"tolerance\": " << format_double(v.tolerance)
        << ", \"pass\": " << (v.pass ? "true" : "false") << "}"
        << (i + 1 < report.verdicts.size() ? "," : "") << "\n";
  }
  out << "  ]\n}\n";
}

void write_loglog_svg(const std::vector<PlotSeries>& series, const std::string& title,
                      const std::string& path) {
  auto out = open_out(path);
  const int W = 640, H = 480, ML = 70, MR = 20, MT = 40, MB = 50;

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (x <= 0 || y <= 0) continue;
      xmin = std::min(xmin, std::log10(x));
      xmax = std::max(xmax, std::log10(x));
      ymin = std::min(ymin, std::log10(y));
      ymax = std::max(ymax, std::log10(y));
    }
  if (xmin > xmax) {
    xmin = ymin = 0;
    xmax = ymax = 1;
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1;
  if (ymax - ymin < 1e-12) ymax = ymin + 1;
  auto px = [&](double lx) { return ML + (lx - xmin) / (xmax - xmin) * (W - ML - MR); };
  auto py = [&](double ly) { return H - MB - (ly - ymin) / (ymax - ymin) * (H - MT - MB); };

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
      << "' viewBox='0 0 " << W << ' ' << H << "'>\n";
  out << "<rect width='" << W << "' height='" << H << "' fill='white'/>\n";
  out << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>"
      << title << "</text>\n";
  // axes
  out << "<line x1='" << ML << "' y1='" << H - MB << "' x2='" << W - MR << "' y2='"
      << H - MB << "' stroke='black'/>\n";
  out << "<line x1='" << ML << "' y1='" << MT << "' x2='" << ML << "' y2='" << H - MB
      << "' stroke='black'/>\n";
  // decade ticks
  for (int d = static_cast<int>(std::ceil(xmin)); d <= static_cast<int>(std::floor(xmax)); ++d) {
    out << "<line x1='" << px(d) << "' y1='" << H - MB << "' x2='" << px(d) << "' y2='"
        << H - MB + 5 << "' stroke='black'/>\n";
    out << "<text x='" << px(d) << "' y='" << H - MB + 20
        << "' text-anchor='middle' font-size='12'>1e" << d << "</text>\n";
  }
  for (int d = static_cast<int>(std::ceil(ymin)); d <= static_cast<int>(std::floor(ymax)); ++d) {
    out << "<line x1='" << ML - 5 << "' y1='" << py(d) << "' x2='" << ML << "' y2='"
        << py(d) << "' stroke='black'/>\n";
    out << "<text x='" << ML - 8 << "' y='" << py(d) + 4
        << "' text-anchor='end' font-size='12'>1e" << d << "</text>\n";
  }
  out << "<text x='" << (ML + W - MR) / 2 << "' y='" << H - 10
      << "' text-anchor='middle' font-size='13'>eps</text>\n";

  int ci = 0;
  for (const auto& s : series) {
    const char* col = colors[ci % 6];
    std::ostringstream pts;
    for (const auto& [x, y] : s.points) {
      if (x <= 0 || y <= 0) continue;
      pts << px(std::log10(x)) << ',' << py(std::log10(y)) << ' ';
    }
    out << "<polyline points='" << pts.str() << "' fill='none' stroke='" << col
        << "' stroke-width='1.5'/>\n";
    for (const auto& [x, y] : s.points) {
      if (x <= 0 || y <= 0) continue;
      out << "<circle cx='" << px(std::log10(x)) << "' cy='" << py(std::log10(y))
          << "' r='3' fill='" << col << "'/>\n";
    }
    out << "<text x='" << W - MR - 10 << "' y='" << MT + 16 * (ci + 1)
        << "' text-anchor='end' font-size='12' fill='" << col << "'>" << s.label
        << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

void write_constant_study_csv(const std::vector<ConstantStudyRow>& rows,
                              const std::string& path) {
  auto out = open_out(path);
  out << "eps,m,shape_constant,global_ratio,macro_ratio,envelope,max_norm_ratio,"
         "split_bound,global_div_residual\n";
  out << std::setprecision(12);
  for (const auto& r : rows)
    out << r.eps << ',' << r.m << ',' << r.shape_constant << ',' << r.global_ratio
        << ',' << r.macro_ratio << ',' << r.envelope << ',' << r.max_norm_ratio << ','
        << r.split_bound << ',' << r.global_div_residual << '\n';
}

void write_constant_study_json(const std::vector<ConstantStudyRow>& rows,
                               const std::string& path) {
  auto out = open_out(path);
  double mn = 1e300, mx = 0;
  for (const auto& r : rows) {
    mn = std::min(mn, r.global_ratio);
    mx = std::max(mx, r.global_ratio);
  }
  out << "{\n  \"rows\": [\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << "    {\"eps\": " << format_double(r.eps) << ", \"m\": " << r.m
        << ", \"shape_constant\": " << format_double(r.shape_constant)
        << ", \"global_ratio\": " << format_double(r.global_ratio)
        << ", \"macro_ratio\": " << format_double(r.macro_ratio)
        << ", \"envelope\": " << format_double(r.envelope)
        << ", \"max_norm_ratio\": " << format_double(r.max_norm_ratio)
        << ", \"split_bound\": " << format_double(r.split_bound)
        << ", \"global_div_residual\": " << format_double(r.global_div_residual)
        << "}" << (i + 1 < rows.size() ? "," : "") << "\n";
  }
  out << "  ],\n";
  out << "  \"ratio_spread\": " << format_double(rows.empty() ? 0.0 : mx / mn) << ",\n";
  out << "  \"verdict\": " << ((rows.empty() || mx / mn <= 2.0) ? "\"pass\"" : "\"fail\"")
      << "\n}\n";
}

}  // namespace roughflow
