#pragma once

// Report emission: CSV tables, JSON summaries, and self-contained SVG log-log
// plots (pure line drawings) for convergence reports and the divergence-lab
// constant study.

#include <string>
#include <vector>

#include "roughflow/divergence_lab.hpp"
#include "roughflow/harness.hpp"

namespace roughflow {

// One row per eps: all measured norms plus wall time.
void write_convergence_csv(const ConvergenceReport& report, const std::string& path);

// Rows, fitted rates, verdicts, and the slip constant, as a JSON object.
void write_convergence_json(const ConvergenceReport& report, const std::string& path);

// Log-log error-vs-eps plot of the selected series with reference slopes.
struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (eps, value), positive
};
void write_loglog_svg(const std::vector<PlotSeries>& series, const std::string& title,
                      const std::string& path);

void write_constant_study_csv(const std::vector<ConstantStudyRow>& rows,
                              const std::string& path);
void write_constant_study_json(const std::vector<ConstantStudyRow>& rows,
                               const std::string& path);

// Generic helpers shared by the CLI: a small JSON string builder is overkill;
// these format numbers the same way everywhere (max precision, locale-free).
std::string format_double(double v);

}  // namespace roughflow
