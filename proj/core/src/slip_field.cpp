#include "roughflow/slip_field.hpp"

#include <algorithm>
#include <cmath>

namespace roughflow {

namespace {

double wrap_param(double t, double period) {
  t = std::fmod(t, period);
  if (t < 0) t += period;
  return t;
}

// polynomial bump on (lo, hi), zero outside, evaluated with periodic wrap
double bump_weight(double t, double lo, double hi, double period) {
  double span = hi - lo;
  if (span <= 0) span += period;
  double s = wrap_param(t - lo, period);
  if (s <= 0 || s >= span) {
    // full-period coverage gets a constant weight
    if (span >= period - 1e-14) return 1.0;
    return 0.0;
  }
  if (span >= period - 1e-14) return 1.0;
  const double u = s / span;
  const double w = u * u * (1 - u) * (1 - u);
  return w;
}

Vec chart_coord_for(const PatchCoverage& cov, double t, double period) {
  const SurfacePatch& p = cov.patch;
  const int sd = p.chart.surface_dim();
  Vec x(sd);
  double span = cov.hi - cov.lo;
  if (span <= 0) span += period;
  double s = wrap_param(t - cov.lo, period) / span;  // in [0,1)
  // keep the evaluation point strictly interior to the parameter rectangle
  // (full-circle coverage places the first sample exactly on the seam)
  s = std::clamp(s, 1e-9, 1.0 - 1e-9);
  x(0) = p.chart.param_lo(0) + s * (p.chart.param_hi(0) - p.chart.param_lo(0));
  for (int j = 1; j < sd; ++j)
    x(j) = 0.5 * (p.chart.param_lo(j) + p.chart.param_hi(j));
  return x;
}

Mat solve_sample_matrix(const CellCoefficients& coeffs,
                        const RoughnessProfile& profile, const Mat& frame,
                        const SlipFieldConfig& cfg) {
  return slip_matrix(coeffs, profile, frame, cfg.cell_resolution, cfg.cell_depth);
}

}  // namespace

Mat SlipField::query(double t) const {
  const int m = static_cast<int>(samples.size());
  if (m == 0) throw FieldCorruptError("slip field has no samples");
  if (m == 1) return samples[0].matrix;
  t = wrap_param(t, period);
  const double spacing = period / m;  // samples are uniform by construction
  const double u = t / spacing;
  const int i1 = static_cast<int>(std::floor(u)) % m;
  const double f = u - std::floor(u);
  auto at = [&](int i) -> const Mat& { return samples[((i % m) + m) % m].matrix; };
  if (interpolation_order <= 1 || m < 4) {
    return (1 - f) * at(i1) + f * at(i1 + 1);
  }
  // periodic Catmull-Rom (cubic, reproduces nodes)
  const Mat &p0 = at(i1 - 1), &p1 = at(i1), &p2 = at(i1 + 1), &p3 = at(i1 + 2);
  const double f2 = f * f, f3 = f2 * f;
  return 0.5 * ((2 * p1) + (-p0 + p2) * f + (2 * p0 - 5 * p1 + 4 * p2 - p3) * f2 +
                (-p0 + 3 * p1 - 3 * p2 + p3) * f3);
}

const SlipSample& SlipField::nearest_sample(double t) const {
  if (samples.empty()) throw FieldCorruptError("slip field has no samples");
  const double spacing = period / samples.size();
  const int i = static_cast<int>(std::lround(wrap_param(t, period) / spacing));
  return samples[i % samples.size()];
}

SlipField assemble_slip_field(const std::vector<PatchCoverage>& coverage,
                              const RoughnessProfile& profile, double period,
                              const SlipFieldConfig& config) {
  if (coverage.empty()) throw ConfigError("slip field needs at least one patch");
  if (config.sample_count < 2) throw ConfigError("slip field needs >= 2 samples");

  SlipField field;
  field.period = period;
  field.interpolation_order = config.interpolation_order;
  field.profile = profile;
  field.config = config;

  const int m = config.sample_count;
  for (int s = 0; s < m; ++s) {
    const double t = period * s / m;
    // partition-of-unity weights over the covering patches
    std::vector<double> w(coverage.size(), 0.0);
    double wsum = 0.0;
    for (size_t i = 0; i < coverage.size(); ++i) {
      w[i] = bump_weight(t, coverage[i].lo, coverage[i].hi, period);
      wsum += w[i];
    }
    if (wsum <= 0)
      throw DecompositionError("patch coverage leaves a boundary sample uncovered");

    SlipSample sample;
    sample.param = t;
    Mat blended;
    bool first = true;
    for (size_t i = 0; i < coverage.size(); ++i) {
      if (w[i] <= 0) continue;
      const Vec xc = chart_coord_for(coverage[i], t, period);
      CellCoefficients coeffs = metric_matrices(coverage[i].patch, xc);
      const Mat frame = default_tangent_frame(coeffs);
      Mat cm = solve_sample_matrix(coeffs, profile, frame, config);
      if (first) {
        sample.surface_point = coverage[i].patch.chart.map(xc);
        sample.chart_coord = xc;
        sample.tangent_frame = frame;
        // physical normal from the chart; cell-level vectors (frame, matrix)
        // live in the wall-aligned coordinates of the coefficients
        sample.normal = coverage[i].patch.chart.normal(xc).normalized();
        sample.coeffs = coeffs;
        sample.patch_id = coverage[i].patch.patch_id;
        blended = (w[i] / wsum) * cm;
        first = false;
      } else {
        blended += (w[i] / wsum) * cm;
      }
    }
    sample.matrix = blended;
    field.samples.push_back(std::move(sample));
  }

  // the interpolant must stay negative definite between samples
  const int scan = std::max(4 * m, 64);
  for (int i = 0; i < scan; ++i) {
    const Mat q = field.query(period * i / scan);
    const Mat sym = 0.5 * (q + q.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    if (es.eigenvalues().maxCoeff() >= 0)
      throw DecompositionError(
          "interpolated slip matrix lost negative definiteness; increase sample count");
  }
  return field;
}

double rotate_frame_check(const SlipField& field, double angle) {
  double worst = 0.0;
  for (const SlipSample& s : field.samples) {
    const Mat frame2 = rotate_tangent_frame(s.coeffs, s.tangent_frame, angle);
    const Mat cm2 = solve_sample_matrix(s.coeffs, field.profile, frame2, field.config);
    const int nt = static_cast<int>(s.tangent_frame.cols());
    // physical slip action on a fixed tangent test vector
    Vec g = s.tangent_frame.col(0);
    if (nt == 2) g = (s.tangent_frame.col(0) + 0.5 * s.tangent_frame.col(1)).normalized();
    Vec v1 = Vec::Zero(g.size()), v2 = Vec::Zero(g.size());
    for (int l = 0; l < nt; ++l)
      for (int k = 0; k < nt; ++k) {
        v1 += s.matrix(l, k) * g.dot(s.tangent_frame.col(k)) * s.tangent_frame.col(l);
        v2 += cm2(l, k) * g.dot(frame2.col(k)) * frame2.col(l);
      }
    const double scale = std::max(v1.norm(), 1e-300);
    worst = std::max(worst, (v1 - v2).norm() / scale);
  }
  return worst;
}

double negdef_scan(const SlipField& field, int query_count) {
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < query_count; ++i) {
    const double t = field.period * i / query_count;
    const Mat q = field.query(t);
    const Mat sym = 0.5 * (q + q.transpose());
    if ((q - q.transpose()).norm() > 1e-6 * std::max(q.norm(), 1e-300))
      throw FieldCorruptError("interpolated slip matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    margin = std::min(margin, -es.eigenvalues().maxCoeff());
  }
  return margin;
}

}  // namespace roughflow
